#include "slu/parsing.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace slu {

const std::array<std::string, 10> kCommandKeywords = {
    "yes", "no", "up", "down", "left", "right", "on", "off", "stop", "go"};

const std::string kOovLabel = "OOV";

bool is_command_keyword(const std::string &word) {
  return std::find(kCommandKeywords.begin(), kCommandKeywords.end(), word) !=
         kCommandKeywords.end();
}

namespace {

bool is_quote_or_space(unsigned char c) {
  return std::isspace(c) || c == '"' || c == '\'' || c == '`';
}

// Strip surrounding whitespace and quote characters.
std::string trim_label(const std::string &s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_quote_or_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_quote_or_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Strip leading/trailing punctuation and quotes (keeps interior characters).
std::string trim_punct(const std::string &s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  auto strippable = [](unsigned char c) {
    return std::isspace(c) || std::ispunct(c);
  };
  while (b < e && strippable(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && strippable(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return s;
}

bool all_digits(const std::string &s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isdigit(c) != 0;
  });
}

// First maximal digit run in `s` whose value is <= 100, as an integer.
// Returns -1 when there is none.
int first_scale_integer(const std::string &s) {
  std::size_t i = 0;
  while (i < s.size()) {
    if (std::isdigit(static_cast<unsigned char>(s[i]))) {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      const std::string run = s.substr(i, j - i);
      // Runs longer than 3 digits cannot be in [0, 100].
      if (run.size() <= 3) {
        const int value = std::stoi(run);
        if (value <= 100) return value;
      }
      i = j;
    } else {
      ++i;
    }
  }
  return -1;
}

}  // namespace

ParsedPrediction parse_binary(const std::string &raw) {
  ParsedPrediction out;
  out.kind = OutputMode::kBinaryTarget;
  out.raw_text = raw;
  const std::string t = trim_label(raw);
  if (t == "1") {
    out.binary_label = 1;
  } else if (t == "0") {
    out.binary_label = 0;
  } else {
    // Free-form answers overwhelmingly describe device-directed readings,
    // so the fallback maps them to the positive class.
    out.binary_label = 1;
    out.was_descriptive = true;
  }
  return out;
}

ParsedPrediction parse_scale(const std::string &raw) {
  ParsedPrediction out;
  out.kind = OutputMode::kScale0To100;
  out.raw_text = raw;
  const std::string t = trim_label(raw);
  if (all_digits(t) && t.size() <= 3) {
    const int value = std::stoi(t);
    if (value <= 100) {
      out.score = value / 100.0;
      return out;
    }
  }
  out.was_descriptive = true;
  const int embedded = first_scale_integer(raw);
  out.score = embedded >= 0 ? embedded / 100.0 : 1.0;
  return out;
}

ParsedPrediction parse_keyword(const std::string &raw) {
  ParsedPrediction out;
  out.kind = OutputMode::kKeyword;
  out.raw_text = raw;
  const std::string t = to_lower(trim_punct(raw));
  if (is_command_keyword(t)) {
    out.keyword = t;
    return out;
  }
  if (t == "oov") {
    out.keyword = kOovLabel;
    return out;
  }
  out.keyword = kOovLabel;
  out.was_descriptive = true;
  return out;
}

int probability_to_scale_label(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("probability_to_scale_label: p must be in [0, 1]");
  }
  const double scaled = p * 100.0;
  const double floor_val = std::floor(scaled);
  const double frac = scaled - floor_val;
  int result = static_cast<int>(floor_val);
  if (frac > 0.5) {
    result += 1;
  } else if (frac == 0.5) {
    // Ties to even.
    if (result % 2 != 0) result += 1;
  }
  return result;
}

}  // namespace slu
