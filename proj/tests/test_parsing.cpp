#include "slu/parsing.hpp"

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <doctest.h>

using slu::ParsedPrediction;

namespace {

// A verbatim long-form model response that buries its verdict in prose;
// frozen here as the canonical descriptive-answer regression input.
const std::string kDescriptiveResponse =
    "Based on the provided n-best list, the most likely hypothesis for the "
    "spoken utterance is: 'score of the Hawaii game [-144.2]'. This "
    "hypothesis is the first in the list, indicating that it is the most "
    "likely interpretation of the spoken utterance. The cost associated with "
    "this hypothesis is '-144.2', which suggests that the ASR system is not "
    "very confident about this hypothesis. Given the content of the "
    "utterance, it is more likely to be directed towards a voice assistant "
    "rather than a human being. The utterance contains a question about the "
    "Hawaii game, which is a sports-related topic that is commonly addressed "
    "to voice assistants. Therefore, the answer is '1'.";

}  // namespace

TEST_CASE("parse_binary accepts clean categorical answers") {
  ParsedPrediction b = slu::parse_binary("1");
  CHECK(b.kind == slu::OutputMode::kBinaryTarget);
  CHECK(b.binary_label == 1);
  CHECK_FALSE(b.was_descriptive);
  CHECK(b.raw_text == "1");

  b = slu::parse_binary("0");
  CHECK(b.binary_label == 0);
  CHECK_FALSE(b.was_descriptive);

  SUBCASE("surrounding whitespace and quotes are tolerated") {
    CHECK(slu::parse_binary(" 1 ").binary_label == 1);
    CHECK_FALSE(slu::parse_binary(" 1 ").was_descriptive);
    CHECK(slu::parse_binary("'0'").binary_label == 0);
    CHECK_FALSE(slu::parse_binary("'0'").was_descriptive);
    CHECK(slu::parse_binary("\"1\"").binary_label == 1);
    CHECK_FALSE(slu::parse_binary("\"1\"").was_descriptive);
  }
}

TEST_CASE("parse_binary maps free-form answers to the positive class") {
  const ParsedPrediction b = slu::parse_binary(kDescriptiveResponse);
  CHECK(b.binary_label == 1);
  CHECK(b.was_descriptive);
  CHECK(b.raw_text == kDescriptiveResponse);

  SUBCASE("any non-categorical text is descriptive, even near misses") {
    const ParsedPrediction dot = slu::parse_binary("1.");
    CHECK(dot.binary_label == 1);
    CHECK(dot.was_descriptive);
    const ParsedPrediction prose =
        slu::parse_binary("The utterance sounds conversational.");
    CHECK(prose.binary_label == 1);
    CHECK(prose.was_descriptive);
  }

  SUBCASE("the empty string is descriptive") {
    const ParsedPrediction empty = slu::parse_binary("");
    CHECK(empty.binary_label == 1);
    CHECK(empty.was_descriptive);
  }
}

TEST_CASE("parse_scale maps bare integers onto [0, 1]") {
  ParsedPrediction s = slu::parse_scale("73");
  CHECK(s.kind == slu::OutputMode::kScale0To100);
  CHECK(s.score == doctest::Approx(0.73).epsilon(1e-12));
  CHECK_FALSE(s.was_descriptive);

  CHECK(slu::parse_scale("0").score == 0.0);
  CHECK(slu::parse_scale("100").score == 1.0);
  CHECK(slu::parse_scale("'85'").score == doctest::Approx(0.85).epsilon(1e-12));
  CHECK_FALSE(slu::parse_scale("'85'").was_descriptive);
  CHECK(slu::parse_scale("073").score == doctest::Approx(0.73).epsilon(1e-12));
  CHECK_FALSE(slu::parse_scale("073").was_descriptive);

  SUBCASE("prose answers use the first in-range integer") {
    const ParsedPrediction p = slu::parse_scale("I'd say 80 out of 100");
    CHECK(p.score == doctest::Approx(0.80).epsilon(1e-12));
    CHECK(p.was_descriptive);
    const ParsedPrediction q = slu::parse_scale("confidence roughly 80");
    CHECK(q.score == doctest::Approx(0.80).epsilon(1e-12));
    CHECK(q.was_descriptive);
  }

  SUBCASE("out-of-range integers fall through to the descriptive default") {
    const ParsedPrediction over = slu::parse_scale("101");
    CHECK(over.score == 1.0);
    CHECK(over.was_descriptive);
    const ParsedPrediction big = slu::parse_scale("12345");
    CHECK(big.score == 1.0);
    CHECK(big.was_descriptive);
  }

  SUBCASE("an in-range run after an oversized run is still found") {
    const ParsedPrediction p = slu::parse_scale("id 123456, score 40");
    CHECK(p.score == doctest::Approx(0.40).epsilon(1e-12));
    CHECK(p.was_descriptive);
  }

  SUBCASE("no integer at all defaults to 1.0") {
    const ParsedPrediction none = slu::parse_scale("cannot tell");
    CHECK(none.score == 1.0);
    CHECK(none.was_descriptive);
    CHECK(slu::parse_scale("").score == 1.0);
    CHECK(slu::parse_scale("").was_descriptive);
  }
}

TEST_CASE("parse_keyword matches the closed label set case-insensitively") {
  const auto &labels = slu::kCommandKeywords;
  REQUIRE(labels.size() == 10);
  const std::vector<std::string> expected = {
      "yes", "no", "up", "down", "left", "right", "on", "off", "stop", "go"};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(labels[i] == expected[i]);
  }
  CHECK(slu::kOovLabel == "OOV");
  CHECK(slu::is_command_keyword("up"));
  CHECK_FALSE(slu::is_command_keyword("OOV"));
  CHECK_FALSE(slu::is_command_keyword("Up"));

  ParsedPrediction k = slu::parse_keyword("up");
  CHECK(k.kind == slu::OutputMode::kKeyword);
  CHECK(k.keyword == "up");
  CHECK_FALSE(k.was_descriptive);

  CHECK(slu::parse_keyword("Up.").keyword == "up");
  CHECK_FALSE(slu::parse_keyword("Up.").was_descriptive);
  CHECK(slu::parse_keyword("'Left'").keyword == "left");
  CHECK_FALSE(slu::parse_keyword("'Left'").was_descriptive);
  CHECK(slu::parse_keyword("stop!").keyword == "stop");
  CHECK(slu::parse_keyword("GO").keyword == "go");

  SUBCASE("the explicit out-of-vocabulary answer is not descriptive") {
    CHECK(slu::parse_keyword("OOV").keyword == "OOV");
    CHECK_FALSE(slu::parse_keyword("OOV").was_descriptive);
    CHECK(slu::parse_keyword("oov").keyword == "OOV");
    CHECK_FALSE(slu::parse_keyword("oov").was_descriptive);
    CHECK(slu::parse_keyword("'OOV'").keyword == "OOV");
    CHECK_FALSE(slu::parse_keyword("'OOV'").was_descriptive);
  }

  SUBCASE("anything beyond an exact label is OOV and descriptive") {
    const ParsedPrediction prose = slu::parse_keyword("the word is stop");
    CHECK(prose.keyword == "OOV");
    CHECK(prose.was_descriptive);
    const ParsedPrediction oov = slu::parse_keyword("banana");
    CHECK(oov.keyword == "OOV");
    CHECK(oov.was_descriptive);
    const ParsedPrediction super = slu::parse_keyword("upstairs");
    CHECK(super.keyword == "OOV");
    CHECK(super.was_descriptive);
    const ParsedPrediction empty = slu::parse_keyword("");
    CHECK(empty.keyword == "OOV");
    CHECK(empty.was_descriptive);
  }
}

TEST_CASE("probability_to_scale_label rounds with ties to even") {
  CHECK(slu::probability_to_scale_label(0.734) == 73);
  CHECK(slu::probability_to_scale_label(0.0) == 0);
  CHECK(slu::probability_to_scale_label(1.0) == 100);
  CHECK(slu::probability_to_scale_label(0.5) == 50);
  CHECK(slu::probability_to_scale_label(0.994999) == 99);

  SUBCASE("exact .5 fractions land on the even neighbor") {
    CHECK(slu::probability_to_scale_label(0.005) == 0);
    CHECK(slu::probability_to_scale_label(0.125) == 12);
    CHECK(slu::probability_to_scale_label(0.135) == 14);
    CHECK(slu::probability_to_scale_label(0.365) == 36);
    CHECK(slu::probability_to_scale_label(0.615) == 62);
    CHECK(slu::probability_to_scale_label(0.875) == 88);
  }

  SUBCASE("inputs outside [0, 1] are rejected") {
    CHECK_THROWS_AS(slu::probability_to_scale_label(-0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(slu::probability_to_scale_label(1.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(slu::probability_to_scale_label(
                        std::numeric_limits<double>::quiet_NaN()),
                    std::invalid_argument);
  }
}
