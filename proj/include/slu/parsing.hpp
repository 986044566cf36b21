#ifndef SLU_PARSING_HPP
#define SLU_PARSING_HPP

#include <array>
#include <string>

#include "slu/types.hpp"

namespace slu {

/// The 10 command keywords, in canonical order (also the tie-break order),
/// plus the out-of-vocabulary label.
extern const std::array<std::string, 10> kCommandKeywords;
extern const std::string kOovLabel;

bool is_command_keyword(const std::string &word);

/// Raw LLM text reduced to a task label. Exactly one of binary_label /
/// score / keyword is meaningful, selected by `kind`. `was_descriptive`
/// marks outputs that were free-form text rather than the requested terse
/// label and therefore went through a fallback rule.
struct ParsedPrediction {
  std::string utterance_id;
  OutputMode kind = OutputMode::kBinaryTarget;
  int binary_label = 0;       // kind == kBinaryTarget
  double score = 0.0;         // kind == kScale0To100, in [0,1]
  std::string keyword;        // kind == kKeyword, a command keyword or "OOV"
  bool was_descriptive = false;
  std::string raw_text;
};

/// Binary convention: exactly "1" or "0" (after trimming whitespace and
/// quotes) maps to that label; any other text counts as device-directed
/// (label 1) with was_descriptive set. Total: never throws.
ParsedPrediction parse_binary(const std::string &raw);

/// Scale convention: a bare integer k in [0,100] maps to k/100. Fallback for
/// free-form text: the first integer in [0,100] found in the text, else
/// score 1.0; both flagged was_descriptive. Total: never throws.
ParsedPrediction parse_scale(const std::string &raw);

/// Keyword convention: lowercase and strip surrounding punctuation/quotes;
/// exact command-keyword match wins, "oov" in any case maps to OOV, and
/// anything else maps to OOV with was_descriptive set. Total: never throws.
ParsedPrediction parse_keyword(const std::string &raw);

/// round(100 * p) with ties-to-even. Throws std::invalid_argument outside [0,1].
int probability_to_scale_label(double p);

}  // namespace slu

#endif  // SLU_PARSING_HPP
