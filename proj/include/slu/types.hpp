#ifndef SLU_TYPES_HPP
#define SLU_TYPES_HPP

#include <stdexcept>
#include <string>

namespace slu {

/// Classification task solved by the ASR+LLM pipeline.
enum class Task {
  kDdsd,  // device-directed speech detection (binary intent)
  kKs,    // keyword spotting on the 10-command vocabulary
};

/// How many hypotheses the utterance-prompt carries.
enum class InputMode {
  kOneBest,
  kNBest,
};

/// What the LLM is asked to emit.
enum class OutputMode {
  kBinaryTarget,  // "1" / "0"
  kScale0To100,   // integer 0..100, later divided by 100
  kKeyword,       // one of the command keywords or "OOV"
};

inline std::string to_string(Task t) {
  return t == Task::kDdsd ? "DDSD" : "KS";
}

inline std::string to_string(InputMode m) {
  return m == InputMode::kOneBest ? "one_best" : "n_best";
}

inline std::string to_string(OutputMode m) {
  switch (m) {
    case OutputMode::kBinaryTarget: return "binary_target";
    case OutputMode::kScale0To100: return "scale_0_100";
    case OutputMode::kKeyword: return "keyword";
  }
  return "";
}

inline Task task_from_string(const std::string &s) {
  if (s == "DDSD" || s == "ddsd") return Task::kDdsd;
  if (s == "KS" || s == "ks") return Task::kKs;
  throw std::invalid_argument("unknown task: " + s);
}

inline OutputMode output_mode_from_string(const std::string &s) {
  if (s == "binary_target" || s == "binary") return OutputMode::kBinaryTarget;
  if (s == "scale_0_100" || s == "scale") return OutputMode::kScale0To100;
  if (s == "keyword") return OutputMode::kKeyword;
  throw std::invalid_argument("unknown output mode: " + s);
}

}  // namespace slu

#endif  // SLU_TYPES_HPP
