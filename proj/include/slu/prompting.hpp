#ifndef SLU_PROMPTING_HPP
#define SLU_PROMPTING_HPP

#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "slu/lattice.hpp"
#include "slu/types.hpp"

namespace slu {

class PromptError : public std::runtime_error {
 public:
  explicit PromptError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Prompt ablations used to probe which parts of the input matter.
enum class Ablation {
  kNoTaskPrompt,        // drop prefix/infix/suffix entirely
  kGibberishTaskPrompt, // replace the task prompt with fixed pseudo-words
  kNoHypothesisCost,    // serialize hypotheses without [cost] tokens
};

std::string to_string(Ablation a);
Ablation ablation_from_string(const std::string &s);

/// Fixed instruction text describing the task to the LLM, split into the
/// three segments that are concatenated around variations (1-best vs n-best
/// input, binary vs 0-100 output). Registry entries with `custom_text` set
/// carry wording original to this project.
struct TaskPrompt {
  Task task = Task::kDdsd;
  InputMode input_mode = InputMode::kOneBest;
  OutputMode output_mode = OutputMode::kBinaryTarget;
  std::string prefix;
  std::string infix;
  std::string suffix;
  bool custom_text = false;
};

/// Per-utterance text block: the serialized 1-best or n-best hypotheses,
/// newline-separated, optionally suffixed with bracketed costs.
struct UtterancePrompt {
  std::string utterance_id;
  std::string text;
  int hypothesis_count = 0;
  bool costs_included = false;
  int cost_decimals = 1;
};

/// A fully rendered LLM input: task prompt (unless ablated) plus utterance
/// prompt, joined by single spaces.
struct PromptBundle {
  std::optional<TaskPrompt> task_prompt;
  UtterancePrompt utterance_prompt;
  std::string rendered;
  std::set<Ablation> ablations;
  int hypotheses_dropped = 0;  // set by enforce_budget
};

/// Fixed-point cost rendering, sign preserved: -47.8 -> "-47.8" at 1 decimal.
std::string format_cost(double cost, int decimals = 1);

/// Serializes an n-best list into the prompting-friendly block: one
/// hypothesis per line, words joined by single spaces, each line ending with
/// " [<cost>]" when include_costs is set.
UtterancePrompt serialize_utterance(const NBestList &nbest, bool include_costs,
                                    int cost_decimals = 1);

struct ParsedUtteranceLine {
  std::vector<std::string> words;
  std::optional<double> cost;
};

/// Inverse of serialize_utterance: splits on newlines and the trailing
/// " [cost]" token. Recovers (words, cost-at-serialized-precision) exactly.
std::vector<ParsedUtteranceLine> parse_utterance_prompt(const std::string &text);

/// All built-in task prompts: the four DDSD combinations plus the two
/// keyword-spotting ones (the latter flagged custom_text).
const std::vector<TaskPrompt> &task_prompt_registry();

/// Throws PromptError if the combination does not exist.
const TaskPrompt &lookup_task_prompt(Task task, InputMode input_mode,
                                     OutputMode output_mode);

/// The fixed pseudo-word string substituted by the gibberish ablation.
extern const std::string kGibberishText;

/// Composes the final prompt. task_prompt must be absent exactly when the
/// no_task_prompt ablation is set; the no_hypothesis_cost ablation requires
/// an utterance prompt serialized without costs.
PromptBundle render(std::optional<TaskPrompt> task_prompt,
                    UtterancePrompt utterance_prompt,
                    std::set<Ablation> ablations);

using TokenCounter = std::function<int(const std::string &)>;

/// Whitespace token count times 1.3, rounded up. A stand-in for the real
/// tokenizer; the budget mechanism is the contract, not the exact count.
int approx_token_count(const std::string &text);

/// Reduces an over-budget bundle by dropping hypotheses from the end of the
/// n-best list (highest cost first) and re-rendering until the budget holds.
/// The 1-best hypothesis is never dropped; if it alone exceeds the budget a
/// PromptError is thrown. Idempotent, never reorders retained hypotheses.
PromptBundle enforce_budget(PromptBundle bundle, const NBestList &nbest,
                            int budget_tokens = 2048,
                            const TokenCounter &counter = approx_token_count);

}  // namespace slu

#endif  // SLU_PROMPTING_HPP
