#include "slu/prompting.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace slu {

namespace {

const char *kDdsdPrefixOneBest =
    "Determine whether the following spoken utterance is directed towards a "
    "voice assistant or a human being.";

const char *kDdsdPrefixNBest =
    "In this task, we provide an n-best list of ASR hypotheses for a spoken "
    "utterance. Each of the hypothesis is separated by a newline character. "
    "The cost of each hypothesis is at the end in the format '[cost]' where a "
    "low cost indicates that we are more confident about that ASR hypothesis. "
    "Determine whether the following spoken utterance is directed towards a "
    "voice assistant or a human being by taking into account all the n-best "
    "hypotheses.";

const char *kDdsdInfix =
    "Typical spoken utterances directed towards the voice assistant are "
    "commands to fulfill a task or queries to get some information.";

const char *kDdsdSuffixBinary =
    "Answer only from the following categories ['1', '0'] where '1' indicates "
    "that the utterance is directed towards the voice assistant and '0' "
    "indicates that the utterance is directed towards a human being.";

const char *kDdsdSuffixScale =
    "Answer on a scale of 0 to 100 where a score of '100' indicates that the "
    "utterance is directed towards the voice assistant and '0' indicates that "
    "the utterance is directed towards a human being. Your answer should only "
    "contain an integer between 0 and 100.";

// Keyword-spotting prompts are original to this project.
const char *kKsPrefixOneBest =
    "This is a keyword spotting task. The command keywords are 'yes', 'no', "
    "'up', 'down', 'left', 'right', 'on', 'off', 'stop', and 'go'; every "
    "other word counts as out-of-vocabulary. Identify the keyword spoken in "
    "the utterance from its ASR transcription.";

const char *kKsPrefixNBest =
    "This is a keyword spotting task. The command keywords are 'yes', 'no', "
    "'up', 'down', 'left', 'right', 'on', 'off', 'stop', and 'go'; every "
    "other word counts as out-of-vocabulary. We provide an n-best list of ASR "
    "hypotheses for the utterance, one hypothesis per line, each ending with "
    "its cost in the format '[cost]' where a low cost means the ASR is more "
    "confident. Identify the keyword spoken in the utterance by taking all "
    "hypotheses into account.";

const char *kKsInfix =
    "The utterance is a short spoken command of a single word.";

const char *kKsSuffix =
    "Answer with exactly one word from the following list: ['yes', 'no', "
    "'up', 'down', 'left', 'right', 'on', 'off', 'stop', 'go', 'OOV'] where "
    "'OOV' stands for out-of-vocabulary. The utterance is:";

std::vector<std::string> split_words(const std::string &s) {
  std::vector<std::string> words;
  std::istringstream is(s);
  std::string w;
  while (is >> w) words.push_back(w);
  return words;
}

}  // namespace

const std::string kGibberishText =
    "Vorlim trazek supponi drelfa quintor maleeba zhonvick parretu solmink "
    "gravetz ipplewon darfiq nostrelbam unkovi tresspal whorvind klyzenta "
    "bromiflux yonnater sculdepra mivvorock telzapine ordwemick flastorine "
    "ubblequat hernivoss dwingolar petrazune wolkinbrey saqqarell othmindel "
    "verroclim juntawove blemmisqua korvandrel utherpliq zandoreth wifflocane "
    "mubrestang ollivaque dresqumel bhartoneev shulliprey ginthorax feple "
    "awstrik cormundel yipprevoss thanderquil omniblex surratane dovkinmere "
    "elbriquand fosterwhim glenpodrik harvestoq irbelclam jonquivert "
    "kelmundra lorvekstan mindraquel norrisplon ostrevink pulmonjack "
    "quandrobel rivsentho stelbiquor turvanesk uldrimpost vennaclore "
    "wuxtramil yelpodrine zorvicante ambrequist bindolever creftonal.";

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::kNoTaskPrompt: return "no_task_prompt";
    case Ablation::kGibberishTaskPrompt: return "gibberish_task_prompt";
    case Ablation::kNoHypothesisCost: return "no_hypothesis_cost";
  }
  return "";
}

Ablation ablation_from_string(const std::string &s) {
  if (s == "no_task_prompt" || s == "no-tp") return Ablation::kNoTaskPrompt;
  if (s == "gibberish_task_prompt" || s == "gib-tp")
    return Ablation::kGibberishTaskPrompt;
  if (s == "no_hypothesis_cost" || s == "no-hc")
    return Ablation::kNoHypothesisCost;
  throw PromptError("unknown ablation: " + s);
}

std::string format_cost(double cost, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, cost);
  return buf;
}

UtterancePrompt serialize_utterance(const NBestList &nbest, bool include_costs,
                                    int cost_decimals) {
  if (nbest.hypotheses.empty())
    throw PromptError("cannot serialize an empty n-best list (utterance \"" +
                      nbest.utterance_id + "\")");
  std::string text;
  for (size_t i = 0; i < nbest.hypotheses.size(); ++i) {
    if (i) text += '\n';
    std::string line = nbest.hypotheses[i].text();
    if (include_costs) {
      if (!line.empty()) line += ' ';
      line += '[' + format_cost(nbest.hypotheses[i].cost, cost_decimals) + ']';
    }
    text += line;
  }
  UtterancePrompt up;
  up.utterance_id = nbest.utterance_id;
  up.text = std::move(text);
  up.hypothesis_count = static_cast<int>(nbest.hypotheses.size());
  up.costs_included = include_costs;
  up.cost_decimals = cost_decimals;
  return up;
}

std::vector<ParsedUtteranceLine> parse_utterance_prompt(const std::string &text) {
  std::vector<ParsedUtteranceLine> lines;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
    ParsedUtteranceLine parsed;
    if (!line.empty() && line.back() == ']') {
      size_t open;
      if (line.front() == '[') {
        open = 0;
      } else {
        open = line.rfind(" [");
        if (open != std::string::npos) open += 1;
      }
      if (open != std::string::npos) {
        std::string cost_str = line.substr(open + 1, line.size() - open - 2);
        try {
          size_t used = 0;
          double cost = std::stod(cost_str, &used);
          if (used == cost_str.size()) {
            parsed.cost = cost;
            line = line.substr(0, open == 0 ? 0 : open - 1);
          }
        } catch (const std::exception &) {
          // bracketed token is not a number; keep it as words
        }
      }
    }
    parsed.words = split_words(line);
    lines.push_back(std::move(parsed));
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return lines;
}

const std::vector<TaskPrompt> &task_prompt_registry() {
  static const std::vector<TaskPrompt> registry = {
      {Task::kDdsd, InputMode::kOneBest, OutputMode::kBinaryTarget,
       kDdsdPrefixOneBest, kDdsdInfix, kDdsdSuffixBinary, false},
      {Task::kDdsd, InputMode::kOneBest, OutputMode::kScale0To100,
       kDdsdPrefixOneBest, kDdsdInfix, kDdsdSuffixScale, false},
      {Task::kDdsd, InputMode::kNBest, OutputMode::kBinaryTarget,
       kDdsdPrefixNBest, kDdsdInfix, kDdsdSuffixBinary, false},
      {Task::kDdsd, InputMode::kNBest, OutputMode::kScale0To100,
       kDdsdPrefixNBest, kDdsdInfix, kDdsdSuffixScale, false},
      {Task::kKs, InputMode::kOneBest, OutputMode::kKeyword,
       kKsPrefixOneBest, kKsInfix, kKsSuffix, true},
      {Task::kKs, InputMode::kNBest, OutputMode::kKeyword,
       kKsPrefixNBest, kKsInfix, kKsSuffix, true},
  };
  return registry;
}

const TaskPrompt &lookup_task_prompt(Task task, InputMode input_mode,
                                     OutputMode output_mode) {
  for (const TaskPrompt &tp : task_prompt_registry())
    if (tp.task == task && tp.input_mode == input_mode &&
        tp.output_mode == output_mode)
      return tp;
  throw PromptError("no task prompt for " + to_string(task) + "/" +
                    to_string(input_mode) + "/" + to_string(output_mode));
}

PromptBundle render(std::optional<TaskPrompt> task_prompt,
                    UtterancePrompt utterance_prompt,
                    std::set<Ablation> ablations) {
  bool no_tp = ablations.count(Ablation::kNoTaskPrompt) > 0;
  bool gib = ablations.count(Ablation::kGibberishTaskPrompt) > 0;
  if (no_tp && gib)
    throw PromptError(
        "ablations no_task_prompt and gibberish_task_prompt are exclusive");
  if (no_tp && task_prompt)
    throw PromptError("task prompt given but the no_task_prompt ablation is set");
  if (!no_tp && !gib && !task_prompt)
    throw PromptError("task prompt required unless a task-prompt ablation is set");
  if (ablations.count(Ablation::kNoHypothesisCost) > 0 &&
      utterance_prompt.costs_included)
    throw PromptError(
        "no_hypothesis_cost ablation set but the utterance prompt carries "
        "costs (utterance \"" + utterance_prompt.utterance_id + "\")");

  std::string rendered;
  if (no_tp) {
    rendered = utterance_prompt.text;
  } else if (gib) {
    rendered = kGibberishText + " " + utterance_prompt.text;
  } else {
    rendered = task_prompt->prefix + " " + task_prompt->infix + " " +
               task_prompt->suffix + " " + utterance_prompt.text;
  }

  PromptBundle bundle;
  bundle.task_prompt = std::move(task_prompt);
  bundle.utterance_prompt = std::move(utterance_prompt);
  bundle.rendered = std::move(rendered);
  bundle.ablations = std::move(ablations);
  return bundle;
}

int approx_token_count(const std::string &text) {
  int tokens = 0;
  bool in_token = false;
  for (char c : text) {
    bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r';
    if (!ws && !in_token) ++tokens;
    in_token = !ws;
  }
  return static_cast<int>(std::ceil(tokens * 1.3));
}

PromptBundle enforce_budget(PromptBundle bundle, const NBestList &nbest,
                            int budget_tokens, const TokenCounter &counter) {
  if (budget_tokens < 1)
    throw std::invalid_argument("enforce_budget: budget must be positive");
  int keep = bundle.utterance_prompt.hypothesis_count;
  if (static_cast<int>(nbest.hypotheses.size()) < keep)
    throw PromptError("n-best list shorter than the bundle's hypothesis count");

  int dropped = 0;
  PromptBundle current = std::move(bundle);
  while (counter(current.rendered) > budget_tokens) {
    if (keep <= 1)
      throw PromptError("token budget " + std::to_string(budget_tokens) +
                        " unsatisfiable even with only the 1-best hypothesis "
                        "(utterance \"" +
                        current.utterance_prompt.utterance_id + "\")");
    --keep;
    ++dropped;
    NBestList trimmed;
    trimmed.utterance_id = nbest.utterance_id;
    trimmed.hypotheses.assign(nbest.hypotheses.begin(),
                              nbest.hypotheses.begin() + keep);
    trimmed.n_requested = keep;
    UtterancePrompt up =
        serialize_utterance(trimmed, current.utterance_prompt.costs_included,
                            current.utterance_prompt.cost_decimals);
    up.utterance_id = current.utterance_prompt.utterance_id;
    PromptBundle next =
        render(current.task_prompt, std::move(up), current.ablations);
    next.hypotheses_dropped = current.hypotheses_dropped;
    current = std::move(next);
  }
  current.hypotheses_dropped += dropped;
  return current;
}

}  // namespace slu
