#include "slu/prompting.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>

#include "testutil.hpp"

using slu::Ablation;
using slu::InputMode;
using slu::NBestList;
using slu::OutputMode;
using slu::PromptBundle;
using slu::PromptError;
using slu::Task;
using slu::TaskPrompt;
using slu::UtterancePrompt;
using testutil::make_nbest;

namespace {

// The DDSD task-prompt segments, frozen here as the byte-exact strings the
// registry must reproduce (independent copies, not references into the
// library).
const std::string kFrozenPrefix1Best =
    "Determine whether the following spoken utterance is directed towards a "
    "voice assistant or a human being.";
const std::string kFrozenPrefixNBest =
    "In this task, we provide an n-best list of ASR hypotheses for a spoken "
    "utterance. Each of the hypothesis is separated by a newline character. "
    "The cost of each hypothesis is at the end in the format '[cost]' where a "
    "low cost indicates that we are more confident about that ASR hypothesis. "
    "Determine whether the following spoken utterance is directed towards a "
    "voice assistant or a human being by taking into account all the n-best "
    "hypotheses.";
const std::string kFrozenInfix =
    "Typical spoken utterances directed towards the voice assistant are "
    "commands to fulfill a task or queries to get some information.";
const std::string kFrozenSuffixBinary =
    "Answer only from the following categories ['1', '0'] where '1' indicates "
    "that the utterance is directed towards the voice assistant and '0' "
    "indicates that the utterance is directed towards a human being.";
const std::string kFrozenSuffixScale =
    "Answer on a scale of 0 to 100 where a score of '100' indicates that the "
    "utterance is directed towards the voice assistant and '0' indicates that "
    "the utterance is directed towards a human being. Your answer should only "
    "contain an integer between 0 and 100.";

NBestList hive_nbest() {
  return make_nbest("hive", {{"hive", -47.8},
                             {"five", -46.8},
                             {"bye", -44.0},
                             {"hive", -31.5}});
}

}  // namespace

TEST_CASE("serialize_utterance reproduces the reference examples byte-exactly") {
  const UtterancePrompt hive = slu::serialize_utterance(hive_nbest(), true);
  CHECK(hive.text ==
        "hive [-47.8]\nfive [-46.8]\nbye [-44.0]\nhive [-31.5]");
  CHECK(hive.hypothesis_count == 4);
  CHECK(hive.costs_included);
  CHECK(hive.cost_decimals == 1);

  const UtterancePrompt shuffle = slu::serialize_utterance(
      make_nbest("shuffle", {{"shuffle play U2", -84.4}}), false);
  CHECK(shuffle.text == "shuffle play U2");
  CHECK(shuffle.hypothesis_count == 1);
  CHECK_FALSE(shuffle.costs_included);

  const UtterancePrompt yes =
      slu::serialize_utterance(make_nbest("yes", {{"yes", -6.0}}), true);
  CHECK(yes.text == "yes [-6.0]");
}

TEST_CASE("serialize_utterance honors cost decimals and empty word lists") {
  const UtterancePrompt two = slu::serialize_utterance(
      make_nbest("d", {{"go", -4.25}}), true, /*cost_decimals=*/2);
  CHECK(two.text == "go [-4.25]");

  // An empty hypothesis (all-epsilon path) serializes to a bare cost token.
  NBestList nbest = make_nbest("e", {{"", -2.0}});
  const UtterancePrompt up = slu::serialize_utterance(nbest, true);
  CHECK(up.text == "[-2.0]");
}

TEST_CASE("serialize_utterance rejects an empty n-best list") {
  NBestList empty;
  empty.utterance_id = "none";
  CHECK_THROWS_AS(slu::serialize_utterance(empty, true), PromptError);
}

TEST_CASE("parse_utterance_prompt inverts serialization") {
  const UtterancePrompt hive = slu::serialize_utterance(hive_nbest(), true);
  const auto lines = slu::parse_utterance_prompt(hive.text);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0].words == std::vector<std::string>{"hive"});
  REQUIRE(lines[0].cost.has_value());
  CHECK(*lines[0].cost == -47.8);
  CHECK(*lines[1].cost == -46.8);
  CHECK(lines[2].words == std::vector<std::string>{"bye"});
  CHECK(*lines[2].cost == -44.0);
  CHECK(lines[3].words == std::vector<std::string>{"hive"});
  CHECK(*lines[3].cost == -31.5);

  SUBCASE("costless serialization parses without costs") {
    const UtterancePrompt bare = slu::serialize_utterance(hive_nbest(), false);
    const auto parsed = slu::parse_utterance_prompt(bare.text);
    REQUIRE(parsed.size() == 4);
    for (const auto &line : parsed) CHECK_FALSE(line.cost.has_value());
  }

  SUBCASE("multi-word hypotheses keep their word split") {
    const auto parsed = slu::parse_utterance_prompt("shuffle play U2 [-84.4]");
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].words == std::vector<std::string>{"shuffle", "play", "U2"});
    CHECK(*parsed[0].cost == -84.4);
  }

  SUBCASE("a bracketed non-number stays part of the words") {
    const auto parsed = slu::parse_utterance_prompt("foo [bar]");
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].words == std::vector<std::string>{"foo", "[bar]"});
    CHECK_FALSE(parsed[0].cost.has_value());
  }

  SUBCASE("a bare cost line parses to an empty word list") {
    const auto parsed = slu::parse_utterance_prompt("[-2.0]");
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].words.empty());
    REQUIRE(parsed[0].cost.has_value());
    CHECK(*parsed[0].cost == -2.0);
  }
}

TEST_CASE("format_cost renders fixed-point with preserved sign") {
  CHECK(slu::format_cost(-47.8) == "-47.8");
  CHECK(slu::format_cost(5.0) == "5.0");
  CHECK(slu::format_cost(-31.5, 2) == "-31.50");
  CHECK(slu::format_cost(0.0) == "0.0");
}

TEST_CASE("the task-prompt registry matches the frozen DDSD wording") {
  const auto &registry = slu::task_prompt_registry();
  CHECK(registry.size() == 6);

  const TaskPrompt &bin1 =
      slu::lookup_task_prompt(Task::kDdsd, InputMode::kOneBest,
                              OutputMode::kBinaryTarget);
  CHECK(bin1.prefix == kFrozenPrefix1Best);
  CHECK(bin1.infix == kFrozenInfix);
  CHECK(bin1.suffix == kFrozenSuffixBinary);
  CHECK_FALSE(bin1.custom_text);

  const TaskPrompt &scale1 = slu::lookup_task_prompt(
      Task::kDdsd, InputMode::kOneBest, OutputMode::kScale0To100);
  CHECK(scale1.prefix == kFrozenPrefix1Best);
  CHECK(scale1.suffix == kFrozenSuffixScale);

  const TaskPrompt &binN = slu::lookup_task_prompt(
      Task::kDdsd, InputMode::kNBest, OutputMode::kBinaryTarget);
  CHECK(binN.prefix == kFrozenPrefixNBest);
  CHECK(binN.infix == kFrozenInfix);
  CHECK(binN.suffix == kFrozenSuffixBinary);

  const TaskPrompt &scaleN = slu::lookup_task_prompt(
      Task::kDdsd, InputMode::kNBest, OutputMode::kScale0To100);
  CHECK(scaleN.prefix == kFrozenPrefixNBest);
  CHECK(scaleN.suffix == kFrozenSuffixScale);

  SUBCASE("keyword-spotting prompts exist and are flagged as original text") {
    const TaskPrompt &ks1 = slu::lookup_task_prompt(
        Task::kKs, InputMode::kOneBest, OutputMode::kKeyword);
    const TaskPrompt &ksN = slu::lookup_task_prompt(
        Task::kKs, InputMode::kNBest, OutputMode::kKeyword);
    CHECK(ks1.custom_text);
    CHECK(ksN.custom_text);
    CHECK_FALSE(ks1.prefix.empty());
    CHECK_FALSE(ks1.infix.empty());
    CHECK_FALSE(ks1.suffix.empty());
    CHECK(ks1.prefix != ksN.prefix);
  }

  SUBCASE("combinations outside the registry throw") {
    CHECK_THROWS_AS(slu::lookup_task_prompt(Task::kKs, InputMode::kOneBest,
                                            OutputMode::kBinaryTarget),
                    PromptError);
    CHECK_THROWS_AS(slu::lookup_task_prompt(Task::kDdsd, InputMode::kOneBest,
                                            OutputMode::kKeyword),
                    PromptError);
  }
}

TEST_CASE("render concatenates segments with single spaces") {
  const TaskPrompt &tp = slu::lookup_task_prompt(
      Task::kDdsd, InputMode::kOneBest, OutputMode::kBinaryTarget);
  const UtterancePrompt up =
      slu::serialize_utterance(make_nbest("u", {{"yes", -6.0}}), true);

  const PromptBundle bundle = slu::render(tp, up, {});
  CHECK(bundle.rendered == kFrozenPrefix1Best + " " + kFrozenInfix + " " +
                               kFrozenSuffixBinary + " yes [-6.0]");
  CHECK(bundle.hypotheses_dropped == 0);
  CHECK(bundle.ablations.empty());
}

TEST_CASE("ablations remove or replace exactly the task-prompt text") {
  const TaskPrompt &tp = slu::lookup_task_prompt(
      Task::kDdsd, InputMode::kNBest, OutputMode::kBinaryTarget);
  const UtterancePrompt up =
      slu::serialize_utterance(hive_nbest(), true);

  SUBCASE("no_task_prompt leaves only the utterance text") {
    const PromptBundle b =
        slu::render(std::nullopt, up, {Ablation::kNoTaskPrompt});
    CHECK(b.rendered == up.text);
    CHECK_FALSE(b.task_prompt.has_value());
  }

  SUBCASE("gibberish_task_prompt substitutes the fixed pseudo-word text") {
    const PromptBundle b =
        slu::render(tp, up, {Ablation::kGibberishTaskPrompt});
    CHECK(b.rendered == slu::kGibberishText + " " + up.text);
    CHECK(b.rendered.find(kFrozenPrefixNBest) == std::string::npos);
    CHECK(b.rendered.find(kFrozenInfix) == std::string::npos);
    CHECK(b.rendered.find(kFrozenSuffixBinary) == std::string::npos);
  }

  SUBCASE("no_hypothesis_cost requires a costless serialization") {
    const UtterancePrompt bare = slu::serialize_utterance(hive_nbest(), false);
    const PromptBundle b =
        slu::render(tp, bare, {Ablation::kNoHypothesisCost});
    // The utterance block carries no bracketed cost tokens at all.
    CHECK(bare.text.find('[') == std::string::npos);
    CHECK(b.rendered == tp.prefix + " " + tp.infix + " " + tp.suffix + " " +
                            bare.text);
  }
}

TEST_CASE("render rejects inconsistent inputs") {
  const TaskPrompt &tp = slu::lookup_task_prompt(
      Task::kDdsd, InputMode::kNBest, OutputMode::kBinaryTarget);
  const UtterancePrompt with_costs =
      slu::serialize_utterance(hive_nbest(), true);

  CHECK_THROWS_AS(slu::render(tp, with_costs, {Ablation::kNoTaskPrompt}),
                  PromptError);
  CHECK_THROWS_AS(slu::render(std::nullopt, with_costs, {}), PromptError);
  CHECK_THROWS_AS(
      slu::render(std::nullopt, with_costs,
                  {Ablation::kNoTaskPrompt, Ablation::kGibberishTaskPrompt}),
      PromptError);
  CHECK_THROWS_AS(slu::render(tp, with_costs, {Ablation::kNoHypothesisCost}),
                  PromptError);
}

TEST_CASE("ablation names round trip including short aliases") {
  for (Ablation a : {Ablation::kNoTaskPrompt, Ablation::kGibberishTaskPrompt,
                     Ablation::kNoHypothesisCost}) {
    CHECK(slu::ablation_from_string(slu::to_string(a)) == a);
  }
  CHECK(slu::ablation_from_string("no-tp") == Ablation::kNoTaskPrompt);
  CHECK(slu::ablation_from_string("gib-tp") == Ablation::kGibberishTaskPrompt);
  CHECK(slu::ablation_from_string("no-hc") == Ablation::kNoHypothesisCost);
  CHECK_THROWS_AS(slu::ablation_from_string("bogus"), PromptError);
}

TEST_CASE("approx_token_count scales whitespace tokens by 1.3") {
  CHECK(slu::approx_token_count("") == 0);
  CHECK(slu::approx_token_count("hello") == 2);       // ceil(1.3)
  CHECK(slu::approx_token_count("a b c") == 4);       // ceil(3.9)
  CHECK(slu::approx_token_count("a\nb\tc d") == 6);   // ceil(5.2)
}

TEST_CASE("enforce_budget drops highest-cost hypotheses from the end") {
  // 16 one-word hypotheses, task prompt ablated away: each line contributes
  // exactly two whitespace tokens ("wN [-1.0]"), so k kept hypotheses cost
  // ceil(2.6k) budget tokens: k=4 -> 11, k=5 -> 13.
  std::vector<std::pair<std::string, double>> hyps;
  for (int i = 1; i <= 16; ++i) {
    hyps.emplace_back("w" + std::to_string(i), -1.0);
  }
  const NBestList nbest = make_nbest("budget", hyps);
  const UtterancePrompt up = slu::serialize_utterance(nbest, true);
  const PromptBundle bundle =
      slu::render(std::nullopt, up, {Ablation::kNoTaskPrompt});

  SUBCASE("under budget passes through unchanged") {
    const PromptBundle kept = slu::enforce_budget(bundle, nbest, 2048);
    CHECK(kept.rendered == bundle.rendered);
    CHECK(kept.hypotheses_dropped == 0);
  }

  SUBCASE("an exact-fit budget keeps a prefix of the list in order") {
    const PromptBundle trimmed = slu::enforce_budget(bundle, nbest, 11);
    CHECK(trimmed.hypotheses_dropped == 12);
    CHECK(trimmed.utterance_prompt.hypothesis_count == 4);
    CHECK(trimmed.rendered ==
          "w1 [-1.0]\nw2 [-1.0]\nw3 [-1.0]\nw4 [-1.0]");
    CHECK(slu::approx_token_count(trimmed.rendered) <= 11);

    SUBCASE("and is idempotent") {
      const PromptBundle again = slu::enforce_budget(trimmed, nbest, 11);
      CHECK(again.rendered == trimmed.rendered);
      CHECK(again.hypotheses_dropped == trimmed.hypotheses_dropped);
    }
  }

  SUBCASE("the 1-best hypothesis is never dropped") {
    // Budget 3 fits exactly one line (ceil(2.6) = 3).
    const PromptBundle only_best = slu::enforce_budget(bundle, nbest, 3);
    CHECK(only_best.utterance_prompt.hypothesis_count == 1);
    CHECK(only_best.rendered == "w1 [-1.0]");
    CHECK(only_best.hypotheses_dropped == 15);
  }

  SUBCASE("an unsatisfiable budget throws") {
    CHECK_THROWS_WITH_AS(slu::enforce_budget(bundle, nbest, 2),
                         doctest::Contains("unsatisfiable"), PromptError);
  }

  SUBCASE("a non-positive budget is rejected") {
    CHECK_THROWS_AS(slu::enforce_budget(bundle, nbest, 0),
                    std::invalid_argument);
  }
}

TEST_CASE("enforce_budget keeps the task prompt while trimming hypotheses") {
  const TaskPrompt &tp = slu::lookup_task_prompt(
      Task::kDdsd, InputMode::kNBest, OutputMode::kBinaryTarget);
  std::vector<std::pair<std::string, double>> hyps;
  for (int i = 1; i <= 8; ++i) {
    hyps.emplace_back("word" + std::to_string(i), -1.0 * i);
  }
  const NBestList nbest = make_nbest("tp-budget", hyps);
  const PromptBundle bundle =
      slu::render(tp, slu::serialize_utterance(nbest, true), {});

  const int full = slu::approx_token_count(bundle.rendered);
  const PromptBundle trimmed = slu::enforce_budget(bundle, nbest, full - 1);
  CHECK(trimmed.hypotheses_dropped >= 1);
  CHECK(trimmed.rendered.find(tp.prefix) == 0);
  CHECK(trimmed.rendered.find("word1 [-1.0]") != std::string::npos);
  CHECK(slu::approx_token_count(trimmed.rendered) <= full - 1);
}

TEST_CASE("enforce_budget validates the n-best list length") {
  const NBestList full = make_nbest("x", {{"a", -1.0}, {"b", -0.5}});
  const NBestList shorter = make_nbest("x", {{"a", -1.0}});
  const PromptBundle bundle = slu::render(
      std::nullopt, slu::serialize_utterance(full, true),
      {Ablation::kNoTaskPrompt});
  CHECK_THROWS_AS(slu::enforce_budget(bundle, shorter, 2048), PromptError);
}
