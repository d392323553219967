#include <artjudge/benchmark.hpp>
#include <artjudge/config.hpp>
#include <artjudge/fixture.hpp>
#include <artjudge/scripted_backend.hpp>
#include <artjudge/workspace.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace artjudge;

namespace {

/// The generated mini benchmark, written once per process.
const Workspace& mini() {
  static const Workspace w = [] {
    const auto dir = std::filesystem::temp_directory_path() / "artjudge_bench_fixture";
    std::filesystem::remove_all(dir);
    write_fixture(generate_fixture(), dir);
    return load_workspace(dir);
  }();
  return w;
}

std::unique_ptr<Backend> heuristic(const RunConfig&) { return std::make_unique<ScriptedBackend>(ScriptedBackend::heuristic()); }

BenchmarkReport bench(const RunConfig& cfg) {
  auto b = ScriptedBackend::heuristic();
  return run_benchmark(cfg, mini(), make_dataset(mini().pairs, true), b, b);
}

std::vector<DirectedPair> synthetic(std::size_t pos, std::size_t neg) {
  std::vector<DirectedPair> p;
  for (std::size_t i = 0; i < pos; ++i) p.push_back({"p" + std::to_string(i), "q" + std::to_string(i), Label::Positive, std::nullopt});
  for (std::size_t i = 0; i < neg; ++i) p.push_back({"n" + std::to_string(i), "m" + std::to_string(i), Label::Negative, Tier::Hard});
  return p;
}

}  // namespace

TEST(Dataset, BalanceAndTierCounts) {
  const auto d = make_dataset(synthetic(10, 10), true);
  EXPECT_EQ(d.positives, 10u);
  EXPECT_EQ(d.tier_counts.at(Tier::Hard), 10u);
  EXPECT_THROW(make_dataset(synthetic(11, 9), true), ImbalanceError);
  EXPECT_NO_THROW(make_dataset(synthetic(11, 9), false));
  auto unlabeled = synthetic(1, 1);
  unlabeled[0].label.reset();
  EXPECT_THROW(make_dataset(unlabeled, false), DataError);
}

TEST(Folds, TwentyPairsSplitTwoAndTwo) {
  const auto d = make_dataset(synthetic(10, 10), true);
  const auto f = make_folds(d, 5, 1);
  for (int k = 0; k < 5; ++k) {
    int pos = 0, neg = 0;
    for (auto i : f.members(k)) (d.pairs[i].label == Label::Positive ? pos : neg)++;
    EXPECT_EQ(pos, 2);
    EXPECT_EQ(neg, 2);
  }
  EXPECT_EQ(make_folds(d, 5, 1).assignment, f.assignment);
  EXPECT_NE(make_folds(d, 5, 2).assignment, f.assignment);
}

TEST(Folds, MiniBenchmarkIsStratified) {
  const auto d = make_dataset(mini().pairs, true);
  EXPECT_EQ(d.pairs.size(), 60u);
  const auto f = make_folds(d, 5, RunConfig{}.seed);
  for (int k = 0; k < 5; ++k) EXPECT_EQ(f.members(k).size(), 12u);
}

TEST(Folds, TooFewPairs) {
  const auto d = make_dataset(synthetic(2, 2), true);
  EXPECT_THROW(make_folds(d, 5, 1), StratificationError);
  EXPECT_THROW(make_folds(d, 1, 1), DataError);
}

TEST(Folds, UnstratifiableTier) {
  auto p = synthetic(10, 10);
  p[10].tier = Tier::TemporalImpossible;  // a single pair cannot sit in five folds at once
  EXPECT_THROW(make_folds(make_dataset(p, true), 5, 1), StratificationError);
}

TEST(Config, DefaultsRoundTripAndUnknownKeys) {
  const RunConfig c;
  EXPECT_EQ(c.threshold, 0.5);
  EXPECT_EQ(c.gamma, 2.0);
  EXPECT_EQ(c.max_steps, 8);
  EXPECT_EQ(c.agent().context.budget_chars, 2400u);
  const auto back = json(c).get<RunConfig>();
  EXPECT_EQ(json(back), json(c));
  EXPECT_THROW(json({{"gama", 1.0}}).get<RunConfig>(), DataError);
  const auto partial = json({{"gamma", 4.0}, {"disabled_tools", {"TimelineGate"}}}).get<RunConfig>();
  EXPECT_EQ(partial.gamma, 4.0);
  EXPECT_EQ(partial.folds, 5);
  EXPECT_TRUE(partial.disabled_tools.count(ToolName::TimelineGate));

  artjudge::testing::ScratchDir dir("config");
  write_text_file(dir / "bad.json", R"({"threshold": 1.5})");
  EXPECT_THROW(read_config(dir / "bad.json"), DataError);
  write_text_file(dir / "ok.json", R"({"threshold": 0.4, "folds": 3})");
  EXPECT_EQ(read_config(dir / "ok.json").folds, 3);
}

TEST(Switches, ApplyAndReject) {
  const RunConfig c;
  EXPECT_EQ(apply_switch(c, "gamma=0").gamma, 0.0);
  EXPECT_TRUE(apply_switch(c, "mask_bio").mask_bio);
  EXPECT_TRUE(apply_switch(c, "generic_prompts").generic_prompts);
  EXPECT_TRUE(apply_switch(c, "disable_tool=BiographyReader").disabled_tools.count(ToolName::BiographyReader));
  for (const char* bad : {"gamma=x", "gamma=", "disable_tool=Oracle", "mask_bio=1", "shuffle"}) EXPECT_THROW(apply_switch(c, bad), UnknownSwitchError);
  EXPECT_THROW(apply_switch(c, "gamma=-1"), DataError);
  const auto arm = parse_arm("gamma=1,mask_bio");
  EXPECT_EQ(arm.switches, (std::vector<std::string>{"gamma=1", "mask_bio"}));
  EXPECT_EQ(parse_arm("").name, "baseline");
}

TEST(Benchmark, HeuristicBeatsAlwaysYes) {
  const auto r = bench(RunConfig{});
  const auto& m = r.pooled;
  EXPECT_GT(m.mcc, 0.0);
  EXPECT_EQ(r.no_verdict_count(), 0u);
  EXPECT_EQ(m.confusion.total(), 60);
  for (const char* name : kMetricNames) {
    if (std::string(name) == "recall") continue;
    EXPECT_GT(metric_value(m, name), metric_value(r.always_yes, name)) << name;
  }
  // pooled confusion recomputed from the verdicts
  Confusion c;
  for (const auto& o : r.outcomes) {
    const bool yes = o.verdict->influence_score > 0.5;
    (o.pair.label == Label::Positive ? (yes ? c.tp : c.fn) : (yes ? c.fp : c.tn)) += 1;
  }
  EXPECT_EQ(c, m.confusion);
  EXPECT_EQ(r.tier_rejection.at(Tier::TemporalImpossible), 1.0);
  EXPECT_EQ(r.rounds.size(), 5u);
}

TEST(Benchmark, ImpossiblePairsCostNoBackendCalls) {
  const auto r = bench(RunConfig{});
  for (const auto& o : r.outcomes) {
    if (o.pair.tier != Tier::TemporalImpossible) continue;
    EXPECT_EQ(o.backend_calls, 0) << o.pair.key();
    EXPECT_EQ(o.verdict->influence_score, 0.05);
  }
}

TEST(Benchmark, GammaSweepIsMonotone) {
  std::size_t prev_yes = 1000;
  double prev_recall = 2, prev_spec = -1;
  for (double g : {0.0, 1.0, 2.0, 4.0}) {
    RunConfig c;
    c.gamma = g;
    const auto r = bench(c);
    EXPECT_LE(r.yes_count(), prev_yes) << g;
    EXPECT_LE(r.pooled.recall, prev_recall) << g;
    EXPECT_GE(r.pooled.specificity, prev_spec) << g;
    prev_yes = r.yes_count();
    prev_recall = r.pooled.recall;
    prev_spec = r.pooled.specificity;
  }
}

TEST(Benchmark, ReportsAreByteIdentical) {
  artjudge::testing::ScratchDir dir("bench_determinism");
  write_report(bench(RunConfig{}), dir / "a");
  write_report(bench(RunConfig{}), dir / "b");
  for (const char* f : {"metrics.json", "metrics.csv", "verdicts.jsonl", "roc_points.csv", "trajectories.jsonl", "config.json"})
    EXPECT_EQ(read_text_file(dir.path() / "a" / f), read_text_file(dir.path() / "b" / f)) << f;
}

TEST(Benchmark, ConcurrencyDoesNotChangeTheReport) {
  RunConfig c;
  c.concurrency = 4;
  EXPECT_EQ(metrics_json(bench(c)).dump(), metrics_json(bench(RunConfig{})).dump());
  EXPECT_EQ(trajectories_jsonl(bench(c)), trajectories_jsonl(bench(RunConfig{})));
}

TEST(Ablation, EmptyArmMatchesBaseline) {
  const auto d = make_dataset(mini().pairs, true);
  const auto a = ablate(RunConfig{}, mini(), d, {parse_arm("")}, heuristic);
  ASSERT_EQ(a.arms.size(), 1u);
  EXPECT_EQ(metrics_json(a.arms[0].second).dump(), metrics_json(a.baseline).dump());
  EXPECT_EQ(verdicts_jsonl(a.arms[0].second), verdicts_jsonl(a.baseline));
  EXPECT_EQ(trajectories_jsonl(a.arms[0].second), trajectories_jsonl(a.baseline));
}

TEST(Ablation, WithoutTheGateImpossiblePairsLeak) {
  const auto d = make_dataset(mini().pairs, true);
  const auto a = ablate(RunConfig{}, mini(), d, {parse_arm("disable_tool=TimelineGate"), parse_arm("gamma=0")}, heuristic);
  EXPECT_EQ(a.baseline.tier_rejection.at(Tier::TemporalImpossible), 1.0);
  EXPECT_LT(a.arms[0].second.tier_rejection.at(Tier::TemporalImpossible), 1.0);
  EXPECT_LE(a.arms[1].second.pooled.specificity, a.baseline.pooled.specificity);
  // identical folds across arms
  for (std::size_t i = 0; i < d.pairs.size(); ++i) EXPECT_EQ(a.arms[0].second.outcomes[i].fold, a.baseline.outcomes[i].fold);
  const auto j = ablation_json(a);
  EXPECT_EQ(j.at("arms").size(), 2u);
  EXPECT_DOUBLE_EQ(j.at("arms")[1].at("delta").at("specificity").get<double>(),
                   a.arms[1].second.pooled.specificity - a.baseline.pooled.specificity);
}

TEST(Ablation, MaskedRunUsesTheSameFolds) {
  const auto d = make_dataset(mini().pairs, true);
  const auto a = ablate(RunConfig{}, mini(), d, {parse_arm("mask_bio")}, heuristic);
  const auto& masked = a.arms[0].second;
  ASSERT_EQ(masked.outcomes.size(), a.baseline.outcomes.size());
  for (std::size_t i = 0; i < d.pairs.size(); ++i) EXPECT_EQ(masked.outcomes[i].fold, a.baseline.outcomes[i].fold);
  EXPECT_TRUE(ablation_json(a).at("arms")[0].at("delta").contains("mcc"));
  // no explicit-reference cue survives the mask anywhere in the run
  EXPECT_EQ(trajectories_jsonl(masked).find("\"ExplicitReference\""), std::string::npos);
  EXPECT_NE(trajectories_jsonl(a.baseline).find("\"ExplicitReference\""), std::string::npos);
}
