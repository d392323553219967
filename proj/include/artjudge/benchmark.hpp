#pragma once

// Balanced benchmark protocol: stratified folds, per-round threshold tuning,
// tier rejection, reports and ablation arms.

#include <artjudge/agent.hpp>
#include <artjudge/config.hpp>
#include <artjudge/core.hpp>
#include <artjudge/errors.hpp>
#include <artjudge/metrics.hpp>
#include <artjudge/retrieval.hpp>
#include <artjudge/workspace.hpp>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace artjudge {

struct BenchmarkDataset {
  std::vector<DirectedPair> pairs;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::map<Tier, std::size_t> tier_counts;
};

inline BenchmarkDataset make_dataset(std::vector<DirectedPair> pairs, bool balanced) {
  BenchmarkDataset d;
  for (const auto& p : pairs) {
    validate_pair(p);
    if (!p.label) throw DataError("pair " + p.key() + " has no label");
    if (*p.label == Label::Positive) {
      ++d.positives;
    } else {
      ++d.negatives;
      if (p.tier) ++d.tier_counts[*p.tier];
    }
  }
  if (balanced && d.positives != d.negatives) {
    throw ImbalanceError(std::to_string(d.positives) + " positives vs " + std::to_string(d.negatives) + " negatives");
  }
  d.pairs = std::move(pairs);
  return d;
}

inline BenchmarkDataset load_dataset(const std::filesystem::path& path, bool balanced = true) { return make_dataset(read_pairs(path), balanced); }

struct FoldSpec {
  int k = 5;
  std::uint64_t seed = 0;
  std::vector<int> assignment;  // dataset index -> fold

  std::vector<std::size_t> members(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] == fold) out.push_back(i);
    return out;
  }
};

namespace detail {

// Spelled out instead of std::shuffle, whose algorithm is implementation-defined.
inline void fisher_yates(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

inline std::string stratum(const DirectedPair& p) {
  if (p.label == Label::Positive) return "0:Positive";
  return p.tier ? "1:" + to_string(*p.tier) : "1:Negative";
}

}  // namespace detail

/// Shuffles each stratum (positives, then each negative tier) and deals it
/// round-robin, continuing the rotation across strata.
inline FoldSpec make_folds(const BenchmarkDataset& d, int k, std::uint64_t seed) {
  if (k < 2) throw DataError("need at least 2 folds");
  if (d.pairs.size() < static_cast<std::size_t>(k)) throw StratificationError("fewer pairs than folds");
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < d.pairs.size(); ++i) strata[detail::stratum(d.pairs[i])].push_back(i);
  FoldSpec f{k, seed, std::vector<int>(d.pairs.size(), 0)};
  std::mt19937_64 rng(seed);
  std::size_t offset = 0;
  for (auto& [name, idx] : strata) {
    detail::fisher_yates(idx, rng);
    for (std::size_t j = 0; j < idx.size(); ++j) f.assignment[idx[j]] = static_cast<int>((offset + j) % static_cast<std::size_t>(k));
    offset += idx.size();
  }
  // stratification checks
  const double global_pos = static_cast<double>(d.positives) / static_cast<double>(d.pairs.size());
  for (int fold = 0; fold < k; ++fold) {
    const auto m = f.members(fold);
    std::size_t pos = 0, neg = 0;
    std::map<Tier, std::size_t> tiers;
    for (auto i : m) {
      if (d.pairs[i].label == Label::Positive) {
        ++pos;
      } else {
        ++neg;
        if (d.pairs[i].tier) ++tiers[*d.pairs[i].tier];
      }
    }
    if (m.empty() || std::abs(static_cast<double>(pos) / static_cast<double>(m.size()) - global_pos) > 0.02 + 1e-12) {
      throw StratificationError("fold " + std::to_string(fold) + " positive ratio deviates more than 2% from the dataset");
    }
    for (const auto& [t, n] : d.tier_counts) {
      const double global = static_cast<double>(n) / static_cast<double>(d.negatives);
      const double local = neg ? static_cast<double>(tiers[t]) / static_cast<double>(neg) : 0.0;
      if (std::abs(local - global) > 0.05 + 1e-12) {
        throw StratificationError("tier " + to_string(t) + " is too small to stratify over " + std::to_string(k) + " folds");
      }
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Adjudication fan-out

struct PairOutcome {
  DirectedPair pair;
  int fold = 0;
  std::optional<VerdictTuple> verdict;
  std::string trajectory_jsonl;
  std::string diagnostic;
  int backend_calls = 0;
};

inline std::optional<SeedInfo> seed_for(const Workspace& w, const DirectedPair& p) {
  try {
    const auto s = exact_seed_similarity(*w.corpus, *w.visual, p.source_artist_id, p.target_artist_id);
    return SeedInfo{s.cosine, s.source_artwork, s.target_artwork};
  } catch (const DataError&) {
    return std::nullopt;
  }
}

/// Adjudicates every pair; results keep dataset order regardless of concurrency.
inline std::vector<PairOutcome> adjudicate_all(const std::vector<DirectedPair>& pairs, const Workspace& w, const ToolRegistry& tools,
                                               Backend& controller, Backend& critic, const AgentConfig& agent, int concurrency = 1) {
  std::vector<PairOutcome> out(pairs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < pairs.size(); i = next++) {
      const auto& p = pairs[i];
      auto r = adjudicate_pair(p, *w.corpus, tools, controller, critic, agent, seed_for(w, p), "trajectories.jsonl#" + p.key());
      out[i] = {p, 0, r.verdict, trajectory_to_jsonl(r.trajectory), r.trajectory.diagnostic, r.trajectory.backend_calls};
    }
  };
  const int n = std::max(1, concurrency);
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex fm;
    for (int t = 0; t < n; ++t) {
      pool.emplace_back([&]() {
        try {
          worker();
        } catch (...) {
          std::lock_guard lock(fm);
          if (!failure) failure = std::current_exception();
          next = pairs.size();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report

struct RoundResult {
  int round = 0;
  double theta = 0.5;
  MetricBundle metrics;
};

struct BenchmarkReport {
  json config;
  std::vector<PairOutcome> outcomes;
  MetricBundle pooled;  // at the configured threshold, over every pair with a verdict
  MetricBundle always_yes;  // same pairs
  std::map<Tier, double> tier_rejection;
  std::vector<RoundResult> rounds;
  std::map<std::string, std::pair<double, double>> cv;  // metric -> (mean, std)
  std::vector<RocPoint> roc;

  std::size_t yes_count() const { return static_cast<std::size_t>(pooled.confusion.tp + pooled.confusion.fp); }
  std::size_t no_verdict_count() const {
    return static_cast<std::size_t>(std::count_if(outcomes.begin(), outcomes.end(), [](const PairOutcome& o) { return !o.verdict; }));
  }
  std::size_t backend_calls() const {
    std::size_t n = 0;
    for (const auto& o : outcomes) n += static_cast<std::size_t>(o.backend_calls);
    return n;
  }
};

namespace detail {

struct Scored {
  std::vector<Prediction> preds;
  std::vector<Label> labels;
  std::vector<std::optional<Tier>> tiers;
};

inline Scored collect(const std::vector<PairOutcome>& outcomes, const std::vector<std::size_t>& which, std::optional<double> theta) {
  Scored s;
  for (auto i : which) {
    const auto& o = outcomes[i];
    if (!o.verdict) continue;
    Prediction p{o.verdict->verdict, o.verdict->influence_score};
    if (theta) p.verdict = derive_verdict(p.influence_score, *theta).verdict;
    s.preds.push_back(p);
    s.labels.push_back(*o.pair.label);
    s.tiers.push_back(o.pair.tier);
  }
  return s;
}

}  // namespace detail

/// Scores every pair once, then evaluates: pooled metrics at the configured
/// threshold, and per round r a threshold tuned on fold r applied to the rest.
inline BenchmarkReport evaluate(const FoldSpec& folds, std::vector<PairOutcome> outcomes, const RunConfig& cfg) {
  BenchmarkReport r;
  r.config = cfg;
  for (std::size_t i = 0; i < outcomes.size(); ++i) outcomes[i].fold = folds.assignment[i];
  r.outcomes = std::move(outcomes);
  std::vector<std::size_t> all(r.outcomes.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto pooled = detail::collect(r.outcomes, all, std::nullopt);
  r.pooled = compute_metrics(pooled.preds, pooled.labels);
  r.always_yes = always_yes(pooled.labels);
  std::vector<Prediction> neg_preds;
  std::vector<Label> neg_labels;
  std::vector<std::optional<Tier>> neg_tiers;
  for (std::size_t i = 0; i < pooled.preds.size(); ++i) {
    if (pooled.labels[i] == Label::Negative && pooled.tiers[i]) {
      neg_preds.push_back(pooled.preds[i]);
      neg_labels.push_back(pooled.labels[i]);
      neg_tiers.push_back(pooled.tiers[i]);
    }
  }
  r.tier_rejection = tier_rejection(neg_preds, neg_labels, neg_tiers);
  {
    std::vector<double> sc;
    std::vector<bool> pos;
    for (std::size_t i = 0; i < pooled.preds.size(); ++i) {
      sc.push_back(pooled.preds[i].influence_score);
      pos.push_back(pooled.labels[i] == Label::Positive);
    }
    r.roc = roc_curve(sc, pos);
  }
  for (int round = 0; round < folds.k; ++round) {
    std::vector<std::size_t> dev, eval;
    for (std::size_t i = 0; i < r.outcomes.size(); ++i) (folds.assignment[i] == round ? dev : eval).push_back(i);
    double theta = cfg.threshold;
    if (cfg.tune_threshold) {
      const auto ds = detail::collect(r.outcomes, dev, std::nullopt);
      std::vector<double> scores;
      for (const auto& p : ds.preds) scores.push_back(p.influence_score);
      theta = tune_threshold(scores, ds.labels, cfg.threshold);
    }
    const auto es = detail::collect(r.outcomes, eval, theta);
    r.rounds.push_back({round, theta, compute_metrics(es.preds, es.labels)});
  }
  for (const char* name : kMetricNames) {
    double mean = 0.0;
    for (const auto& rr : r.rounds) mean += metric_value(rr.metrics, name);
    mean /= static_cast<double>(r.rounds.size());
    double var = 0.0;
    for (const auto& rr : r.rounds) var += std::pow(metric_value(rr.metrics, name) - mean, 2);
    const double sd = r.rounds.size() > 1 ? std::sqrt(var / static_cast<double>(r.rounds.size() - 1)) : 0.0;
    r.cv[name] = {mean, sd};
  }
  return r;
}

inline BenchmarkReport run_benchmark(const RunConfig& cfg, const Workspace& w, const BenchmarkDataset& d, Backend& controller, Backend& critic) {
  cfg.validate();
  const auto folds = make_folds(d, cfg.folds, cfg.seed);
  const auto tools = make_registry(w, cfg);
  auto outcomes = adjudicate_all(d.pairs, w, tools, controller, critic, cfg.agent(), cfg.concurrency);
  return evaluate(folds, std::move(outcomes), cfg);
}

namespace detail {

inline std::string num(double v) { return json(v).dump(); }

}  // namespace detail

inline json metrics_json(const BenchmarkReport& r) {
  json tiers = json::object();
  for (const auto& [t, v] : r.tier_rejection) tiers[to_string(t)] = v;
  json rounds = json::array();
  for (const auto& rr : r.rounds) rounds.push_back({{"round", rr.round}, {"theta", rr.theta}, {"metrics", rr.metrics}});
  json cv = json::object();
  for (const auto& [k, v] : r.cv) cv[k] = {{"mean", v.first}, {"std", v.second}};
  json no_verdict = json::array();
  for (const auto& o : r.outcomes)
    if (!o.verdict) no_verdict.push_back({{"pair", o.pair.key()}, {"diagnostic", o.diagnostic}});
  return {{"pairs", r.outcomes.size()}, {"pooled", r.pooled},   {"always_yes", r.always_yes}, {"yes_count", r.yes_count()}, {"tier_rejection", tiers},
          {"rounds", rounds},           {"cross_validation", cv}, {"no_verdict", no_verdict},  {"backend_calls", r.backend_calls()}};
}

inline std::string metrics_csv(const BenchmarkReport& r) {
  std::ostringstream s;
  s << "scope,metric,value\n";
  for (const char* m : kMetricNames) s << "pooled," << m << "," << detail::num(metric_value(r.pooled, m)) << "\n";
  for (const char* m : kMetricNames) s << "always_yes," << m << "," << detail::num(metric_value(r.always_yes, m)) << "\n";
  for (const auto& [k, v] : r.cv) s << "cv_mean," << k << "," << detail::num(v.first) << "\ncv_std," << k << "," << detail::num(v.second) << "\n";
  for (const auto& rr : r.rounds) {
    s << "round" << rr.round << ",theta," << detail::num(rr.theta) << "\n";
    for (const char* m : kMetricNames) s << "round" << rr.round << "," << m << "," << detail::num(metric_value(rr.metrics, m)) << "\n";
  }
  for (const auto& [t, v] : r.tier_rejection) s << "tier_rejection," << to_string(t) << "," << detail::num(v) << "\n";
  return s.str();
}

inline std::string verdicts_jsonl(const BenchmarkReport& r) {
  std::string out;
  for (const auto& o : r.outcomes) {
    json j = o.pair;
    j["fold"] = o.fold;
    j["no_verdict"] = !o.verdict;
    if (o.verdict) j["outcome"] = *o.verdict;
    out += j.dump() + "\n";
  }
  return out;
}

inline std::string roc_csv(const BenchmarkReport& r) {
  std::ostringstream s;
  s << "threshold,fpr,tpr\n";
  for (const auto& p : r.roc) s << (std::isinf(p.threshold) ? std::string("inf") : detail::num(p.threshold)) << "," << detail::num(p.fpr) << "," << detail::num(p.tpr) << "\n";
  return s.str();
}

inline std::string trajectories_jsonl(const BenchmarkReport& r) {
  std::string out;
  for (const auto& o : r.outcomes) out += o.trajectory_jsonl;
  return out;
}

/// metrics.json, metrics.csv, verdicts.jsonl, roc_points.csv, trajectories.jsonl, config.json.
inline void write_report(const BenchmarkReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "metrics.json", metrics_json(r).dump(2) + "\n");
  write_text_file(dir / "metrics.csv", metrics_csv(r));
  write_text_file(dir / "verdicts.jsonl", verdicts_jsonl(r));
  write_text_file(dir / "roc_points.csv", roc_csv(r));
  write_text_file(dir / "trajectories.jsonl", trajectories_jsonl(r));
  write_text_file(dir / "config.json", r.config.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Ablation

/// Applies "disable_tool=<Tool>", "gamma=<v>", "mask_bio" or "generic_prompts".
inline RunConfig apply_switch(RunConfig cfg, const std::string& sw) {
  const auto eq = sw.find('=');
  const std::string key = sw.substr(0, eq);
  const std::string val = eq == std::string::npos ? "" : sw.substr(eq + 1);
  if (key == "disable_tool" && !val.empty()) {
    try {
      cfg.disabled_tools.insert(enum_from_string<ToolName>(val));
    } catch (const DataError&) {
      throw UnknownSwitchError("unknown tool '" + val + "' in switch '" + sw + "'");
    }
  } else if (key == "gamma" && !val.empty()) {
    try {
      std::size_t used = 0;
      cfg.gamma = std::stod(val, &used);
      if (used != val.size()) throw std::invalid_argument(val);
    } catch (const std::exception&) {
      throw UnknownSwitchError("gamma needs a number, got '" + val + "'");
    }
  } else if (key == "mask_bio" && eq == std::string::npos) {
    cfg.mask_bio = true;
  } else if (key == "generic_prompts" && eq == std::string::npos) {
    cfg.generic_prompts = true;
  } else {
    throw UnknownSwitchError("'" + sw + "'");
  }
  cfg.validate();
  return cfg;
}

/// An arm is a list of switches; the empty list reproduces the baseline.
struct AblationArm {
  std::string name;
  std::vector<std::string> switches;
};

inline AblationArm parse_arm(const std::string& spec) {
  AblationArm a{spec.empty() ? "baseline" : spec, {}};
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) a.switches.push_back(item);
  return a;
}

struct AblationResult {
  BenchmarkReport baseline;
  std::vector<std::pair<AblationArm, BenchmarkReport>> arms;
};

template <typename BackendFactory>
AblationResult ablate(const RunConfig& base, const Workspace& w, const BenchmarkDataset& d, const std::vector<AblationArm>& arms,
                      BackendFactory&& make_backend) {
  std::vector<RunConfig> cfgs;
  for (const auto& a : arms) {
    RunConfig c = base;
    for (const auto& s : a.switches) c = apply_switch(c, s);
    cfgs.push_back(c);
  }
  AblationResult out;
  {
    auto b = make_backend(base);
    out.baseline = run_benchmark(base, w, d, *b, *b);
  }
  for (std::size_t i = 0; i < arms.size(); ++i) {
    auto b = make_backend(cfgs[i]);
    out.arms.emplace_back(arms[i], run_benchmark(cfgs[i], w, d, *b, *b));
  }
  return out;
}

inline json ablation_json(const AblationResult& a) {
  json arms = json::array();
  for (const auto& [arm, rep] : a.arms) {
    json delta = json::object();
    for (const char* m : kMetricNames) delta[m] = metric_value(rep.pooled, m) - metric_value(a.baseline.pooled, m);
    json tiers = json::object();
    for (const auto& [t, v] : rep.tier_rejection) tiers[to_string(t)] = v;
    arms.push_back({{"arm", arm.name}, {"switches", arm.switches}, {"pooled", rep.pooled}, {"delta", delta}, {"tier_rejection", tiers}});
  }
  return {{"baseline", a.baseline.pooled}, {"arms", arms}};
}

inline std::string ablation_csv(const AblationResult& a) {
  std::ostringstream s;
  s << "arm";
  for (const char* m : kMetricNames) s << "," << m << ",delta_" << m;
  s << "\n";
  auto row = [&](const std::string& name, const MetricBundle& m) {
    s << name;
    for (const char* k : kMetricNames) s << "," << detail::num(metric_value(m, k)) << "," << detail::num(metric_value(m, k) - metric_value(a.baseline.pooled, k));
    s << "\n";
  };
  row("baseline", a.baseline.pooled);
  for (const auto& [arm, rep] : a.arms) row(arm.name, rep.pooled);
  return s.str();
}

/// baseline/ and arm_<i>/ report directories plus ablation.json and ablation.csv.
inline void write_ablation(const AblationResult& a, const std::filesystem::path& dir) {
  write_report(a.baseline, dir / "baseline");
  for (std::size_t i = 0; i < a.arms.size(); ++i) write_report(a.arms[i].second, dir / ("arm_" + std::to_string(i)));
  write_text_file(dir / "ablation.json", ablation_json(a).dump(2) + "\n");
  write_text_file(dir / "ablation.csv", ablation_csv(a));
}

}  // namespace artjudge
