// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <artjudge/benchmark.hpp>
#include <artjudge/fixture.hpp>
#include <artjudge/iconclass.hpp>
#include <artjudge/metrics.hpp>
#include <artjudge/retrieval.hpp>
#include <artjudge/scripted_backend.hpp>
#include <artjudge/tools.hpp>
#include <artjudge/wolfflin.hpp>
#include <artjudge/workspace.hpp>

#include <chrono>
#include <cmath>
#include <deque>
#include <iostream>
#include <random>
#include <sstream>

using namespace artjudge;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

const std::filesystem::path kMini = std::filesystem::path(ARTJUDGE_DATA_DIR) / "mini-wib";

const Workspace& mini() {
  static const Workspace w = load_workspace(kMini);
  return w;
}

std::vector<double> normal_vector(std::mt19937_64& rng, std::size_t dim, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  std::vector<double> v(dim);
  for (auto& x : v) x = n(rng);
  return v;
}

// ---------------------------------------------------------------------------

void metric_oracle(Outcome& o) {
  const Confusion c{860, 195, 805, 140};
  std::vector<Prediction> preds;
  std::vector<Label> labels;
  auto add = [&](long n, Verdict v, Label l) {
    for (long i = 0; i < n; ++i) {
      preds.push_back({v, v == Verdict::Yes ? 0.9 : 0.1});
      labels.push_back(l);
    }
  };
  add(c.tp, Verdict::Yes, Label::Positive);
  add(c.fn, Verdict::No, Label::Positive);
  add(c.fp, Verdict::Yes, Label::Negative);
  add(c.tn, Verdict::No, Label::Negative);
  const auto m = compute_metrics(preds, labels);
  const std::pair<const char*, std::pair<double, double>> checks[] = {{"precision", {m.precision, 0.815}},
                                                                       {"recall", {m.recall, 0.860}},
                                                                       {"specificity", {m.specificity, 0.805}},
                                                                       {"f1_pos", {m.f1_pos, 0.837}},
                                                                       {"mcc", {m.mcc, 0.666}}};
  for (const auto& [name, v] : checks) {
    o.require(std::abs(v.first - v.second) <= 0.001, name);
    o.detail << name << "=" << v.first << " ";
  }
}

void always_yes_bound(Outcome& o) {
  for (std::size_t half : {1u, 30u, 500u}) {
    std::vector<Label> labels(half, Label::Positive);
    labels.insert(labels.end(), half, Label::Negative);
    const auto m = always_yes(labels);
    o.require(m.precision == 0.5 && m.recall == 1.0 && m.specificity == 0.0 && m.mcc == 0.0, "rates at n=" + std::to_string(2 * half));
    o.require(std::abs(m.f1_pos - 2.0 / 3.0) < 1e-12 && std::abs(m.macro_f1 - 1.0 / 3.0) < 1e-12, "F1 at n=" + std::to_string(2 * half));
    if (half == 30) o.detail << "P=" << m.precision << " R=" << m.recall << " spec=" << m.specificity << " F1=" << m.f1_pos << " macroF1=" << m.macro_f1 << " MCC=" << m.mcc;
  }
}

void impossible_tier(Outcome& o) {
  const auto& w = mini();
  const RunConfig cfg;
  const auto pairs = impossible_pairs(*w.corpus, 50, cfg.delta_years);
  auto controller = ScriptedBackend::heuristic();
  auto critic = ScriptedBackend::heuristic();
  const auto outcomes = adjudicate_all(pairs, w, make_registry(w, cfg), controller, critic, cfg.agent());
  std::size_t rejected = 0;
  int calls = 0;
  for (const auto& p : outcomes) {
    rejected += p.verdict && p.verdict->verdict == Verdict::No ? 1 : 0;
    calls += p.backend_calls;
  }
  o.require(pairs.size() == 50, "fixture size");
  o.require(rejected == pairs.size(), "rejection");
  o.require(calls == 0 && controller.calls().empty() && critic.calls().empty(), "backend invocations");
  o.detail << "pairs=" << pairs.size() << " rejected=" << rejected << " backend_calls=" << calls;
}

BenchmarkReport heuristic_bench(const RunConfig& cfg) {
  auto b = ScriptedBackend::heuristic();
  return run_benchmark(cfg, mini(), make_dataset(mini().pairs, true), b, b);
}

void gamma_monotonicity(Outcome& o) {
  std::size_t prev_yes = std::numeric_limits<std::size_t>::max();
  double prev_recall = 2.0, prev_spec = -1.0;
  o.require(mini().pairs.size() == 60, "mini-WIB has 60 pairs");
  for (double g : {0.0, 1.0, 2.0, 4.0}) {
    RunConfig cfg;
    cfg.gamma = g;
    const auto r = heuristic_bench(cfg);
    const auto yes = r.yes_count();
    o.require(yes <= prev_yes, "YES count at gamma " + std::to_string(g));
    o.require(r.pooled.recall <= prev_recall, "recall at gamma " + std::to_string(g));
    o.require(r.pooled.specificity >= prev_spec, "specificity at gamma " + std::to_string(g));
    o.detail << "g=" << g << ":yes=" << yes << ",rec=" << r.pooled.recall << ",spec=" << r.pooled.specificity << " ";
    prev_yes = yes;
    prev_recall = r.pooled.recall;
    prev_spec = r.pooled.specificity;
  }
}

void manifold_suite(Outcome& o) {
  constexpr std::size_t dim = 512;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  double gram_dev = 0, lin_dev = 0, perm_dev = 0;
  for (int draw = 0; draw < 1000; ++draw) {
    std::vector<PoleAxis> axes;
    for (int k = 1; k <= 5; ++k) {
      PoleAxis a;
      a.axis_index = k;
      a.positive = normal_vector(rng, dim);
      a.negative = normal_vector(rng, dim);
      a.raw_direction.resize(dim);
      for (std::size_t i = 0; i < dim; ++i) a.raw_direction[i] = a.positive[i] - a.negative[i];
      axes.push_back(std::move(a));
    }
    const auto b = build_basis(axes);
    const auto g = b.gram();
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) gram_dev = std::max(gram_dev, std::abs(g[i][j] - (i == j ? 1.0 : 0.0)));

    const auto x = normal_vector(rng, dim), y = normal_vector(rng, dim);
    const double a = coef(rng), c = coef(rng);
    std::vector<double> z(dim);
    for (std::size_t i = 0; i < dim; ++i) z[i] = a * x[i] + c * y[i];
    const auto pz = project(z, b), px = project(x, b), py = project(y, b);
    for (std::size_t k = 0; k < 5; ++k) lin_dev = std::max(lin_dev, std::abs(pz.w[k] - (a * px.w[k] + c * py.w[k])));

    std::vector<std::size_t> perm{0, 1, 2, 3, 4};
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto bp = build_basis(axes, perm);
    perm_dev = std::max(perm_dev, std::abs(subspace_norm(std::span<const double>(x), b) - subspace_norm(std::span<const double>(x), bp)));
  }
  o.require(gram_dev <= 1e-9, "Gram");
  o.require(lin_dev <= 1e-7, "linearity");
  o.require(perm_dev <= 1e-7, "permutation invariance");
  o.detail << "draws=1000 gram_dev=" << gram_dev << " linearity_dev=" << lin_dev << " permutation_dev=" << perm_dev;
}

/// Unit vectors around 200 centres, each cluster spread over its own 8-d subspace.
struct ClusteredCloud {
  std::vector<std::vector<double>> centres;
  std::vector<std::vector<std::vector<double>>> spans;

  ClusteredCloud(std::mt19937_64& rng, std::size_t dim) {
    for (int c = 0; c < 200; ++c) {
      centres.push_back(normal_vector(rng, dim, 1.0 / std::sqrt(static_cast<double>(dim))));
      std::vector<std::vector<double>> s;
      for (int j = 0; j < 8; ++j) s.push_back(normal_vector(rng, dim, 1.0 / std::sqrt(static_cast<double>(dim))));
      spans.push_back(std::move(s));
    }
  }

  std::vector<float> draw(std::mt19937_64& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, centres.size() - 1);
    std::normal_distribution<double> local(0.0, 0.35);
    const auto c = pick(rng);
    auto v = centres[c];
    for (const auto& s : spans[c]) {
      const double t = local(rng);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += t * s[i];
    }
    const auto noise = normal_vector(rng, v.size(), 0.02 / std::sqrt(static_cast<double>(v.size())));
    double n2 = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] += noise[i];
      n2 += v[i] * v[i];
    }
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / std::sqrt(n2));
    return out;
  }
};

void retrieval_oracle(Outcome& o) {
  constexpr std::size_t dim = 512;
  std::mt19937_64 rng(7);
  const ClusteredCloud cloud(rng, dim);
  std::vector<std::pair<std::string, std::vector<float>>> rows;
  for (int i = 0; i < 10000; ++i) rows.push_back({"v" + std::to_string(i), cloud.draw(rng)});
  const auto m = std::make_shared<const EmbeddingMatrix>(EmbeddingMatrix::from_rows(dim, rows));
  std::vector<std::vector<float>> queries;
  for (int i = 0; i < 100; ++i) queries.push_back(cloud.draw(rng));
  const VectorIndex exact(m, IndexBackend::ExactScan);
  const VectorIndex hnsw(m, IndexBackend::SmallWorldGraph);
  const double recall = recall_at_k(hnsw, exact, queries, 10);
  o.require(recall >= 0.95, "recall@10");

  const auto& w = mini();
  const CandidateConfig cc;
  std::set<std::pair<std::string, std::string>> a, b;
  for (const auto& c : generate_candidates(*w.corpus, VectorIndex(w.visual, IndexBackend::ExactScan), cc)) a.insert({c.source_artist_id, c.target_artist_id});
  for (const auto& c : generate_candidates(*w.corpus, VectorIndex(w.visual, IndexBackend::SmallWorldGraph), cc)) b.insert({c.source_artist_id, c.target_artist_id});
  std::size_t inter = 0;
  for (const auto& p : a) inter += b.count(p);
  const std::size_t uni = a.size() + b.size() - inter;
  const double jaccard = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  o.require(!a.empty(), "mini corpus yields candidates");
  o.require(jaccard >= 0.9, "candidate Jaccard");
  o.detail << "recall@10=" << recall << " (10000x512, 100 queries) candidate_jaccard=" << jaccard << " (" << a.size() << " exact, " << b.size() << " graph)";
}

/// Prefix tree over hex digits; with `extra`, a few parent links to earlier codes.
ConceptGraph random_graph(std::mt19937_64& rng, bool extra, std::vector<std::string>& codes) {
  codes.clear();
  const std::string alphabet = "0123456789ABCDEF";
  std::uniform_int_distribution<int> nroots(1, 4), nkids(0, 3), ch(0, 15);
  std::deque<std::string> q;
  std::set<std::string> seen;
  for (int i = nroots(rng); i > 0; --i) {
    std::string c(1, alphabet[static_cast<std::size_t>(ch(rng))]);
    if (seen.insert(c).second) {
      codes.push_back(c);
      q.push_back(c);
    }
  }
  while (!q.empty() && codes.size() < 40) {
    auto c = q.front();
    q.pop_front();
    if (c.size() >= 5) continue;
    for (int i = nkids(rng); i > 0; --i) {
      std::string k = c + alphabet[static_cast<std::size_t>(ch(rng))];
      if (seen.insert(k).second) {
        codes.push_back(k);
        q.push_back(k);
      }
    }
  }
  std::vector<ConceptGraph::Edge> edges;
  if (extra && codes.size() > 2) {
    std::uniform_int_distribution<std::size_t> pick(1, codes.size() - 1);
    for (int e = 0; e < 3; ++e) {
      const auto c = pick(rng);
      std::uniform_int_distribution<std::size_t> earlier(0, c - 1);
      edges.emplace_back(codes[c], codes[earlier(rng)]);
    }
  }
  return ConceptGraph(codes, edges);
}

int bfs_hops(const ConceptGraph& g, const std::string& a, const std::string& b) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& c : g.codes_with_root()) {
    if (c.empty()) continue;
    for (const auto& p : g.parents(c)) {
      adj[c].push_back(p);
      adj[p].push_back(c);
    }
  }
  std::map<std::string, int> d{{a, 0}};
  std::deque<std::string> q{a};
  while (!q.empty()) {
    auto n = q.front();
    q.pop_front();
    if (n == b) return d[n];
    for (const auto& m : adj[n])
      if (!d.count(m)) {
        d[m] = d[n] + 1;
        q.push_back(m);
      }
  }
  return -1;
}

void iconclass_suite(Outcome& o) {
  std::mt19937_64 rng(88);
  std::vector<std::string> codes;
  std::size_t distances = 0, bfs_checks = 0, alignments = 0;
  for (int t = 0; t < 500; ++t) {
    const bool dag = t % 2 == 1;
    const auto g = random_graph(rng, dag, codes);
    std::uniform_real_distribution<double> lam(0.05, 1.0);
    const DecayConfig decay{lam(rng)};
    for (const auto& a : codes) {
      o.require(g.code_distance(a, a, decay) == 0.0, "identity");
      for (const auto& b : codes) {
        const double d = g.code_distance(a, b, decay);
        o.require(d >= 0.0 && std::isfinite(d), "non-negative");
        o.require(a == b || d > 0.0, "distinct codes at positive distance");
        ++distances;
      }
    }
    if (!dag) {
      for (std::size_t i = 0; i < codes.size(); i += 2)
        for (std::size_t j = 1; j < codes.size(); j += 3) {
          o.require(g.code_distance(codes[i], codes[j], {1.0}) == static_cast<double>(bfs_hops(g, codes[i], codes[j])), "lambda=1 path length");
          ++bfs_checks;
        }
    }
    std::uniform_int_distribution<std::size_t> pick(0, codes.size() - 1);
    std::uniform_int_distribution<int> size(1, 3);
    std::vector<CodeSet> pred, gold;
    for (int wk = 0; wk < 6; ++wk) {
      CodeSet p{"w" + std::to_string(wk), {}}, q{"w" + std::to_string(wk), {}};
      for (int k = size(rng); k > 0; --k) p.codes.insert(codes[pick(rng)]);
      for (int k = size(rng); k > 0; --k) q.codes.insert(codes[pick(rng)]);
      pred.push_back(p);
      gold.push_back(q);
    }
    const auto ex = alignment_metrics(pred, gold, g, AlignmentLevel::ExactLeaf);
    const auto an = alignment_metrics(pred, gold, g, AlignmentLevel::AncestorL3);
    o.require(an.precision >= ex.precision && an.recall >= ex.recall && an.f1 >= ex.f1, "ancestor dominates exact");
    ++alignments;
  }
  o.detail << "graphs=500 distances=" << distances << " bfs_checks=" << bfs_checks << " alignment_sets=" << alignments;
}

void determinism(Outcome& o) {
  const auto root = std::filesystem::temp_directory_path() / "artjudge_acceptance_determinism";
  std::filesystem::remove_all(root);
  write_report(heuristic_bench(RunConfig{}), root / "a");
  write_report(heuristic_bench(RunConfig{}), root / "b");
  std::size_t bytes = 0;
  for (const char* f : {"metrics.json", "metrics.csv", "verdicts.jsonl", "roc_points.csv", "trajectories.jsonl", "config.json"}) {
    const auto x = read_text_file(root / "a" / f);
    o.require(!x.empty() && x == read_text_file(root / "b" / f), f);
    bytes += x.size();
  }
  std::filesystem::remove_all(root);
  o.detail << "6 report files identical, " << bytes << " bytes";
}

void leakage(Outcome& o) {
  const auto lc = leakage_corpus(100);
  const HashingEncoder enc;
  std::size_t masked_refs = 0, unmasked_pairs = 0;
  auto count = [](const ToolRecord& r) {
    std::size_t n = 0;
    for (const auto& h : r.body.at("cues")) n += h.at("category") == "ExplicitReference" ? 1 : 0;
    return n;
  };
  for (const auto& p : lc.pairs) {
    masked_refs += count(biography_reader(p, lc.corpus, enc, default_lexicon(), {6, true}));
    unmasked_pairs += count(biography_reader(p, lc.corpus, enc, default_lexicon(), {6, false})) > 0 ? 1 : 0;
  }
  o.require(lc.pairs.size() == 100, "100 planted sentences");
  o.require(masked_refs == 0, "masked ExplicitReference cues");
  o.require(unmasked_pairs == lc.pairs.size(), "unmasked reader finds every plant");
  o.detail << "planted=" << lc.pairs.size() << " masked_explicit=" << masked_refs << " unmasked_detected=" << unmasked_pairs;
}

}  // namespace

int main() {
  const std::pair<const char*, void (*)(Outcome&)> criteria[] = {
      {"metric-oracle", metric_oracle},
      {"always-yes-bound", always_yes_bound},
      {"temporal-impossible-tier", impossible_tier},
      {"critic-gamma-monotonicity", gamma_monotonicity},
      {"manifold-suite", manifold_suite},
      {"retrieval-oracle", retrieval_oracle},
      {"iconclass-suite", iconclass_suite},
      {"end-to-end-determinism", determinism},
      {"leakage-property", leakage},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " [" << ms << " ms] " << o.detail.str() << std::endl;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
