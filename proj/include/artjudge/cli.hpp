#pragma once

// The artjudge command line. Exit codes: 0 ok, 1 usage, 2 data, 3 backend.

#include <artjudge/benchmark.hpp>
#include <artjudge/config.hpp>
#include <artjudge/fixture.hpp>
#include <artjudge/graph_export.hpp>
#include <artjudge/remote_backend.hpp>
#include <artjudge/scripted_backend.hpp>
#include <artjudge/workspace.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace artjudge {

/// An enum named on the command line; a bad value is a usage error.
template <typename E>
E flag_enum(const std::string& flag, const std::string& value) {
  try {
    return enum_from_string<E>(value);
  } catch (const DataError& e) {
    throw UsageError(flag + ": " + e.what());
  }
}

/// Flags shared by the subcommands that run the pipeline; each one overrides
/// the matching config key.
struct RunFlags {
  std::string config;
  std::optional<double> threshold;
  std::optional<double> gamma;
  std::optional<int> folds;
  std::optional<std::uint64_t> seed;
  std::optional<int> concurrency;
  std::optional<int> max_steps;
  std::optional<int> delta_years;
  std::optional<std::string> backend;
  std::optional<std::string> script;
  std::vector<std::string> disable;
  bool mask_bio = false;
  bool generic_prompts = false;
  std::string controller_prompt;
  std::string critic_prompt;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
    app->add_option("--threshold", threshold, "decision threshold");
    app->add_option("--gamma", gamma, "falsification strength");
    app->add_option("--folds", folds, "number of folds");
    app->add_option("--seed", seed, "protocol seed");
    app->add_option("--concurrency", concurrency, "parallel adjudications");
    app->add_option("--max-steps", max_steps, "controller step budget");
    app->add_option("--delta-years", delta_years, "formative-window tolerance");
    app->add_option("--backend", backend, "heuristic | script | remote");
    app->add_option("--script", script, "scripted responses (JSON object)")->check(CLI::ExistingFile);
    app->add_option("--disable-tool", disable, "tool to remove from the registry");
    app->add_flag("--mask-bio", mask_bio, "mask influence predicates in biographies");
    app->add_flag("--generic-prompts", generic_prompts, "use the generic pole store");
    app->add_option("--controller-prompt", controller_prompt, "system prompt file for the remote controller")->check(CLI::ExistingFile);
    app->add_option("--critic-prompt", critic_prompt, "system prompt file for the remote critic")->check(CLI::ExistingFile);
  }

  RunConfig resolve() const {
    RunConfig c = config.empty() ? RunConfig{} : read_config(config);
    if (threshold) c.threshold = *threshold;
    if (gamma) c.gamma = *gamma;
    if (folds) c.folds = *folds;
    if (seed) c.seed = *seed;
    if (concurrency) c.concurrency = *concurrency;
    if (max_steps) c.max_steps = *max_steps;
    if (delta_years) c.delta_years = *delta_years;
    if (backend) c.backend = flag_enum<BackendKind>("--backend", *backend);
    if (script) {
      c.script_path = *script;
      if (!backend) c.backend = BackendKind::Script;
    }
    for (const auto& t : disable) c.disabled_tools.insert(flag_enum<ToolName>("--disable-tool", t));
    if (mask_bio) c.mask_bio = true;
    if (generic_prompts) c.generic_prompts = true;
    c.validate();
    return c;
  }
};

inline std::unique_ptr<Backend> make_backend(const RunConfig& cfg, const RunFlags& flags = {}, const std::filesystem::path& log_dir = {}) {
  switch (cfg.backend) {
    case BackendKind::Heuristic:
      return std::make_unique<ScriptedBackend>(ScriptedBackend::heuristic());
    case BackendKind::Script:
      if (cfg.script_path.empty()) throw UsageError("the script backend needs --script or script_path");
      return std::make_unique<ScriptedBackend>(ScriptedBackend::read_script(cfg.script_path));
    case BackendKind::Remote: {
      auto rc = RemoteConfig::from_env();
      if (!flags.controller_prompt.empty()) rc.controller_prompt = read_text_file(flags.controller_prompt);
      if (!flags.critic_prompt.empty()) rc.critic_prompt = read_text_file(flags.critic_prompt);
      if (!log_dir.empty()) rc.log_path = log_dir / "backend_log.jsonl";
      return std::make_unique<RemoteBackend>(std::move(rc));
    }
  }
  throw UsageError("unknown backend");
}

inline int exit_code(ErrorClass c) { return static_cast<int>(c); }

inline int cli_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"artjudge: directed artistic influence adjudication"};
  app.name("artjudge");
  app.require_subcommand(1);

  std::string data_dir;
  std::string out_dir;
  auto add_data = [&](CLI::App* s) { s->add_option("--data", data_dir, "corpus directory")->required()->check(CLI::ExistingDirectory); };
  int rc = 0;

  // validate
  auto* validate = app.add_subcommand("validate", "check a corpus directory");
  add_data(validate);
  validate->callback([&] {
    const auto w = load_workspace(data_dir);
    const auto report = validate_workspace(w);
    for (const auto& i : report.issues)
      (i.severity == Severity::HardError ? err : out) << (i.severity == Severity::HardError ? "error " : "warning ") << i.subject << ": " << i.message << "\n";
    out << w.corpus->artists().size() << " artists, " << w.corpus->artworks().size() << " artworks, " << w.corpus->biographies().size()
        << " biographies, " << w.pairs.size() << " pairs\n";
    rc = report.accepted() ? 0 : exit_code(ErrorClass::Data);
  });

  // index build
  auto* index = app.add_subcommand("index", "nearest-neighbour index");
  index->require_subcommand(1);
  auto* index_build = index->add_subcommand("build", "build an index over visual.ajem");
  add_data(index_build);
  std::string index_kind = "hnsw";
  std::string index_path;
  RunFlags index_flags;
  index_build->add_option("--kind", index_kind, "hnsw | exact");
  index_build->add_option("--out", index_path, "index file")->required();
  index_build->add_option("--config", index_flags.config, "JSON run configuration")->check(CLI::ExistingFile);
  index_build->callback([&] {
    const auto cfg = index_flags.resolve();
    const auto w = load_workspace(data_dir);
    const auto idx = build_index(w.visual, enum_from_string<IndexBackend>(index_kind), cfg.index);
    write_text_file(index_path, idx.encode_graph());
    out << idx.stats().dump(2) << "\n";
  });

  // candidates
  auto* cand = app.add_subcommand("candidates", "candidate pairs from visual neighbours");
  add_data(cand);
  std::optional<std::size_t> cand_k;
  std::optional<double> cand_gamma_v;
  std::optional<int> cand_delta;
  std::string cand_backend = "hnsw";
  std::string cand_index;
  std::string cand_out;
  std::string cand_config;
  cand->add_option("--k", cand_k, "neighbours per artwork");
  cand->add_option("--gamma-v", cand_gamma_v, "minimum witness cosine");
  cand->add_option("--delta-years", cand_delta, "formative-window tolerance");
  cand->add_option("--backend", cand_backend, "hnsw | exact");
  cand->add_option("--index", cand_index, "prebuilt index file")->check(CLI::ExistingFile);
  cand->add_option("--out", cand_out, "write JSON lines here instead of stdout");
  cand->add_option("--config", cand_config, "JSON run configuration")->check(CLI::ExistingFile);
  cand->callback([&] {
    RunConfig cfg = cand_config.empty() ? RunConfig{} : read_config(cand_config);
    if (cand_k) cfg.top_k = *cand_k;
    if (cand_gamma_v) cfg.gamma_v = *cand_gamma_v;
    if (cand_delta) cfg.delta_years = *cand_delta;
    cfg.validate();
    const auto w = load_workspace(data_dir);
    const auto idx = cand_index.empty() ? build_index(w.visual, enum_from_string<IndexBackend>(cand_backend), cfg.index)
                                        : VectorIndex::decode_graph(read_text_file(cand_index), w.visual);
    std::string lines;
    for (const auto& c : generate_candidates(*w.corpus, idx, cfg.candidates())) lines += json(c).dump() + "\n";
    if (cand_out.empty())
      out << lines;
    else
      write_text_file(cand_out, lines);
  });

  // adjudicate
  auto* adj = app.add_subcommand("adjudicate", "adjudicate one pair or a batch");
  add_data(adj);
  RunFlags adj_flags;
  adj_flags.attach(adj);
  std::string adj_source, adj_target, adj_pairs;
  adj->add_option("--source", adj_source, "source artist id");
  adj->add_option("--target", adj_target, "target artist id");
  adj->add_option("--pairs", adj_pairs, "pairs file (JSON or JSON lines)")->check(CLI::ExistingFile);
  adj->add_option("--out", out_dir, "output directory for verdicts.jsonl and trajectories.jsonl");
  adj->callback([&] {
    const bool single = !adj_source.empty() || !adj_target.empty();
    if (single == !adj_pairs.empty()) throw UsageError("give either --source and --target, or --pairs");
    if (single && (adj_source.empty() || adj_target.empty())) throw UsageError("--source and --target go together");
    const auto cfg = adj_flags.resolve();
    const auto w = load_workspace(data_dir);
    std::vector<DirectedPair> pairs = single ? std::vector<DirectedPair>{{adj_source, adj_target, std::nullopt, std::nullopt}} : read_pairs(adj_pairs);
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
    auto backend = make_backend(cfg, adj_flags, out_dir);
    const auto tools = make_registry(w, cfg);
    const auto outcomes = adjudicate_all(pairs, w, tools, *backend, *backend, cfg.agent(), cfg.concurrency);
    BenchmarkReport r;
    r.outcomes = outcomes;
    bool any_no_verdict = false;
    std::string first_diag;
    for (const auto& o : outcomes) {
      if (o.verdict) {
        out << o.pair.key() << " " << to_string(o.verdict->verdict) << " confidence=" << detail::num(o.verdict->confidence)
            << " influence_score=" << detail::num(o.verdict->influence_score) << "\n";
      } else {
        out << o.pair.key() << " NO_VERDICT " << o.diagnostic << "\n";
        err << o.pair.key() << ": " << o.diagnostic << "\n";
        if (!any_no_verdict) first_diag = o.diagnostic;
        any_no_verdict = true;
      }
    }
    if (!out_dir.empty()) {
      write_text_file(std::filesystem::path(out_dir) / "verdicts.jsonl", verdicts_jsonl(r));
      write_text_file(std::filesystem::path(out_dir) / "trajectories.jsonl", trajectories_jsonl(r));
      write_text_file(std::filesystem::path(out_dir) / "config.json", json(cfg).dump(2) + "\n");
    }
    if (any_no_verdict) rc = exit_code(ErrorClass::Backend);
  });

  // bench run / ablate
  auto* bench = app.add_subcommand("bench", "benchmark protocol");
  bench->require_subcommand(1);
  auto* bench_run = bench->add_subcommand("run", "five-fold evaluation with per-round threshold tuning");
  add_data(bench_run);
  RunFlags bench_flags;
  bench_flags.attach(bench_run);
  std::string bench_pairs;
  bool unbalanced = false;
  bench_run->add_option("--pairs", bench_pairs, "pairs file (defaults to <data>/pairs.json)")->check(CLI::ExistingFile);
  bench_run->add_option("--out", out_dir, "report directory")->required();
  bench_run->add_flag("--allow-imbalance", unbalanced, "skip the 50:50 check");
  bench_run->callback([&] {
    auto cfg = bench_flags.resolve();
    if (unbalanced) cfg.balanced = false;
    const auto w = load_workspace(data_dir);
    const auto d = bench_pairs.empty() ? make_dataset(w.pairs, cfg.balanced) : load_dataset(bench_pairs, cfg.balanced);
    std::filesystem::create_directories(out_dir);
    auto backend = make_backend(cfg, bench_flags, out_dir);
    const auto r = run_benchmark(cfg, w, d, *backend, *backend);
    write_report(r, out_dir);
    out << metrics_json(r).dump(2) << "\n";
  });

  auto* bench_ablate = bench->add_subcommand("ablate", "re-run the benchmark under switched configurations");
  add_data(bench_ablate);
  RunFlags abl_flags;
  abl_flags.attach(bench_ablate);
  std::vector<std::string> arms;
  bench_ablate->add_option("--switch", arms,
                           "one arm: comma-separated switches (disable_tool=<Tool>, gamma=<v>, mask_bio, generic_prompts); repeatable")
      ->required()
      ->allow_extra_args(false);
  bench_ablate->add_option("--out", out_dir, "report directory")->required();
  bench_ablate->callback([&] {
    const auto cfg = abl_flags.resolve();
    const auto w = load_workspace(data_dir);
    const auto d = make_dataset(w.pairs, cfg.balanced);
    std::vector<AblationArm> parsed;
    for (const auto& a : arms) parsed.push_back(parse_arm(a));
    for (const auto& a : parsed)
      for (const auto& s : a.switches) apply_switch(cfg, s);
    std::filesystem::create_directories(out_dir);
    const auto res = ablate(cfg, w, d, parsed, [&](const RunConfig& c) { return make_backend(c, abl_flags, out_dir); });
    write_ablation(res, out_dir);
    out << ablation_csv(res);
  });

  // graph export
  auto* graph = app.add_subcommand("graph", "property-graph export");
  graph->require_subcommand(1);
  auto* graph_export = graph->add_subcommand("export", "materialize verdicts as a property graph");
  add_data(graph_export);
  std::vector<std::string> verdict_files;
  std::string graph_format = "json";
  bool with_artworks = false;
  graph_export->add_option("--verdicts", verdict_files, "verdicts.jsonl files, later files overriding earlier ones")->required()->check(CLI::ExistingFile);
  graph_export->add_option("--format", graph_format, "json | cypher | csv");
  graph_export->add_flag("--artworks", with_artworks, "add Artwork nodes and AUTHORED edges");
  graph_export->add_option("--out", out_dir, "output directory")->required();
  graph_export->callback([&] {
    const auto fmt = flag_enum<GraphFormat>("--format", graph_format);
    const auto w = load_workspace(data_dir);
    std::vector<AdjudicatedPair> all;
    for (const auto& f : verdict_files) {
      auto v = read_verdicts_jsonl(f);
      all.insert(all.end(), v.begin(), v.end());
    }
    const auto g = materialize_graph(all, *w.corpus, with_artworks);
    for (const auto& p : export_graph(g, fmt, out_dir)) out << p.string() << "\n";
  });

  // manifold inspect
  auto* manifold = app.add_subcommand("manifold", "Wolfflin manifold");
  manifold->require_subcommand(1);
  auto* inspect = manifold->add_subcommand("inspect", "basis orthonormality and artist signatures");
  add_data(inspect);
  bool inspect_generic = false;
  std::vector<std::string> inspect_artists;
  inspect->add_flag("--generic", inspect_generic, "use generic_poles.ajem");
  inspect->add_option("--artist", inspect_artists, "limit signatures to these artists");
  inspect->callback([&] {
    const auto w = load_workspace(data_dir);
    const WolfflinManifold m(w.pole_store(inspect_generic));
    const auto g = m.basis().gram();
    double dev = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j) dev = std::max(dev, std::abs(g[i][j] - (i == j ? 1.0 : 0.0)));
    json sigs = json::object();
    for (const auto& [id, s] : m.signatures(*w.corpus, *w.visual)) {
      if (!inspect_artists.empty() && std::find(inspect_artists.begin(), inspect_artists.end(), id) == inspect_artists.end()) continue;
      sigs[id] = {{"mu", s.mu}, {"n_works", s.n_works}};
    }
    out << json{{"dim", m.basis().dim}, {"gram", g}, {"max_gram_deviation", dev}, {"signatures", sigs}}.dump(2) << "\n";
  });

  // iconclass dist
  auto* iconclass = app.add_subcommand("iconclass", "concept graph");
  iconclass->require_subcommand(1);
  auto* dist = iconclass->add_subcommand("dist", "directed set distance between code sets");
  add_data(dist);
  std::vector<std::string> dist_from, dist_to;
  double dist_lambda = 0.8;
  dist->add_option("--from", dist_from, "codes, or artwork ids to look up in codesets.jsonl")->required();
  dist->add_option("--to", dist_to, "codes, or artwork ids")->required();
  dist->add_option("--lambda", dist_lambda, "depth decay in (0,1]");
  dist->callback([&] {
    const auto w = load_workspace(data_dir);
    const auto sets = code_set_map(w.code_sets);
    auto resolve = [&](const std::vector<std::string>& items) {
      std::set<std::string> codes;
      for (const auto& it : items) {
        if (auto f = sets.find(it); f != sets.end())
          codes.insert(f->second.begin(), f->second.end());
        else
          codes.insert(it);
      }
      return codes;
    };
    const auto a = resolve(dist_from), b = resolve(dist_to);
    const DecayConfig decay{dist_lambda};
    decay.validate();
    out << json{{"from", a}, {"to", b}, {"lambda", dist_lambda}, {"forward", w.graph->directed_set_distance(a, b, decay)},
                {"backward", w.graph->directed_set_distance(b, a, decay)}}
               .dump(2)
        << "\n";
  });

  // tool
  auto* tool = app.add_subcommand("tool", "run one evidence tool on a pair");
  add_data(tool);
  RunFlags tool_flags;
  tool_flags.attach(tool);
  std::string tool_name_arg, tool_source, tool_target, tool_args = "{}";
  tool->add_option("name", tool_name_arg, "TimelineGate | VisualAnalyzer | BiographyReader | StyleComparator | ConceptRetriever")->required();
  tool->add_option("--source", tool_source, "source artist id")->required();
  tool->add_option("--target", tool_target, "target artist id")->required();
  tool->add_option("--args", tool_args, "tool arguments as a JSON object");
  tool->callback([&] {
    const auto cfg = tool_flags.resolve();
    const auto w = load_workspace(data_dir);
    json args;
    try {
      args = json::parse(tool_args);
    } catch (const json::exception& e) {
      throw UsageError(std::string("--args: ") + e.what());
    }
    const auto reg = make_registry(w, cfg);
    const auto rec = reg.call(flag_enum<ToolName>("tool", tool_name_arg), {tool_source, tool_target, std::nullopt, std::nullopt}, args);
    out << json(rec).dump(2) << "\n";
  });

  // fixture generate
  auto* fixture = app.add_subcommand("fixture", "synthetic corpora");
  fixture->require_subcommand(1);
  auto* gen = fixture->add_subcommand("generate", "write the mini benchmark corpus");
  FixtureSpec spec;
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--seed", spec.seed, "generator seed");
  gen->add_option("--dim", spec.dim, "embedding dimension");
  gen->callback([&] {
    const auto f = generate_fixture(spec);
    write_fixture(f, out_dir);
    out << f.artists.size() << " artists, " << f.artworks.size() << " artworks, " << f.pairs.size() << " pairs written to " << out_dir << "\n";
  });

  if (argc <= 1) {
    err << app.help();
    return exit_code(ErrorClass::Usage);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    // CLI11 reports a subcommand's --help as a ParseError with exit code 0
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "usage error: " << e.what() << "\n";
    return exit_code(ErrorClass::Usage);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code(e.error_class());
  } catch (const json::exception& e) {
    err << "DataError: " << e.what() << "\n";
    return exit_code(ErrorClass::Data);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "IoError: " << e.what() << "\n";
    return exit_code(ErrorClass::Data);
  }
  return rc;
}

}  // namespace artjudge
