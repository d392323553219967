#pragma once

// Run configuration: every tunable of the pipeline in one JSON document.

#include <artjudge/agent.hpp>
#include <artjudge/core.hpp>
#include <artjudge/errors.hpp>
#include <artjudge/retrieval.hpp>
#include <artjudge/tools.hpp>

#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace artjudge {

enum class BackendKind { Heuristic, Script, Remote };

NLOHMANN_JSON_SERIALIZE_ENUM(BackendKind, {{BackendKind::Heuristic, "heuristic"}, {BackendKind::Script, "script"}, {BackendKind::Remote, "remote"}})

struct RunConfig {
  // verdict
  double threshold = 0.5;
  bool tune_threshold = true;
  // protocol
  int folds = 5;
  std::uint64_t seed = 20240601;
  bool balanced = true;
  int concurrency = 1;
  // agent
  int max_steps = 8;
  double gamma = 2.0;
  std::array<double, 3> omega = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  std::size_t context_tokens = 600;
  std::size_t chars_per_token = 4;
  // evidence
  int delta_years = 20;
  double lambda = 0.8;
  double kappa = 1.0;
  bool mask_bio = false;
  bool generic_prompts = false;
  std::size_t top_passages = 6;
  std::size_t encoder_dim = 384;
  std::size_t visual_top_matches = 5;
  std::set<ToolName> disabled_tools;
  // candidates
  std::size_t top_k = 10;
  double gamma_v = 0.70;
  IndexBackend index_backend = IndexBackend::SmallWorldGraph;
  IndexParams index;
  // backend
  BackendKind backend = BackendKind::Heuristic;
  std::string script_path;

  AgentConfig agent() const {
    AgentConfig a;
    a.max_steps = max_steps;
    a.threshold = threshold;
    a.critic.gamma = gamma;
    a.critic.omega = omega;
    a.context.budget_chars = context_tokens * chars_per_token;
    return a;
  }

  CandidateConfig candidates() const { return {top_k, gamma_v, delta_years}; }

  void validate() const {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw DataError("threshold must lie in [0,1]");
    if (folds < 2) throw DataError("need at least 2 folds");
    if (max_steps < 1) throw DataError("max_steps must be positive");
    if (concurrency < 1) throw DataError("concurrency must be positive");
    agent().critic.validate();
    DecayConfig{lambda}.validate();
    if (!(kappa > 0.0)) throw DataError("kappa must be positive");
    if (!(gamma_v >= -1.0 && gamma_v <= 1.0)) throw DataError("gamma_v must lie in [-1,1]");
    if (top_k == 0) throw DataError("top_k must be positive");
  }
};

inline void to_json(json& j, const RunConfig& c) {
  j = json{{"threshold", c.threshold},
           {"tune_threshold", c.tune_threshold},
           {"folds", c.folds},
           {"seed", c.seed},
           {"balanced", c.balanced},
           {"concurrency", c.concurrency},
           {"max_steps", c.max_steps},
           {"gamma", c.gamma},
           {"omega", c.omega},
           {"context_tokens", c.context_tokens},
           {"chars_per_token", c.chars_per_token},
           {"delta_years", c.delta_years},
           {"lambda", c.lambda},
           {"kappa", c.kappa},
           {"mask_bio", c.mask_bio},
           {"generic_prompts", c.generic_prompts},
           {"top_passages", c.top_passages},
           {"encoder_dim", c.encoder_dim},
           {"visual_top_matches", c.visual_top_matches},
           {"disabled_tools", c.disabled_tools},
           {"top_k", c.top_k},
           {"gamma_v", c.gamma_v},
           {"index_backend", c.index_backend},
           {"M", c.index.neighbor_degree},
           {"ef_construction", c.index.construction_breadth},
           {"ef_search", c.index.query_breadth},
           {"index_seed", c.index.seed},
           {"backend", c.backend},
           {"script_path", c.script_path}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline void from_json(const json& j, RunConfig& c) {
  static const std::set<std::string> known = {
      "threshold", "tune_threshold", "folds",    "seed",        "balanced",  "concurrency",   "max_steps",  "gamma",
      "omega",     "context_tokens", "chars_per_token", "delta_years", "lambda", "kappa", "mask_bio", "generic_prompts",
      "top_passages", "encoder_dim", "visual_top_matches", "disabled_tools", "top_k", "gamma_v", "index_backend", "M",
      "ef_construction", "ef_search", "index_seed", "backend", "script_path"};
  if (!j.is_object()) throw DataError("config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw DataError("unknown config key '" + k + "'");
  auto opt = [&](const char* k, auto& field) {
    if (j.contains(k)) j.at(k).get_to(field);
  };
  opt("threshold", c.threshold);
  opt("tune_threshold", c.tune_threshold);
  opt("folds", c.folds);
  opt("seed", c.seed);
  opt("balanced", c.balanced);
  opt("concurrency", c.concurrency);
  opt("max_steps", c.max_steps);
  opt("gamma", c.gamma);
  opt("omega", c.omega);
  opt("context_tokens", c.context_tokens);
  opt("chars_per_token", c.chars_per_token);
  opt("delta_years", c.delta_years);
  opt("lambda", c.lambda);
  opt("kappa", c.kappa);
  opt("mask_bio", c.mask_bio);
  opt("generic_prompts", c.generic_prompts);
  opt("top_passages", c.top_passages);
  opt("encoder_dim", c.encoder_dim);
  opt("visual_top_matches", c.visual_top_matches);
  if (j.contains("disabled_tools")) {
    c.disabled_tools.clear();
    for (const auto& t : j.at("disabled_tools")) c.disabled_tools.insert(enum_from_string<ToolName>(t.get<std::string>()));
  }
  opt("top_k", c.top_k);
  opt("gamma_v", c.gamma_v);
  if (j.contains("index_backend")) c.index_backend = enum_from_string<IndexBackend>(j.at("index_backend").get<std::string>());
  opt("M", c.index.neighbor_degree);
  opt("ef_construction", c.index.construction_breadth);
  opt("ef_search", c.index.query_breadth);
  opt("index_seed", c.index.seed);
  if (j.contains("backend")) c.backend = enum_from_string<BackendKind>(j.at("backend").get<std::string>());
  opt("script_path", c.script_path);
}

inline RunConfig read_config(const std::filesystem::path& path) {
  RunConfig c;
  try {
    c = read_json_file(path).get<RunConfig>();
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

}  // namespace artjudge
