#pragma once

// Four-phase adjudication: chronology gate, evidence seeding, the ReAct tool
// loop, critic falsification and the final verdict.

#include <artjudge/core.hpp>
#include <artjudge/errors.hpp>
#include <artjudge/retrieval.hpp>
#include <artjudge/tools.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace artjudge {

// ---------------------------------------------------------------------------
// Actions and backend contract

struct CallAction {
  ToolName tool;
  json args = json::object();
};

struct ConcludeAction {
  Verdict verdict = Verdict::No;
  double score = 0.5;
};

struct AgentAction {
  std::string thought;
  std::variant<CallAction, ConcludeAction> act;

  bool is_call() const { return std::holds_alternative<CallAction>(act); }
};

inline json action_to_json(const AgentAction& a) {
  json j = {{"thought", a.thought}};
  if (const auto* c = std::get_if<CallAction>(&a.act)) {
    j["action"] = "call";
    j["tool"] = c->tool;
    j["args"] = c->args;
  } else {
    const auto& k = std::get<ConcludeAction>(a.act);
    j["action"] = "conclude";
    j["verdict"] = k.verdict;
    j["score"] = k.score;
  }
  return j;
}

/// Controller grammar:
///   {"thought": str?, "action": "call", "tool": <tool name>, "args": {...}?}
///   {"thought": str?, "action": "conclude", "verdict": "YES"|"NO", "score": number in [0,1]}
inline AgentAction parse_action(const json& j) {
  if (!j.is_object()) throw ParseError("controller response is not a JSON object");
  AgentAction a;
  if (j.contains("thought")) {
    if (!j["thought"].is_string()) throw ParseError("'thought' must be a string");
    a.thought = j["thought"].get<std::string>();
  }
  const auto kind = j.value("action", "");
  if (kind == "call") {
    if (!j.contains("tool") || !j["tool"].is_string()) throw ParseError("call action without a tool name");
    CallAction c;
    try {
      c.tool = enum_from_string<ToolName>(j["tool"].get<std::string>());
    } catch (const DataError&) {
      throw ParseError("unknown tool '" + j["tool"].get<std::string>() + "'");
    }
    if (j.contains("args")) {
      if (!j["args"].is_object()) throw ParseError("'args' must be an object");
      c.args = j["args"];
    }
    a.act = std::move(c);
  } else if (kind == "conclude") {
    ConcludeAction c;
    const auto v = j.value("verdict", "");
    if (v != "YES" && v != "NO") throw ParseError("conclude action needs verdict YES or NO");
    c.verdict = v == "YES" ? Verdict::Yes : Verdict::No;
    if (!j.contains("score") || !j["score"].is_number()) throw ParseError("conclude action needs a numeric score");
    c.score = j["score"].get<double>();
    if (!(c.score >= 0.0 && c.score <= 1.0)) throw ParseError("conclude score outside [0,1]");
    a.act = c;
  } else {
    throw ParseError("action must be \"call\" or \"conclude\"");
  }
  return a;
}

inline constexpr std::array<const char*, 3> kHypotheses = {"H2", "H3", "H4"};

struct HypothesisSignal {
  std::string id;
  double plausibility = 0.0;
  std::string rationale;
};

struct CounterHypothesisReport {
  std::array<HypothesisSignal, 3> signals;
  std::vector<std::string> warnings;
};

inline json report_to_json(const CounterHypothesisReport& r) {
  json j = json::object();
  for (const auto& s : r.signals) j[s.id] = {{"p", s.plausibility}, {"rationale", s.rationale}};
  return j;
}

/// Critic grammar: {"H2": {"p": number, "rationale": str?}, "H3": {...}, "H4": {...}}.
/// Out-of-range plausibilities are clamped into [0,1] and reported as warnings.
inline CounterHypothesisReport parse_critic(const json& j) {
  if (!j.is_object()) throw ParseError("critic response is not a JSON object");
  CounterHypothesisReport r;
  for (std::size_t k = 0; k < kHypotheses.size(); ++k) {
    const std::string id = kHypotheses[k];
    if (!j.contains(id) || !j[id].is_object()) throw ParseError("critic response lacks " + id);
    const auto& h = j[id];
    if (!h.contains("p") || !h["p"].is_number()) throw ParseError(id + " has no numeric plausibility");
    double p = h["p"].get<double>();
    if (!std::isfinite(p)) throw ParseError(id + " plausibility is not finite");
    if (p < 0.0 || p > 1.0) {
      const double c = std::clamp(p, 0.0, 1.0);
      std::ostringstream w;
      w << id << " plausibility " << p << " clamped to " << c;
      r.warnings.push_back(w.str());
      p = c;
    }
    r.signals[k] = {id, p, h.value("rationale", "")};
  }
  if (j.size() != kHypotheses.size()) throw ParseError("critic response must contain exactly H2, H3 and H4");
  return r;
}

enum class BackendRole { Controller, Critic };

NLOHMANN_JSON_SERIALIZE_ENUM(BackendRole, {{BackendRole::Controller, "controller"}, {BackendRole::Critic, "critic"}})

struct BackendRequest {
  BackendRole role = BackendRole::Controller;
  std::string pair_key;
  int step = 0;  // controller step, 1-based; 0 for the critic
  std::string context;
  std::vector<EvidenceClaim> evidence;
  std::vector<ToolName> available_tools;
};

/// Controller or critic. Implementations return the raw structured response;
/// the agent owns grammar checking.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual json invoke(const BackendRequest& request) = 0;
  virtual std::string identity() const = 0;
  virtual bool deterministic() const = 0;
};

// ---------------------------------------------------------------------------
// Context rendering

struct ContextOptions {
  std::size_t budget_chars = 600 * 4;
};

namespace detail {

inline std::string render_claim(std::size_t i, const EvidenceClaim& c) {
  std::ostringstream s;
  s << "[" << i << "] " << to_string(c.kind) << " from " << c.source_tool;
  if (c.score) s << " score=" << json(*c.score).dump();
  s << " " << c.payload.dump() << "\n";
  return s.str();
}

}  // namespace detail

inline std::string context_preamble(BackendRole role) {
  if (role == BackendRole::Controller) {
    return "ROLE controller\nInvestigate the directed influence hypothesis source -> target. Reply with one JSON action.\n";
  }
  return "ROLE critic\nScore the counter-hypotheses H2 (intermediary), H3 (independent convergence) and H4 (common source) "
         "against the provisional verdict and evidence. Reply with one JSON object.\n";
}

/// Deterministic rendering. Over budget, claims are dropped lowest score first
/// (missing scores count as 0.5), oldest first among equals; the newest claim
/// always stays.
inline std::string serialize_context(const std::vector<EvidenceClaim>& evidence, BackendRole role, const std::string& header = {},
                                     const ContextOptions& opt = {}) {
  std::string head = context_preamble(role) + header + "EVIDENCE\n";
  std::vector<std::string> lines;
  lines.reserve(evidence.size());
  for (std::size_t i = 0; i < evidence.size(); ++i) lines.push_back(detail::render_claim(i, evidence[i]));
  std::vector<bool> keep(evidence.size(), true);
  std::size_t total = head.size();
  for (const auto& l : lines) total += l.size();
  if (total > opt.budget_chars && evidence.size() > 1) {
    std::vector<std::size_t> order(evidence.size() - 1);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return evidence[a].score.value_or(0.5) < evidence[b].score.value_or(0.5); });
    for (auto i : order) {
      if (total <= opt.budget_chars) break;
      keep[i] = false;
      total -= lines[i].size();
    }
  }
  std::string out = head;
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (keep[i]) out += lines[i];
  return out;
}

// ---------------------------------------------------------------------------
// Falsification

struct CriticConfig {
  double gamma = 2.0;
  std::array<double, 3> omega = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

  void validate() const {
    if (!(gamma >= 0.0)) throw DataError("gamma must be non-negative");
    for (double w : omega)
      if (!(w >= 0.0)) throw DataError("omega weights must be non-negative");
  }
};

/// clip_[0,1](c0 - gamma * sum_k omega_k p_k).
inline double clipped_score(double c0, const CounterHypothesisReport& r, const CriticConfig& cfg) {
  double penalty = 0.0;
  for (std::size_t k = 0; k < 3; ++k) penalty += cfg.omega[k] * r.signals[k].plausibility;
  return std::clamp(c0 - cfg.gamma * penalty, 0.0, 1.0);
}

struct FalsifyResult {
  double final_score = 0.0;
  CounterHypothesisReport report;
  std::string context;
};

inline std::string provisional_header(const std::string& pair_key, Verdict v0, double c0) {
  return "PAIR " + pair_key + "\nPROVISIONAL verdict=" + to_string(v0) + " score=" + json(c0).dump() + "\n";
}

/// The critic sees only the provisional verdict and the structured evidence.
inline FalsifyResult falsify(const std::string& pair_key, Verdict v0, double c0, const std::vector<EvidenceClaim>& evidence, Backend& critic,
                             const CriticConfig& cfg, const ContextOptions& opt = {}) {
  cfg.validate();
  if (!(c0 >= 0.0 && c0 <= 1.0)) throw DataError("provisional score outside [0,1]");
  BackendRequest req{BackendRole::Critic, pair_key, 0, serialize_context(evidence, BackendRole::Critic, provisional_header(pair_key, v0, c0), opt),
                     evidence, {}};
  FalsifyResult out;
  out.report = parse_critic(critic.invoke(req));
  out.final_score = clipped_score(c0, out.report, cfg);
  out.context = std::move(req.context);
  return out;
}

// ---------------------------------------------------------------------------
// Trajectory

struct TrajectoryStep {
  int index = 0;
  std::string phase;  // gate | seed | step | critic | error
  std::optional<json> utterance;
  std::optional<ToolRecord> observation;
  std::optional<std::string> error;
  json extra = json::object();
};

struct Trajectory {
  DirectedPair pair;
  std::vector<TrajectoryStep> steps;
  std::optional<VerdictTuple> outcome;
  bool no_verdict = false;
  std::string diagnostic;
  int backend_calls = 0;

  std::size_t tool_calls() const {
    return static_cast<std::size_t>(std::count_if(steps.begin(), steps.end(), [](const TrajectoryStep& s) {
      return s.phase == "step" && s.utterance && s.utterance->value("action", "") == "call";
    }));
  }
};

inline json step_to_json(const std::string& pair_key, const TrajectoryStep& s) {
  json j = {{"type", "step"}, {"pair", pair_key}, {"index", s.index}, {"phase", s.phase}};
  if (s.utterance) j["utterance"] = *s.utterance;
  if (s.observation) j["observation"] = *s.observation;
  if (s.error) j["error"] = *s.error;
  if (!s.extra.empty()) j["extra"] = s.extra;
  return j;
}

/// One line per step, then a terminal verdict (or no-verdict) line.
inline std::string trajectory_to_jsonl(const Trajectory& t) {
  const auto key = t.pair.key();
  std::string out;
  for (const auto& s : t.steps) out += step_to_json(key, s).dump() + "\n";
  json term = {{"type", t.no_verdict ? "no_verdict" : "verdict"}, {"pair", key}, {"backend_calls", t.backend_calls}};
  if (t.outcome) term["outcome"] = *t.outcome;
  if (t.no_verdict) term["diagnostic"] = t.diagnostic;
  out += term.dump() + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Adjudication

struct AgentConfig {
  int max_steps = 8;
  double threshold = 0.5;
  CriticConfig critic;
  ContextOptions context;
  double timeline_reject_score = 0.05;
  double fallback_score = 0.50;
};

struct SeedInfo {
  double seed_similarity = 0.0;
  std::string witness_source;
  std::string witness_target;
};

struct AdjudicationResult {
  Trajectory trajectory;
  std::optional<VerdictTuple> verdict;  // empty for NoVerdict
};

namespace detail {

/// Counts invocations so the trajectory can report them.
class CountingBackend : public Backend {
 public:
  CountingBackend(Backend& b, int& counter) : b_(b), n_(counter) {}
  json invoke(const BackendRequest& r) override {
    ++n_;
    return b_.invoke(r);
  }
  std::string identity() const override { return b_.identity(); }
  bool deterministic() const override { return b_.deterministic(); }

 private:
  Backend& b_;
  int& n_;
};

inline std::string controller_header(const DirectedPair& pair, const Corpus& corpus, const std::vector<ToolName>& tools, int step, int max_steps,
                                     const std::string& last_thought) {
  const auto& a = corpus.artist(pair.source_artist_id);
  const auto& b = corpus.artist(pair.target_artist_id);
  std::ostringstream s;
  s << "PAIR " << pair.key() << "\nSOURCE " << a.name << " (" << a.birth_year << "-" << a.death_year << ")\nTARGET " << b.name << " ("
    << b.birth_year << "-" << b.death_year << ")\nTOOLS";
  for (auto t : tools) s << " " << tool_name(t);
  s << "\nSTEP " << step << " of " << max_steps << "\n";
  if (!last_thought.empty()) s << "LAST THOUGHT " << last_thought << "\n";
  return s.str();
}

}  // namespace detail

/// Runs the four phases for one directed pair. Tool failures become
/// observations; a backend failure yields a NoVerdict outcome.
inline AdjudicationResult adjudicate_pair(const DirectedPair& pair, const Corpus& corpus, const ToolRegistry& tools, Backend& controller,
                                          Backend& critic, const AgentConfig& cfg, const std::optional<SeedInfo>& seed = std::nullopt,
                                          const std::string& trajectory_ref = {}) {
  validate_pair(pair);
  cfg.critic.validate();
  AdjudicationResult res;
  auto& traj = res.trajectory;
  traj.pair = pair;
  int idx = 0;
  auto finish = [&](double score, std::vector<EvidenceClaim> evidence) {
    auto v = make_verdict(score, cfg.threshold, std::move(evidence));
    if (!trajectory_ref.empty()) v.trajectory_ref = trajectory_ref;
    traj.outcome = v;
    res.verdict = std::move(v);
    return res;
  };

  // Phase 0
  if (tools.contains(ToolName::TimelineGate)) {
    auto rec = tools.call(ToolName::TimelineGate, pair);
    traj.steps.push_back({idx++, "gate", std::nullopt, rec, std::nullopt, {}});
    if (!rec.body.at("pass").get<bool>()) {
      auto claim = to_claim(rec);
      claim.payload["summary"] = "Timeline impossible";
      return finish(cfg.timeline_reject_score, {claim});
    }
  }

  // Phase 1
  const auto& a = corpus.artist(pair.source_artist_id);
  const auto& b = corpus.artist(pair.target_artist_id);
  std::vector<EvidenceClaim> evidence;
  evidence.push_back({EvidenceKind::Metadata,
                      "Metadata",
                      {{"source", a.artist_id},
                       {"target", b.artist_id},
                       {"source_name", a.name},
                       {"target_name", b.name},
                       {"source_lifespan", {a.birth_year, a.death_year}},
                       {"target_lifespan", {b.birth_year, b.death_year}}},
                      std::nullopt});
  if (seed) {
    evidence.push_back({EvidenceKind::VisualSimilarity,
                        "CandidateFilter",
                        {{"max_cosine", seed->seed_similarity}, {"witness", {seed->witness_source, seed->witness_target}}},
                        (seed->seed_similarity + 1.0) / 2.0});
  }
  {
    json seeded = json::array();
    for (const auto& c : evidence) seeded.push_back(c);
    traj.steps.push_back({idx++, "seed", std::nullopt, std::nullopt, std::nullopt, {{"evidence", seeded}}});
  }

  detail::CountingBackend ctl(controller, traj.backend_calls);
  detail::CountingBackend crt(critic, traj.backend_calls);
  const auto available = tools.names();
  try {
    // Phase 2
    std::optional<ConcludeAction> concluded;
    std::string last_thought;
    for (int step = 1; step <= cfg.max_steps && !concluded; ++step) {
      BackendRequest req{BackendRole::Controller,
                         pair.key(),
                         step,
                         serialize_context(evidence, BackendRole::Controller,
                                           detail::controller_header(pair, corpus, available, step, cfg.max_steps, last_thought), cfg.context),
                         evidence,
                         available};
      const auto action = parse_action(ctl.invoke(req));
      last_thought = action.thought;
      TrajectoryStep ts{idx++, "step", action_to_json(action), std::nullopt, std::nullopt, {}};
      if (const auto* call = std::get_if<CallAction>(&action.act)) {
        try {
          if (!tools.contains(call->tool)) throw ToolFailure(tool_name(call->tool) + " is not available");
          auto rec = tools.call(call->tool, pair, call->args);
          evidence.push_back(to_claim(rec));
          ts.observation = std::move(rec);
        } catch (const DataError& e) {
          ts.error = e.what();
        }
      } else {
        concluded = std::get<ConcludeAction>(action.act);
      }
      traj.steps.push_back(std::move(ts));
    }
    const Verdict v0 = concluded ? concluded->verdict : Verdict::No;
    const double c0 = concluded ? concluded->score : cfg.fallback_score;
    if (!concluded) {
      traj.steps.push_back({idx++, "fallback", std::nullopt, std::nullopt, std::nullopt, {{"verdict", v0}, {"score", c0}}});
    }

    // Phase 3
    const auto fr = falsify(pair.key(), v0, c0, evidence, crt, cfg.critic, cfg.context);
    const auto& report = fr.report;
    const double final_score = fr.final_score;
    json extra = {{"provisional", {{"verdict", v0}, {"score", c0}}}, {"final_score", final_score}};
    if (!report.warnings.empty()) extra["warnings"] = report.warnings;
    traj.steps.push_back({idx++, "critic", report_to_json(report), std::nullopt, std::nullopt, extra});
    evidence.push_back({EvidenceKind::CriticChallenge, "Critic", {{"hypotheses", report_to_json(report)}, {"gamma", cfg.critic.gamma}}, std::nullopt});

    // Phase 4
    return finish(final_score, std::move(evidence));
  } catch (const BackendError& e) {
    traj.steps.push_back({idx++, "error", std::nullopt, std::nullopt, std::string(e.what()), {}});
    traj.no_verdict = true;
    traj.diagnostic = e.what();
    return res;
  }
}

}  // namespace artjudge
