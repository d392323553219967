#pragma once

// Deterministic stand-in for the temperature-0 language model.

#include <artjudge/agent.hpp>
#include <artjudge/core.hpp>
#include <artjudge/errors.hpp>

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace artjudge {

/// Two modes:
///   script     responses looked up by "<pair>#<step>" (controller) or "<pair>#critic"
///   heuristic  the controller calls every available tool once, then concludes with
///              the mean tool summary score; the critic scores
///                H2 = 0.2 u,  H3 = visual u^2,  H4 = 0.3 style u^2,  u = 1 - pathway
///              from the latest tool summaries.
class ScriptedBackend : public Backend {
 public:
  enum class Mode { Script, Heuristic };

  static ScriptedBackend heuristic() { return ScriptedBackend(Mode::Heuristic, {}); }
  static ScriptedBackend from_script(std::map<std::string, json> script) { return ScriptedBackend(Mode::Script, std::move(script)); }

  /// A JSON object keyed like the script.
  static ScriptedBackend read_script(const std::filesystem::path& path) {
    const json doc = read_json_file(path);
    if (!doc.is_object()) throw DataError(path.string() + ": script must be a JSON object");
    return from_script(doc.get<std::map<std::string, json>>());
  }

  ScriptedBackend(const ScriptedBackend& o) : mode_(o.mode_), script_(o.script_) {}

  static std::string key(const std::string& pair_key, int step) { return pair_key + "#" + std::to_string(step); }
  static std::string critic_key(const std::string& pair_key) { return pair_key + "#critic"; }

  json invoke(const BackendRequest& r) override {
    {
      std::lock_guard lock(mu_);
      calls_.push_back(r);
    }
    if (mode_ == Mode::Script) {
      const auto k = r.role == BackendRole::Critic ? critic_key(r.pair_key) : key(r.pair_key, r.step);
      auto it = script_.find(k);
      if (it == script_.end()) {
        throw UnscriptedContextError("no scripted response for pair " + r.pair_key +
                                     (r.role == BackendRole::Critic ? std::string(" critic") : " step " + std::to_string(r.step)));
      }
      return it->second;
    }
    return r.role == BackendRole::Controller ? heuristic_controller(r) : heuristic_critic(r);
  }

  std::string identity() const override { return mode_ == Mode::Script ? "scripted" : "scripted-heuristic"; }
  bool deterministic() const override { return true; }

  std::size_t call_count() const {
    std::lock_guard lock(mu_);
    return calls_.size();
  }

  std::vector<BackendRequest> calls() const {
    std::lock_guard lock(mu_);
    return calls_;
  }

 private:
  ScriptedBackend(Mode m, std::map<std::string, json> script) : mode_(m), script_(std::move(script)) {}

  static std::optional<double> latest_score(const std::vector<EvidenceClaim>& ev, const std::string& tool) {
    for (auto it = ev.rbegin(); it != ev.rend(); ++it)
      if (it->source_tool == tool && it->score) return it->score;
    return std::nullopt;
  }

  static json heuristic_controller(const BackendRequest& r) {
    const std::size_t done = static_cast<std::size_t>(r.step - 1);
    if (done < r.available_tools.size()) {
      const auto t = r.available_tools[done];
      return {{"thought", "gather " + tool_name(t)}, {"action", "call"}, {"tool", t}, {"args", json::object()}};
    }
    double sum = 0.0;
    int n = 0;
    for (auto t : r.available_tools) {
      if (auto s = latest_score(r.evidence, tool_name(t))) {
        sum += *s;
        ++n;
      }
    }
    const double score = n ? sum / n : 0.5;
    return {{"thought", "all tools consulted"}, {"action", "conclude"}, {"verdict", score > 0.5 ? "YES" : "NO"}, {"score", score}};
  }

  static json heuristic_critic(const BackendRequest& r) {
    const double pathway = latest_score(r.evidence, tool_name(ToolName::BiographyReader)).value_or(0.0);
    const double visual = latest_score(r.evidence, tool_name(ToolName::VisualAnalyzer)).value_or(0.0);
    const double style = latest_score(r.evidence, tool_name(ToolName::StyleComparator)).value_or(0.0);
    const double open = 1.0 - pathway;
    return {{"H2", {{"p", 0.2 * open}, {"rationale", "undocumented intermediary"}}},
            {"H3", {{"p", visual * open * open}, {"rationale", "visual resemblance without a transmission pathway"}}},
            {"H4", {{"p", 0.3 * style * open * open}, {"rationale", "shared formal vocabulary from a common source"}}}};
  }

  Mode mode_;
  std::map<std::string, json> script_;
  mutable std::mutex mu_;
  std::vector<BackendRequest> calls_;
};

}  // namespace artjudge
