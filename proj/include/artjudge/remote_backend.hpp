#pragma once

// Chat-completion backend over HTTP(S). Link with artjudge_remote for TLS.

#include <artjudge/agent.hpp>
#include <artjudge/core.hpp>
#include <artjudge/errors.hpp>

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace artjudge {

inline const char* kDefaultControllerPrompt =
    "You are the controller of an art-historical influence adjudicator. You investigate whether the SOURCE artist "
    "influenced the TARGET artist by calling tools and then concluding.\n"
    "Reply with exactly one JSON object and nothing else, either\n"
    "  {\"thought\": \"...\", \"action\": \"call\", \"tool\": \"<tool>\", \"args\": {}}\n"
    "or\n"
    "  {\"thought\": \"...\", \"action\": \"conclude\", \"verdict\": \"YES\" or \"NO\", \"score\": <plausibility of YES in [0,1]>}\n"
    "Tools: VisualAnalyzer, BiographyReader, TimelineGate, StyleComparator, ConceptRetriever (only those listed under TOOLS).\n";

inline const char* kDefaultCriticPrompt =
    "You are an adversarial critic. Given a provisional influence verdict and its structured evidence, rate how plausible "
    "each alternative explanation is.\n"
    "H2: the influence passed through an unnamed intermediary. H3: the artists converged independently. "
    "H4: both drew on a common source.\n"
    "Reply with exactly one JSON object and nothing else:\n"
    "  {\"H2\": {\"p\": <0..1>, \"rationale\": \"...\"}, \"H3\": {...}, \"H4\": {...}}\n";

inline const char* kFormatReminder =
    "\n\nYour previous reply could not be parsed. Respond with a single JSON object exactly matching the required format, "
    "with no surrounding text.";

struct RemoteConfig {
  std::string endpoint;  // scheme://host[:port][/path]
  std::string model;
  std::string api_key;
  std::string controller_prompt = kDefaultControllerPrompt;
  std::string critic_prompt = kDefaultCriticPrompt;
  int max_retries = 3;
  std::chrono::milliseconds backoff_initial{250};
  std::chrono::milliseconds backoff_cap{4000};
  std::chrono::seconds timeout{60};
  std::filesystem::path log_path;  // JSONL exchange log; empty for in-memory only

  /// ARTJUDGE_ENDPOINT, ARTJUDGE_MODEL and ARTJUDGE_API_KEY.
  static RemoteConfig from_env() {
    RemoteConfig c;
    auto get = [](const char* k) -> std::string {
      const char* v = std::getenv(k);
      return v ? v : "";
    };
    c.endpoint = get("ARTJUDGE_ENDPOINT");
    c.model = get("ARTJUDGE_MODEL");
    c.api_key = get("ARTJUDGE_API_KEY");
    if (c.endpoint.empty()) throw UsageError("ARTJUDGE_ENDPOINT is not set");
    return c;
  }
};

/// Pulls the first JSON object out of a model reply, tolerating code fences and
/// surrounding prose.
inline json extract_json_object(const std::string& content) {
  const auto b = content.find('{');
  const auto e = content.rfind('}');
  if (b == std::string::npos || e == std::string::npos || e < b) throw ParseError("reply contains no JSON object");
  try {
    return json::parse(content.substr(b, e - b + 1));
  } catch (const json::exception& ex) {
    throw ParseError(std::string("reply is not valid JSON: ") + ex.what());
  }
}

class RemoteBackend : public Backend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit RemoteBackend(RemoteConfig cfg, Sleeper sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })
      : cfg_(std::move(cfg)), sleep_(std::move(sleep)) {
    const auto scheme = cfg_.endpoint.find("://");
    if (scheme == std::string::npos) throw UsageError("endpoint must look like http://host:port/path");
    const auto slash = cfg_.endpoint.find('/', scheme + 3);
    base_ = cfg_.endpoint.substr(0, slash);
    path_ = slash == std::string::npos ? "/v1/chat/completions" : cfg_.endpoint.substr(slash);
  }

  json invoke(const BackendRequest& r) override {
    const std::string& system = r.role == BackendRole::Controller ? cfg_.controller_prompt : cfg_.critic_prompt;
    for (int attempt = 0; attempt < 2; ++attempt) {
      const std::string user = attempt == 0 ? r.context : r.context + kFormatReminder;
      const std::string content = complete(r, system, user);
      try {
        json reply = extract_json_object(content);
        if (r.role == BackendRole::Controller) {
          parse_action(reply);
        } else {
          for (const auto& w : parse_critic(reply).warnings) log({{"pair", r.pair_key}, {"role", r.role}, {"warning", w}});
        }
        return reply;
      } catch (const ParseError& e) {
        log({{"pair", r.pair_key}, {"role", r.role}, {"step", r.step}, {"parse_error", e.what()}, {"attempt", attempt}});
        if (attempt == 1) throw;
      }
    }
    throw ParseError("unreachable");
  }

  std::string identity() const override { return "remote:" + cfg_.model; }
  bool deterministic() const override { return false; }

  std::vector<json> exchanges() const {
    std::lock_guard lock(mu_);
    return log_;
  }

 private:
  /// One chat completion with retries on transport failures, 429 and 5xx.
  std::string complete(const BackendRequest& r, const std::string& system, const std::string& user) {
    const json body = {{"model", cfg_.model},
                       {"temperature", 0.0},
                       {"messages", {{{"role", "system"}, {"content", system}}, {{"role", "user"}, {"content", user}}}}};
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
    httplib::Client cli(base_);
    cli.set_connection_timeout(cfg_.timeout);
    cli.set_read_timeout(cfg_.timeout);
    std::string last;
    bool rate_limited = false;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) sleep_(std::min(cfg_.backoff_cap, cfg_.backoff_initial * (1 << std::min(attempt - 1, 20))));
      auto res = cli.Post(path_, headers, body.dump(), "application/json");
      json entry = {{"pair", r.pair_key}, {"role", r.role}, {"step", r.step}, {"attempt", attempt}, {"request", body}};
      if (!res) {
        last = "transport failure: " + httplib::to_string(res.error());
        rate_limited = false;
        entry["error"] = last;
        log(entry);
        continue;
      }
      entry["status"] = res->status;
      entry["response"] = res->body;
      log(entry);
      if (res->status == 429) {
        rate_limited = true;
        last = "HTTP 429";
        continue;
      }
      if (res->status >= 500) {
        rate_limited = false;
        last = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) throw TransportError("HTTP " + std::to_string(res->status) + " from " + base_ + path_);
      try {
        const json reply = json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const json::exception& e) {
        return std::string("unparseable completion envelope: ") + e.what();
      }
    }
    if (rate_limited) throw RateLimitError(last + " after " + std::to_string(cfg_.max_retries + 1) + " attempts");
    throw TransportError(last + " after " + std::to_string(cfg_.max_retries + 1) + " attempts (" + base_ + ")");
  }

  void log(const json& entry) {
    std::lock_guard lock(mu_);
    log_.push_back(entry);
    if (!cfg_.log_path.empty()) {
      std::ofstream out(cfg_.log_path, std::ios::app);
      out << entry.dump() << "\n";
    }
    if (entry.contains("warning")) std::cerr << "warning: " << entry["warning"].get<std::string>() << "\n";
  }

  RemoteConfig cfg_;
  Sleeper sleep_;
  std::string base_;
  std::string path_;
  mutable std::mutex mu_;
  std::vector<json> log_;
};

}  // namespace artjudge
