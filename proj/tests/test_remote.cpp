#include <artjudge/remote_backend.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <deque>
#include <thread>

using namespace artjudge;

namespace {

/// Local chat-completion stub: replies are served from a queue, the last one
/// repeating once the queue is down to it.
class StubServer {
 public:
  struct Reply {
    int status = 200;
    std::string body;
  };

  StubServer() {
    svr_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mu_);
      requests_.push_back(json::parse(req.body));
      auth_.push_back(req.get_header_value("Authorization"));
      const Reply r = replies_.empty() ? Reply{500, "empty"} : replies_.front();
      if (replies_.size() > 1) replies_.pop_front();
      res.status = r.status;
      res.set_content(r.body, "application/json");
    });
    port_ = svr_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { svr_.listen_after_bind(); });
    svr_.wait_until_ready();
  }
  ~StubServer() {
    svr_.stop();
    thread_.join();
  }

  static Reply content(const std::string& text) {
    return {200, json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}.dump()};
  }

  void push(Reply r) {
    std::lock_guard lock(mu_);
    replies_.push_back(std::move(r));
  }
  std::vector<json> requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }
  std::vector<std::string> auth() const {
    std::lock_guard lock(mu_);
    return auth_;
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

 private:
  httplib::Server svr_;
  int port_ = 0;
  std::thread thread_;
  mutable std::mutex mu_;
  std::deque<Reply> replies_;
  std::vector<json> requests_;
  std::vector<std::string> auth_;
};

RemoteConfig config_for(const StubServer& s) {
  RemoteConfig c;
  c.endpoint = s.endpoint();
  c.model = "stub-model";
  c.api_key = "k-123";
  c.timeout = std::chrono::seconds(5);
  return c;
}

BackendRequest controller_request(int step = 1) {
  return {BackendRole::Controller, "a->b", step, "CONTEXT-BODY", {}, {ToolName::TimelineGate}};
}

BackendRequest critic_request() { return {BackendRole::Critic, "a->b", 0, "CRITIC-BODY", {}, {}}; }

const char* kCall = R"({"thought": "check dates", "action": "call", "tool": "TimelineGate", "args": {}})";

}  // namespace

TEST(RemoteBackend, ValidCallIsParsed) {
  StubServer s;
  s.push(StubServer::content(std::string("```json\n") + kCall + "\n```"));
  RemoteBackend b(config_for(s));
  const auto a = parse_action(b.invoke(controller_request()));
  ASSERT_TRUE(a.is_call());
  EXPECT_EQ(std::get<CallAction>(a.act).tool, ToolName::TimelineGate);
  const auto reqs = s.requests();
  ASSERT_EQ(reqs.size(), 1u);
  EXPECT_EQ(reqs[0].at("temperature"), 0.0);
  EXPECT_EQ(reqs[0].at("model"), "stub-model");
  EXPECT_EQ(reqs[0].at("messages").at(0).at("content"), kDefaultControllerPrompt);
  EXPECT_EQ(reqs[0].at("messages").at(1).at("content"), "CONTEXT-BODY");
  EXPECT_EQ(s.auth()[0], "Bearer k-123");
  EXPECT_EQ(b.identity(), "remote:stub-model");
  EXPECT_FALSE(b.deterministic());
}

TEST(RemoteBackend, RolesUseSeparatePrompts) {
  StubServer s;
  s.push(StubServer::content(R"({"H2": {"p": 0.1}, "H3": {"p": 0.2}, "H4": {"p": 0.3}})"));
  auto cfg = config_for(s);
  cfg.critic_prompt = "CRITIC PROMPT";
  RemoteBackend b(cfg);
  b.invoke(critic_request());
  EXPECT_EQ(s.requests().at(0).at("messages").at(0).at("content"), "CRITIC PROMPT");
}

TEST(RemoteBackend, MalformedReplyRetriesOnceWithReminder) {
  StubServer s;
  s.push(StubServer::content("I think they met in Paris."));
  s.push(StubServer::content(kCall));
  RemoteBackend b(config_for(s));
  EXPECT_NO_THROW(b.invoke(controller_request()));
  const auto reqs = s.requests();
  ASSERT_EQ(reqs.size(), 2u);
  EXPECT_EQ(reqs[1].at("messages").at(1).at("content"), std::string("CONTEXT-BODY") + kFormatReminder);
}

TEST(RemoteBackend, MalformedTwiceAborts) {
  StubServer s;
  s.push(StubServer::content(R"({"action": "ponder"})"));
  RemoteBackend b(config_for(s));
  EXPECT_THROW(b.invoke(controller_request()), ParseError);
  EXPECT_EQ(s.requests().size(), 2u);
}

TEST(RemoteBackend, CriticPlausibilityClampedWithWarning) {
  StubServer s;
  s.push(StubServer::content(R"({"H2": {"p": 1.4}, "H3": {"p": 0.2}, "H4": {"p": -0.1}})"));
  RemoteBackend b(config_for(s));
  const auto report = parse_critic(b.invoke(critic_request()));
  EXPECT_EQ(report.signals[0].plausibility, 1.0);
  EXPECT_EQ(report.signals[2].plausibility, 0.0);
  int warnings = 0;
  for (const auto& e : b.exchanges()) warnings += e.contains("warning");
  EXPECT_EQ(warnings, 2);
}

TEST(RemoteBackend, RateLimitBacksOffThenSucceeds) {
  StubServer s;
  s.push({429, "slow down"});
  s.push({429, "slow down"});
  s.push({503, "busy"});
  s.push(StubServer::content(kCall));
  std::vector<std::chrono::milliseconds> slept;
  RemoteBackend b(config_for(s), [&](std::chrono::milliseconds d) { slept.push_back(d); });
  EXPECT_NO_THROW(b.invoke(controller_request()));
  EXPECT_EQ(s.requests().size(), 4u);
  EXPECT_EQ(slept, (std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(250), std::chrono::milliseconds(500),
                                                           std::chrono::milliseconds(1000)}));
}

TEST(RemoteBackend, PersistentRateLimitIsCapped) {
  StubServer s;
  s.push({429, "no"});
  auto cfg = config_for(s);
  cfg.max_retries = 6;
  std::vector<std::chrono::milliseconds> slept;
  RemoteBackend b(cfg, [&](std::chrono::milliseconds d) { slept.push_back(d); });
  EXPECT_THROW(b.invoke(controller_request()), RateLimitError);
  EXPECT_EQ(s.requests().size(), 7u);
  ASSERT_EQ(slept.size(), 6u);
  EXPECT_EQ(slept.back(), cfg.backoff_cap);
}

TEST(RemoteBackend, ClientErrorIsNotRetried) {
  StubServer s;
  s.push({401, "bad key"});
  RemoteBackend b(config_for(s), [](std::chrono::milliseconds) {});
  EXPECT_THROW(b.invoke(controller_request()), TransportError);
  EXPECT_EQ(s.requests().size(), 1u);
}

TEST(RemoteBackend, UnreachableEndpointIsATransportError) {
  const int port = artjudge::testing::closed_port();
  RemoteConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.max_retries = 2;
  cfg.timeout = std::chrono::seconds(2);
  int sleeps = 0;
  RemoteBackend b(cfg, [&](std::chrono::milliseconds) { ++sleeps; });
  try {
    b.invoke(controller_request());
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.error_class(), ErrorClass::Backend);
    EXPECT_NE(std::string(e.what()).find("3 attempts"), std::string::npos);
  }
  EXPECT_EQ(sleeps, 2);
}

TEST(RemoteBackend, ExchangesAreLoggedToFile) {
  StubServer s;
  s.push(StubServer::content(kCall));
  auto cfg = config_for(s);
  cfg.log_path = std::filesystem::temp_directory_path() / "artjudge_remote_log.jsonl";
  std::filesystem::remove(cfg.log_path);
  RemoteBackend b(cfg);
  b.invoke(controller_request(3));
  std::ifstream in(cfg.log_path);
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  const auto e = json::parse(line);
  EXPECT_EQ(e.at("pair"), "a->b");
  EXPECT_EQ(e.at("step"), 3);
  EXPECT_EQ(e.at("status"), 200);
  std::filesystem::remove(cfg.log_path);
}

TEST(RemoteBackend, EndpointMustHaveAScheme) {
  RemoteConfig cfg;
  cfg.endpoint = "localhost:8080";
  EXPECT_THROW(RemoteBackend{cfg}, UsageError);
}
