#include <artjudge/cli.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>

using namespace artjudge;

namespace {

const std::string kData = std::string(ARTJUDGE_DATA_DIR) + "/mini-wib";

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "artjudge");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string first_pair(const std::string& tier) {
  for (const auto& p : read_pairs(kData + "/pairs.json"))
    if ((tier == "positive" && p.label == Label::Positive) || (p.tier && to_string(*p.tier) == tier)) return p.key();
  return {};
}

std::pair<std::string, std::string> split(const std::string& key) {
  const auto at = key.find("->");
  return {key.substr(0, at), key.substr(at + 2)};
}

}  // namespace

TEST(Cli, NoArgumentsPrintsUsage) {
  const auto r = run({});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, HelpExitsZero) {
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"bench", "run", "--help"}).code, 0);
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({"paint"}).code, 1);
  EXPECT_EQ(run({"validate"}).code, 1);
  EXPECT_EQ(run({"validate", "--data", "/nonexistent/dir"}).code, 1);
  EXPECT_EQ(run({"adjudicate", "--data", kData, "--source", "a0"}).code, 1);
  EXPECT_EQ(run({"bench", "run", "--data", kData, "--out", "/tmp/x", "--backend", "oracle"}).code, 1);
  EXPECT_EQ(run({"bench", "ablate", "--data", kData, "--out", "/tmp/x", "--switch", "shuffle"}).code, 1);
  EXPECT_EQ(run({"tool", "Oracle", "--data", kData, "--source", "a", "--target", "b"}).code, 1);
}

TEST(Cli, ValidateTheShippedFixture) {
  const auto r = run({"validate", "--data", kData});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("24 artists, 96 artworks, 24 biographies, 60 pairs"), std::string::npos);
}

TEST(Cli, BrokenCorpusIsADataError) {
  artjudge::testing::ScratchDir dir("cli_broken");
  std::filesystem::copy(kData, dir.path(), std::filesystem::copy_options::recursive);
  auto works = read_json_file(dir / "artworks.json");
  works["artworks"][0]["embedding_key"] = "no-such-row";
  write_text_file(dir / "artworks.json", works.dump());
  const auto r = run({"validate", "--data", dir.path().string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error "), std::string::npos);

  write_text_file(dir / "artists.json", "{\"schema\": ");
  EXPECT_EQ(run({"validate", "--data", dir.path().string()}).code, 2);
}

TEST(Cli, AdjudicateThenExportGraph) {
  artjudge::testing::ScratchDir dir("cli_adjudicate");
  const auto [s, t] = split(first_pair("positive"));
  const auto r = run({"adjudicate", "--data", kData, "--source", s, "--target", t, "--out", (dir / "run").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find(s + "->" + t + " YES"), std::string::npos) << r.out;
  EXPECT_TRUE(std::filesystem::exists(dir / "run/trajectories.jsonl"));

  const auto g = run({"graph", "export", "--data", kData, "--verdicts", (dir / "run/verdicts.jsonl").string(), "--format", "cypher", "--out",
                      (dir / "graph").string()});
  ASSERT_EQ(g.code, 0) << g.err;
  const auto cypher = read_text_file(dir / "graph/graph.cypher");
  EXPECT_NE(cypher.find("MERGE (a)-[r:INFLUENCED]->(b)"), std::string::npos);
  EXPECT_EQ(run({"graph", "export", "--data", kData, "--verdicts", (dir / "run/verdicts.jsonl").string(), "--format", "dot", "--out",
                 (dir / "graph").string()})
                .code,
            1);
}

TEST(Cli, ImpossiblePairNeedsNoScript) {
  const auto [s, t] = split(first_pair("TemporalImpossible"));
  artjudge::testing::ScratchDir dir("cli_script_empty");
  write_text_file(dir / "script.json", "{}");
  const auto r = run({"adjudicate", "--data", kData, "--source", s, "--target", t, "--script", (dir / "script.json").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("NO confidence=0.95"), std::string::npos) << r.out;
}

TEST(Cli, UnscriptedContextExitsThree) {
  const auto [s, t] = split(first_pair("positive"));
  artjudge::testing::ScratchDir dir("cli_script");
  const std::string key = s + "->" + t;
  write_text_file(dir / "script.json", json{{key + "#1", {{"action", "call"}, {"tool", "VisualAnalyzer"}}}}.dump());
  const auto r = run({"adjudicate", "--data", kData, "--source", s, "--target", t, "--script", (dir / "script.json").string(), "--out",
                      (dir / "out").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find(key), std::string::npos);
  EXPECT_NE(r.err.find("step 2"), std::string::npos);
  EXPECT_NE(read_text_file(dir / "out/verdicts.jsonl").find("\"no_verdict\":true"), std::string::npos);
}

TEST(Cli, UnreachableRemoteExitsThree) {
  const int port = artjudge::testing::closed_port();
  const auto [s, t] = split(first_pair("Hard"));
  ::setenv("ARTJUDGE_ENDPOINT", ("http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions").c_str(), 1);
  const auto r = run({"adjudicate", "--data", kData, "--source", s, "--target", t, "--backend", "remote"});
  ::unsetenv("ARTJUDGE_ENDPOINT");
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_NE(r.err.find("TransportError"), std::string::npos) << r.err;
  EXPECT_EQ(run({"adjudicate", "--data", kData, "--source", s, "--target", t, "--backend", "remote"}).code, 1);
}

TEST(Cli, ToolAndInspectors) {
  const auto [s, t] = split(first_pair("positive"));
  const auto tool = run({"tool", "TimelineGate", "--data", kData, "--source", s, "--target", t});
  ASSERT_EQ(tool.code, 0) << tool.err;
  EXPECT_EQ(json::parse(tool.out).at("body").at("pass"), true);

  const auto m = run({"manifold", "inspect", "--data", kData, "--artist", s});
  ASSERT_EQ(m.code, 0) << m.err;
  const auto mj = json::parse(m.out);
  EXPECT_LT(mj.at("max_gram_deviation").get<double>(), 1e-9);
  EXPECT_EQ(mj.at("signatures").size(), 1u);

  const auto d = run({"iconclass", "dist", "--data", kData, "--from", "21A", "--to", "21", "--lambda", "1"});
  ASSERT_EQ(d.code, 0) << d.err;
  EXPECT_EQ(json::parse(d.out).at("forward"), 1.0);
  EXPECT_EQ(run({"iconclass", "dist", "--data", kData, "--from", "21A", "--to", "21", "--lambda", "0"}).code, 2);
}

TEST(Cli, BenchRunWritesTheReport) {
  artjudge::testing::ScratchDir dir("cli_bench");
  const auto r = run({"bench", "run", "--data", kData, "--out", dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"metrics.json", "metrics.csv", "verdicts.jsonl", "roc_points.csv", "trajectories.jsonl", "config.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  const auto m = read_json_file(dir / "metrics.json");
  EXPECT_EQ(m.at("pairs"), 60);
  EXPECT_EQ(m.at("always_yes").at("mcc"), 0.0);
}

TEST(Cli, FixtureGenerateIsReproducible) {
  artjudge::testing::ScratchDir dir("cli_fixture");
  ASSERT_EQ(run({"fixture", "generate", "--out", (dir / "a").string()}).code, 0);
  for (const char* f : {"artists.json", "biographies.json", "pairs.json", "visual.ajem", "codesets.jsonl"})
    EXPECT_EQ(read_text_file(dir.path() / "a" / f), read_text_file(std::filesystem::path(kData) / f)) << f;
}
