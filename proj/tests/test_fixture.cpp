#include <artjudge/fixture.hpp>
#include <artjudge/tools.hpp>

#include <gtest/gtest.h>

#include <set>

using namespace artjudge;

TEST(Fixture, ShapeAndBalance) {
  const auto f = generate_fixture();
  EXPECT_EQ(f.artists.size(), 24u);
  EXPECT_EQ(f.artworks.size(), 96u);
  EXPECT_EQ(f.pairs.size(), 60u);
  std::map<std::string, int> counts;
  std::set<std::string> keys;
  for (const auto& p : f.pairs) {
    validate_pair(p);
    counts[p.label == Label::Positive ? "pos" : to_string(*p.tier)]++;
    EXPECT_TRUE(keys.insert(p.key()).second) << p.key();
  }
  EXPECT_EQ(counts["pos"], 30);
  EXPECT_EQ(counts["Hard"], 10);
  EXPECT_EQ(counts["Medium"], 10);
  EXPECT_EQ(counts["Easy"], 5);
  EXPECT_EQ(counts["TemporalImpossible"], 5);
  EXPECT_TRUE(validate_corpus(f.corpus(), f.visual).accepted());
}

TEST(Fixture, ChronologyMatchesTiers) {
  const auto f = generate_fixture();
  const auto c = f.corpus();
  for (const auto& p : f.pairs) {
    const bool pass = timeline_gate(c.artist(p.source_artist_id).lifespan(), c.artist(p.target_artist_id).lifespan(), 20).pass;
    EXPECT_EQ(pass, p.tier != Tier::TemporalImpossible) << p.key();
  }
}

TEST(Fixture, ImpossiblePairsReversePositives) {
  const auto f = generate_fixture();
  std::set<std::pair<std::string, std::string>> pos;
  for (const auto& p : f.pairs)
    if (p.label == Label::Positive) pos.insert({p.source_artist_id, p.target_artist_id});
  for (const auto& p : f.pairs)
    if (p.tier == Tier::TemporalImpossible) EXPECT_TRUE(pos.count({p.target_artist_id, p.source_artist_id})) << p.key();
}

TEST(Fixture, DeterministicPerSeed) {
  const auto a = generate_fixture();
  const auto b = generate_fixture();
  EXPECT_EQ(json(a.pairs), json(b.pairs));
  EXPECT_EQ(json(a.biographies), json(b.biographies));
  EXPECT_EQ(a.visual.row(0).size(), 512u);
  EXPECT_TRUE(std::equal(a.visual.row(5).begin(), a.visual.row(5).end(), b.visual.row(5).begin()));
  FixtureSpec other;
  other.seed = 8;
  EXPECT_NE(json(generate_fixture(other).pairs), json(a.pairs));
}

TEST(Fixture, ImpossiblePairsHelper) {
  const auto c = generate_fixture().corpus();
  const auto pairs = impossible_pairs(c, 50);
  EXPECT_EQ(pairs.size(), 50u);
  for (const auto& p : pairs) EXPECT_FALSE(timeline_gate(c.artist(p.source_artist_id).lifespan(), c.artist(p.target_artist_id).lifespan(), 20).pass);
  EXPECT_THROW(impossible_pairs(c, 100000), DataError);
}

TEST(Fixture, LeakageCorpusPlantsOneSentencePerPair) {
  const auto lc = leakage_corpus(100);
  EXPECT_EQ(lc.pairs.size(), 100u);
  const auto& preds = default_lexicon().influence_predicates;
  std::size_t planted = 0;
  for (const auto& b : lc.corpus.biographies()) planted += find_phrases(b.text, preds).size();
  EXPECT_EQ(planted, 100u);
  const auto unmasked = biography_reader(lc.pairs[0], lc.corpus, HashingEncoder(), default_lexicon());
  bool explicit_ref = false;
  for (const auto& h : unmasked.body.at("cues")) explicit_ref |= h.at("category") == "ExplicitReference";
  EXPECT_TRUE(explicit_ref);
}
