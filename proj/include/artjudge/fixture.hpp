#pragma once

// Synthetic corpora: the mini-WIB benchmark fixture and the smaller
// purpose-built corpora used by the property checks.

#include <artjudge/core.hpp>
#include <artjudge/embedding_store.hpp>
#include <artjudge/iconclass.hpp>
#include <artjudge/retrieval.hpp>
#include <artjudge/text.hpp>
#include <artjudge/wolfflin.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace artjudge {

/// Portable draws: std's distributions differ between standard libraries.
class FixtureRng {
 public:
  explicit FixtureRng(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }

  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u = 0.0;
    while (u <= 0.0) u = uniform();
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    spare_ = r * std::sin(2.0 * std::numbers::pi * v);
    return r * std::cos(2.0 * std::numbers::pi * v);
  }

  std::vector<double> gaussian(std::size_t dim) {
    std::vector<double> g(dim);
    for (auto& x : g) x = normal();
    return g;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 rng_;
  std::optional<double> spare_;
};

inline std::vector<double> unit(std::vector<double> v) {
  const double n = norm2(std::span<const double>(v));
  for (auto& x : v) x /= n;
  return v;
}

inline std::vector<float> to_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }

struct FixtureSpec {
  std::uint64_t seed = 7;
  std::size_t movements = 4;
  std::size_t artists_per_movement = 6;
  std::size_t artworks_per_artist = 4;
  std::uint32_t dim = 512;
  std::size_t positives = 30;
  std::size_t hard = 10;
  std::size_t medium = 10;
  std::size_t easy = 5;
  std::size_t impossible = 5;
};

struct Fixture {
  std::vector<ArtistProfile> artists;
  std::vector<ArtworkRecord> artworks;
  std::vector<BiographyDoc> biographies;
  std::vector<DirectedPair> pairs;
  EmbeddingMatrix visual;
  EmbeddingMatrix poles;
  EmbeddingMatrix generic_poles;
  std::vector<std::string> codes;
  std::vector<ConceptGraph::Edge> extra_edges;
  std::vector<CodeSet> code_sets;
  CueLexicon lexicon = default_lexicon();

  Corpus corpus() const { return Corpus(artists, artworks, biographies); }
};

namespace detail {

inline const std::vector<std::string>& movement_names() {
  static const std::vector<std::string> n = {"Tenebrist", "Arcadian", "Luminist", "Synthetist", "Vorticist", "Orphist", "Purist", "Rayonist"};
  return n;
}

inline const std::vector<std::string>& given_names() {
  static const std::vector<std::string> n = {"Aldo",  "Berthe", "Cosimo", "Dora",   "Emil",  "Fenna", "Gaspar", "Hilde",
                                             "Ivo",   "Jutta",  "Kaspar", "Liesel", "Marek", "Nell",  "Otto",   "Pia",
                                             "Quirin", "Rosa",  "Sven",   "Tilde",  "Ugo",   "Vera",  "Wim",    "Xenia"};
  return n;
}

inline const std::vector<std::string>& family_names() {
  static const std::vector<std::string> n = {"Achterberg", "Brandolini", "Castellane", "Dunmore",  "Eckhoff",  "Falconetti",
                                             "Grisebach",  "Hartveld",   "Ingrassia",  "Jolivet",  "Kettering", "Lindqvist",
                                             "Marchetti",  "Nordhagen",  "Orsolini",   "Pellegrin", "Quast",     "Rasmussen",
                                             "Sandoval",   "Thorvald",   "Uccellini",  "Valdemar",  "Westerholt", "Ysselmuide"};
  return n;
}

}  // namespace detail

/// A small balanced benchmark. Movements share a visual centroid that leans
/// along the pole axes; positives are same-movement pairs whose biographies
/// name each other next to a shared city and, for most, a shared technique
/// term, institution or exhibition (a third carry an explicit influence
/// sentence). Hard negatives are same-movement pairs with no shared cue,
/// medium ones span adjacent movements, easy ones distant movements, and the
/// temporally impossible ones reverse a positive, running from the later
/// artist back to the earlier one.
inline Fixture generate_fixture(const FixtureSpec& spec = {}) {
  FixtureRng rng(spec.seed);
  Fixture f;
  const std::size_t A = spec.movements * spec.artists_per_movement;
  if (spec.movements < 3) throw DataError("fixture needs at least 3 movements");
  if (A > detail::given_names().size()) throw DataError("fixture has more artists than names");

  // pole axes and movement centroids
  const std::size_t dim = spec.dim;
  const auto base = unit(rng.gaussian(dim));
  std::vector<std::vector<double>> axis_dirs;
  for (std::size_t k = 0; k < kWolfflinAxes; ++k) axis_dirs.push_back(unit(rng.gaussian(dim)));
  std::vector<std::pair<std::string, std::vector<float>>> pole_rows, generic_rows;
  for (std::size_t k = 0; k < kWolfflinAxes; ++k) {
    std::vector<double> plus(dim), minus(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      plus[i] = base[i] + 0.5 * axis_dirs[k][i];
      minus[i] = base[i] - 0.5 * axis_dirs[k][i];
    }
    pole_rows.emplace_back("axis" + std::to_string(k + 1) + "+", to_float(unit(plus)));
    pole_rows.emplace_back("axis" + std::to_string(k + 1) + "-", to_float(unit(minus)));
    generic_rows.emplace_back("axis" + std::to_string(k + 1) + "+", to_float(unit(rng.gaussian(dim))));
    generic_rows.emplace_back("axis" + std::to_string(k + 1) + "-", to_float(unit(rng.gaussian(dim))));
  }
  f.poles = EmbeddingMatrix::from_rows(spec.dim, pole_rows);
  f.generic_poles = EmbeddingMatrix::from_rows(spec.dim, generic_rows);

  std::vector<std::vector<double>> centroid;
  for (std::size_t m = 0; m < spec.movements; ++m) {
    auto g = rng.gaussian(dim);
    for (auto& x : g) x /= std::sqrt(static_cast<double>(dim));
    if (m > 0)
      for (std::size_t i = 0; i < dim; ++i) g[i] += 0.6 * centroid[m - 1][i];
    for (std::size_t k = 0; k < kWolfflinAxes; ++k) {
      const double s = (rng.uniform() < 0.5 ? -1.0 : 1.0) * 0.6;
      for (std::size_t i = 0; i < dim; ++i) g[i] += s * axis_dirs[k][i];
    }
    centroid.push_back(unit(g));
  }

  // concept graph: one top-level branch per movement
  for (std::size_t m = 0; m < spec.movements; ++m) {
    const std::string top = std::to_string(m + 2);
    f.codes.push_back(top);
    for (int s = 1; s <= 4; ++s) {
      const std::string mid = top + std::to_string(s);
      f.codes.push_back(mid);
      for (char leaf : {'A', 'B', 'C'}) f.codes.push_back(mid + leaf);
    }
  }
  for (std::size_t m = 0; m + 1 < spec.movements; ++m) f.extra_edges.emplace_back(std::to_string(m + 3) + "1A", std::to_string(m + 2) + "1");

  // artists and artworks
  std::vector<std::size_t> movement_of(A);
  std::vector<std::vector<std::string>> bio_sentences(A);
  std::vector<std::vector<double>> style(A);
  for (std::size_t m = 0; m < spec.movements; ++m) {
    for (std::size_t i = 0; i < spec.artists_per_movement; ++i) {
      const std::size_t a = m * spec.artists_per_movement + i;
      movement_of[a] = m;
      ArtistProfile p;
      p.artist_id = "artist" + std::string(a < 10 ? "0" : "") + std::to_string(a);
      p.name = detail::given_names()[a] + " " + detail::family_names()[a];
      p.birth_year = 1700 + 30 * static_cast<int>(m) + 6 * static_cast<int>(i);
      p.death_year = p.birth_year + 65;
      p.bio_doc_ids = {p.artist_id + "-bio"};
      const auto& mv = detail::movement_names()[m % detail::movement_names().size()];
      bio_sentences[a] = {p.name + " was a painter of the " + mv + " circle, born in " + std::to_string(p.birth_year) + ".",
                          p.name + " worked mostly in oil on canvas and kept a large workshop.",
                          "Contemporaries described the work of " + p.name + " as sober and carefully composed."};
      auto noise = rng.gaussian(dim);
      std::vector<double> s(dim);
      for (std::size_t d = 0; d < dim; ++d) s[d] = centroid[m][d] + 0.5 * noise[d] / std::sqrt(static_cast<double>(dim));
      style[a] = unit(s);
      f.artists.push_back(std::move(p));
    }
  }
  std::vector<std::pair<std::string, std::vector<float>>> visual_rows;
  for (std::size_t a = 0; a < A; ++a) {
    auto& p = f.artists[a];
    const std::string top = std::to_string(movement_of[a] + 2);
    for (std::size_t w = 0; w < spec.artworks_per_artist; ++w) {
      ArtworkRecord r;
      r.artwork_id = p.artist_id + "-w" + std::to_string(w);
      r.artist_id = p.artist_id;
      r.year = p.birth_year + 25 + 5 * static_cast<int>(w);
      r.title = "Study " + std::to_string(w + 1);
      r.medium = "oil on canvas";
      r.embedding_key = r.artwork_id;
      auto noise = rng.gaussian(dim);
      std::vector<double> v(dim);
      for (std::size_t d = 0; d < dim; ++d) v[d] = style[a][d] + 0.45 * noise[d] / std::sqrt(static_cast<double>(dim));
      visual_rows.emplace_back(r.embedding_key, to_float(unit(v)));
      CodeSet cs{r.artwork_id, {}};
      cs.codes.insert(top + std::to_string(1 + rng.below(4)) + static_cast<char>('A' + rng.below(3)));
      cs.codes.insert(top + std::to_string(1 + rng.below(4)));
      f.code_sets.push_back(std::move(cs));
      p.artwork_ids.push_back(r.artwork_id);
      f.artworks.push_back(std::move(r));
    }
  }
  f.visual = EmbeddingMatrix::from_rows(spec.dim, visual_rows);

  // pairs
  auto idx = [&](std::size_t m, std::size_t i) { return m * spec.artists_per_movement + i; };
  auto feasible = [&](std::size_t s, std::size_t t) {
    const auto& a = f.artists[s];
    const auto& b = f.artists[t];
    return a.birth_year <= b.birth_year && a.death_year >= b.birth_year - 20;
  };
  std::vector<std::pair<std::size_t, std::size_t>> same, adjacent, distant;
  for (std::size_t m = 0; m < spec.movements; ++m) {
    for (std::size_t i = 0; i < spec.artists_per_movement; ++i) {
      for (std::size_t j = i + 1; j < spec.artists_per_movement; ++j) same.emplace_back(idx(m, i), idx(m, j));
      for (std::size_t m2 = m + 1; m2 < spec.movements; ++m2) {
        for (std::size_t j = 0; j < spec.artists_per_movement; ++j) {
          const auto s = idx(m, i), t = idx(m2, j);
          if (m2 == m + 1 && feasible(s, t)) adjacent.emplace_back(s, t);
          if (m2 >= m + 2 && feasible(s, t)) distant.emplace_back(s, t);
        }
      }
    }
  }
  for (auto* v : {&same, &adjacent, &distant}) rng.shuffle(*v);
  auto take = [&](std::vector<std::pair<std::size_t, std::size_t>>& from, std::size_t n, const char* what) {
    if (from.size() < n) throw DataError(std::string("fixture cannot supply enough ") + what + " pairs");
    std::vector<std::pair<std::size_t, std::size_t>> out(from.begin(), from.begin() + static_cast<std::ptrdiff_t>(n));
    from.erase(from.begin(), from.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
  };
  const auto pos = take(same, spec.positives, "positive");
  const auto hard = take(same, spec.hard, "hard negative");
  const auto med = take(adjacent, spec.medium, "medium negative");
  const auto easy = take(distant, spec.easy, "easy negative");
  std::vector<std::pair<std::size_t, std::size_t>> impossible;
  for (const auto& [s, t] : pos)
    if (!feasible(t, s)) impossible.emplace_back(t, s);
  const auto imp = take(impossible, spec.impossible, "impossible");

  // cues: each positive owns its city (and term, institution, exhibition) so
  // no cue leaks onto a negative pair
  const auto& lex = f.lexicon;
  const auto& preds = lex.influence_predicates;
  for (std::size_t n = 0; n < pos.size(); ++n) {
    const auto [s, t] = pos[n];
    const auto& a = f.artists[s];
    const auto& b = f.artists[t];
    const auto& city = lex.cities[n % lex.cities.size()];
    bio_sentences[s].push_back(a.name + " spent several seasons in " + city + ", where " + b.name + " later came to work.");
    bio_sentences[t].push_back(b.name + " settled in " + city + " and knew the studio of " + a.name + " there.");
    if (n % 3 != 2) {
      const auto& term = lex.terminology[n % lex.terminology.size()];
      bio_sentences[s].push_back(a.name + " was known for " + term + ", a practice " + b.name + " also took up.");
      bio_sentences[t].push_back(b.name + " turned to " + term + " in the years after meeting " + a.name + ".");
    }
    if (n % 3 == 0) {
      const auto& inst = lex.institutions[n % lex.institutions.size()];
      bio_sentences[s].push_back(a.name + " taught at the " + inst + " while " + b.name + " was enrolled.");
      bio_sentences[t].push_back(b.name + " trained at the " + inst + " in the circle of " + a.name + ".");
    }
    if (n % 5 == 1) {
      const auto& ex = lex.exhibitions[n % lex.exhibitions.size()];
      bio_sentences[s].push_back(a.name + " showed at the " + ex + " beside " + b.name + ".");
      bio_sentences[t].push_back(b.name + " exhibited at the " + ex + " with " + a.name + ".");
    }
    if (n % 3 == 1) {
      const auto& pr = preds[n % preds.size()];
      bio_sentences[t].push_back("Critics agree that " + b.name + " " + pr + " " + a.name + ".");
    }
  }
  for (std::size_t a = 0; a < A; ++a) {
    std::string text;
    for (const auto& s : bio_sentences[a]) text += (text.empty() ? "" : " ") + s;
    f.biographies.push_back({f.artists[a].bio_doc_ids.front(), f.artists[a].artist_id, text});
  }

  auto emit = [&](const std::vector<std::pair<std::size_t, std::size_t>>& v, Label l, std::optional<Tier> t) {
    for (const auto& [s, d] : v) f.pairs.push_back({f.artists[s].artist_id, f.artists[d].artist_id, l, t});
  };
  emit(pos, Label::Positive, std::nullopt);
  emit(hard, Label::Negative, Tier::Hard);
  emit(med, Label::Negative, Tier::Medium);
  emit(easy, Label::Negative, Tier::Easy);
  emit(imp, Label::Negative, Tier::TemporalImpossible);
  return f;
}

inline void write_fixture(const Fixture& f, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_collection(dir / "artists.json", "artists", f.artists);
  write_collection(dir / "artworks.json", "artworks", f.artworks);
  write_collection(dir / "biographies.json", "biographies", f.biographies);
  write_collection(dir / "pairs.json", "pairs", f.pairs);
  write_store(f.visual, dir / "visual.ajem");
  write_store(f.poles, dir / "poles.ajem");
  write_store(f.generic_poles, dir / "generic_poles.ajem");
  std::string codes, edges;
  for (const auto& c : f.codes) codes += c + "\n";
  for (const auto& [child, parent] : f.extra_edges) edges += child + "\t" + parent + "\n";
  write_text_file(dir / "iconclass_codes.txt", codes);
  write_text_file(dir / "iconclass_edges.txt", edges);
  write_text_file(dir / "codesets.jsonl", code_sets_to_jsonl(f.code_sets));
  write_text_file(dir / "lexicon.json", json(f.lexicon).dump(2) + "\n");
}

/// `n` pairs that fail the chronology gate, drawn from a corpus.
inline std::vector<DirectedPair> impossible_pairs(const Corpus& c, std::size_t n, int delta_years = 20) {
  std::vector<DirectedPair> out;
  for (const auto& a : c.artists()) {
    for (const auto& b : c.artists()) {
      if (out.size() == n) return out;
      if (a.artist_id == b.artist_id) continue;
      if (!timeline_gate(a.lifespan(), b.lifespan(), delta_years).pass) {
        out.push_back({a.artist_id, b.artist_id, Label::Negative, Tier::TemporalImpossible});
      }
    }
  }
  if (out.size() < n) throw DataError("corpus holds only " + std::to_string(out.size()) + " impossible pairs");
  return out;
}

struct LeakageCorpus {
  Corpus corpus;
  std::vector<DirectedPair> pairs;  // one per planted sentence
  std::size_t planted = 0;
};

/// Biographies where each pair's target text carries one explicit influence
/// sentence naming the source, cycling through the predicate lexicon.
inline LeakageCorpus leakage_corpus(std::size_t planted, const CueLexicon& lex = default_lexicon(), std::uint64_t seed = 11) {
  FixtureRng rng(seed);
  const auto& given = detail::given_names();
  const auto& family = detail::family_names();
  std::vector<ArtistProfile> artists;
  std::vector<BiographyDoc> bios;
  std::vector<DirectedPair> pairs;
  const std::size_t n_artists = 2 * planted;
  for (std::size_t a = 0; a < n_artists; ++a) {
    ArtistProfile p;
    p.artist_id = "leak" + std::to_string(a);
    p.name = given[a % given.size()] + " " + family[(a / given.size() + a) % family.size()] + "-" + std::to_string(a);
    p.birth_year = 1800 + static_cast<int>(a % 40);
    p.death_year = p.birth_year + 70;
    p.bio_doc_ids = {p.artist_id + "-bio"};
    artists.push_back(std::move(p));
  }
  for (std::size_t k = 0; k < planted; ++k) {
    const auto& src = artists[2 * k];
    const auto& tgt = artists[2 * k + 1];
    const auto& pred = lex.influence_predicates[k % lex.influence_predicates.size()];
    const auto& city = lex.cities[rng.below(lex.cities.size())];
    bios.push_back({src.bio_doc_ids.front(), src.artist_id, src.name + " lived in " + city + ". " + src.name + " painted harbour views."});
    bios.push_back({tgt.bio_doc_ids.front(), tgt.artist_id,
                    tgt.name + " was born in " + city + ". As a young painter " + tgt.name + " " + pred + " " + src.name + ". " + tgt.name +
                        " later travelled widely."});
    pairs.push_back({src.artist_id, tgt.artist_id, std::nullopt, std::nullopt});
  }
  return {Corpus(std::move(artists), {}, std::move(bios)), std::move(pairs), planted};
}

}  // namespace artjudge
