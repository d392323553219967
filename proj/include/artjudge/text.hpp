#pragma once

// Biography text handling: sentence splitting, a hashing bag-of-words encoder,
// cue lexicons and predicate masking.

#include <artjudge/core.hpp>
#include <artjudge/embedding_store.hpp>
#include <artjudge/errors.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace artjudge {

inline constexpr std::string_view kRedactionToken = "[REDACTED]";

namespace detail {

// Bytes >= 0x80 are treated as letters so UTF-8 names stay whole.
inline bool word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) != 0;
}

inline char lower_ascii(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = lower_ascii(c);
  return out;
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Lower-cased word tokens.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !detail::word_char(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && detail::word_char(text[j])) ++j;
    if (j > i) out.push_back(detail::lower(text.substr(i, j - i)));
    i = j;
  }
  return out;
}

/// Splits on '.', '!' or '?' followed by whitespace or end of text. Pieces are trimmed; empty ones dropped.
inline std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  auto push = [&](std::size_t b, std::size_t e) {
    while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    if (e > b) out.emplace_back(text.substr(b, e - b));
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))) {
      push(start, i + 1);
      start = i + 1;
    }
  }
  push(start, text.size());
  return out;
}

/// Signed feature hashing of unigrams and bigrams into `dim` buckets, l2-normalized.
/// Text without tokens encodes to the zero vector.
class HashingEncoder {
 public:
  explicit HashingEncoder(std::size_t dim = 384) : dim_(dim) {
    if (dim_ == 0) throw DataError("encoder dim must be positive");
  }

  std::size_t dim() const { return dim_; }

  std::vector<double> encode(std::string_view text) const {
    std::vector<double> v(dim_, 0.0);
    const auto toks = tokenize(text);
    auto add = [&](std::string_view feat, double w) {
      const auto h = detail::fnv1a(feat);
      v[h % dim_] += (h >> 63) ? -w : w;
    };
    for (std::size_t i = 0; i < toks.size(); ++i) {
      add(toks[i], 1.0);
      if (i + 1 < toks.size()) add(toks[i] + " " + toks[i + 1], 0.5);
    }
    const double n = norm2(std::span<const double>(v));
    if (n > 0.0)
      for (auto& x : v) x /= n;
    return v;
  }

  /// Cosine of two encodings; 0 when either is the zero vector.
  static double similarity(const std::vector<double>& a, const std::vector<double>& b) {
    const double s = dot(std::span<const double>(a), std::span<const double>(b));
    return std::clamp(s, -1.0, 1.0);
  }

 private:
  std::size_t dim_;
};

// ---------------------------------------------------------------------------
// Phrase matching

struct PhraseMatch {
  std::size_t pos = 0;
  std::size_t len = 0;
  std::size_t pattern = 0;  // index into the pattern list
};

/// Case-insensitive, word-bounded, leftmost-longest non-overlapping matches.
inline std::vector<PhraseMatch> find_phrases(std::string_view text, const std::vector<std::string>& patterns) {
  std::vector<std::string> pats;
  pats.reserve(patterns.size());
  for (const auto& p : patterns) pats.push_back(detail::lower(p));
  const std::string hay = detail::lower(text);
  std::vector<PhraseMatch> out;
  std::size_t i = 0;
  while (i < hay.size()) {
    PhraseMatch best{};
    bool found = false;
    for (std::size_t k = 0; k < pats.size(); ++k) {
      const auto& p = pats[k];
      if (p.empty() || p.size() <= best.len || hay.compare(i, p.size(), p) != 0) continue;
      if (detail::word_char(p.front()) && i > 0 && detail::word_char(hay[i - 1])) continue;
      const std::size_t end = i + p.size();
      if (detail::word_char(p.back()) && end < hay.size() && detail::word_char(hay[end])) continue;
      best = {i, p.size(), k};
      found = true;
    }
    if (found) {
      out.push_back(best);
      i += best.len;
    } else {
      ++i;
    }
  }
  return out;
}

inline bool contains_phrase(std::string_view text, const std::vector<std::string>& patterns) {
  return !find_phrases(text, patterns).empty();
}

// ---------------------------------------------------------------------------
// Lexicons

enum class CueCategory { CoLocation, Institution, ExplicitReference, SharedTerminology, Exhibition };

NLOHMANN_JSON_SERIALIZE_ENUM(CueCategory, {{CueCategory::CoLocation, "CoLocation"},
                                           {CueCategory::Institution, "Institution"},
                                           {CueCategory::ExplicitReference, "ExplicitReference"},
                                           {CueCategory::SharedTerminology, "SharedTerminology"},
                                           {CueCategory::Exhibition, "Exhibition"}})

inline constexpr CueCategory kAllCueCategories[] = {CueCategory::CoLocation, CueCategory::Institution, CueCategory::ExplicitReference,
                                                    CueCategory::SharedTerminology, CueCategory::Exhibition};

/// Influence predicates double as the mask lexicon and as the trigger for
/// ExplicitReference cues.
struct CueLexicon {
  std::vector<std::string> influence_predicates;
  std::vector<std::string> cities;
  std::vector<std::string> institutions;
  std::vector<std::string> terminology;
  std::vector<std::string> exhibitions;

  const std::vector<std::string>& terms(CueCategory c) const {
    switch (c) {
      case CueCategory::CoLocation: return cities;
      case CueCategory::Institution: return institutions;
      case CueCategory::SharedTerminology: return terminology;
      case CueCategory::Exhibition: return exhibitions;
      case CueCategory::ExplicitReference: break;
    }
    return influence_predicates;
  }
};

inline void to_json(json& j, const CueLexicon& l) {
  j = json{{"influence_predicates", l.influence_predicates},
           {"cities", l.cities},
           {"institutions", l.institutions},
           {"terminology", l.terminology},
           {"exhibitions", l.exhibitions}};
}

inline void from_json(const json& j, CueLexicon& l) {
  l.influence_predicates = j.value("influence_predicates", std::vector<std::string>{});
  l.cities = j.value("cities", std::vector<std::string>{});
  l.institutions = j.value("institutions", std::vector<std::string>{});
  l.terminology = j.value("terminology", std::vector<std::string>{});
  l.exhibitions = j.value("exhibitions", std::vector<std::string>{});
}

inline CueLexicon default_lexicon() {
  CueLexicon l;
  l.influence_predicates = {"influenced by", "was influenced", "influenced", "under the influence of", "inspired by", "studied under",
                            "admired", "imitated", "apprenticed to", "pupil of", "student of", "followed the example of",
                            "drew on the work of"};
  l.cities = {"Paris", "Antwerp", "Rome", "Florence", "Venice", "Madrid", "Amsterdam", "Haarlem", "Delft", "London", "Munich",
              "Vienna", "Barcelona", "Arles", "Pont-Aven", "Giverny", "Moscow", "St Petersburg", "Berlin", "Dresden", "Kyoto",
              "Edo", "Seville", "Bruges", "Naples", "Milan", "New York", "Brussels", "Oslo", "Copenhagen"};
  l.institutions = {"Academie Julian", "Ecole des Beaux-Arts", "Royal Academy", "Academy of Fine Arts", "Accademia di San Luca",
                    "Bauhaus", "Academie Colarossi", "Kunstakademie", "Art Students League", "Guild of Saint Luke",
                    "Imperial Academy", "Prado", "Louvre"};
  l.terminology = {"Japanese prints", "ukiyo-e", "japonisme", "plein air", "chiaroscuro", "tenebrism", "pointillism",
                   "divisionism", "cloisonnism", "sfumato", "impasto", "broken color", "flat color", "synthetism",
                   "optical mixing", "complementary colors", "tonal modelling", "atmospheric perspective", "woodblock",
                   "arabesque", "sgraffito", "glazing"};
  l.exhibitions = {"Salon des Refuses", "Paris Salon", "Salon des Independants", "Exposition Universelle",
                   "Impressionist exhibition", "Armory Show", "Les XX", "Secession exhibition", "Royal Academy exhibition"};
  return l;
}

/// Rejects lexicons whose predicates would re-match the redaction token.
inline void validate_lexicon(const CueLexicon& l) {
  if (l.influence_predicates.empty()) throw DataError("lexicon has no influence predicates");
  for (const auto& p : l.influence_predicates) {
    if (p.empty()) throw DataError("lexicon has an empty influence predicate");
    if (contains_phrase(kRedactionToken, {p})) throw DataError("influence predicate '" + p + "' matches the redaction token");
  }
}

inline CueLexicon read_lexicon(const std::filesystem::path& path) {
  CueLexicon l = read_json_file(path).get<CueLexicon>();
  validate_lexicon(l);
  return l;
}

/// Replaces every lexicon phrase with the redaction token; text outside the
/// matches is copied unchanged.
inline std::string mask_text(std::string_view text, const std::vector<std::string>& patterns) {
  if (patterns.empty()) throw DataError("mask lexicon is empty");
  std::string out;
  out.reserve(text.size());
  std::size_t at = 0;
  for (const auto& m : find_phrases(text, patterns)) {
    out.append(text.substr(at, m.pos - at));
    out.append(kRedactionToken);
    at = m.pos + m.len;
  }
  out.append(text.substr(at));
  return out;
}

inline std::string mask_text(std::string_view text, const CueLexicon& lexicon) { return mask_text(text, lexicon.influence_predicates); }

}  // namespace artjudge
