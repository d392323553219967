#pragma once

// Domain entities shared by every module: artists, artworks, directed pairs,
// evidence claims, and the verdict/score semantics.

#include <artjudge/embedding_store.hpp>
#include <artjudge/errors.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace artjudge {

using nlohmann::json;

inline constexpr std::string_view kCorpusSchema = "artjudge-corpus/1";

enum class Verdict { Yes, No };
enum class Label { Positive, Negative };
enum class Tier { Hard, Medium, Easy, TemporalImpossible };
enum class EvidenceKind { Metadata, VisualSimilarity, Timeline, Pathway, Style, Concept, CriticChallenge };

inline constexpr Tier kAllTiers[] = {Tier::Hard, Tier::Medium, Tier::Easy, Tier::TemporalImpossible};

NLOHMANN_JSON_SERIALIZE_ENUM(Verdict, {{Verdict::Yes, "YES"}, {Verdict::No, "NO"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Label, {{Label::Positive, "Positive"}, {Label::Negative, "Negative"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Tier, {{Tier::Hard, "Hard"},
                                    {Tier::Medium, "Medium"},
                                    {Tier::Easy, "Easy"},
                                    {Tier::TemporalImpossible, "TemporalImpossible"}})
NLOHMANN_JSON_SERIALIZE_ENUM(EvidenceKind, {{EvidenceKind::Metadata, "Metadata"},
                                            {EvidenceKind::VisualSimilarity, "VisualSimilarity"},
                                            {EvidenceKind::Timeline, "Timeline"},
                                            {EvidenceKind::Pathway, "Pathway"},
                                            {EvidenceKind::Style, "Style"},
                                            {EvidenceKind::Concept, "Concept"},
                                            {EvidenceKind::CriticChallenge, "CriticChallenge"}})

template <typename Enum>
std::string to_string(Enum e) {
  return json(e).template get<std::string>();
}

/// Parses an enum from its wire name; unknown names are a data error rather than
/// nlohmann's silent fallback to the first enumerator.
template <typename Enum>
Enum enum_from_string(const std::string& s) {
  Enum e = json(s).template get<Enum>();
  if (json(e).template get<std::string>() != s) throw DataError("unknown enum value '" + s + "'");
  return e;
}

struct Lifespan {
  int birth = 0;
  int death = 0;
};

struct ArtistProfile {
  std::string artist_id;
  std::string name;
  int birth_year = 0;
  int death_year = 0;
  std::vector<std::string> bio_doc_ids;
  std::vector<std::string> artwork_ids;

  Lifespan lifespan() const { return {birth_year, death_year}; }
};

struct ArtworkRecord {
  std::string artwork_id;
  std::string artist_id;
  std::optional<int> year;
  std::string title;
  std::string medium;
  std::string embedding_key;
};

struct BiographyDoc {
  std::string doc_id;
  std::string artist_id;
  std::string text;
};

struct DirectedPair {
  std::string source_artist_id;
  std::string target_artist_id;
  std::optional<Label> label;
  std::optional<Tier> tier;

  std::string key() const { return source_artist_id + "->" + target_artist_id; }
};

inline void validate_pair(const DirectedPair& p) {
  if (p.source_artist_id == p.target_artist_id) throw DataError("pair " + p.key() + " has source == target");
  if (p.tier && p.label != Label::Negative) throw DataError("pair " + p.key() + " carries a tier but is not a negative");
}

struct EvidenceClaim {
  EvidenceKind kind = EvidenceKind::Metadata;
  std::string source_tool;
  json payload = json::object();
  std::optional<double> score;

  friend bool operator==(const EvidenceClaim&, const EvidenceClaim&) = default;
};

/// Keys each payload must carry for its kind.
inline const std::vector<std::string>& required_payload_keys(EvidenceKind kind) {
  static const std::map<EvidenceKind, std::vector<std::string>> keys = {
      {EvidenceKind::Metadata, {"source", "target"}},
      {EvidenceKind::VisualSimilarity, {"max_cosine"}},
      {EvidenceKind::Timeline, {"pass", "reason"}},
      {EvidenceKind::Pathway, {"cues", "pathway_score"}},
      {EvidenceKind::Style, {"distance"}},
      {EvidenceKind::Concept, {"distance_forward"}},
      {EvidenceKind::CriticChallenge, {"hypotheses"}},
  };
  return keys.at(kind);
}

inline bool payload_matches_kind(const EvidenceClaim& c) {
  if (!c.payload.is_object()) return false;
  const auto& keys = required_payload_keys(c.kind);
  return std::all_of(keys.begin(), keys.end(), [&](const std::string& k) { return c.payload.contains(k); });
}

struct VerdictTuple {
  Verdict verdict = Verdict::No;
  double confidence = 0.5;
  double influence_score = 0.5;
  std::vector<EvidenceClaim> evidence;
  std::optional<std::string> trajectory_ref;
};

struct VerdictFields {
  Verdict verdict;
  double confidence;
};

/// YES iff score > threshold (strict, so a tie is NO). Confidence is the
/// plausibility of whichever verdict is emitted.
inline VerdictFields derive_verdict(double influence_score, double threshold) {
  const double s = std::clamp(influence_score, 0.0, 1.0);
  const double t = std::clamp(threshold, 0.0, 1.0);
  if (s > t) return {Verdict::Yes, s};
  return {Verdict::No, 1.0 - s};
}

inline double influence_from_confidence(Verdict v, double confidence) {
  return v == Verdict::Yes ? confidence : 1.0 - confidence;
}

inline VerdictTuple make_verdict(double influence_score, double threshold, std::vector<EvidenceClaim> evidence = {}) {
  const auto f = derive_verdict(influence_score, threshold);
  return VerdictTuple{f.verdict, f.confidence, std::clamp(influence_score, 0.0, 1.0), std::move(evidence), std::nullopt};
}

// ---------------------------------------------------------------------------
// JSON mapping

inline void to_json(json& j, const ArtistProfile& a) {
  j = json{{"artist_id", a.artist_id}, {"name", a.name},           {"birth_year", a.birth_year},
           {"death_year", a.death_year}, {"bio_doc_ids", a.bio_doc_ids}, {"artwork_ids", a.artwork_ids}};
}
inline void from_json(const json& j, ArtistProfile& a) {
  j.at("artist_id").get_to(a.artist_id);
  a.name = j.value("name", a.artist_id);
  j.at("birth_year").get_to(a.birth_year);
  j.at("death_year").get_to(a.death_year);
  a.bio_doc_ids = j.value("bio_doc_ids", std::vector<std::string>{});
  a.artwork_ids = j.value("artwork_ids", std::vector<std::string>{});
}

inline void to_json(json& j, const ArtworkRecord& a) {
  j = json{{"artwork_id", a.artwork_id}, {"artist_id", a.artist_id}, {"title", a.title},
           {"medium", a.medium},         {"embedding_key", a.embedding_key}};
  j["year"] = a.year ? json(*a.year) : json(nullptr);
}
inline void from_json(const json& j, ArtworkRecord& a) {
  j.at("artwork_id").get_to(a.artwork_id);
  j.at("artist_id").get_to(a.artist_id);
  if (j.contains("year") && !j.at("year").is_null()) a.year = j.at("year").get<int>();
  a.title = j.value("title", "");
  a.medium = j.value("medium", "");
  a.embedding_key = j.value("embedding_key", a.artwork_id);
}

inline void to_json(json& j, const BiographyDoc& d) {
  j = json{{"doc_id", d.doc_id}, {"artist_id", d.artist_id}, {"text", d.text}};
}
inline void from_json(const json& j, BiographyDoc& d) {
  j.at("doc_id").get_to(d.doc_id);
  j.at("artist_id").get_to(d.artist_id);
  j.at("text").get_to(d.text);
}

inline void to_json(json& j, const DirectedPair& p) {
  j = json{{"source", p.source_artist_id}, {"target", p.target_artist_id}};
  if (p.label) j["label"] = *p.label;
  if (p.tier) j["tier"] = *p.tier;
}
inline void from_json(const json& j, DirectedPair& p) {
  j.at("source").get_to(p.source_artist_id);
  j.at("target").get_to(p.target_artist_id);
  p.label.reset();
  p.tier.reset();
  if (j.contains("label") && !j.at("label").is_null()) p.label = enum_from_string<Label>(j.at("label").get<std::string>());
  if (j.contains("tier") && !j.at("tier").is_null()) p.tier = enum_from_string<Tier>(j.at("tier").get<std::string>());
  validate_pair(p);
}

inline void to_json(json& j, const EvidenceClaim& c) {
  j = json{{"kind", c.kind}, {"source_tool", c.source_tool}, {"payload", c.payload}};
  j["score"] = c.score ? json(*c.score) : json(nullptr);
}
inline void from_json(const json& j, EvidenceClaim& c) {
  c.kind = enum_from_string<EvidenceKind>(j.at("kind").get<std::string>());
  j.at("source_tool").get_to(c.source_tool);
  c.payload = j.at("payload");
  c.score.reset();
  if (j.contains("score") && !j.at("score").is_null()) c.score = j.at("score").get<double>();
}

inline void to_json(json& j, const VerdictTuple& v) {
  j = json{{"verdict", v.verdict},
           {"confidence", v.confidence},
           {"influence_score", v.influence_score},
           {"evidence", v.evidence}};
  j["trajectory_ref"] = v.trajectory_ref ? json(*v.trajectory_ref) : json(nullptr);
}
inline void from_json(const json& j, VerdictTuple& v) {
  v.verdict = enum_from_string<Verdict>(j.at("verdict").get<std::string>());
  j.at("confidence").get_to(v.confidence);
  j.at("influence_score").get_to(v.influence_score);
  v.evidence = j.value("evidence", std::vector<EvidenceClaim>{});
  v.trajectory_ref.reset();
  if (j.contains("trajectory_ref") && !j.at("trajectory_ref").is_null()) v.trajectory_ref = j.at("trajectory_ref").get<std::string>();
}

// ---------------------------------------------------------------------------
// Corpus

/// Artists, artworks and biographies with id lookups. Immutable once built.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<ArtistProfile> artists, std::vector<ArtworkRecord> artworks, std::vector<BiographyDoc> bios = {})
      : artists_(std::move(artists)), artworks_(std::move(artworks)), bios_(std::move(bios)) {
    for (std::size_t i = 0; i < artists_.size(); ++i) artist_index_.emplace(artists_[i].artist_id, i);
    for (std::size_t i = 0; i < artworks_.size(); ++i) artwork_index_.emplace(artworks_[i].artwork_id, i);
    for (std::size_t i = 0; i < bios_.size(); ++i) bio_index_.emplace(bios_[i].doc_id, i);
  }

  const std::vector<ArtistProfile>& artists() const { return artists_; }
  const std::vector<ArtworkRecord>& artworks() const { return artworks_; }
  const std::vector<BiographyDoc>& biographies() const { return bios_; }

  const ArtistProfile* find_artist(std::string_view id) const { return lookup(artists_, artist_index_, id); }
  const ArtworkRecord* find_artwork(std::string_view id) const { return lookup(artworks_, artwork_index_, id); }
  const BiographyDoc* find_biography(std::string_view id) const { return lookup(bios_, bio_index_, id); }

  const ArtistProfile& artist(std::string_view id) const {
    if (const auto* a = find_artist(id)) return *a;
    throw DataError("unknown artist '" + std::string(id) + "'");
  }

  /// Artworks of an artist, in the order listed on the profile.
  std::vector<const ArtworkRecord*> portfolio(std::string_view artist_id) const {
    std::vector<const ArtworkRecord*> out;
    for (const auto& id : artist(artist_id).artwork_ids) {
      if (const auto* w = find_artwork(id)) out.push_back(w);
    }
    return out;
  }

 private:
  template <typename T>
  static const T* lookup(const std::vector<T>& v, const std::map<std::string, std::size_t, std::less<>>& idx, std::string_view id) {
    auto it = idx.find(id);
    return it == idx.end() ? nullptr : &v[it->second];
  }

  std::vector<ArtistProfile> artists_;
  std::vector<ArtworkRecord> artworks_;
  std::vector<BiographyDoc> bios_;
  std::map<std::string, std::size_t, std::less<>> artist_index_;
  std::map<std::string, std::size_t, std::less<>> artwork_index_;
  std::map<std::string, std::size_t, std::less<>> bio_index_;
};

enum class Severity { Warning, HardError };

struct ValidationIssue {
  Severity severity;
  std::string subject;
  std::string message;

  friend bool operator==(const ValidationIssue&, const ValidationIssue&) = default;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool accepted() const {
    return std::none_of(issues.begin(), issues.end(), [](const auto& i) { return i.severity == Severity::HardError; });
  }
  std::size_t count(Severity s) const {
    return static_cast<std::size_t>(std::count_if(issues.begin(), issues.end(), [s](const auto& i) { return i.severity == s; }));
  }
  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

inline ValidationReport validate_corpus(const std::vector<ArtistProfile>& artists, const std::vector<ArtworkRecord>& artworks,
                                        const EmbeddingMatrix& visual, const std::vector<BiographyDoc>& bios = {}) {
  ValidationReport r;
  auto hard = [&](const std::string& s, const std::string& m) { r.issues.push_back({Severity::HardError, s, m}); };
  auto warn = [&](const std::string& s, const std::string& m) { r.issues.push_back({Severity::Warning, s, m}); };

  std::map<std::string, const ArtistProfile*> by_artist;
  for (const auto& a : artists) {
    if (!by_artist.emplace(a.artist_id, &a).second) hard(a.artist_id, "duplicate artist_id");
    if (a.birth_year > a.death_year) hard(a.artist_id, "birth_year after death_year");
  }
  std::map<std::string, const ArtworkRecord*> by_artwork;
  for (const auto& w : artworks) {
    if (!by_artwork.emplace(w.artwork_id, &w).second) hard(w.artwork_id, "duplicate artwork_id");
    auto owner = by_artist.find(w.artist_id);
    if (owner == by_artist.end()) {
      hard(w.artwork_id, "artwork references missing artist '" + w.artist_id + "'");
    } else if (w.year && (*w.year < owner->second->birth_year || *w.year > owner->second->death_year)) {
      warn(w.artwork_id, "year " + std::to_string(*w.year) + " outside artist lifespan");
    }
    if (!visual.contains(w.embedding_key)) hard(w.artwork_id, "dangling embedding_key '" + w.embedding_key + "'");
  }
  std::set<std::string> bio_ids;
  for (const auto& d : bios) bio_ids.insert(d.doc_id);
  for (const auto& a : artists) {
    std::set<std::string> seen;
    for (const auto& wid : a.artwork_ids) {
      if (!seen.insert(wid).second) hard(a.artist_id, "artwork '" + wid + "' listed twice");
      auto w = by_artwork.find(wid);
      if (w == by_artwork.end()) {
        hard(a.artist_id, "artwork '" + wid + "' does not resolve");
      } else if (w->second->artist_id != a.artist_id) {
        hard(a.artist_id, "artwork '" + wid + "' belongs to '" + w->second->artist_id + "'");
      }
    }
    if (!bios.empty()) {
      for (const auto& did : a.bio_doc_ids) {
        if (!bio_ids.count(did)) hard(a.artist_id, "biography '" + did + "' does not resolve");
      }
    }
  }
  return r;
}

inline ValidationReport validate_corpus(const Corpus& c, const EmbeddingMatrix& visual) {
  return validate_corpus(c.artists(), c.artworks(), visual, c.biographies());
}

// ---------------------------------------------------------------------------
// Collection files: {"schema": "artjudge-corpus/1", "<collection>": [...]}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("short write to " + path.string());
}

template <typename T>
std::vector<T> read_collection(const std::filesystem::path& path, const std::string& key) {
  const json doc = read_json_file(path);
  if (doc.value("schema", "") != kCorpusSchema) throw DataError(path.string() + ": expected schema " + std::string(kCorpusSchema));
  try {
    return doc.at(key).get<std::vector<T>>();
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

template <typename T>
void write_collection(const std::filesystem::path& path, const std::string& key, const std::vector<T>& items) {
  json doc = {{"schema", kCorpusSchema}, {key, items}};
  write_text_file(path, doc.dump(2) + "\n");
}

/// Reads pairs from a collection document (.json) or JSON Lines (.jsonl).
inline std::vector<DirectedPair> read_pairs(const std::filesystem::path& path) {
  if (path.extension() != ".jsonl") return read_collection<DirectedPair>(path, "pairs");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<DirectedPair> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line).get<DirectedPair>());
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace artjudge
