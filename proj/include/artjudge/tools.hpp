#pragma once

// The five evidence operators and the registry the agent calls them through.

#include <artjudge/core.hpp>
#include <artjudge/embedding_store.hpp>
#include <artjudge/errors.hpp>
#include <artjudge/iconclass.hpp>
#include <artjudge/retrieval.hpp>
#include <artjudge/text.hpp>
#include <artjudge/wolfflin.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace artjudge {

enum class ToolName { VisualAnalyzer, BiographyReader, TimelineGate, StyleComparator, ConceptRetriever };

NLOHMANN_JSON_SERIALIZE_ENUM(ToolName, {{ToolName::VisualAnalyzer, "VisualAnalyzer"},
                                        {ToolName::BiographyReader, "BiographyReader"},
                                        {ToolName::TimelineGate, "TimelineGate"},
                                        {ToolName::StyleComparator, "StyleComparator"},
                                        {ToolName::ConceptRetriever, "ConceptRetriever"}})

inline constexpr ToolName kAllTools[] = {ToolName::TimelineGate, ToolName::VisualAnalyzer, ToolName::BiographyReader,
                                         ToolName::StyleComparator, ToolName::ConceptRetriever};

inline std::string tool_name(ToolName t) { return to_string(t); }

inline EvidenceKind evidence_kind(ToolName t) {
  switch (t) {
    case ToolName::VisualAnalyzer: return EvidenceKind::VisualSimilarity;
    case ToolName::BiographyReader: return EvidenceKind::Pathway;
    case ToolName::TimelineGate: return EvidenceKind::Timeline;
    case ToolName::StyleComparator: return EvidenceKind::Style;
    case ToolName::ConceptRetriever: return EvidenceKind::Concept;
  }
  throw DataError("unknown tool");
}

struct ToolRecord {
  ToolName tool = ToolName::TimelineGate;
  DirectedPair pair;
  json body = json::object();
  std::optional<double> summary_score;

  friend bool operator==(const ToolRecord& a, const ToolRecord& b) {
    return a.tool == b.tool && a.pair.source_artist_id == b.pair.source_artist_id &&
           a.pair.target_artist_id == b.pair.target_artist_id && a.body == b.body && a.summary_score == b.summary_score;
  }
};

inline void to_json(json& j, const ToolRecord& r) {
  j = json{{"tool", r.tool}, {"pair", {{"source", r.pair.source_artist_id}, {"target", r.pair.target_artist_id}}}, {"body", r.body}};
  if (r.summary_score) j["summary_score"] = *r.summary_score;
}

inline void from_json(const json& j, ToolRecord& r) {
  r.tool = enum_from_string<ToolName>(j.at("tool").get<std::string>());
  j.at("pair").at("source").get_to(r.pair.source_artist_id);
  j.at("pair").at("target").get_to(r.pair.target_artist_id);
  r.body = j.at("body");
  r.summary_score.reset();
  if (j.contains("summary_score")) r.summary_score = j.at("summary_score").get<double>();
}

inline EvidenceClaim to_claim(const ToolRecord& r) {
  return EvidenceClaim{evidence_kind(r.tool), tool_name(r.tool), r.body, r.summary_score};
}

// ---------------------------------------------------------------------------
// TimelineGate

inline ToolRecord timeline_tool(const DirectedPair& pair, const Corpus& corpus, int delta_years) {
  const auto& a = corpus.artist(pair.source_artist_id);
  const auto& b = corpus.artist(pair.target_artist_id);
  const auto g = timeline_gate(a.lifespan(), b.lifespan(), delta_years);
  json body = {{"pass", g.pass},
               {"reason", g.reason},
               {"source_lifespan", {a.birth_year, a.death_year}},
               {"target_lifespan", {b.birth_year, b.death_year}},
               {"delta_years", delta_years}};
  return {ToolName::TimelineGate, pair, std::move(body), g.pass ? 1.0 : 0.0};
}

// ---------------------------------------------------------------------------
// VisualAnalyzer

using CodeSetMap = std::map<std::string, std::set<std::string>>;  // artwork_id -> codes

inline CodeSetMap code_set_map(const std::vector<CodeSet>& sets) {
  CodeSetMap out;
  for (const auto& s : sets) out[s.artwork_id].insert(s.codes.begin(), s.codes.end());
  return out;
}

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

/// Cross-portfolio scan. Summary is the best cosine rescaled by (s + 1) / 2;
/// motif overlap is the Jaccard index of the code sets of the matched works.
inline ToolRecord visual_analyzer(const DirectedPair& pair, const Corpus& corpus, const EmbeddingMatrix& visual,
                                  const CodeSetMap& codes, std::size_t top_matches = 5) {
  struct Match {
    double cosine;
    const ArtworkRecord* a;
    const ArtworkRecord* b;
  };
  const auto pa = corpus.portfolio(pair.source_artist_id);
  const auto pb = corpus.portfolio(pair.target_artist_id);
  if (pa.empty()) throw EmptyPortfolioError("artist '" + pair.source_artist_id + "' has no artworks");
  if (pb.empty()) throw EmptyPortfolioError("artist '" + pair.target_artist_id + "' has no artworks");
  std::vector<Match> all;
  for (const auto* a : pa)
    for (const auto* b : pb) all.push_back({cosine(visual.row(a->embedding_key), visual.row(b->embedding_key)), a, b});
  std::sort(all.begin(), all.end(), [](const Match& x, const Match& y) {
    if (x.cosine != y.cosine) return x.cosine > y.cosine;
    return std::tie(x.a->artwork_id, x.b->artwork_id) < std::tie(y.a->artwork_id, y.b->artwork_id);
  });
  all.resize(std::min(all.size(), std::max<std::size_t>(top_matches, 1)));
  json matches = json::array();
  std::set<std::string> motifs_a, motifs_b;
  for (const auto& m : all) {
    matches.push_back({{"source_artwork", m.a->artwork_id}, {"target_artwork", m.b->artwork_id}, {"cosine", m.cosine}});
    if (auto it = codes.find(m.a->artwork_id); it != codes.end()) motifs_a.insert(it->second.begin(), it->second.end());
    if (auto it = codes.find(m.b->artwork_id); it != codes.end()) motifs_b.insert(it->second.begin(), it->second.end());
  }
  const double best = all.front().cosine;
  json body = {{"matches", matches}, {"max_cosine", best}, {"motif_overlap", jaccard(motifs_a, motifs_b)}};
  return {ToolName::VisualAnalyzer, pair, std::move(body), (best + 1.0) / 2.0};
}

// ---------------------------------------------------------------------------
// BiographyReader

struct Passage {
  std::string doc_id;
  std::string text;
};

struct CueHit {
  CueCategory category;
  std::string term;
  std::string snippet;
  std::string doc_id;
};

inline void to_json(json& j, const CueHit& h) {
  j = json{{"category", h.category}, {"term", h.term}, {"snippet", h.snippet}, {"doc_id", h.doc_id}};
}

inline void from_json(const json& j, CueHit& h) {
  j.at("category").get_to(h.category);
  j.at("term").get_to(h.term);
  j.at("snippet").get_to(h.snippet);
  j.at("doc_id").get_to(h.doc_id);
}

/// 1 - prod_c (1 - 0.5 * [category c has a hit]).
inline double pathway_score(const std::vector<CueHit>& hits) {
  std::set<CueCategory> cats;
  for (const auto& h : hits) cats.insert(h.category);
  double miss = 1.0;
  for (std::size_t i = 0; i < cats.size(); ++i) miss *= 0.5;
  return 1.0 - miss;
}

struct BiographyOptions {
  std::size_t top_passages = 6;
  bool mask = false;
};

/// Sentences of an artist's biographies, masked first when requested.
inline std::vector<Passage> artist_passages(const Corpus& corpus, const std::string& artist_id, const CueLexicon& lexicon, bool mask) {
  std::vector<Passage> out;
  for (const auto& id : corpus.artist(artist_id).bio_doc_ids) {
    const auto* d = corpus.find_biography(id);
    if (!d) continue;
    const std::string text = mask ? mask_text(d->text, lexicon) : d->text;
    for (auto& s : split_sentences(text)) out.push_back({d->doc_id, std::move(s)});
  }
  if (out.empty()) throw MissingBiographyError("artist '" + artist_id + "' has no biography text");
  return out;
}

/// Top passages by similarity to `query`; ties keep document order.
inline std::vector<Passage> retrieve_passages(const std::vector<Passage>& passages, const std::string& query, const HashingEncoder& enc,
                                              std::size_t n) {
  const auto q = enc.encode(query);
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < passages.size(); ++i) scored.emplace_back(HashingEncoder::similarity(enc.encode(passages[i].text), q), i);
  std::stable_sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  scored.resize(std::min(scored.size(), n));
  std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) { return x.second < y.second; });
  std::vector<Passage> out;
  for (const auto& [s, i] : scored) out.push_back(passages[i]);
  return out;
}

inline std::string surname(const std::string& name) {
  const auto toks = tokenize(name);
  return toks.empty() ? name : toks.back();
}

/// Shared-term cues need the term on both sides; explicit references need an
/// influence predicate and the other artist's name in the same passage.
inline std::vector<CueHit> extract_cues(const std::vector<Passage>& source, const std::vector<Passage>& target,
                                        const ArtistProfile& a, const ArtistProfile& b, const CueLexicon& lexicon) {
  std::vector<CueHit> hits;
  auto first_with = [](const std::vector<Passage>& ps, const std::string& term) -> const Passage* {
    for (const auto& p : ps)
      if (contains_phrase(p.text, {term})) return &p;
    return nullptr;
  };
  for (auto cat : {CueCategory::CoLocation, CueCategory::Institution, CueCategory::SharedTerminology, CueCategory::Exhibition}) {
    for (const auto& term : lexicon.terms(cat)) {
      const auto* ps = first_with(source, term);
      const auto* pt = first_with(target, term);
      if (ps && pt) hits.push_back({cat, term, ps->text, ps->doc_id});
    }
  }
  auto explicit_refs = [&](const std::vector<Passage>& ps, const ArtistProfile& other) {
    const std::vector<std::string> names = {other.name, surname(other.name)};
    for (const auto& p : ps) {
      const auto preds = find_phrases(p.text, lexicon.influence_predicates);
      if (preds.empty() || !contains_phrase(p.text, names)) continue;
      hits.push_back({CueCategory::ExplicitReference, lexicon.influence_predicates[preds.front().pattern], p.text, p.doc_id});
    }
  };
  explicit_refs(source, b);
  explicit_refs(target, a);
  return hits;
}

inline ToolRecord biography_reader(const DirectedPair& pair, const Corpus& corpus, const HashingEncoder& enc, const CueLexicon& lexicon,
                                   const BiographyOptions& opt = {}) {
  const auto& a = corpus.artist(pair.source_artist_id);
  const auto& b = corpus.artist(pair.target_artist_id);
  const auto pa = artist_passages(corpus, a.artist_id, lexicon, opt.mask);
  const auto pb = artist_passages(corpus, b.artist_id, lexicon, opt.mask);
  // Each side is queried with the other artist's name plus its opening passage.
  const auto top_a = retrieve_passages(pa, b.name + " " + pb.front().text, enc, opt.top_passages);
  const auto top_b = retrieve_passages(pb, a.name + " " + pa.front().text, enc, opt.top_passages);
  const auto hits = extract_cues(top_a, top_b, a, b, lexicon);
  json passages = json::array();
  for (const auto* side : {&top_a, &top_b})
    for (const auto& p : *side) passages.push_back({{"doc_id", p.doc_id}, {"text", p.text}});
  const double score = pathway_score(hits);
  json body = {{"cues", hits}, {"pathway_score", score}, {"masked", opt.mask}, {"passages", passages}};
  return {ToolName::BiographyReader, pair, std::move(body), score};
}

// ---------------------------------------------------------------------------
// StyleComparator

using SignatureMap = std::map<std::string, ArtistSignature>;

inline ToolRecord style_comparator(const DirectedPair& pair, const SignatureMap& signatures) {
  auto get = [&](const std::string& id) -> const ArtistSignature& {
    auto it = signatures.find(id);
    if (it == signatures.end()) throw MissingSignatureError("no formal signature for artist '" + id + "'");
    return it->second;
  };
  const auto& a = get(pair.source_artist_id);
  const auto& b = get(pair.target_artist_id);
  std::vector<double> deltas(kWolfflinAxes);
  for (std::size_t k = 0; k < kWolfflinAxes; ++k) deltas[k] = b.mu[k] - a.mu[k];
  const double d = manifold_distance(a, b);
  json body = {{"mu_source", a.mu}, {"mu_target", b.mu}, {"distance", d}, {"axis_deltas", deltas}};
  return {ToolName::StyleComparator, pair, std::move(body), std::exp(-d)};
}

// ---------------------------------------------------------------------------
// ConceptRetriever

inline std::set<std::string> artist_codes(const Corpus& corpus, const std::string& artist_id, const CodeSetMap& codes) {
  std::set<std::string> out;
  for (const auto* w : corpus.portfolio(artist_id)) {
    if (auto it = codes.find(w->artwork_id); it != codes.end()) out.insert(it->second.begin(), it->second.end());
  }
  if (out.empty()) throw MissingCodesError("no iconographic codes for artist '" + artist_id + "'");
  return out;
}

/// Distances run over the stored code unions; the ancestor-closed unions are
/// reported alongside.
inline ToolRecord concept_retriever(const DirectedPair& pair, const Corpus& corpus, const CodeSetMap& codes, const ConceptGraph& graph,
                                    DecayConfig decay = {}) {
  const auto ca = artist_codes(corpus, pair.source_artist_id, codes);
  const auto cb = artist_codes(corpus, pair.target_artist_id, codes);
  const auto na = graph.normalize_codes({pair.source_artist_id, ca}, 1).codes;
  const auto nb = graph.normalize_codes({pair.target_artist_id, cb}, 1).codes;
  std::vector<std::string> shared;
  std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(), std::back_inserter(shared));
  const double fwd = graph.directed_set_distance(ca, cb, decay);
  const double bwd = graph.directed_set_distance(cb, ca, decay);
  json body = {{"codes_source", na},       {"codes_target", nb},        {"distance_forward", fwd},
               {"distance_backward", bwd}, {"shared_ancestors", shared}, {"lambda", decay.lambda}};
  return {ToolName::ConceptRetriever, pair, std::move(body), std::exp(-fwd)};
}

// ---------------------------------------------------------------------------
// Registry

/// Everything the tools read. All members are shared read-only.
struct ToolEnvironment {
  std::shared_ptr<const Corpus> corpus;
  std::shared_ptr<const EmbeddingMatrix> visual;
  std::shared_ptr<const ConceptGraph> graph;
  CodeSetMap codes;
  SignatureMap signatures;
  CueLexicon lexicon = default_lexicon();
  HashingEncoder encoder;
  BiographyOptions biography;
  DecayConfig decay;
  int delta_years = 20;
  std::size_t visual_top_matches = 5;
};

class ToolRegistry {
 public:
  using Fn = std::function<ToolRecord(const DirectedPair&, const json& args)>;

  void add(ToolName t, Fn fn) { tools_[t] = std::move(fn); }
  void remove(ToolName t) { tools_.erase(t); }
  bool contains(ToolName t) const { return tools_.count(t) > 0; }
  bool empty() const { return tools_.empty(); }

  /// Registered tools in canonical order.
  std::vector<ToolName> names() const {
    std::vector<ToolName> out;
    for (auto t : kAllTools)
      if (contains(t)) out.push_back(t);
    return out;
  }

  ToolRecord call(ToolName t, const DirectedPair& pair, const json& args = json::object()) const {
    auto it = tools_.find(t);
    if (it == tools_.end()) throw ToolFailure(tool_name(t) + " is not registered");
    return it->second(pair, args);
  }

 private:
  std::map<ToolName, Fn> tools_;
};

inline ToolRegistry make_registry(std::shared_ptr<const ToolEnvironment> env) {
  ToolRegistry r;
  r.add(ToolName::TimelineGate, [env](const DirectedPair& p, const json& args) {
    return timeline_tool(p, *env->corpus, args.value("delta_years", env->delta_years));
  });
  r.add(ToolName::VisualAnalyzer, [env](const DirectedPair& p, const json& args) {
    return visual_analyzer(p, *env->corpus, *env->visual, env->codes, args.value("top_matches", env->visual_top_matches));
  });
  r.add(ToolName::BiographyReader, [env](const DirectedPair& p, const json& args) {
    auto opt = env->biography;
    opt.top_passages = args.value("top_passages", opt.top_passages);
    return biography_reader(p, *env->corpus, env->encoder, env->lexicon, opt);
  });
  r.add(ToolName::StyleComparator, [env](const DirectedPair& p, const json&) { return style_comparator(p, env->signatures); });
  r.add(ToolName::ConceptRetriever, [env](const DirectedPair& p, const json&) {
    return concept_retriever(p, *env->corpus, env->codes, *env->graph, env->decay);
  });
  return r;
}

}  // namespace artjudge
