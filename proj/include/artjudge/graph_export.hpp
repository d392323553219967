#pragma once

// Verdicts as a property graph: Artist (and optionally Artwork) nodes,
// INFLUENCED edges for every adjudicated pair, YES and NO alike.

#include <artjudge/core.hpp>
#include <artjudge/errors.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace artjudge {

struct GraphNode {
  std::string id;
  std::string label;  // Artist | Artwork
  json properties = json::object();

  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct GraphEdge {
  std::string type;  // INFLUENCED | AUTHORED
  std::string source;
  std::string target;
  json properties = json::object();

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

struct PropertyGraph {
  std::vector<GraphNode> nodes;  // sorted by id
  std::vector<GraphEdge> edges;  // sorted by (type, source, target)

  const GraphEdge* find_edge(std::string_view type, std::string_view source, std::string_view target) const {
    for (const auto& e : edges)
      if (e.type == type && e.source == source && e.target == target) return &e;
    return nullptr;
  }

  friend bool operator==(const PropertyGraph&, const PropertyGraph&) = default;
};

inline void to_json(json& j, const GraphNode& n) { j = json{{"id", n.id}, {"label", n.label}, {"properties", n.properties}}; }
inline void from_json(const json& j, GraphNode& n) {
  j.at("id").get_to(n.id);
  j.at("label").get_to(n.label);
  n.properties = j.value("properties", json::object());
}
inline void to_json(json& j, const GraphEdge& e) {
  j = json{{"type", e.type}, {"source", e.source}, {"target", e.target}, {"properties", e.properties}};
}
inline void from_json(const json& j, GraphEdge& e) {
  j.at("type").get_to(e.type);
  j.at("source").get_to(e.source);
  j.at("target").get_to(e.target);
  e.properties = j.value("properties", json::object());
}
inline void to_json(json& j, const PropertyGraph& g) { j = json{{"nodes", g.nodes}, {"edges", g.edges}}; }
inline void from_json(const json& j, PropertyGraph& g) {
  j.at("nodes").get_to(g.nodes);
  j.at("edges").get_to(g.edges);
}

struct AdjudicatedPair {
  DirectedPair pair;
  VerdictTuple verdict;
};

/// "Kind=score" per claim, or "Kind: summary" when the payload carries one.
inline std::string evidence_summary(const std::vector<EvidenceClaim>& evidence) {
  std::string out;
  for (const auto& c : evidence) {
    if (!out.empty()) out += "; ";
    out += to_string(c.kind);
    if (c.payload.is_object() && c.payload.contains("summary") && c.payload.at("summary").is_string()) {
      out += ": " + c.payload.at("summary").get<std::string>();
    } else if (c.score) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", *c.score);
      out += "=" + std::string(buf);
    }
  }
  return out;
}

/// Later verdicts for the same directed pair replace earlier ones; the edge
/// keeps every trajectory reference in adjudication order.
inline PropertyGraph materialize_graph(const std::vector<AdjudicatedPair>& verdicts, const Corpus& corpus, bool include_artworks = false) {
  PropertyGraph g;
  for (const auto& a : corpus.artists()) {
    g.nodes.push_back({a.artist_id, "Artist", {{"name", a.name}, {"birth_year", a.birth_year}, {"death_year", a.death_year}}});
  }
  if (include_artworks) {
    for (const auto& w : corpus.artworks()) {
      json p = {{"title", w.title}, {"medium", w.medium}, {"artist_id", w.artist_id}};
      if (w.year) p["year"] = *w.year;
      g.nodes.push_back({w.artwork_id, "Artwork", std::move(p)});
      if (corpus.find_artist(w.artist_id)) g.edges.push_back({"AUTHORED", w.artist_id, w.artwork_id, json::object()});
    }
  }

  std::map<std::pair<std::string, std::string>, GraphEdge> influenced;
  for (const auto& [pair, v] : verdicts) {
    for (const auto* id : {&pair.source_artist_id, &pair.target_artist_id}) {
      if (!corpus.find_artist(*id)) throw DanglingVerdictError("verdict for " + pair.key() + " names unknown artist '" + *id + "'");
    }
    std::set<std::string> tools;
    json claims = json::array();
    for (const auto& c : v.evidence) {
      if (!c.source_tool.empty()) tools.insert(c.source_tool);
      json cj = {{"kind", c.kind}, {"source_tool", c.source_tool}};
      if (c.score) cj["score"] = *c.score;
      claims.push_back(std::move(cj));
    }
    auto& e = influenced[{pair.source_artist_id, pair.target_artist_id}];
    json refs = e.properties.is_object() && e.properties.contains("trajectory_refs") ? e.properties.at("trajectory_refs") : json::array();
    if (v.trajectory_ref) refs.push_back(*v.trajectory_ref);
    e.type = "INFLUENCED";
    e.source = pair.source_artist_id;
    e.target = pair.target_artist_id;
    e.properties = {{"verdict", v.verdict},
                    {"confidence", v.confidence},
                    {"influence_score", v.influence_score},
                    {"evidence_summary", evidence_summary(v.evidence)},
                    {"evidence", std::move(claims)},
                    {"tools", tools},
                    {"trajectory_refs", std::move(refs)}};
  }
  for (auto& [k, e] : influenced) g.edges.push_back(std::move(e));

  std::sort(g.nodes.begin(), g.nodes.end(), [](const GraphNode& a, const GraphNode& b) { return std::tie(a.id, a.label) < std::tie(b.id, b.label); });
  std::sort(g.edges.begin(), g.edges.end(),
            [](const GraphEdge& a, const GraphEdge& b) { return std::tie(a.type, a.source, a.target) < std::tie(b.type, b.source, b.target); });
  return g;
}

enum class GraphFormat { GraphJson, PropertyGraphScript, NodeEdgeCsv };

NLOHMANN_JSON_SERIALIZE_ENUM(GraphFormat, {{GraphFormat::GraphJson, "json"}, {GraphFormat::PropertyGraphScript, "cypher"}, {GraphFormat::NodeEdgeCsv, "csv"}})

inline std::string graph_json(const PropertyGraph& g) { return json(g).dump(2) + "\n"; }

inline PropertyGraph parse_graph_json(const std::string& text) {
  try {
    return json::parse(text).get<PropertyGraph>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("graph json: ") + e.what());
  }
}

namespace detail {

// Cypher string and number literals; nested values travel as JSON strings.
inline std::string cypher_literal(const json& v) {
  if (v.is_string() || v.is_number() || v.is_boolean()) return v.dump();
  if (v.is_null()) return "null";
  if (v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_string() || x.is_number(); })) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i].dump();
    return s + "]";
  }
  return json(v.dump()).dump();
}

inline std::string cypher_set(const std::string& var, const json& props) {
  std::string s;
  for (const auto& [k, v] : props.items()) s += (s.empty() ? " SET " : ", ") + var + "." + k + " = " + cypher_literal(v);
  return s;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_value(const json& v) {
  if (v.is_string()) return csv_field(v.get<std::string>());
  if (v.is_null()) return "";
  return csv_field(v.dump());
}

}  // namespace detail

/// MERGE statements; running the script twice leaves the database unchanged.
inline std::string graph_cypher(const PropertyGraph& g) {
  std::string out;
  for (const auto& n : g.nodes) {
    out += "MERGE (n:" + n.label + " {id: " + json(n.id).dump() + "})" + detail::cypher_set("n", n.properties) + ";\n";
  }
  std::map<std::string, std::string> label_of;
  for (const auto& n : g.nodes) label_of[n.id] = n.label;
  for (const auto& e : g.edges) {
    out += "MATCH (a:" + label_of[e.source] + " {id: " + json(e.source).dump() + "}), (b:" + label_of[e.target] + " {id: " + json(e.target).dump() +
           "}) MERGE (a)-[r:" + e.type + "]->(b)" + detail::cypher_set("r", e.properties) + ";\n";
  }
  return out;
}

inline constexpr const char* kNodesCsvHeader = "id,label,properties";
inline constexpr const char* kEdgesCsvHeader = "type,source,target,verdict,confidence,influence_score,tools,trajectory_refs,evidence_summary";

inline std::string nodes_csv(const PropertyGraph& g) {
  std::string out = std::string(kNodesCsvHeader) + "\n";
  for (const auto& n : g.nodes) out += detail::csv_field(n.id) + "," + n.label + "," + detail::csv_field(n.properties.dump()) + "\n";
  return out;
}

inline std::string edges_csv(const PropertyGraph& g) {
  std::string out = std::string(kEdgesCsvHeader) + "\n";
  auto prop = [](const GraphEdge& e, const char* k) { return e.properties.contains(k) ? detail::csv_value(e.properties.at(k)) : std::string(); };
  for (const auto& e : g.edges) {
    out += e.type + "," + detail::csv_field(e.source) + "," + detail::csv_field(e.target) + "," + prop(e, "verdict") + "," + prop(e, "confidence") +
           "," + prop(e, "influence_score") + "," + prop(e, "tools") + "," + prop(e, "trajectory_refs") + "," + prop(e, "evidence_summary") + "\n";
  }
  return out;
}

/// Writes into `dir`: graph.json, graph.cypher, or nodes.csv + edges.csv.
inline std::vector<std::filesystem::path> export_graph(const PropertyGraph& g, GraphFormat format, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  switch (format) {
    case GraphFormat::GraphJson:
      write_text_file(dir / "graph.json", graph_json(g));
      return {dir / "graph.json"};
    case GraphFormat::PropertyGraphScript:
      write_text_file(dir / "graph.cypher", graph_cypher(g));
      return {dir / "graph.cypher"};
    case GraphFormat::NodeEdgeCsv:
      write_text_file(dir / "nodes.csv", nodes_csv(g));
      write_text_file(dir / "edges.csv", edges_csv(g));
      return {dir / "nodes.csv", dir / "edges.csv"};
  }
  return {};
}

/// Adjudicated pairs from verdicts.jsonl: one pair object per line carrying its
/// verdict under "outcome"; lines without one are skipped.
inline std::vector<AdjudicatedPair> read_verdicts_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<AdjudicatedPair> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      if (!j.contains("outcome") || j.at("outcome").is_null()) continue;
      out.push_back({j.get<DirectedPair>(), j.at("outcome").get<VerdictTuple>()});
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace artjudge
