#pragma once

// ICONCLASS concept DAG: parsing, hierarchical normalization, topology-aware
// code distances and alignment scoring.

#include <artjudge/core.hpp>
#include <artjudge/errors.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace artjudge {

struct DecayConfig {
  double lambda = 0.8;

  void validate() const {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw DataError("decay lambda must lie in (0, 1]");
  }
};

struct CodeSet {
  std::string artwork_id;
  std::set<std::string> codes;

  friend bool operator==(const CodeSet&, const CodeSet&) = default;
};

inline void to_json(json& j, const CodeSet& c) { j = json{{"artwork_id", c.artwork_id}, {"codes", c.codes}}; }
inline void from_json(const json& j, CodeSet& c) {
  j.at("artwork_id").get_to(c.artwork_id);
  c.codes = j.at("codes").get<std::set<std::string>>();
}

enum class AlignmentLevel { ExactLeaf, AncestorL3 };

struct AlignmentScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Concept DAG with a virtual super-root (depth 0) above every top-level code.
class ConceptGraph {
 public:
  using Edge = std::pair<std::string, std::string>;  // (child, parent)

  ConceptGraph() : ConceptGraph(std::vector<std::string>{}, {}) {}

  /// Parents are inferred from the longest proper code prefix present in the
  /// list; `extra_edges` add non-prefix parents. Codes with no parent hang off
  /// the virtual root.
  ConceptGraph(std::vector<std::string> codes, const std::vector<Edge>& extra_edges) {
    std::sort(codes.begin(), codes.end());
    codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
    codes_.push_back(std::string(kRootCode));
    for (auto& c : codes) {
      if (c.empty()) continue;
      index_.emplace(c, codes_.size());
      codes_.push_back(std::move(c));
    }
    parents_.assign(codes_.size(), {});
    for (std::size_t i = 1; i < codes_.size(); ++i) {
      const auto& c = codes_[i];
      for (std::size_t len = c.size() - 1; len > 0; --len) {
        if (auto it = index_.find(c.substr(0, len)); it != index_.end()) {
          parents_[i].push_back(it->second);
          break;
        }
      }
    }
    for (const auto& [child, parent] : extra_edges) {
      auto ci = index_.find(child);
      auto pi = index_.find(parent);
      if (ci == index_.end()) throw OrphanCodeError("edge child '" + child + "' is not a listed code");
      if (pi == index_.end()) throw OrphanCodeError("edge parent '" + parent + "' of '" + child + "' is not a listed code");
      auto& ps = parents_[ci->second];
      if (std::find(ps.begin(), ps.end(), pi->second) == ps.end()) ps.push_back(pi->second);
    }
    check_acyclic();
    for (std::size_t i = 1; i < codes_.size(); ++i) {
      if (parents_[i].empty()) parents_[i].push_back(0);
      std::sort(parents_[i].begin(), parents_[i].end());
    }
    compute_depths();
  }

  static constexpr std::string_view kRootCode = "";

  std::size_t size() const { return codes_.size() - 1; }  // excludes the virtual root
  bool contains(std::string_view code) const { return index_.count(std::string(code)) > 0; }
  const std::vector<std::string>& codes_with_root() const { return codes_; }

  int depth(std::string_view code) const { return depth_[id(code)]; }

  std::vector<std::string> parents(std::string_view code) const {
    std::vector<std::string> out;
    for (auto p : parents_[id(code)]) out.push_back(codes_[p]);
    return out;
  }

  /// Ancestors (including the code itself and the virtual root) with the
  /// minimum number of upward hops to reach each.
  std::map<std::string, int> ancestors(std::string_view code) const {
    std::map<std::string, int> out;
    for (const auto& [n, h] : up_hops(id(code))) out.emplace(codes_[n], h);
    return out;
  }

  /// Deepest common ancestor; ties go to the lexicographically smallest code.
  std::string lca(std::string_view a, std::string_view b) const {
    return codes_[index_of_lca(up_hops(id(a)), up_hops(id(b)))];
  }

  /// (hops(a -> LCA) + hops(LCA -> b)) * lambda^depth(LCA).
  double code_distance(std::string_view a, std::string_view b, DecayConfig decay = {}) const {
    decay.validate();
    const auto ia = id(a);
    const auto ib = id(b);
    if (ia == ib) return 0.0;
    const auto ua = up_hops(ia);
    const auto ub = up_hops(ib);
    const auto l = index_of_lca(ua, ub);
    return static_cast<double>(ua.at(l) + ub.at(l)) * std::pow(decay.lambda, depth_[l]);
  }

  /// Mean over c in `from` of the minimum distance to any code in `to`.
  double directed_set_distance(const std::set<std::string>& from, const std::set<std::string>& to, DecayConfig decay = {}) const {
    if (from.empty() || to.empty()) throw EmptySetError("directed set distance needs two nonempty code sets");
    double total = 0.0;
    for (const auto& c : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& d : to) best = std::min(best, code_distance(c, d, decay));
      total += best;
    }
    return total / static_cast<double>(from.size());
  }

  /// Input codes plus every ancestor at depth >= min_level.
  CodeSet normalize_codes(const CodeSet& in, int min_level) const {
    CodeSet out{in.artwork_id, in.codes};
    for (const auto& c : in.codes) {
      for (const auto& [n, h] : up_hops(id(c))) {
        if (n != 0 && depth_[n] >= min_level) out.codes.insert(codes_[n]);
      }
    }
    return out;
  }

  /// Equal codes, or codes sharing an ancestor-or-self at depth >= level.
  bool ancestor_match(std::string_view a, std::string_view b, int level) const {
    if (a == b) return true;
    const auto ua = up_hops(id(a));
    for (const auto& [n, h] : up_hops(id(b))) {
      if (n != 0 && depth_[n] >= level && ua.count(n)) return true;
    }
    return false;
  }

 private:
  std::size_t id(std::string_view code) const {
    auto it = index_.find(std::string(code));
    if (it == index_.end()) throw UnknownCodeError("'" + std::string(code) + "' is not in the concept graph");
    return it->second;
  }

  std::map<std::size_t, int> up_hops(std::size_t start) const {
    std::map<std::size_t, int> seen{{start, 0}};
    std::deque<std::size_t> q{start};
    while (!q.empty()) {
      auto n = q.front();
      q.pop_front();
      for (auto p : parents_[n]) {
        if (seen.emplace(p, seen[n] + 1).second) q.push_back(p);
      }
    }
    return seen;
  }

  std::size_t index_of_lca(const std::map<std::size_t, int>& ua, const std::map<std::size_t, int>& ub) const {
    std::size_t best = 0;
    for (const auto& [n, h] : ua) {
      if (!ub.count(n) || n == 0) continue;
      if (best == 0 || depth_[n] > depth_[best] || (depth_[n] == depth_[best] && codes_[n] < codes_[best])) best = n;
    }
    return best;
  }

  void check_acyclic() const {
    enum : char { White, Grey, Black };
    std::vector<char> color(codes_.size(), White);
    for (std::size_t s = 1; s < codes_.size(); ++s) {
      if (color[s] != White) continue;
      std::vector<std::pair<std::size_t, std::size_t>> stack{{s, 0}};
      color[s] = Grey;
      while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < parents_[n].size()) {
          auto p = parents_[n][next++];
          if (color[p] == Grey) throw CycleError("cycle through '" + codes_[p] + "'");
          if (color[p] == White) {
            color[p] = Grey;
            stack.emplace_back(p, 0);
          }
        } else {
          color[n] = Black;
          stack.pop_back();
        }
      }
    }
  }

  void compute_depths() {
    std::vector<std::vector<std::size_t>> children(codes_.size());
    for (std::size_t i = 1; i < codes_.size(); ++i)
      for (auto p : parents_[i]) children[p].push_back(i);
    depth_.assign(codes_.size(), -1);
    depth_[0] = 0;
    std::deque<std::size_t> q{0};
    while (!q.empty()) {
      auto n = q.front();
      q.pop_front();
      for (auto c : children[n]) {
        if (depth_[c] < 0) {
          depth_[c] = depth_[n] + 1;
          q.push_back(c);
        }
      }
    }
    for (std::size_t i = 1; i < codes_.size(); ++i) {
      if (depth_[i] < 0) throw OrphanCodeError("'" + codes_[i] + "' does not reach the root");
    }
  }

  std::vector<std::string> codes_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<int> depth_;
};

/// One code per line; blank lines and '#' comments are skipped.
inline std::vector<std::string> parse_code_list(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    auto e = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(b, e - b + 1));
  }
  return out;
}

/// One "child parent" pair per line.
inline std::vector<ConceptGraph::Edge> parse_edge_list(std::istream& in) {
  std::vector<ConceptGraph::Edge> out;
  std::string line;
  while (std::getline(in, line)) {
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    std::istringstream ls(line);
    std::string child, parent;
    if (!(ls >> child >> parent)) throw DataError("malformed edge line '" + line + "'");
    out.emplace_back(child, parent);
  }
  return out;
}

inline ConceptGraph parse_graph(std::istream& codes, std::istream* edges = nullptr) {
  auto list = parse_code_list(codes);
  std::vector<ConceptGraph::Edge> e;
  if (edges) e = parse_edge_list(*edges);
  return ConceptGraph(std::move(list), e);
}

inline ConceptGraph read_graph(const std::filesystem::path& codes_path, const std::filesystem::path& edges_path = {}) {
  std::ifstream codes(codes_path);
  if (!codes) throw IoError("cannot open " + codes_path.string());
  if (edges_path.empty()) return parse_graph(codes);
  std::ifstream edges(edges_path);
  if (!edges) throw IoError("cannot open " + edges_path.string());
  return parse_graph(codes, &edges);
}

inline std::vector<CodeSet> read_code_sets(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<CodeSet> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line).get<CodeSet>());
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }
  return out;
}

inline std::string code_sets_to_jsonl(const std::vector<CodeSet>& sets) {
  std::string out;
  for (const auto& s : sets) out += json(s).dump() + "\n";
  return out;
}

inline void validate_code_set(const CodeSet& s, const ConceptGraph& g) {
  for (const auto& c : s.codes) {
    if (!g.contains(c)) throw UnknownCodeError("artwork '" + s.artwork_id + "' carries unknown code '" + c + "'");
  }
}

/// Micro-averaged precision/recall/F1 of predicted against gold code sets.
inline AlignmentScores alignment_metrics(const std::vector<CodeSet>& predicted, const std::vector<CodeSet>& gold,
                                         const ConceptGraph& g, AlignmentLevel level, int ancestor_level = 3) {
  if (predicted.size() != gold.size()) throw MisalignedListsError("predicted and gold lists differ in length");
  auto match = [&](const std::string& a, const std::string& b) {
    return level == AlignmentLevel::ExactLeaf ? a == b : g.ancestor_match(a, b, ancestor_level);
  };
  std::size_t pred_total = 0, pred_hit = 0, gold_total = 0, gold_hit = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i].artwork_id != gold[i].artwork_id) {
      throw MisalignedListsError("position " + std::to_string(i) + ": '" + predicted[i].artwork_id + "' vs '" + gold[i].artwork_id + "'");
    }
    for (const auto& p : predicted[i].codes) {
      ++pred_total;
      if (std::any_of(gold[i].codes.begin(), gold[i].codes.end(), [&](const auto& q) { return match(p, q); })) ++pred_hit;
    }
    for (const auto& q : gold[i].codes) {
      ++gold_total;
      if (std::any_of(predicted[i].codes.begin(), predicted[i].codes.end(), [&](const auto& p) { return match(p, q); })) ++gold_hit;
    }
  }
  AlignmentScores s;
  s.precision = pred_total ? static_cast<double>(pred_hit) / static_cast<double>(pred_total) : 0.0;
  s.recall = gold_total ? static_cast<double>(gold_hit) / static_cast<double>(gold_total) : 0.0;
  s.f1 = (s.precision + s.recall) > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

}  // namespace artjudge
