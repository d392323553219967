#pragma once

// Nearest-neighbour retrieval over visual embeddings (exact scan or a
// hierarchical small-world graph), the chronology gate, and candidate-pair
// generation.

#include <artjudge/core.hpp>
#include <artjudge/embedding_store.hpp>
#include <artjudge/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace artjudge {

// ---------------------------------------------------------------------------
// Chronology gate

struct GateResult {
  bool pass = false;
  std::string reason;
};

/// Source must be born no later than the target and still alive at
/// target.birth - delta.
inline GateResult timeline_gate(Lifespan source, Lifespan target, int delta_years = 20) {
  if (source.birth > target.birth) return {false, "precedence violated"};
  if (source.death < target.birth - delta_years) return {false, "death before exposure window"};
  return {true, "pass"};
}

// ---------------------------------------------------------------------------
// Index

enum class IndexBackend { ExactScan, SmallWorldGraph };

NLOHMANN_JSON_SERIALIZE_ENUM(IndexBackend, {{IndexBackend::ExactScan, "exact"}, {IndexBackend::SmallWorldGraph, "hnsw"}})

struct IndexParams {
  std::size_t neighbor_degree = 32;     // M
  std::size_t construction_breadth = 200;  // efConstruction
  std::size_t query_breadth = 64;       // efSearch
  std::uint64_t seed = 0x5eed;
};

struct Neighbor {
  std::string id;
  double cosine = 0.0;
};

namespace detail {

inline float dot_f(const float* a, const float* b, std::size_t n) {
  float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (int k = 0; k < 8; ++k) acc[k] += a[i + k] * b[i + k];
  float s = 0;
  for (; i < n; ++i) s += a[i] * b[i];
  return s + ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
}

inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Cosine top-K index bound to an l2-normalized matrix. Covers every row exactly
/// once; immutable after construction so concurrent queries are safe.
class VectorIndex {
 public:
  VectorIndex(std::shared_ptr<const EmbeddingMatrix> matrix, IndexBackend backend, IndexParams params = {})
      : matrix_(std::move(matrix)), backend_(backend), params_(params) {
    if (!matrix_ || matrix_->empty()) throw EmptyMatrixError("cannot index an empty matrix");
    if (!matrix_->normalized()) throw DataError("index requires an l2-normalized matrix");
    if (params_.neighbor_degree < 2) throw DataError("neighbor degree must be at least 2");
    if (backend_ == IndexBackend::SmallWorldGraph) build_graph();
  }

  IndexBackend backend() const { return backend_; }
  const IndexParams& params() const { return params_; }
  const EmbeddingMatrix& matrix() const { return *matrix_; }
  std::shared_ptr<const EmbeddingMatrix> matrix_handle() const { return matrix_; }
  std::size_t size() const { return matrix_->count(); }

  /// Highest-cosine rows, descending; ties broken by id. Returns min(K, count) items.
  template <typename T>
  std::vector<Neighbor> query_topk(std::span<const T> query, std::size_t k) const {
    return query_topk(query, k, params_.query_breadth);
  }

  template <typename T>
  std::vector<Neighbor> query_topk(std::span<const T> query, std::size_t k, std::size_t ef) const {
    if (query.size() != matrix_->dim()) {
      throw DimMismatch("query has " + std::to_string(query.size()) + " dims, index " + std::to_string(matrix_->dim()));
    }
    if (k == 0) throw DataError("K must be at least 1");
    std::vector<float> q(query.begin(), query.end());
    std::vector<std::uint32_t> rows;
    if (backend_ == IndexBackend::ExactScan) {
      rows.resize(size());
      for (std::uint32_t i = 0; i < rows.size(); ++i) rows[i] = i;
    } else {
      rows = graph_search(q.data(), std::max(ef, k));
    }
    std::vector<Neighbor> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back({matrix_->ids()[r], dot(std::span<const float>(q), matrix_->row(r))});
    const auto cmp = [](const Neighbor& a, const Neighbor& b) { return a.cosine != b.cosine ? a.cosine > b.cosine : a.id < b.id; };
    const std::size_t n = std::min(k, out.size());
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n), out.end(), cmp);
    out.resize(n);
    return out;
  }

  /// Graph statistics for diagnostics.
  json stats() const {
    json s = {{"backend", backend_}, {"count", size()}, {"dim", matrix_->dim()}};
    if (backend_ == IndexBackend::SmallWorldGraph) {
      std::size_t edges = 0;
      for (const auto& n : links_) edges += n.front().size();
      s["max_level"] = max_level_;
      s["mean_degree_level0"] = static_cast<double>(edges) / static_cast<double>(size());
      s["M"] = params_.neighbor_degree;
      s["efConstruction"] = params_.construction_breadth;
      s["efSearch"] = params_.query_breadth;
    }
    return s;
  }

  /// Serializes the graph ("AJIX"); the bound matrix is stored separately.
  std::string encode_graph() const {
    std::string out = "AJIX";
    auto put = [&](std::uint64_t v, int b) { detail::put_le(out, v, b); };
    put(1, 2);
    put(static_cast<std::uint64_t>(backend_), 1);
    put(params_.neighbor_degree, 4);
    put(params_.construction_breadth, 4);
    put(params_.query_breadth, 4);
    put(size(), 8);
    if (backend_ == IndexBackend::SmallWorldGraph) {
      put(entry_, 4);
      put(static_cast<std::uint64_t>(max_level_), 4);
      for (const auto& levels : links_) {
        put(levels.size(), 4);
        for (const auto& l : levels) {
          put(l.size(), 4);
          for (auto n : l) put(n, 4);
        }
      }
    }
    return out;
  }

  static VectorIndex decode_graph(std::string_view bytes, std::shared_ptr<const EmbeddingMatrix> matrix) {
    detail::ByteCursor in(bytes);
    if (in.take(4, "magic") != "AJIX") throw FormatError("bad magic");
    if (in.get_le(2, "version") != 1) throw FormatError("unsupported index version");
    VectorIndex idx;
    idx.matrix_ = std::move(matrix);
    idx.backend_ = static_cast<IndexBackend>(in.get_le(1, "backend"));
    idx.params_.neighbor_degree = in.get_le(4, "params");
    idx.params_.construction_breadth = in.get_le(4, "params");
    idx.params_.query_breadth = in.get_le(4, "params");
    const auto count = in.get_le(8, "count");
    if (!idx.matrix_ || count != idx.matrix_->count()) throw FormatError("index count does not match the bound matrix");
    if (idx.backend_ == IndexBackend::SmallWorldGraph) {
      idx.entry_ = static_cast<std::uint32_t>(in.get_le(4, "entry"));
      idx.max_level_ = static_cast<int>(in.get_le(4, "max level"));
      idx.links_.resize(count);
      for (auto& levels : idx.links_) {
        levels.resize(in.get_le(4, "levels"));
        for (auto& l : levels) {
          l.resize(in.get_le(4, "links"));
          for (auto& n : l) {
            n = static_cast<std::uint32_t>(in.get_le(4, "links"));
            if (n >= count) throw FormatError("link out of range");
          }
        }
      }
    }
    return idx;
  }

 private:
  VectorIndex() = default;

  using Scored = std::pair<float, std::uint32_t>;  // (distance, row)

  float distance(const float* q, std::uint32_t row) const {
    return 1.0f - detail::dot_f(q, matrix_->data().data() + static_cast<std::size_t>(row) * matrix_->dim(), matrix_->dim());
  }

  std::size_t max_links(int level) const { return level == 0 ? 2 * params_.neighbor_degree : params_.neighbor_degree; }

  /// Beam search on one layer; returns up to `ef` closest rows, nearest first.
  std::vector<Scored> search_layer(const float* q, const std::vector<std::uint32_t>& entries, std::size_t ef, int level,
                                   std::vector<char>& visited) const {
    std::priority_queue<Scored, std::vector<Scored>, std::greater<>> frontier;
    std::priority_queue<Scored> best;
    for (auto e : entries) {
      if (visited[e]) continue;
      visited[e] = 1;
      const float d = distance(q, e);
      frontier.emplace(d, e);
      best.emplace(d, e);
    }
    while (best.size() > ef) best.pop();
    while (!frontier.empty()) {
      const auto [d, n] = frontier.top();
      if (best.size() >= ef && d > best.top().first) break;
      frontier.pop();
      if (static_cast<int>(links_[n].size()) <= level) continue;
      for (auto m : links_[n][static_cast<std::size_t>(level)]) {
        if (visited[m]) continue;
        visited[m] = 1;
        const float dm = distance(q, m);
        if (best.size() < ef || dm < best.top().first) {
          frontier.emplace(dm, m);
          best.emplace(dm, m);
          if (best.size() > ef) best.pop();
        }
      }
    }
    std::vector<Scored> out;
    out.reserve(best.size());
    while (!best.empty()) {
      out.push_back(best.top());
      best.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

  /// Diversity heuristic: keep a candidate only if it is closer to the base
  /// than to every neighbour already kept; backfill with the pruned ones.
  std::vector<std::uint32_t> select_neighbors(const std::vector<Scored>& sorted_candidates, std::size_t m) const {
    std::vector<std::uint32_t> kept;
    std::vector<std::uint32_t> pruned;
    const auto* base = matrix_->data().data();
    const auto dim = matrix_->dim();
    for (const auto& [d, c] : sorted_candidates) {
      if (kept.size() >= m) break;
      bool good = true;
      for (auto k : kept) {
        if (distance(base + static_cast<std::size_t>(c) * dim, k) < d) {
          good = false;
          break;
        }
      }
      (good ? kept : pruned).push_back(c);
    }
    for (auto p : pruned) {
      if (kept.size() >= m) break;
      kept.push_back(p);
    }
    return kept;
  }

  void build_graph() {
    const auto n = static_cast<std::uint32_t>(size());
    const double ml = 1.0 / std::log(static_cast<double>(params_.neighbor_degree));
    std::mt19937_64 rng(params_.seed);
    links_.assign(n, {});
    std::vector<char> visited(n, 0);
    const auto* base = matrix_->data().data();
    const auto dim = matrix_->dim();
    for (std::uint32_t i = 0; i < n; ++i) {
      const double u = std::max(detail::unit_uniform(rng), 1e-300);
      const int level = static_cast<int>(std::floor(-std::log(u) * ml));
      links_[i].resize(static_cast<std::size_t>(level) + 1);
      if (i == 0) {
        entry_ = 0;
        max_level_ = level;
        continue;
      }
      const float* q = base + static_cast<std::size_t>(i) * dim;
      std::vector<std::uint32_t> entries{entry_};
      for (int l = max_level_; l > level; --l) {
        std::fill(visited.begin(), visited.end(), 0);
        entries = {search_layer(q, entries, 1, l, visited).front().second};
      }
      for (int l = std::min(level, max_level_); l >= 0; --l) {
        std::fill(visited.begin(), visited.end(), 0);
        const auto cands = search_layer(q, entries, params_.construction_breadth, l, visited);
        const auto chosen = select_neighbors(cands, params_.neighbor_degree);
        auto& mine = links_[i][static_cast<std::size_t>(l)];
        mine = chosen;
        for (auto nb : chosen) {
          auto& theirs = links_[nb][static_cast<std::size_t>(l)];
          theirs.push_back(i);
          if (theirs.size() > max_links(l)) {
            const float* nq = base + static_cast<std::size_t>(nb) * dim;
            std::vector<Scored> scored;
            scored.reserve(theirs.size());
            for (auto t : theirs) scored.emplace_back(distance(nq, t), t);
            std::sort(scored.begin(), scored.end());
            theirs = select_neighbors(scored, max_links(l));
          }
        }
        entries.clear();
        for (const auto& c : cands) entries.push_back(c.second);
      }
      if (level > max_level_) {
        max_level_ = level;
        entry_ = i;
      }
    }
  }

  std::vector<std::uint32_t> graph_search(const float* q, std::size_t ef) const {
    std::vector<char> visited(size(), 0);
    std::vector<std::uint32_t> entries{entry_};
    for (int l = max_level_; l > 0; --l) {
      std::fill(visited.begin(), visited.end(), 0);
      entries = {search_layer(q, entries, 1, l, visited).front().second};
    }
    std::fill(visited.begin(), visited.end(), 0);
    std::vector<std::uint32_t> out;
    for (const auto& s : search_layer(q, entries, ef, 0, visited)) out.push_back(s.second);
    return out;
  }

  std::shared_ptr<const EmbeddingMatrix> matrix_;
  IndexBackend backend_ = IndexBackend::ExactScan;
  IndexParams params_;
  std::vector<std::vector<std::vector<std::uint32_t>>> links_;  // node -> level -> neighbours
  std::uint32_t entry_ = 0;
  int max_level_ = 0;
};

inline VectorIndex build_index(std::shared_ptr<const EmbeddingMatrix> matrix, IndexBackend backend, IndexParams params = {}) {
  return VectorIndex(std::move(matrix), backend, params);
}

/// Fraction of the exact top-K found by the approximate index, averaged over queries.
inline double recall_at_k(const VectorIndex& approx, const VectorIndex& exact, const std::vector<std::vector<float>>& queries, std::size_t k) {
  double total = 0.0;
  for (const auto& q : queries) {
    const auto truth = exact.query_topk(std::span<const float>(q), k);
    const auto got = approx.query_topk(std::span<const float>(q), k);
    std::size_t hit = 0;
    for (const auto& t : truth) {
      hit += std::any_of(got.begin(), got.end(), [&](const Neighbor& g) { return g.id == t.id; }) ? 1 : 0;
    }
    total += static_cast<double>(hit) / static_cast<double>(truth.size());
  }
  return queries.empty() ? 0.0 : total / static_cast<double>(queries.size());
}

// ---------------------------------------------------------------------------
// Candidate generation

struct CandidateConfig {
  std::size_t top_k = 10;
  double gamma_v = 0.70;
  int delta_years = 20;
};

struct CandidatePair {
  std::string source_artist_id;
  std::string target_artist_id;
  double seed_similarity = 0.0;
  std::string witness_source;  // artwork ids
  std::string witness_target;
};

inline void to_json(json& j, const CandidatePair& c) {
  j = json{{"source", c.source_artist_id},
           {"target", c.target_artist_id},
           {"seed_similarity", c.seed_similarity},
           {"witness", json::array({c.witness_source, c.witness_target})}};
}
inline void from_json(const json& j, CandidatePair& c) {
  j.at("source").get_to(c.source_artist_id);
  j.at("target").get_to(c.target_artist_id);
  j.at("seed_similarity").get_to(c.seed_similarity);
  c.witness_source = j.at("witness").at(0).get<std::string>();
  c.witness_target = j.at("witness").at(1).get<std::string>();
}

/// Promotes cross-artist top-K neighbours with cosine >= gamma_v whose direction
/// passes the timeline gate. One entry per directed pair, carrying the maximum
/// witnessed cosine. Sorted by (source, target).
inline std::vector<CandidatePair> generate_candidates(const Corpus& corpus, const VectorIndex& index, const CandidateConfig& cfg) {
  std::map<std::string, const ArtworkRecord*> by_key;
  for (const auto& w : corpus.artworks()) by_key.emplace(w.embedding_key, &w);
  std::map<std::pair<std::string, std::string>, CandidatePair> pairs;
  auto offer = [&](const ArtworkRecord& src, const ArtworkRecord& tgt, double s) {
    const auto& a = corpus.artist(src.artist_id);
    const auto& b = corpus.artist(tgt.artist_id);
    if (!timeline_gate(a.lifespan(), b.lifespan(), cfg.delta_years).pass) return;
    CandidatePair c{a.artist_id, b.artist_id, s, src.artwork_id, tgt.artwork_id};
    auto [it, fresh] = pairs.emplace(std::make_pair(a.artist_id, b.artist_id), c);
    if (fresh) return;
    auto& cur = it->second;
    if (s > cur.seed_similarity ||
        (s == cur.seed_similarity && std::tie(c.witness_source, c.witness_target) < std::tie(cur.witness_source, cur.witness_target))) {
      cur = c;
    }
  };
  const auto& m = index.matrix();
  for (const auto& w : corpus.artworks()) {
    if (!m.contains(w.embedding_key)) continue;
    for (const auto& nb : index.query_topk(m.row(w.embedding_key), cfg.top_k)) {
      auto it = by_key.find(nb.id);
      if (it == by_key.end()) continue;
      const auto& other = *it->second;
      if (other.artist_id == w.artist_id || nb.cosine < cfg.gamma_v) continue;
      offer(w, other, nb.cosine);
      offer(other, w, nb.cosine);
    }
  }
  std::vector<CandidatePair> out;
  out.reserve(pairs.size());
  for (auto& [k, v] : pairs) out.push_back(std::move(v));
  return out;
}

struct SeedMatch {
  double cosine = -1.0;
  std::string source_artwork;
  std::string target_artwork;
};

/// s_v* over the full portfolio cross-product (verification mode).
inline SeedMatch exact_seed_similarity(const Corpus& corpus, const EmbeddingMatrix& visual, const std::string& source,
                                       const std::string& target) {
  SeedMatch best;
  bool any = false;
  for (const auto* a : corpus.portfolio(source)) {
    for (const auto* b : corpus.portfolio(target)) {
      const double s = cosine(visual.row(a->embedding_key), visual.row(b->embedding_key));
      if (!any || s > best.cosine) best = {s, a->artwork_id, b->artwork_id};
      any = true;
    }
  }
  if (!any) throw EmptyPortfolioError("no artworks to compare for " + source + "->" + target);
  return best;
}

inline std::string candidates_to_jsonl(const std::vector<CandidatePair>& cands) {
  std::string out;
  for (const auto& c : cands) out += json(c).dump() + "\n";
  return out;
}

}  // namespace artjudge
