#pragma once

// Five-axis formal manifold spanned by differenced prompt-pole embeddings.

#include <artjudge/core.hpp>
#include <artjudge/embedding_store.hpp>
#include <artjudge/errors.hpp>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace artjudge {

inline constexpr std::size_t kWolfflinAxes = 5;
inline constexpr double kDegenerateResidual = 1e-8;

/// Opposition names in the default orthogonalization order.
inline const std::array<std::string, kWolfflinAxes> kDefaultOppositions = {
    "linear/painterly", "planar/recessional", "closed/open form", "multiplicity/unity", "absolute/relative clarity"};

struct PoleAxis {
  int axis_index = 1;  // 1-based
  std::string positive_prompt_key;
  std::string negative_prompt_key;
  std::vector<double> positive;
  std::vector<double> negative;
  std::vector<double> raw_direction;
};

/// Builds axis `k` from a pole store keyed "axisK+" / "axisK-".
inline PoleAxis make_pole_axis(int k, const EmbeddingMatrix& poles) {
  PoleAxis a;
  a.axis_index = k;
  a.positive_prompt_key = "axis" + std::to_string(k) + "+";
  a.negative_prompt_key = "axis" + std::to_string(k) + "-";
  auto pos = poles.row(a.positive_prompt_key);
  auto neg = poles.row(a.negative_prompt_key);
  a.positive.assign(pos.begin(), pos.end());
  a.negative.assign(neg.begin(), neg.end());
  a.raw_direction.resize(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    a.raw_direction[i] = static_cast<double>(pos[i]) - static_cast<double>(neg[i]);
  }
  if (norm2(std::span<const double>(a.raw_direction)) == 0.0) {
    throw DegenerateAxisError("axis " + std::to_string(k) + " has identical poles");
  }
  return a;
}

/// Modified Gram-Schmidt with one re-orthogonalization pass. Order is preserved;
/// a residual below 1e-8 marks the inputs linearly dependent.
inline std::vector<std::vector<double>> orthonormalize(const std::vector<std::vector<double>>& directions) {
  std::vector<std::vector<double>> out;
  out.reserve(directions.size());
  for (std::size_t k = 0; k < directions.size(); ++k) {
    std::vector<double> v = directions[k];
    if (!out.empty() && v.size() != out.front().size()) throw DimMismatch("direction " + std::to_string(k) + " has a different dimension");
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : out) {
        const double c = dot(std::span<const double>(v), std::span<const double>(b));
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * b[i];
      }
      if (pass == 0 && norm2(std::span<const double>(v)) < kDegenerateResidual) {
        throw DegenerateAxisError("direction " + std::to_string(k) + " is linearly dependent on earlier axes");
      }
    }
    const double n = norm2(std::span<const double>(v));
    for (auto& x : v) x /= n;
    out.push_back(std::move(v));
  }
  return out;
}

struct WolfflinBasis {
  std::vector<std::vector<double>> axes;  // orthonormal, in construction order
  std::vector<int> source_axis_order;     // axis_index of each entry of `axes`
  std::size_t dim = 0;

  std::vector<std::vector<double>> gram() const {
    std::vector<std::vector<double>> g(axes.size(), std::vector<double>(axes.size()));
    for (std::size_t i = 0; i < axes.size(); ++i)
      for (std::size_t j = 0; j < axes.size(); ++j)
        g[i][j] = dot(std::span<const double>(axes[i]), std::span<const double>(axes[j]));
    return g;
  }
};

/// Orthonormalizes the raw directions in the order given by `order` (indices into
/// `axes`); the default is the listed order.
inline WolfflinBasis build_basis(const std::vector<PoleAxis>& axes, std::vector<std::size_t> order = {}) {
  if (axes.size() != kWolfflinAxes) throw DataError("expected 5 pole axes, got " + std::to_string(axes.size()));
  if (order.empty()) {
    order.resize(axes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  if (order.size() != axes.size()) throw DataError("axis order must be a permutation of the axes");
  std::vector<std::vector<double>> dirs;
  WolfflinBasis b;
  for (auto i : order) {
    dirs.push_back(axes.at(i).raw_direction);
    b.source_axis_order.push_back(axes.at(i).axis_index);
  }
  b.axes = orthonormalize(dirs);
  b.dim = b.axes.front().size();
  return b;
}

struct WolfflinCoord {
  std::array<double, kWolfflinAxes> w{};

  friend bool operator==(const WolfflinCoord&, const WolfflinCoord&) = default;
};

template <typename T>
WolfflinCoord project(std::span<const T> z, const WolfflinBasis& basis) {
  if (z.size() != basis.dim) throw DimMismatch("vector has " + std::to_string(z.size()) + " dims, basis " + std::to_string(basis.dim));
  WolfflinCoord c;
  for (std::size_t k = 0; k < kWolfflinAxes && k < basis.axes.size(); ++k) {
    c.w[k] = dot(z, std::span<const double>(basis.axes[k]));
  }
  return c;
}

inline WolfflinCoord project(const std::vector<double>& z, const WolfflinBasis& basis) {
  return project(std::span<const double>(z), basis);
}

/// Norm of the orthogonal projection onto span(basis).
template <typename T>
double subspace_norm(std::span<const T> z, const WolfflinBasis& basis) {
  const auto c = project(z, basis);
  double s = 0.0;
  for (double x : c.w) s += x * x;
  return std::sqrt(s);
}

/// w_k = sum_x alpha_x <phi_x, b_k>, with the weights summing to one.
inline WolfflinCoord project_patches(const std::vector<std::vector<double>>& patch_field, const std::vector<double>& weights,
                                     const WolfflinBasis& basis) {
  if (patch_field.size() != weights.size()) {
    throw DimMismatch(std::to_string(patch_field.size()) + " patches but " + std::to_string(weights.size()) + " weights");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-6) throw WeightSumError("patch weights sum to " + std::to_string(total));
  WolfflinCoord out;
  for (std::size_t x = 0; x < patch_field.size(); ++x) {
    const auto c = project(patch_field[x], basis);
    for (std::size_t k = 0; k < kWolfflinAxes; ++k) out.w[k] += weights[x] * c.w[k];
  }
  return out;
}

struct TemperatureConfig {
  double kappa = 1.0;
};

/// q_k^+ = softmax over the two raw pole logits <z, f(p+-)> / kappa.
template <typename T>
double pole_probability(std::span<const T> z, const PoleAxis& axis, TemperatureConfig t = {}) {
  if (!(t.kappa > 0.0)) throw DataError("kappa must be positive");
  const double gap = (dot(z, std::span<const double>(axis.positive)) - dot(z, std::span<const double>(axis.negative))) / t.kappa;
  // 1 / (1 + e^-gap), evaluated on the side that cannot overflow
  if (gap >= 0) return 1.0 / (1.0 + std::exp(-gap));
  const double e = std::exp(gap);
  return e / (1.0 + e);
}

struct ArtistSignature {
  std::string artist_id;
  std::array<double, kWolfflinAxes> mu{};
  std::size_t n_works = 0;
};

inline ArtistSignature artist_signature(const std::string& artist_id, std::span<const WolfflinCoord> coords) {
  if (coords.empty()) throw EmptyPortfolioError("artist '" + artist_id + "' has no projected works");
  ArtistSignature s{artist_id, {}, coords.size()};
  for (const auto& c : coords)
    for (std::size_t k = 0; k < kWolfflinAxes; ++k) s.mu[k] += c.w[k];
  for (auto& m : s.mu) m /= static_cast<double>(coords.size());
  return s;
}

inline double manifold_distance(const ArtistSignature& a, const ArtistSignature& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < kWolfflinAxes; ++k) s += (a.mu[k] - b.mu[k]) * (a.mu[k] - b.mu[k]);
  return std::sqrt(s);
}

struct PolePrompt {
  std::string positive;
  std::string negative;
};

/// Five lines of "positive<TAB>negative".
inline std::vector<PolePrompt> parse_pole_prompts(std::istream& in) {
  std::vector<PolePrompt> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("pole prompt line without TAB: '" + line + "'");
    out.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  if (out.size() != kWolfflinAxes) throw DataError("expected 5 pole prompt lines, got " + std::to_string(out.size()));
  return out;
}

inline std::vector<PolePrompt> read_pole_prompts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_pole_prompts(in);
}

/// Pole axes plus the orthonormal basis built from them.
class WolfflinManifold {
 public:
  explicit WolfflinManifold(const EmbeddingMatrix& pole_store, std::vector<std::size_t> order = {}) {
    for (int k = 1; k <= static_cast<int>(kWolfflinAxes); ++k) poles_.push_back(make_pole_axis(k, pole_store));
    basis_ = build_basis(poles_, std::move(order));
  }

  const WolfflinBasis& basis() const { return basis_; }
  const std::vector<PoleAxis>& poles() const { return poles_; }

  template <typename T>
  double pole_probability(std::span<const T> z, int axis_index, TemperatureConfig t = {}) const {
    if (axis_index < 1 || axis_index > static_cast<int>(kWolfflinAxes)) throw DataError("axis index out of range");
    return artjudge::pole_probability(z, poles_[static_cast<std::size_t>(axis_index - 1)], t);
  }

  /// mu_i from the global embeddings of each artist's portfolio.
  std::map<std::string, ArtistSignature> signatures(const Corpus& corpus, const EmbeddingMatrix& visual) const {
    std::map<std::string, ArtistSignature> out;
    for (const auto& a : corpus.artists()) {
      std::vector<WolfflinCoord> coords;
      for (const auto* w : corpus.portfolio(a.artist_id)) coords.push_back(project(visual.row(w->embedding_key), basis_));
      if (!coords.empty()) out.emplace(a.artist_id, artist_signature(a.artist_id, coords));
    }
    return out;
  }

 private:
  std::vector<PoleAxis> poles_;
  WolfflinBasis basis_;
};

}  // namespace artjudge
