#pragma once

// Id-keyed float matrices and the "AJEM" on-disk format.
//
// Layout (all integers little-endian):
//   "AJEM"            4 bytes magic
//   u16 version       currently 1
//   u32 dim
//   u64 count
//   count x { u32 byte_length, UTF-8 bytes }   id table
//   count x dim f32   row-major payload

#include <artjudge/errors.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace artjudge {

inline constexpr std::uint16_t kAjemVersion = 1;
inline constexpr double kUnitNormTolerance = 1e-4;

/// Dot product with 64-bit accumulation.
template <typename A, typename B>
double dot(std::span<const A> a, std::span<const B> b) {
  if (a.size() != b.size()) {
    throw DimMismatch("dot of " + std::to_string(a.size()) + "-d and " + std::to_string(b.size()) + "-d vectors");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

template <typename T>
double norm2(std::span<const T> a) {
  return std::sqrt(dot(a, a));
}

/// Cosine similarity, clamped into [-1, 1].
template <typename A, typename B>
double cosine(std::span<const A> a, std::span<const B> b) {
  if (a.size() != b.size()) {
    throw DimMismatch("cosine of " + std::to_string(a.size()) + "-d and " + std::to_string(b.size()) + "-d vectors");
  }
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na == 0.0 || nb == 0.0) throw ZeroVectorError("cosine with a zero vector");
  const double c = dot(a, b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  return cosine(std::span<const double>(a), std::span<const double>(b));
}

class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  /// `data` is count x dim, row-major. Throws on shape mismatch or duplicate ids.
  EmbeddingMatrix(std::uint32_t dim, std::vector<std::string> ids, std::vector<float> data)
      : dim_(dim), ids_(std::move(ids)), data_(std::move(data)) {
    if (dim_ == 0) throw FormatError("dim must be positive");
    if (data_.size() != ids_.size() * static_cast<std::size_t>(dim_)) {
      throw DimMismatch("payload holds " + std::to_string(data_.size()) + " floats, expected " +
                        std::to_string(ids_.size()) + " x " + std::to_string(dim_));
    }
    index_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (!index_.emplace(ids_[i], i).second) throw FormatError("duplicate id '" + ids_[i] + "'");
    }
    normalized_ = rows_unit_norm();
  }

  static EmbeddingMatrix from_rows(std::uint32_t dim, const std::vector<std::pair<std::string, std::vector<float>>>& rows) {
    std::vector<std::string> ids;
    std::vector<float> data;
    ids.reserve(rows.size());
    data.reserve(rows.size() * dim);
    for (const auto& [id, row] : rows) {
      if (row.size() != dim) throw DimMismatch("row '" + id + "' has " + std::to_string(row.size()) + " entries, expected " + std::to_string(dim));
      ids.push_back(id);
      data.insert(data.end(), row.begin(), row.end());
    }
    return EmbeddingMatrix(dim, std::move(ids), std::move(data));
  }

  std::uint32_t dim() const noexcept { return dim_; }
  std::size_t count() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  bool normalized() const noexcept { return normalized_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<float>& data() const noexcept { return data_; }

  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

  std::optional<std::size_t> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(std::string_view id) const { return find(id).has_value(); }

  std::span<const float> row(std::string_view id) const {
    auto i = find(id);
    if (!i) throw DataError("embedding id '" + std::string(id) + "' not in store");
    return row(*i);
  }

  friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    return a.dim_ == b.dim_ && a.ids_ == b.ids_ &&
           a.data_.size() == b.data_.size() &&
           std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(float)) == 0;
  }

 private:
  bool rows_unit_norm() const {
    for (std::size_t i = 0; i < count(); ++i) {
      if (std::abs(norm2(row(i)) - 1.0) > kUnitNormTolerance) return false;
    }
    return true;
  }

  std::uint32_t dim_ = 1;
  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
  bool normalized_ = true;
};

namespace detail {

inline void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class ByteCursor {
 public:
  explicit ByteCursor(std::string_view bytes) : bytes_(bytes) {}

  std::uint64_t get_le(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("truncated ") + what);
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_store(const EmbeddingMatrix& m) {
  std::string out = "AJEM";
  detail::put_le(out, kAjemVersion, 2);
  detail::put_le(out, m.dim(), 4);
  detail::put_le(out, m.count(), 8);
  for (const auto& id : m.ids()) {
    detail::put_le(out, id.size(), 4);
    out += id;
  }
  out.reserve(out.size() + m.data().size() * 4);
  for (float f : m.data()) detail::put_le(out, std::bit_cast<std::uint32_t>(f), 4);
  return out;
}

inline EmbeddingMatrix decode_store(std::string_view bytes) {
  detail::ByteCursor in(bytes);
  if (in.take(4, "magic") != "AJEM") throw FormatError("bad magic");
  const auto version = in.get_le(2, "version");
  if (version != kAjemVersion) throw FormatError("unsupported version " + std::to_string(version));
  const auto dim = static_cast<std::uint32_t>(in.get_le(4, "dim"));
  if (dim == 0) throw FormatError("dim must be positive");
  const auto count = in.get_le(8, "count");
  // Every id costs at least 4 bytes, so a count this large cannot be satisfied.
  if (count > in.remaining() / 4) throw FormatError("truncated id table");
  std::vector<std::string> ids;
  ids.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = in.get_le(4, "id table");
    ids.emplace_back(in.take(len, "id table"));
  }
  const std::uint64_t floats = count * dim;
  if (in.remaining() < floats * 4) throw FormatError("truncated payload");
  if (in.remaining() > floats * 4) throw FormatError("dim mismatch: trailing bytes after payload");
  std::vector<float> data(floats);
  for (auto& f : data) f = std::bit_cast<float>(static_cast<std::uint32_t>(in.get_le(4, "payload")));
  return EmbeddingMatrix(dim, std::move(ids), std::move(data));
}

inline EmbeddingMatrix read_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_store(bytes);
}

inline void write_store(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const auto bytes = encode_store(m);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

inline EmbeddingMatrix l2_normalize(const EmbeddingMatrix& m) {
  std::vector<float> data(m.data());
  for (std::size_t i = 0; i < m.count(); ++i) {
    const double n = norm2(m.row(i));
    if (n == 0.0) throw ZeroVectorError("row '" + m.ids()[i] + "' is all zeros");
    for (std::size_t k = 0; k < m.dim(); ++k) {
      auto& v = data[i * m.dim() + k];
      v = static_cast<float>(static_cast<double>(v) / n);
    }
  }
  return EmbeddingMatrix(m.dim(), m.ids(), std::move(data));
}

/// Rows of a patch store that belong to `artwork_id` (keys "artwork_id#k"), ordered by k.
inline std::vector<std::size_t> patch_rows(const EmbeddingMatrix& patches, std::string_view artwork_id) {
  std::vector<std::pair<long, std::size_t>> found;
  const std::string prefix = std::string(artwork_id) + "#";
  for (std::size_t i = 0; i < patches.count(); ++i) {
    const auto& id = patches.ids()[i];
    if (id.size() > prefix.size() && id.compare(0, prefix.size(), prefix) == 0) {
      try {
        found.emplace_back(std::stol(id.substr(prefix.size())), i);
      } catch (const std::exception&) {
        throw FormatError("patch id '" + id + "' has no integer token index");
      }
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<std::size_t> rows;
  for (const auto& [k, i] : found) rows.push_back(i);
  return rows;
}

/// Weighted sum of an artwork's patch embeddings. Without `weights` (a dim-1 store
/// keyed like the patches) the aggregation is the uniform mean.
inline std::vector<double> aggregate_patches(const EmbeddingMatrix& patches, std::string_view artwork_id,
                                             const EmbeddingMatrix* weights = nullptr) {
  const auto rows = patch_rows(patches, artwork_id);
  if (rows.empty()) throw DataError("no patches for artwork '" + std::string(artwork_id) + "'");
  std::vector<double> out(patches.dim(), 0.0);
  for (auto i : rows) {
    double alpha = 1.0 / static_cast<double>(rows.size());
    if (weights) alpha = weights->row(patches.ids()[i])[0];
    auto r = patches.row(i);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += alpha * r[k];
  }
  return out;
}

}  // namespace artjudge
