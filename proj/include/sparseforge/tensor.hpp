#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sparseforge/errors.hpp"
#include "sparseforge/expr.hpp"
#include "sparseforge/index_map.hpp"

namespace sparseforge {

struct TensorShape {
  std::vector<std::int64_t> extents;

  size_t rank() const { return extents.size(); }
  std::int64_t volume() const {
    std::int64_t v = 1;
    for (auto e : extents) v *= e;
    return v;
  }
};

// Dense row-major tensor, the reference representation for correctness
// checks.
struct DenseTensor {
  TensorShape shape;
  std::vector<double> data;

  explicit DenseTensor(TensorShape s = {})
      : shape(std::move(s)), data(static_cast<size_t>(shape.volume()), 0.0) {}

  size_t offset(std::span<const std::int64_t> coords) const {
    size_t off = 0;
    for (size_t i = 0; i < shape.rank(); ++i) {
      if (coords[i] < 0 || coords[i] >= shape.extents[i])
        fail(ErrorKind::InvalidOperation, "dense coordinate out of range");
      off = off * static_cast<size_t>(shape.extents[i]) + static_cast<size_t>(coords[i]);
    }
    return off;
  }

  double at(std::span<const std::int64_t> coords) const { return data[offset(coords)]; }
  double& at(std::span<const std::int64_t> coords) { return data[offset(coords)]; }
};

// Per-level state of a tensor under conversion.
struct LevelMeta {
  Interval bounds;         // admissible coordinate range at this level
  bool trimmed = false;    // only populated paths are stored
  bool merged = false;     // repeated prefixes through this level are fused
  bool vectorized = false; // level is part of a padded dense tail
};

enum class ValueLayoutKind { SoA, AoS };

struct ValueLayout {
  ValueLayoutKind kind = ValueLayoutKind::SoA;
  size_t aos_start = 0;
  size_t aos_end = 0;
};

// Expanded physical form of a tensor: one row of level coordinates per stored
// element (padding included), plus side paths for levels that keep nodes with
// no descendants. This is the representation every conversion operator works
// on; compact arrays are produced from it by materialization.
struct WorkingTensor {
  TensorShape shape;  // logical
  std::vector<LevelMeta> levels;
  std::vector<std::vector<std::int64_t>> coords;  // [level][entry]
  std::vector<double> values;
  std::vector<std::vector<std::int64_t>> dangling;  // prefix paths, no value
  ValueLayout layout;
  std::vector<std::pair<size_t, size_t>> partitions;  // entry ranges

  size_t level_count() const { return levels.size(); }
  size_t entry_count() const { return values.size(); }

  std::vector<std::int64_t> entry_coords(size_t e) const {
    std::vector<std::int64_t> out(level_count());
    for (size_t l = 0; l < level_count(); ++l) out[l] = coords[l][e];
    return out;
  }

  void check() const {
    for (const auto& c : coords)
      if (c.size() != values.size())
        fail(ErrorKind::InvalidOperation, "tensor columns out of sync");
    for (const auto& p : dangling)
      if (p.empty() || p.size() > level_count())
        fail(ErrorKind::InvalidOperation, "dangling path with bad depth");
  }
};

inline void sort_entries(WorkingTensor& t) {
  size_t n = t.entry_count();
  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](size_t a, size_t b) {
    for (size_t l = 0; l < t.level_count(); ++l) {
      if (t.coords[l][a] != t.coords[l][b]) return t.coords[l][a] < t.coords[l][b];
    }
    return false;
  });
  WorkingTensor out = t;
  for (size_t l = 0; l < t.level_count(); ++l)
    for (size_t i = 0; i < n; ++i) out.coords[l][i] = t.coords[l][perm[i]];
  for (size_t i = 0; i < n; ++i) out.values[i] = t.values[perm[i]];
  std::sort(out.dangling.begin(), out.dangling.end());
  t = std::move(out);
}

// Builds the expanded form of a coordinate list: identity map, every level
// trimmed, entries sorted.
inline WorkingTensor from_coo(TensorShape shape,
                              const std::vector<std::vector<std::int64_t>>& coords,
                              const std::vector<double>& values,
                              bool sum_duplicates = false) {
  if (coords.size() != shape.rank())
    fail(ErrorKind::InvalidOperation, "coordinate rank mismatch");
  WorkingTensor t;
  t.shape = shape;
  t.levels.resize(shape.rank());
  for (size_t l = 0; l < shape.rank(); ++l) {
    t.levels[l].bounds = {0, shape.extents[l] - 1};
    t.levels[l].trimmed = true;
  }
  t.coords = coords;
  t.values = values;
  for (size_t l = 0; l < shape.rank(); ++l)
    for (size_t e = 0; e < t.values.size(); ++e)
      if (coords[l][e] < 0 || coords[l][e] >= shape.extents[l])
        fail(ErrorKind::InvalidOperation, "coordinate out of range");
  sort_entries(t);

  // Collapse or reject duplicates.
  WorkingTensor out = t;
  for (auto& c : out.coords) c.clear();
  out.values.clear();
  for (size_t e = 0; e < t.entry_count(); ++e) {
    bool same = e > 0;
    for (size_t l = 0; same && l < t.level_count(); ++l)
      same = t.coords[l][e] == t.coords[l][e - 1];
    if (same) {
      if (!sum_duplicates) {
        std::string at;
        for (size_t l = 0; l < t.level_count(); ++l)
          at += (l ? "," : "(") + std::to_string(t.coords[l][e]);
        fail(ErrorKind::DuplicateCoordinate, "duplicate coordinate " + at + ")");
      }
      out.values.back() += t.values[e];
      continue;
    }
    for (size_t l = 0; l < t.level_count(); ++l)
      out.coords[l].push_back(t.coords[l][e]);
    out.values.push_back(t.values[e]);
  }
  return out;
}

inline WorkingTensor from_dense(const DenseTensor& d) {
  std::vector<std::vector<std::int64_t>> coords(d.shape.rank());
  std::vector<double> values;
  std::vector<std::int64_t> cur(d.shape.rank(), 0);
  for (size_t off = 0; off < d.data.size(); ++off) {
    if (d.data[off] != 0.0) {
      for (size_t l = 0; l < d.shape.rank(); ++l) coords[l].push_back(cur[l]);
      values.push_back(d.data[off]);
    }
    for (size_t l = d.shape.rank(); l-- > 0;) {
      if (++cur[l] < d.shape.extents[l]) break;
      cur[l] = 0;
    }
  }
  return from_coo(d.shape, coords, values);
}

// Restores the dense tensor through the inverse of the tensor's index map.
// Padding (zero values) is dropped; a nonzero landing outside the logical box
// or on top of a different nonzero is an error.
inline DenseTensor to_dense(const WorkingTensor& t, const IndexMap& inverse) {
  DenseTensor out(t.shape);
  std::vector<bool> filled(out.data.size(), false);
  for (size_t e = 0; e < t.entry_count(); ++e) {
    if (t.values[e] == 0.0) continue;
    auto phys = t.entry_coords(e);
    auto logical = eval_map(inverse, phys);
    for (size_t l = 0; l < t.shape.rank(); ++l)
      if (logical[l] < 0 || logical[l] >= t.shape.extents[l])
        fail(ErrorKind::Collision, "nonzero restored outside the logical shape");
    size_t off = out.offset(logical);
    if (filled[off])
      fail(ErrorKind::Collision, "two nonzeros restored to one cell");
    filled[off] = true;
    out.data[off] = t.values[e];
  }
  return out;
}

inline bool equal_dense(const DenseTensor& a, const DenseTensor& b, double tol = 0.0) {
  if (a.shape.extents != b.shape.extents) return false;
  for (size_t i = 0; i < a.data.size(); ++i) {
    double diff = a.data[i] - b.data[i];
    if (diff < 0) diff = -diff;
    if (diff > tol) return false;
  }
  return true;
}

}  // namespace sparseforge
