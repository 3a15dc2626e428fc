#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "sparseforge/encoding.hpp"
#include "sparseforge/errors.hpp"
#include "sparseforge/tensor.hpp"

namespace sparseforge {

// What one physical level stores: either just its extent, or explicit
// indices, optionally with a pointer array into them, optionally marked as
// part of the padded dense value tail.
struct LevelStorage {
  bool size = false;
  bool ptr = false;
  bool idx = false;
  bool dense_vector = false;
};

struct StorageScheme {
  std::vector<LevelStorage> levels;
  LayoutSpec layout;
};

// Derives storage from the encoding alone:
//  - a level keeps explicit indices when it is trimmed, indirect, or a direct
//    dim consumed by an indirect reference; otherwise its extent suffices
//  - an index level under a merged parent gains a pointer array
//  - a trailing run of extent-only levels below an index level is the padded
//    dense vector of the format
inline StorageScheme infer_storage(const FormatEncoding& enc) {
  auto cls = classify_levels(enc);
  StorageScheme out;
  out.layout = enc.layout;
  out.levels.resize(cls.size());
  for (size_t l = 0; l < cls.size(); ++l) {
    bool has_idx = cls[l].trimmed || cls[l].indirect || cls[l].tainted;
    out.levels[l].idx = has_idx;
    out.levels[l].size = !has_idx;
    out.levels[l].ptr = has_idx && l > 0 && cls[l - 1].merged;
  }
  size_t tail = cls.size();
  while (tail > 0 && out.levels[tail - 1].size) --tail;
  if (tail > 0)
    for (size_t l = tail; l < cls.size(); ++l) out.levels[l].dense_vector = true;
  return out;
}

inline std::string explain_storage(const StorageScheme& s) {
  std::string out;
  for (size_t l = 0; l < s.levels.size(); ++l) {
    out += "L" + std::to_string(l) + ": ";
    std::vector<std::string> parts;
    if (s.levels[l].size) parts.push_back("size");
    if (s.levels[l].ptr) parts.push_back("ptr");
    if (s.levels[l].idx) parts.push_back("idx");
    if (s.levels[l].dense_vector) parts.push_back("dense_vector");
    for (size_t i = 0; i < parts.size(); ++i) {
      if (i) out += ", ";
      out += parts[i];
    }
    out += " | ";
  }
  out += "val";
  if (s.layout.has_pack)
    out += " | pack(" + std::to_string(s.layout.pack_start) + "," +
           std::to_string(s.layout.pack_end) + ")";
  if (s.layout.has_partition)
    out += " | partition(" + std::to_string(s.layout.partition_level) + ")";
  return out;
}

struct MaterializedLevel {
  LevelStorage storage;
  Interval bounds;
  size_t node_count = 0;
  std::vector<std::int64_t> idx;
  std::vector<std::int64_t> ptr;
};

struct MaterializedTensor {
  TensorShape logical_shape;
  std::vector<MaterializedLevel> levels;
  std::vector<double> values;
  ValueLayout layout;
  std::vector<std::pair<size_t, size_t>> partitions;  // value ranges
};

// Collapses the expanded tensor into compact arrays. Items (entries plus
// dangling prefixes) are walked in sorted order; positions at extent-only
// levels are dense, index levels allocate one node per item or per fused
// prefix, and pointer arrays count children per parent position.
inline MaterializedTensor materialize(const WorkingTensor& t, const StorageScheme& scheme) {
  if (scheme.levels.size() != t.level_count())
    fail(ErrorKind::InvalidOperation, "storage scheme rank mismatch");
  t.check();

  struct Item {
    const std::vector<std::int64_t>* prefix;  // dangling path, or null for entry
    size_t entry = 0;
  };
  // Entries are sorted; merge the sorted dangling prefixes in.
  std::vector<Item> items;
  items.reserve(t.entry_count() + t.dangling.size());
  {
    auto coord_at = [&](const Item& it, size_t l) -> std::int64_t {
      return it.prefix ? (*it.prefix)[l] : t.coords[l][it.entry];
    };
    auto depth_of = [&](const Item& it) {
      return it.prefix ? it.prefix->size() : t.level_count();
    };
    auto less = [&](const Item& a, const Item& b) {
      size_t da = depth_of(a), db = depth_of(b);
      for (size_t l = 0; l < std::min(da, db); ++l) {
        if (coord_at(a, l) != coord_at(b, l)) return coord_at(a, l) < coord_at(b, l);
      }
      return da < db;
    };
    for (size_t e = 0; e < t.entry_count(); ++e) items.push_back({nullptr, e});
    for (const auto& p : t.dangling) items.push_back({&p, 0});
    std::stable_sort(items.begin(), items.end(), less);
  }

  MaterializedTensor out;
  out.logical_shape = t.shape;
  out.layout.kind =
      scheme.layout.has_pack ? ValueLayoutKind::AoS : ValueLayoutKind::SoA;
  out.layout.aos_start = scheme.layout.pack_start;
  out.layout.aos_end = scheme.layout.pack_end;
  out.levels.resize(t.level_count());

  std::vector<std::int64_t> pos(items.size(), 0);  // parent position per item
  size_t parent_count = 1;

  // Repeated (parent, coordinate) pairs at an index level collapse into one
  // node when the level is merged, or when everything below is dense: then
  // the items under one path are positions of a single node's dense subtree.
  std::vector<bool> fuse_level(t.level_count(), false);
  {
    bool idx_below = false;
    for (size_t l = t.level_count(); l-- > 0;) {
      fuse_level[l] = t.levels[l].merged || (!idx_below && l + 1 < t.level_count());
      if (scheme.levels[l].idx) idx_below = true;
    }
  }

  for (size_t l = 0; l < t.level_count(); ++l) {
    MaterializedLevel& lev = out.levels[l];
    lev.storage = scheme.levels[l];
    lev.bounds = t.levels[l].bounds;

    if (lev.storage.size) {
      std::int64_t extent = lev.bounds.extent();
      if (extent <= 0)
        fail(ErrorKind::InvalidOperation, "empty bounds at extent-only level");
      for (size_t i = 0; i < items.size(); ++i) {
        const Item& it = items[i];
        size_t depth = it.prefix ? it.prefix->size() : t.level_count();
        if (depth <= l) continue;
        std::int64_t c = it.prefix ? (*it.prefix)[l] : t.coords[l][it.entry];
        if (c < lev.bounds.lo || c > lev.bounds.hi)
          fail(ErrorKind::InvalidOperation,
               "coordinate outside level bounds at L" + std::to_string(l));
        pos[i] = pos[i] * extent + (c - lev.bounds.lo);
      }
      lev.node_count = parent_count * static_cast<size_t>(extent);
    } else {
      // Index level: allocate nodes in item order.
      std::vector<std::int64_t> child_count(lev.storage.ptr ? parent_count : 0, 0);
      std::int64_t node = -1;
      bool have_prev = false;
      std::int64_t prev_parent = 0, prev_coord = 0;
      for (size_t i = 0; i < items.size(); ++i) {
        const Item& it = items[i];
        size_t depth = it.prefix ? it.prefix->size() : t.level_count();
        if (depth <= l) continue;
        std::int64_t c = it.prefix ? (*it.prefix)[l] : t.coords[l][it.entry];
        bool fuse = fuse_level[l] && have_prev && pos[i] == prev_parent &&
                    c == prev_coord;
        if (!fuse) {
          ++node;
          lev.idx.push_back(c);
          if (lev.storage.ptr) ++child_count[static_cast<size_t>(pos[i])];
        }
        have_prev = true;
        prev_parent = pos[i];
        prev_coord = c;
        pos[i] = node;
      }
      lev.node_count = static_cast<size_t>(node + 1);
      if (lev.storage.ptr) {
        lev.ptr.assign(parent_count + 1, 0);
        for (size_t p = 0; p < parent_count; ++p)
          lev.ptr[p + 1] = lev.ptr[p] + child_count[p];
      }
    }
    parent_count = lev.node_count;
  }

  // Values: one slot per leaf position; every slot must be hit exactly once.
  out.values.assign(parent_count, 0.0);
  std::vector<bool> filled(parent_count, false);
  for (size_t i = 0; i < items.size(); ++i) {
    if (items[i].prefix) continue;
    size_t p = static_cast<size_t>(pos[i]);
    if (filled[p])
      fail(ErrorKind::InvalidOperation, "two entries share one storage slot");
    filled[p] = true;
    out.values[p] = t.values[items[i].entry];
  }
  for (size_t p = 0; p < parent_count; ++p)
    if (!filled[p])
      fail(ErrorKind::InvalidOperation,
           "dense value slot left unpopulated; conversion is incomplete");

  if (scheme.layout.has_partition) {
    // Contiguous value ranges per coordinate of the partition level. Entries
    // are sorted, so equal partition coordinates are adjacent when the level
    // is an ancestor of every index level below it.
    size_t pl = scheme.layout.partition_level;
    size_t begin = 0;
    for (size_t e = 1; e <= t.entry_count(); ++e) {
      if (e == t.entry_count() || t.coords[pl][e] != t.coords[pl][begin]) {
        out.partitions.push_back({begin, e});
        begin = e;
      }
    }
  }
  return out;
}

namespace detail {

template <typename Fn>
void walk_level(const MaterializedTensor& m, size_t l, size_t parent_pos,
                std::vector<std::int64_t>& path, Fn&& fn) {
  if (l == m.levels.size()) {
    fn(path, parent_pos);
    return;
  }
  const MaterializedLevel& lev = m.levels[l];
  if (lev.storage.size) {
    std::int64_t extent = lev.bounds.extent();
    for (std::int64_t c = lev.bounds.lo; c <= lev.bounds.hi; ++c) {
      path[l] = c;
      walk_level(m, l + 1, parent_pos * static_cast<size_t>(extent) +
                               static_cast<size_t>(c - lev.bounds.lo),
                 path, fn);
    }
  } else if (lev.storage.ptr) {
    for (std::int64_t k = lev.ptr[parent_pos]; k < lev.ptr[parent_pos + 1]; ++k) {
      path[l] = lev.idx[static_cast<size_t>(k)];
      walk_level(m, l + 1, static_cast<size_t>(k), path, fn);
    }
  } else if (l == 0) {
    for (size_t k = 0; k < lev.idx.size(); ++k) {
      path[l] = lev.idx[k];
      walk_level(m, l + 1, k, path, fn);
    }
  } else {
    // Index level without a pointer array: one node per parent position.
    if (parent_pos >= lev.idx.size())
      fail(ErrorKind::InvalidOperation, "index level is not one-to-one with its parent");
    path[l] = lev.idx[parent_pos];
    walk_level(m, l + 1, parent_pos, path, fn);
  }
}

}  // namespace detail

// Visits every value slot in storage order with its physical coordinates.
template <typename Fn>
void walk_slots(const MaterializedTensor& m, Fn&& fn) {
  std::vector<std::int64_t> path(m.levels.size());
  detail::walk_level(m, 0, 0, path, fn);
}

// Expands compact arrays back into the working form, including dangling
// nodes for parents whose index children are absent.
inline WorkingTensor dematerialize(const MaterializedTensor& m, const FormatEncoding& enc) {
  if (m.levels.size() != enc.map.dst.size())
    fail(ErrorKind::InvalidOperation, "container rank does not match the encoding");
  WorkingTensor t;
  t.shape = m.logical_shape;
  t.levels.resize(m.levels.size());
  t.coords.resize(m.levels.size());
  for (size_t l = 0; l < m.levels.size(); ++l) {
    t.levels[l].bounds = m.levels[l].bounds;
    t.levels[l].trimmed = m.levels[l].storage.idx;
    t.levels[l].merged = enc.mutation.merged(l);
    t.levels[l].vectorized = m.levels[l].storage.dense_vector;
  }
  t.layout.kind = m.layout.kind;
  t.layout.aos_start = m.layout.aos_start;
  t.layout.aos_end = m.layout.aos_end;

  std::vector<std::int64_t> path(m.levels.size());
  auto rec = [&](auto&& self, size_t l, size_t parent_pos) -> void {
    if (l == m.levels.size()) {
      for (size_t k = 0; k < path.size(); ++k) t.coords[k].push_back(path[k]);
      t.values.push_back(m.values[parent_pos]);
      return;
    }
    const MaterializedLevel& lev = m.levels[l];
    if (lev.storage.size) {
      std::int64_t extent = lev.bounds.extent();
      for (std::int64_t c = lev.bounds.lo; c <= lev.bounds.hi; ++c) {
        path[l] = c;
        self(self, l + 1,
             parent_pos * static_cast<size_t>(extent) +
                 static_cast<size_t>(c - lev.bounds.lo));
      }
    } else if (lev.storage.ptr) {
      if (lev.ptr[parent_pos] == lev.ptr[parent_pos + 1] && l > 0) {
        t.dangling.emplace_back(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(l));
        return;
      }
      if (lev.ptr[parent_pos] == lev.ptr[parent_pos + 1]) return;
      for (std::int64_t k = lev.ptr[parent_pos]; k < lev.ptr[parent_pos + 1]; ++k) {
        path[l] = lev.idx[static_cast<size_t>(k)];
        self(self, l + 1, static_cast<size_t>(k));
      }
    } else if (l == 0) {
      for (size_t k = 0; k < lev.idx.size(); ++k) {
        path[l] = lev.idx[k];
        self(self, l + 1, k);
      }
    } else {
      if (parent_pos >= lev.idx.size())
        fail(ErrorKind::InvalidOperation, "index level is not one-to-one with its parent");
      path[l] = lev.idx[parent_pos];
      self(self, l + 1, parent_pos);
    }
  };
  rec(rec, 0, 0);
  t.partitions = m.partitions;
  sort_entries(t);
  return t;
}

}  // namespace sparseforge
