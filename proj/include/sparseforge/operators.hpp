#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "sparseforge/errors.hpp"
#include "sparseforge/index_map.hpp"
#include "sparseforge/matrix.hpp"
#include "sparseforge/query_engine.hpp"
#include "sparseforge/rational.hpp"
#include "sparseforge/tensor.hpp"

namespace sparseforge {

// One step of a conversion plan. Coordinate operators (Swap, Scale, Skew,
// TileSplit, TileUnion) rewrite level columns; mutation operators (Trim,
// Fill, Merge, Split, Vectorize, Devectorize) change what is stored; layout
// operators record value placement; query operators compute indirect levels.
struct ConversionOp {
  enum class Kind {
    Swap,
    Scale,
    Skew,
    TileSplit,
    TileUnion,
    Sort,
    Trim,
    Fill,
    Merge,
    Split,
    Vectorize,
    Devectorize,
    Pack,
    Partition,
    Query,
  };

  // Fill normally inserts whole zero subtrees (or dangling nodes when the
  // child level stays trimmed); pad-path mode inserts a single zero path
  // instead, for levels that are one-to-one with the padded positions.
  enum class FillMode { Subtree, PadPath };

  Kind kind = Kind::Sort;
  size_t i = 0, j = 0;       // level arguments
  Rational factor;           // Scale only
  std::int64_t skew = 0;     // Skew only
  std::int64_t tile = 0;     // TileSplit / TileUnion factor
  FillMode fill_mode = FillMode::Subtree;

  QuerySpec query;           // Query only
  size_t insert_pos = 0;     // level where a producing query lands
  IndexMap restore;          // physical -> logical map for query evaluation
};

namespace detail {
inline ConversionOp make_op(ConversionOp::Kind k, size_t i = 0, size_t j = 0) {
  ConversionOp op;
  op.kind = k;
  op.i = i;
  op.j = j;
  return op;
}
}  // namespace detail

inline ConversionOp op_swap(size_t i, size_t j) {
  return detail::make_op(ConversionOp::Kind::Swap, i, j);
}
inline ConversionOp op_scale(size_t i, Rational f) {
  ConversionOp op = detail::make_op(ConversionOp::Kind::Scale, i);
  op.factor = f;
  return op;
}
inline ConversionOp op_skew(size_t i, size_t j, std::int64_t f) {
  ConversionOp op = detail::make_op(ConversionOp::Kind::Skew, i, j);
  op.skew = f;
  return op;
}
inline ConversionOp op_tile_split(size_t i, std::int64_t f) {
  ConversionOp op = detail::make_op(ConversionOp::Kind::TileSplit, i);
  op.tile = f;
  return op;
}
inline ConversionOp op_tile_union(size_t i, std::int64_t f) {
  ConversionOp op = detail::make_op(ConversionOp::Kind::TileUnion, i);
  op.tile = f;
  return op;
}
inline ConversionOp op_sort() { return detail::make_op(ConversionOp::Kind::Sort); }
inline ConversionOp op_trim(size_t l) { return detail::make_op(ConversionOp::Kind::Trim, l); }
inline ConversionOp op_fill(size_t l, ConversionOp::FillMode m = ConversionOp::FillMode::Subtree) {
  ConversionOp op = detail::make_op(ConversionOp::Kind::Fill, l);
  op.fill_mode = m;
  return op;
}
inline ConversionOp op_merge(size_t l) { return detail::make_op(ConversionOp::Kind::Merge, l); }
inline ConversionOp op_split(size_t l) { return detail::make_op(ConversionOp::Kind::Split, l); }
inline ConversionOp op_vectorize(size_t l) {
  return detail::make_op(ConversionOp::Kind::Vectorize, l);
}
inline ConversionOp op_devectorize(size_t l) {
  return detail::make_op(ConversionOp::Kind::Devectorize, l);
}
inline ConversionOp op_pack(size_t s, size_t e) {
  return detail::make_op(ConversionOp::Kind::Pack, s, e);
}
inline ConversionOp op_partition(size_t l) {
  return detail::make_op(ConversionOp::Kind::Partition, l);
}

inline std::string print_op(const ConversionOp& op) {
  using K = ConversionOp::Kind;
  auto n = [](size_t v) { return std::to_string(v); };
  switch (op.kind) {
    case K::Swap: return "Swap(" + n(op.i) + "," + n(op.j) + ")";
    case K::Scale: return "Scale(" + n(op.i) + "," + op.factor.str() + ")";
    case K::Skew:
      return "Skew(" + n(op.i) + "," + n(op.j) + "," + std::to_string(op.skew) + ")";
    case K::TileSplit: return "TileSplit(" + n(op.i) + "," + std::to_string(op.tile) + ")";
    case K::TileUnion: return "TileUnion(" + n(op.i) + "," + std::to_string(op.tile) + ")";
    case K::Sort: return "Sort";
    case K::Trim: return "Trim(" + n(op.i) + ")";
    case K::Fill: return "Fill(" + n(op.i) + ")";
    case K::Merge: return "Merge(" + n(op.i) + ")";
    case K::Split: return "Split(" + n(op.i) + ")";
    case K::Vectorize: return "Vectorize(" + n(op.i) + ")";
    case K::Devectorize: return "Devectorize(" + n(op.i) + ")";
    case K::Pack: return "Pack(" + n(op.i) + "," + n(op.j) + ")";
    case K::Partition: return "Partition(" + n(op.i) + ")";
    case K::Query:
      switch (op.query.func) {
        case QueryFunc::Sum: return "Sum(" + n(op.insert_pos) + ")";
        case QueryFunc::Enumerate: return "Enumerate(" + n(op.insert_pos) + ")";
        case QueryFunc::Reorder: return "Reorder(" + n(op.insert_pos) + ")";
        case QueryFunc::Schedule: return "Schedule(" + n(op.insert_pos) + ")";
      }
  }
  return "?";
}

// State threaded through a plan while it is applied: sum and reorder results
// feed later queries in the same indirect chain.
struct ApplyContext {
  QueryChainState qstate;
};

namespace detail {

inline Rational rat_min(Rational a, Rational b) { return a < b ? a : b; }
inline Rational rat_max(Rational a, Rational b) { return a < b ? b : a; }

inline std::int64_t rat_floor(const Rational& r) { return floor_div(r.num(), r.den()); }
inline std::int64_t rat_ceil(const Rational& r) { return -floor_div(-r.num(), r.den()); }

// Coordinate operators assume a fully trimmed tensor where empty subtrees
// store nothing, so leftover dangling paths are simply dropped.
inline void drop_dangling(WorkingTensor& t) { t.dangling.clear(); }

inline void require_level(const WorkingTensor& t, size_t l, const char* what) {
  if (l >= t.level_count())
    fail(ErrorKind::InvalidOperation, std::string(what) + ": level out of range");
}

// All length-L prefixes that exist structurally: full coordinate ranges at
// untrimmed levels, stored coordinates at trimmed ones.
inline std::vector<std::vector<std::int64_t>> level_prefixes(const WorkingTensor& t,
                                                             size_t depth) {
  std::vector<std::vector<std::int64_t>> prefixes = {{}};
  for (size_t k = 0; k < depth; ++k) {
    std::vector<std::vector<std::int64_t>> next;
    if (!t.levels[k].trimmed) {
      for (const auto& p : prefixes)
        for (std::int64_t c = t.levels[k].bounds.lo; c <= t.levels[k].bounds.hi; ++c) {
          auto q = p;
          q.push_back(c);
          next.push_back(std::move(q));
        }
    } else {
      std::set<std::vector<std::int64_t>> seen;
      auto visit = [&](std::span<const std::int64_t> path, size_t len) {
        if (len <= k) return;
        std::vector<std::int64_t> q(path.begin(), path.begin() + k + 1);
        seen.insert(std::move(q));
      };
      for (size_t e = 0; e < t.entry_count(); ++e) {
        std::vector<std::int64_t> path = t.entry_coords(e);
        visit(path, path.size());
      }
      for (const auto& d : t.dangling) visit(d, d.size());
      std::set<std::vector<std::int64_t>> pref(prefixes.begin(), prefixes.end());
      for (const auto& q : seen)
        if (pref.count(std::vector<std::int64_t>(q.begin(), q.end() - 1))) next.push_back(q);
    }
    prefixes = std::move(next);
  }
  return prefixes;
}

inline void insert_zero_subtree(WorkingTensor& t, std::vector<std::int64_t>& path,
                                size_t level, ConversionOp::FillMode mode,
                                std::set<std::vector<std::int64_t>>& new_dangling) {
  if (level == t.level_count()) {
    for (size_t l = 0; l < t.level_count(); ++l) t.coords[l].push_back(path[l]);
    t.values.push_back(0.0);
    return;
  }
  if (t.levels[level].trimmed) {
    if (mode == ConversionOp::FillMode::Subtree) {
      new_dangling.insert(path);
      return;
    }
    path.push_back(t.levels[level].bounds.lo);
    insert_zero_subtree(t, path, level + 1, mode, new_dangling);
    path.pop_back();
    return;
  }
  for (std::int64_t c = t.levels[level].bounds.lo; c <= t.levels[level].bounds.hi; ++c) {
    path.push_back(c);
    insert_zero_subtree(t, path, level + 1, mode, new_dangling);
    path.pop_back();
  }
}

}  // namespace detail

inline void apply_op(WorkingTensor& t, const ConversionOp& op, ApplyContext& ctx) {
  using K = ConversionOp::Kind;
  t.check();
  switch (op.kind) {
    case K::Swap: {
      detail::require_level(t, op.i, "Swap");
      detail::require_level(t, op.j, "Swap");
      detail::drop_dangling(t);
      std::swap(t.coords[op.i], t.coords[op.j]);
      std::swap(t.levels[op.i], t.levels[op.j]);
      return;
    }
    case K::Scale: {
      detail::require_level(t, op.i, "Scale");
      detail::drop_dangling(t);
      for (auto& c : t.coords[op.i]) c = (op.factor * Rational(c)).as_integer();
      auto& b = t.levels[op.i].bounds;
      Rational lo = detail::rat_min(op.factor * Rational(b.lo), op.factor * Rational(b.hi));
      Rational hi = detail::rat_max(op.factor * Rational(b.lo), op.factor * Rational(b.hi));
      b = {detail::rat_ceil(lo), detail::rat_floor(hi)};
      return;
    }
    case K::Skew: {
      detail::require_level(t, op.i, "Skew");
      detail::require_level(t, op.j, "Skew");
      detail::drop_dangling(t);
      for (size_t e = 0; e < t.entry_count(); ++e)
        t.coords[op.j][e] += op.skew * t.coords[op.i][e];
      auto bi = t.levels[op.i].bounds, bj = t.levels[op.j].bounds;
      std::int64_t a = op.skew * bi.lo, b = op.skew * bi.hi;
      t.levels[op.j].bounds = {std::min(a, b) + bj.lo, std::max(a, b) + bj.hi};
      return;
    }
    case K::TileSplit: {
      detail::require_level(t, op.i, "TileSplit");
      detail::drop_dangling(t);
      if (op.tile <= 0) fail(ErrorKind::InvalidOperation, "TileSplit factor must be positive");
      std::vector<std::int64_t> div(t.entry_count()), mod(t.entry_count());
      for (size_t e = 0; e < t.entry_count(); ++e) {
        div[e] = floor_div(t.coords[op.i][e], op.tile);
        mod[e] = floor_mod(t.coords[op.i][e], op.tile);
      }
      auto b = t.levels[op.i].bounds;
      LevelMeta div_meta = t.levels[op.i], mod_meta = t.levels[op.i];
      div_meta.bounds = {floor_div(b.lo, op.tile), floor_div(b.hi, op.tile)};
      if (floor_div(b.lo, op.tile) == floor_div(b.hi, op.tile))
        mod_meta.bounds = {floor_mod(b.lo, op.tile), floor_mod(b.hi, op.tile)};
      else
        mod_meta.bounds = {0, op.tile - 1};
      t.coords[op.i] = std::move(div);
      t.coords.insert(t.coords.begin() + static_cast<std::ptrdiff_t>(op.i) + 1,
                      std::move(mod));
      t.levels[op.i] = div_meta;
      t.levels.insert(t.levels.begin() + static_cast<std::ptrdiff_t>(op.i) + 1, mod_meta);
      return;
    }
    case K::TileUnion: {
      detail::require_level(t, op.i + 1, "TileUnion");
      detail::drop_dangling(t);
      if (op.tile <= 0) fail(ErrorKind::InvalidOperation, "TileUnion factor must be positive");
      for (size_t e = 0; e < t.entry_count(); ++e)
        t.coords[op.i][e] = t.coords[op.i][e] * op.tile + t.coords[op.i + 1][e];
      auto bd = t.levels[op.i].bounds, bm = t.levels[op.i + 1].bounds;
      t.levels[op.i].bounds = {bd.lo * op.tile + bm.lo, bd.hi * op.tile + bm.hi};
      t.coords.erase(t.coords.begin() + static_cast<std::ptrdiff_t>(op.i) + 1);
      t.levels.erase(t.levels.begin() + static_cast<std::ptrdiff_t>(op.i) + 1);
      return;
    }
    case K::Sort: {
      sort_entries(t);
      return;
    }
    case K::Trim: {
      detail::require_level(t, op.i, "Trim");
      for (size_t l = op.i; l < t.level_count(); ++l)
        if (t.levels[l].vectorized)
          fail(ErrorKind::InvalidOperation, "Trim under a vectorized level");
      size_t L = op.i;
      // Group entries by their path through L; all-zero groups vanish.
      std::map<std::vector<std::int64_t>, bool> group_nonzero;
      for (size_t e = 0; e < t.entry_count(); ++e) {
        auto path = t.entry_coords(e);
        path.resize(L + 1);
        bool& nonzero = group_nonzero[path];
        nonzero = nonzero || t.values[e] != 0.0;
      }
      WorkingTensor out = t;
      for (auto& c : out.coords) c.clear();
      out.values.clear();
      std::set<std::vector<std::int64_t>> kept_parents, all_parents;
      for (size_t e = 0; e < t.entry_count(); ++e) {
        auto path = t.entry_coords(e);
        auto key = path;
        key.resize(L + 1);
        if (L > 0) {
          auto parent = path;
          parent.resize(L);
          all_parents.insert(parent);
          if (group_nonzero[key]) kept_parents.insert(parent);
        }
        if (!group_nonzero[key]) continue;
        for (size_t l = 0; l < t.level_count(); ++l) out.coords[l].push_back(path[l]);
        out.values.push_back(t.values[e]);
      }
      // Emptied parents keep a dangling node; deeper danglings are zero
      // subtrees themselves and disappear.
      std::set<std::vector<std::int64_t>> dang;
      for (const auto& d : t.dangling)
        if (d.size() <= L) dang.insert(d);
      for (const auto& p : all_parents)
        if (!kept_parents.count(p)) dang.insert(p);
      out.dangling.assign(dang.begin(), dang.end());
      out.levels[L].trimmed = true;
      t = std::move(out);
      return;
    }
    case K::Fill: {
      detail::require_level(t, op.i, "Fill");
      size_t L = op.i;
      auto prefixes = detail::level_prefixes(t, L);
      // Children already present under each prefix.
      std::map<std::vector<std::int64_t>, std::set<std::int64_t>> present;
      for (size_t e = 0; e < t.entry_count(); ++e) {
        auto path = t.entry_coords(e);
        std::vector<std::int64_t> p(path.begin(), path.begin() + L);
        present[p].insert(path[L]);
      }
      for (const auto& d : t.dangling) {
        if (d.size() <= L) continue;
        std::vector<std::int64_t> p(d.begin(), d.begin() + L);
        present[p].insert(d[L]);
      }
      t.levels[L].trimmed = false;
      std::set<std::vector<std::int64_t>> new_dangling(t.dangling.begin(), t.dangling.end());
      for (const auto& p : prefixes) {
        const auto& have = present[p];
        for (std::int64_t c = t.levels[L].bounds.lo; c <= t.levels[L].bounds.hi; ++c) {
          if (have.count(c)) continue;
          auto path = p;
          path.push_back(c);
          detail::insert_zero_subtree(t, path, L + 1, op.fill_mode, new_dangling);
        }
      }
      // Paths longer than L are now represented by stored nodes.
      std::erase_if(new_dangling,
                    [&](const std::vector<std::int64_t>& d) { return d.size() == L; });
      t.dangling.assign(new_dangling.begin(), new_dangling.end());
      sort_entries(t);
      return;
    }
    case K::Merge: {
      detail::require_level(t, op.i, "Merge");
      for (size_t e = 1; e < t.entry_count(); ++e) {
        for (size_t l = 0; l < t.level_count(); ++l) {
          if (t.coords[l][e - 1] < t.coords[l][e]) break;
          if (t.coords[l][e - 1] > t.coords[l][e])
            fail(ErrorKind::InvalidOperation, "Merge requires sorted entries");
        }
      }
      t.levels[op.i].merged = true;
      return;
    }
    case K::Split: {
      // Unfusing shared parents is a no-op on the path representation; childless
      // nodes stay behind as dangling paths (one empty-row node per parent).
      detail::require_level(t, op.i, "Split");
      t.levels[op.i].merged = false;
      return;
    }
    case K::Vectorize: {
      detail::require_level(t, op.i, "Vectorize");
      std::int64_t run = 1;
      for (size_t l = op.i; l < t.level_count(); ++l) {
        if (t.levels[l].trimmed)
          fail(ErrorKind::InvalidOperation, "Vectorize over a trimmed level");
        run *= t.levels[l].bounds.extent();
      }
      std::map<std::vector<std::int64_t>, std::int64_t> counts;
      for (size_t e = 0; e < t.entry_count(); ++e) {
        auto path = t.entry_coords(e);
        path.resize(op.i);
        ++counts[path];
      }
      for (const auto& [p, c] : counts)
        if (c != run)
          fail(ErrorKind::InvalidOperation, "Vectorize over incomplete dense runs");
      for (size_t l = op.i; l < t.level_count(); ++l) t.levels[l].vectorized = true;
      return;
    }
    case K::Devectorize: {
      detail::require_level(t, op.i, "Devectorize");
      for (size_t l = op.i; l < t.level_count(); ++l) t.levels[l].vectorized = false;
      return;
    }
    case K::Pack: {
      detail::require_level(t, op.j, "Pack");
      t.layout.kind = ValueLayoutKind::AoS;
      t.layout.aos_start = op.i;
      t.layout.aos_end = op.j;
      return;
    }
    case K::Partition: {
      detail::require_level(t, op.i, "Partition");
      t.partitions.clear();
      size_t begin = 0;
      for (size_t e = 1; e <= t.entry_count(); ++e) {
        if (e == t.entry_count() || t.coords[op.i][e] != t.coords[op.i][begin]) {
          for (size_t k = begin + 1; k < e; ++k)
            if (t.coords[op.i][k] != t.coords[op.i][begin])
              fail(ErrorKind::InvalidOperation, "Partition requires grouped coordinates");
          t.partitions.push_back({begin, e});
          begin = e;
        }
      }
      return;
    }
    case K::Query: {
      detail::drop_dangling(t);
      QueryInput in;
      in.shape = t.shape;
      in.values = t.values;
      in.logical.resize(t.entry_count());
      for (size_t e = 0; e < t.entry_count(); ++e) {
        auto phys = t.entry_coords(e);
        in.logical[e] = eval_map(op.restore, phys);
      }
      QueryResult res = run_query(in, op.query, ctx.qstate);
      if (!res.produces_column) return;
      LevelMeta meta;
      meta.trimmed = true;
      if (op.query.func == QueryFunc::Schedule) {
        meta.bounds = {0, op.query.partitions - 1};
      } else {
        Interval b{0, -1};
        for (std::int64_t v : res.column) {
          if (b.hi < b.lo) b = {v, v};
          b.lo = std::min(b.lo, v);
          b.hi = std::max(b.hi, v);
        }
        meta.bounds = b;
      }
      t.coords.insert(t.coords.begin() + static_cast<std::ptrdiff_t>(op.insert_pos),
                      res.column);
      t.levels.insert(t.levels.begin() + static_cast<std::ptrdiff_t>(op.insert_pos), meta);
      return;
    }
  }
  fail(ErrorKind::InvalidOperation, "corrupt conversion op");
}

inline void apply_op(WorkingTensor& t, const ConversionOp& op) {
  ApplyContext ctx;
  apply_op(t, op, ctx);
}

// Decomposes an invertible rational matrix into Swap, Scale, and Skew steps
// whose product (first op applied first) equals the matrix. Elimination works
// with integer skews; fractions only appear in Scale factors.
inline std::vector<ConversionOp> decompose_matrix(const RatMatrix& target) {
  if (target.rows() != target.cols())
    fail(ErrorKind::Singular, "only square maps can be decomposed");
  size_t n = target.rows();
  RatMatrix work = target;
  std::vector<ConversionOp> steps;  // reduce work to identity, recording steps

  auto scale_row = [&](size_t r, Rational f) {
    for (size_t j = 0; j < n; ++j) work.at(r, j) *= f;
    steps.push_back(op_scale(r, f));
  };
  auto skew_row = [&](size_t dst, size_t src, std::int64_t f) {
    // row_dst += f * row_src, the matrix of Skew(src, dst, f).
    for (size_t j = 0; j < n; ++j) work.at(dst, j) += Rational(f) * work.at(src, j);
    steps.push_back(op_skew(src, dst, f));
  };
  auto swap_rows = [&](size_t a, size_t b) {
    for (size_t j = 0; j < n; ++j) std::swap(work.at(a, j), work.at(b, j));
    steps.push_back(op_swap(std::min(a, b), std::max(a, b)));
  };

  // Clear denominators per row.
  for (size_t r = 0; r < n; ++r) {
    std::int64_t denom = 1;
    for (size_t j = 0; j < n; ++j) denom = std::lcm(denom, work.at(r, j).den());
    if (denom != 1) scale_row(r, Rational(denom));
  }

  auto as_int = [&](size_t r, size_t c) { return work.at(r, c).as_integer(); };

  for (size_t col = 0; col < n; ++col) {
    // Pivot: smallest magnitude, preferring positive values and low rows.
    size_t best = n;
    for (size_t r = col; r < n; ++r) {
      if (work.at(r, col).is_zero()) continue;
      if (best == n) {
        best = r;
        continue;
      }
      std::int64_t a = as_int(r, col), b = as_int(best, col);
      auto rank = [](std::int64_t v) {
        return std::pair(v < 0 ? -v : v, v < 0 ? 1 : 0);
      };
      if (rank(a) < rank(b)) best = r;
    }
    if (best == n) fail(ErrorKind::Singular, "map matrix is singular");
    if (best != col) swap_rows(best, col);

    // Euclidean elimination below the pivot keeps skews integral.
    for (size_t r = col + 1; r < n; ++r) {
      while (!work.at(r, col).is_zero()) {
        std::int64_t q = floor_div(as_int(r, col), as_int(col, col));
        if (q != 0) skew_row(r, col, -q);
        if (work.at(r, col).is_zero()) break;
        swap_rows(r, col);
      }
    }
  }

  // Back-substitution; scale when the pivot does not divide the entry.
  for (size_t col = n; col-- > 0;) {
    for (size_t r = 0; r < col; ++r) {
      if (work.at(r, col).is_zero()) continue;
      std::int64_t v = as_int(r, col), p = as_int(col, col);
      std::int64_t g = std::gcd(v < 0 ? -v : v, p < 0 ? -p : p);
      if ((p < 0 ? -p : p) != g) scale_row(r, Rational(p / g < 0 ? -(p / g) : p / g));
      skew_row(r, col, -as_int(r, col) / p);
    }
  }
  for (size_t r = 0; r < n; ++r) {
    if (work.at(r, r) != Rational(1)) scale_row(r, Rational(1) / work.at(r, r));
  }

  // steps reduce the target to identity, so the target is the reversed
  // product of their inverses.
  std::vector<ConversionOp> out;
  for (size_t k = steps.size(); k-- > 0;) {
    const ConversionOp& s = steps[k];
    switch (s.kind) {
      case ConversionOp::Kind::Swap:
        out.push_back(s);
        break;
      case ConversionOp::Kind::Scale:
        out.push_back(op_scale(s.i, Rational(1) / s.factor));
        break;
      case ConversionOp::Kind::Skew:
        out.push_back(op_skew(s.i, s.j, -s.skew));
        break;
      default:
        fail(ErrorKind::InvalidOperation, "unexpected op in decomposition");
    }
  }
  return out;
}

// Matrix of one coordinate operator over m levels, acting on column vectors.
inline RatMatrix op_matrix(const ConversionOp& op, size_t m) {
  RatMatrix out = RatMatrix::identity(m);
  switch (op.kind) {
    case ConversionOp::Kind::Swap:
      out.at(op.i, op.i) = 0;
      out.at(op.j, op.j) = 0;
      out.at(op.i, op.j) = 1;
      out.at(op.j, op.i) = 1;
      return out;
    case ConversionOp::Kind::Scale:
      out.at(op.i, op.i) = op.factor;
      return out;
    case ConversionOp::Kind::Skew:
      out.at(op.j, op.i) = op.skew;
      return out;
    default:
      fail(ErrorKind::InvalidOperation, "op has no matrix form");
  }
}

}  // namespace sparseforge
