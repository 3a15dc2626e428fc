#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparseforge/encoding.hpp"
#include "sparseforge/errors.hpp"
#include "sparseforge/index_map.hpp"
#include "sparseforge/matrix.hpp"
#include "sparseforge/operators.hpp"
#include "sparseforge/storage.hpp"
#include "sparseforge/tensor.hpp"

namespace sparseforge {

struct ConversionPlan {
  std::vector<ConversionOp> ops;
};

inline std::vector<std::string> plan_lines(const ConversionPlan& plan) {
  std::vector<std::string> out;
  out.reserve(plan.ops.size());
  for (const auto& op : plan.ops) out.push_back(print_op(op));
  return out;
}

namespace detail {

// A map column kept for alignment: tile mod columns are folded back into
// their div column, whose label remembers the direct position it came from.
struct CoreColumn {
  ExprPtr expr;
  size_t label = 0;  // position within the direct (non-indirect) map
};

struct MapCore {
  std::vector<ExprPtr> direct;       // map without indirect columns
  std::vector<CoreColumn> columns;   // de-tiled columns
  std::vector<TilePair> pairs;       // tile pairs in direct positions
};

inline MapCore map_core(const IndexMap& map) {
  MapCore out;
  for (const auto& e : map.dst)
    if (!is_indirect_expr(e)) out.direct.push_back(e);
  IndexMap direct_map{map.src_rank, out.direct};
  out.pairs = tile_pairs(direct_map);
  for (size_t p = 0; p < out.direct.size(); ++p) {
    bool is_mod = false, is_div = false;
    ExprPtr inner;
    for (const auto& pr : out.pairs) {
      if (pr.mod_pos == p) is_mod = true;
      if (pr.div_pos == p) {
        is_div = true;
        inner = pr.inner;
      }
    }
    if (is_mod) continue;
    out.columns.push_back({is_div ? inner : out.direct[p], p});
  }
  return out;
}

// First level of the trailing dense-vector run, if the format has one.
inline std::optional<size_t> vector_tail(const StorageScheme& scheme) {
  for (size_t l = 0; l < scheme.levels.size(); ++l)
    if (scheme.levels[l].dense_vector) return l;
  return std::nullopt;
}

// Structure after conversion: levels that keep storing explicit coordinates.
// Indirect levels and levels one-to-one with them stay coordinate lists even
// when the mutation range leaves them untrimmed.
inline std::vector<bool> structural_trimmed(const FormatEncoding& enc) {
  auto cls = classify_levels(enc);
  std::vector<bool> out(enc.map.dst.size());
  for (size_t l = 0; l < out.size(); ++l)
    out[l] = enc.mutation.trimmed(l) || cls[l].indirect || cls[l].tainted;
  return out;
}

inline void emit_layout(const FormatEncoding& dst, std::vector<ConversionOp>& ops) {
  if (dst.layout.has_pack) ops.push_back(op_pack(dst.layout.pack_start, dst.layout.pack_end));
  if (dst.layout.has_partition) ops.push_back(op_partition(dst.layout.partition_level));
}

}  // namespace detail

// Builds the op sequence turning a tensor stored as src into one stored as
// dst. Sources with indirect levels or a value layout cannot be expanded
// generically and are rejected; conversions from such formats go through a
// reference format instead.
inline ConversionPlan plan_conversion(const FormatEncoding& src, const FormatEncoding& dst) {
  if (has_indirect(src.map))
    fail(ErrorKind::UnsupportedSource, "conversion from a format with indirect levels");
  if (has_layout(src))
    fail(ErrorKind::UnsupportedSource, "conversion from a format with a value layout");

  ConversionPlan plan;
  auto& ops = plan.ops;
  StorageScheme src_scheme = infer_storage(src);
  StorageScheme dst_scheme = infer_storage(dst);
  auto src_tail = detail::vector_tail(src_scheme);
  auto dst_tail = detail::vector_tail(dst_scheme);
  std::vector<bool> dst_struct = detail::structural_trimmed(dst);
  size_t dst_rank = dst.map.dst.size();

  if (map_equal(src.map, dst.map)) {
    // Structure-only conversion: adjust flags level by level.
    size_t n = src.map.dst.size();
    bool keep_vector = src_tail && dst_tail && *src_tail == *dst_tail;
    std::vector<bool> cur_trimmed(n), cur_merged(n);
    for (size_t l = 0; l < n; ++l) {
      cur_trimmed[l] = src.mutation.trimmed(l);
      cur_merged[l] = src.mutation.merged(l);
    }
    if (src_tail && !keep_vector) ops.push_back(op_devectorize(*src_tail));
    for (size_t l = n; l-- > 0;)
      if (cur_merged[l] && !dst.mutation.merged(l)) ops.push_back(op_split(l));
    for (size_t l = n; l-- > 0;)
      if (dst_struct[l] && !cur_trimmed[l]) ops.push_back(op_trim(l));
    for (size_t l = n; l-- > 0;)
      if (!dst_struct[l] && cur_trimmed[l]) ops.push_back(op_fill(l));
    if (dst_tail && !keep_vector) ops.push_back(op_vectorize(*dst_tail));
    for (size_t l = 0; l < n; ++l)
      if (dst.mutation.merged(l) && !cur_merged[l]) ops.push_back(op_merge(l));
    detail::emit_layout(dst, ops);
    return plan;
  }

  // Stage one: normalize the source to fully split, fully trimmed columns.
  size_t src_rank_levels = src.map.dst.size();
  if (src_tail) ops.push_back(op_devectorize(*src_tail));
  for (size_t l = src_rank_levels; l-- > 0;)
    if (src.mutation.merged(l)) ops.push_back(op_split(l));
  for (size_t l = src_rank_levels; l-- > 0;)
    if (!src.mutation.trimmed(l)) ops.push_back(op_trim(l));

  // Stage two: align the coordinate columns with the target map.
  detail::MapCore src_core = detail::map_core(src.map);
  detail::MapCore dst_core = detail::map_core(dst.map);
  if (src_core.columns.size() != src.map.src_rank || dst_core.columns.size() != dst.map.src_rank ||
      src.map.src_rank != dst.map.src_rank)
    fail(ErrorKind::InvalidOperation, "maps do not cover the same dimension space");

  // Fold source tiles back together; mod columns first move next to their div.
  {
    std::vector<size_t> labels(src_core.direct.size());
    for (size_t p = 0; p < labels.size(); ++p) labels[p] = p;
    auto index_of = [&](size_t label) {
      for (size_t k = 0; k < labels.size(); ++k)
        if (labels[k] == label) return k;
      fail(ErrorKind::InvalidOperation, "lost track of a map column");
    };
    for (const auto& pr : src_core.pairs) {
      size_t div_at = index_of(pr.div_pos);
      size_t mod_at = index_of(pr.mod_pos);
      if (mod_at != div_at + 1) {
        ops.push_back(op_swap(std::min(div_at + 1, mod_at), std::max(div_at + 1, mod_at)));
        std::swap(labels[div_at + 1], labels[mod_at]);
        div_at = index_of(pr.div_pos);
      }
      ops.push_back(op_tile_union(div_at, pr.factor));
      labels.erase(labels.begin() + static_cast<std::ptrdiff_t>(div_at) + 1);
    }
    // Columns now follow source core order; restore it by label order.
    std::vector<size_t> want;
    for (const auto& c : src_core.columns) want.push_back(c.label);
    for (size_t pos = 0; pos < want.size(); ++pos) {
      size_t at = index_of(want[pos]);
      if (at != pos) {
        ops.push_back(op_swap(std::min(pos, at), std::max(pos, at)));
        std::swap(labels[pos], labels[at]);
      }
    }
  }

  IndexMap src_core_map{src.map.src_rank, {}};
  for (const auto& c : src_core.columns) src_core_map.dst.push_back(c.expr);
  IndexMap dst_core_map{dst.map.src_rank, {}};
  for (const auto& c : dst_core.columns) dst_core_map.dst.push_back(c.expr);
  RatMatrix as = index_map_matrix(src_core_map);
  RatMatrix at = index_map_matrix(dst_core_map);
  RatMatrix trans = at * as.inverse();
  if (!(trans == RatMatrix::identity(trans.rows())))
    for (auto& op : decompose_matrix(trans)) ops.push_back(op);

  // Re-tile for the target and put every column in target direct order.
  {
    std::vector<size_t> labels;
    for (const auto& c : dst_core.columns) labels.push_back(c.label);
    auto index_of = [&](size_t label) {
      for (size_t k = 0; k < labels.size(); ++k)
        if (labels[k] == label) return k;
      fail(ErrorKind::InvalidOperation, "lost track of a map column");
    };
    std::vector<TilePair> pairs = dst_core.pairs;
    std::sort(pairs.begin(), pairs.end(),
              [](const TilePair& a, const TilePair& b) { return a.div_pos < b.div_pos; });
    for (const auto& pr : pairs) {
      size_t at_idx = index_of(pr.div_pos);
      ops.push_back(op_tile_split(at_idx, pr.factor));
      labels.insert(labels.begin() + static_cast<std::ptrdiff_t>(at_idx) + 1, pr.mod_pos);
    }
    for (size_t pos = 0; pos < labels.size(); ++pos) {
      size_t at_idx = index_of(pos);
      if (at_idx != pos) {
        ops.push_back(op_swap(std::min(pos, at_idx), std::max(pos, at_idx)));
        std::swap(labels[pos], labels[at_idx]);
      }
    }
  }

  // Indirect levels: run the query chain and insert produced columns at
  // their map positions, lowest first.
  if (!dst.queries.empty()) {
    IndexMap direct_map{dst.map.src_rank, dst_core.direct};
    IndexMap restore = invert_map(direct_map);
    std::vector<size_t> slots = indirect_positions(dst.map);
    size_t next_slot = 0;
    for (const auto& q : dst.queries) {
      ConversionOp op;
      op.kind = ConversionOp::Kind::Query;
      op.query = q;
      op.restore = restore;
      if (q.func == QueryFunc::Enumerate || q.func == QueryFunc::Schedule)
        op.insert_pos = slots.at(next_slot++);
      ops.push_back(op);
    }
  }
  ops.push_back(op_sort());

  // Stage three: grow the target structure. Everything is trimmed at this
  // point, so only fills, the vector tail, merges, and layout remain.
  bool need_pad_path = false;
  {
    auto cls = classify_levels(dst);
    for (size_t l = 0; l < dst_rank; ++l) need_pad_path |= cls[l].tainted;
  }
  for (size_t l = dst_rank; l-- > 0;) {
    if (dst_struct[l]) continue;
    ops.push_back(op_fill(l, need_pad_path ? ConversionOp::FillMode::PadPath
                                           : ConversionOp::FillMode::Subtree));
  }
  if (dst_tail) ops.push_back(op_vectorize(*dst_tail));
  for (size_t l = 0; l < dst_rank; ++l)
    if (dst.mutation.merged(l)) ops.push_back(op_merge(l));
  detail::emit_layout(dst, ops);
  return plan;
}

inline void apply_plan(WorkingTensor& t, const ConversionPlan& plan) {
  ApplyContext ctx;
  for (const auto& op : plan.ops) apply_op(t, op, ctx);
}

// Conversion end to end: t must currently have the structure described by
// src; afterwards it has the structure described by dst.
inline void convert_structure(WorkingTensor& t, const FormatEncoding& src,
                              const FormatEncoding& dst) {
  ConversionPlan plan = plan_conversion(src, dst);
  apply_plan(t, plan);
}

}  // namespace sparseforge
