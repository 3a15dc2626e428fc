#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparseforge/errors.hpp"
#include "sparseforge/index_map.hpp"
#include "sparseforge/query.hpp"

namespace sparseforge {

// Mutation primitives of an encoding: a contiguous trimmed level range and a
// set of merged levels.
struct MutationSpec {
  bool has_trim = false;
  size_t trim_start = 0;
  size_t trim_end = 0;
  std::vector<size_t> merges;

  bool trimmed(size_t level) const {
    return has_trim && level >= trim_start && level <= trim_end;
  }
  bool merged(size_t level) const {
    for (size_t m : merges)
      if (m == level) return true;
    return false;
  }
};

// Layout primitives: value packing (AoS over a level span) and a partitioned
// value array keyed by one level's coordinate.
struct LayoutSpec {
  bool has_pack = false;
  size_t pack_start = 0;
  size_t pack_end = 0;
  bool has_partition = false;
  size_t partition_level = 0;
};

struct FormatEncoding {
  IndexMap map;
  MutationSpec mutation;
  LayoutSpec layout;
  std::vector<QuerySpec> queries;  // indirect chain, evaluated in order

  size_t levels() const { return m_levels(); }

 private:
  size_t m_levels() const { return map.dst.size(); }
};

// Structural classification of one level, the basis for storage inference and
// conversion planning.
struct LevelClass {
  bool trimmed = false;   // inside the trim range
  bool merged = false;
  bool indirect = false;  // expression is an indirect reference
  bool tainted = false;   // direct dim consumed by an indirect reference
};

inline std::vector<LevelClass> classify_levels(const FormatEncoding& enc) {
  std::vector<LevelClass> out(enc.map.dst.size());
  std::vector<ExprPtr> indirect_args;
  for (const auto& e : enc.map.dst)
    if (is_indirect_expr(e))
      for (const auto& a : e->args) indirect_args.push_back(a);
  for (size_t i = 0; i < out.size(); ++i) {
    out[i].trimmed = enc.mutation.trimmed(i);
    out[i].merged = enc.mutation.merged(i);
    out[i].indirect = is_indirect_expr(enc.map.dst[i]);
    for (const auto& a : indirect_args)
      if (!out[i].indirect && expr_equal(enc.map.dst[i], a)) out[i].tainted = true;
  }
  return out;
}

inline void validate_encoding(const FormatEncoding& enc) {
  size_t n = enc.map.dst.size();
  if (n == 0) fail(ErrorKind::Parse, "encoding has no levels");
  if (enc.mutation.has_trim &&
      (enc.mutation.trim_start > enc.mutation.trim_end || enc.mutation.trim_end >= n))
    fail(ErrorKind::Parse, "trim range out of bounds");
  for (size_t m : enc.mutation.merges)
    if (m >= n) fail(ErrorKind::Parse, "merge level out of bounds");
  if (enc.layout.has_pack &&
      (enc.layout.pack_start > enc.layout.pack_end || enc.layout.pack_end >= n))
    fail(ErrorKind::Parse, "pack range out of bounds");
  if (enc.layout.has_partition && enc.layout.partition_level >= n)
    fail(ErrorKind::Parse, "partition level out of bounds");

  size_t producers = 0;
  for (const auto& q : enc.queries)
    if (q.func == QueryFunc::Enumerate || q.func == QueryFunc::Schedule) ++producers;
  size_t slots = indirect_positions(enc.map).size();
  if (producers != slots)
    fail(ErrorKind::Parse,
         "indirect levels and producing queries disagree: " + std::to_string(slots) +
             " level(s), " + std::to_string(producers) + " enum/schedule quer" +
             (producers == 1 ? "y" : "ies"));
  for (const auto& q : enc.queries) {
    if (q.func == QueryFunc::Schedule && q.partitions < 1)
      fail(ErrorKind::Parse, "schedule needs at least one partition");
    if (q.group_by && q.group_by->src_rank != enc.map.src_rank)
      fail(ErrorKind::Parse, "query groupBy rank mismatch");
    if (q.traverse_by && q.traverse_by->src_rank != enc.map.src_rank)
      fail(ErrorKind::Parse, "query traverseBy rank mismatch");
  }
}

inline bool has_layout(const FormatEncoding& enc) {
  return enc.layout.has_pack || enc.layout.has_partition;
}

}  // namespace sparseforge
