#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sparseforge/errors.hpp"
#include "sparseforge/query.hpp"
#include "sparseforge/tensor.hpp"

namespace sparseforge {

// Queries run over the logical view of a tensor: one row of logical
// coordinates plus a value per element.
struct QueryInput {
  TensorShape shape;
  std::vector<std::vector<std::int64_t>> logical;  // [element][dim]
  std::vector<double> values;

  size_t size() const { return values.size(); }
};

using GroupKey = std::vector<std::int64_t>;

// State threaded through a query chain: the latest sum feeds sumVal in later
// value maps, the latest reorder fixes the schedule visit order.
struct QueryChainState {
  std::optional<IndexMap> sum_group_by;
  std::map<GroupKey, std::int64_t> sums;
  std::optional<IndexMap> reorder_group_by;
  std::map<GroupKey, std::int64_t> ranks;
};

namespace detail {

inline GroupKey key_of(const std::optional<IndexMap>& group_by, bool var_is_value,
                       std::int64_t var_dim, std::span<const std::int64_t> logical) {
  if (group_by) {
    auto v = eval_map(*group_by, logical);
    return GroupKey(v.begin(), v.end());
  }
  if (var_is_value) return {};
  return {logical[static_cast<size_t>(var_dim)]};
}

inline bool dense_group_domain(const QuerySpec& q) {
  if (!q.group_by) return !q.var_is_value;
  for (const auto& e : q.group_by->dst)
    if (e->kind != DimExpr::Kind::Dim) return false;
  return true;
}

// All keys of a dense bare-dim group domain, in ascending order.
inline std::vector<GroupKey> dense_group_keys(const QuerySpec& q, const TensorShape& shape) {
  std::vector<std::int64_t> extents;
  if (q.group_by) {
    for (const auto& e : q.group_by->dst)
      extents.push_back(shape.extents[static_cast<size_t>(e->value)]);
  } else {
    extents.push_back(shape.extents[static_cast<size_t>(q.var_dim)]);
  }
  std::vector<GroupKey> keys;
  GroupKey cur(extents.size(), 0);
  while (true) {
    keys.push_back(cur);
    size_t l = extents.size();
    while (l-- > 0) {
      if (++cur[l] < extents[l]) break;
      cur[l] = 0;
      if (l == 0) return keys;
    }
    if (extents.empty()) return keys;
  }
}

// Rebuilds a representative logical coordinate from a bare-dim group key, for
// evaluating traverse maps of element-free groups.
inline std::vector<std::int64_t> representative(const QuerySpec& q, const GroupKey& key,
                                                size_t rank) {
  std::vector<std::int64_t> coords(rank, 0);
  if (q.group_by) {
    for (size_t i = 0; i < q.group_by->dst.size(); ++i)
      coords[static_cast<size_t>(q.group_by->dst[i]->value)] = key[i];
  } else if (!q.var_is_value) {
    coords[static_cast<size_t>(q.var_dim)] = key[0];
  }
  return coords;
}

inline std::int64_t sumval_for(const QueryChainState& state, bool var_is_value,
                               std::int64_t var_dim,
                               std::span<const std::int64_t> logical) {
  GroupKey key = key_of(state.sum_group_by, var_is_value, var_dim, logical);
  auto it = state.sums.find(key);
  return it == state.sums.end() ? 0 : it->second;
}

inline std::int64_t apply_value_map(const ValueMapSpec& vm, double value,
                                    std::span<const std::int64_t> logical,
                                    std::int64_t sumval) {
  for (const auto& c : vm.cases) {
    double lhs = c.on_value ? value
                            : static_cast<double>(logical[static_cast<size_t>(c.var_dim)]);
    if (eval_cond(c.op, lhs, c.rhs)) return c.yields_sum ? sumval : c.result;
  }
  return vm.otherwise_yields_sum ? sumval : vm.otherwise;
}

inline std::map<GroupKey, std::int64_t> group_totals(const QueryInput& in,
                                                     const QuerySpec& q,
                                                     const QueryChainState& state) {
  std::map<GroupKey, std::int64_t> totals;
  if (dense_group_domain(q))
    for (const auto& k : dense_group_keys(q, in.shape)) totals[k] = 0;
  ValueMapSpec vm = q.effective_value_map();
  for (size_t e = 0; e < in.size(); ++e) {
    GroupKey key = key_of(q.group_by, q.var_is_value, q.var_dim, in.logical[e]);
    std::int64_t sv = detail::sumval_for(state, q.var_is_value, q.var_dim, in.logical[e]);
    totals[key] += apply_value_map(vm, in.values[e], in.logical[e], sv);
  }
  return totals;
}

// Groups sorted by descending weight, ties by ascending key.
inline std::vector<GroupKey> weight_order(const std::map<GroupKey, std::int64_t>& totals) {
  std::vector<GroupKey> order;
  for (const auto& [k, w] : totals) order.push_back(k);
  std::stable_sort(order.begin(), order.end(), [&](const GroupKey& a, const GroupKey& b) {
    std::int64_t wa = totals.at(a), wb = totals.at(b);
    if (wa != wb) return wa > wb;
    return a < b;
  });
  return order;
}

}  // namespace detail

// Result of one executed query. Producers (enum, schedule) fill the
// per-element column; every query fills the report table for inspection.
struct QueryResult {
  bool produces_column = false;
  std::vector<std::int64_t> column;
  std::vector<std::pair<GroupKey, std::int64_t>> report;
};

inline QueryResult run_query(const QueryInput& in, const QuerySpec& q,
                             QueryChainState& state) {
  QueryResult out;
  switch (q.func) {
    case QueryFunc::Sum: {
      auto totals = detail::group_totals(in, q, state);
      state.sum_group_by = q.group_by;
      if (!q.group_by && !q.var_is_value) {
        IndexMap g;
        g.src_rank = in.shape.rank();
        g.dst.push_back(dim_ref(q.var_dim));
        state.sum_group_by = g;
      }
      state.sums = totals;
      for (const auto& [k, v] : totals) out.report.push_back({k, v});
      return out;
    }
    case QueryFunc::Enumerate: {
      // Number distinct traverse keys per (group, start class), in traverse
      // order, on top of the class start value.
      ValueMapSpec vm = q.effective_value_map();
      struct Slot {
        GroupKey group;
        std::int64_t start;
        std::vector<std::int64_t> traverse;
      };
      std::map<std::pair<GroupKey, std::int64_t>,
               std::map<std::vector<std::int64_t>, std::int64_t>>
          numbering;
      out.produces_column = true;
      out.column.resize(in.size());
      std::vector<Slot> slots(in.size());
      for (size_t e = 0; e < in.size(); ++e) {
        Slot& s = slots[e];
        s.group = detail::key_of(q.group_by, q.var_is_value, q.var_dim, in.logical[e]);
        std::int64_t sv =
            detail::sumval_for(state, q.var_is_value, q.var_dim, in.logical[e]);
        s.start = detail::apply_value_map(vm, in.values[e], in.logical[e], sv);
        s.traverse = q.traverse_by ? eval_map(*q.traverse_by, in.logical[e])
                                   : in.logical[e];
        numbering[{s.group, s.start}][s.traverse] = 0;
      }
      for (auto& [cls, keys] : numbering) {
        std::int64_t n = 0;
        for (auto& [k, ord] : keys) ord = n++;
      }
      for (size_t e = 0; e < in.size(); ++e) {
        const Slot& s = slots[e];
        out.column[e] = s.start + numbering[{s.group, s.start}][s.traverse];
        out.report.push_back({{static_cast<std::int64_t>(e)}, out.column[e]});
      }
      return out;
    }
    case QueryFunc::Reorder: {
      auto totals = detail::group_totals(in, q, state);
      auto order = detail::weight_order(totals);
      state.reorder_group_by = q.group_by;
      if (!q.group_by && !q.var_is_value) {
        IndexMap g;
        g.src_rank = in.shape.rank();
        g.dst.push_back(dim_ref(q.var_dim));
        state.reorder_group_by = g;
      }
      state.ranks.clear();
      for (size_t i = 0; i < order.size(); ++i) {
        state.ranks[order[i]] = static_cast<std::int64_t>(i);
        out.report.push_back({{static_cast<std::int64_t>(i)},
                              order[i].size() == 1 ? order[i][0] : 0});
      }
      return out;
    }
    case QueryFunc::Schedule: {
      auto totals = detail::group_totals(in, q, state);

      // Visit order: the reorder permutation when one precedes in the chain,
      // otherwise ascending (traverse key, group key).
      std::vector<GroupKey> visit;
      for (const auto& [k, w] : totals) visit.push_back(k);
      if (!state.ranks.empty()) {
        std::stable_sort(visit.begin(), visit.end(),
                         [&](const GroupKey& a, const GroupKey& b) {
                           auto ra = state.ranks.find(a), rb = state.ranks.find(b);
                           std::int64_t va = ra == state.ranks.end() ? INT64_MAX : ra->second;
                           std::int64_t vb = rb == state.ranks.end() ? INT64_MAX : rb->second;
                           if (va != vb) return va < vb;
                           return a < b;
                         });
      } else if (q.traverse_by) {
        std::map<GroupKey, std::vector<std::int64_t>> tkey;
        for (const auto& k : visit)
          tkey[k] = eval_map(*q.traverse_by,
                             detail::representative(q, k, in.shape.rank()));
        for (size_t e = 0; e < in.size(); ++e) {
          GroupKey k = detail::key_of(q.group_by, q.var_is_value, q.var_dim, in.logical[e]);
          auto t = eval_map(*q.traverse_by, in.logical[e]);
          if (tkey[k] > t) tkey[k] = t;
        }
        std::stable_sort(visit.begin(), visit.end(),
                         [&](const GroupKey& a, const GroupKey& b) {
                           if (tkey[a] != tkey[b]) return tkey[a] < tkey[b];
                           return a < b;
                         });
      }

      std::vector<std::int64_t> load(static_cast<size_t>(q.partitions), 0);
      std::map<GroupKey, std::int64_t> part;
      for (const auto& k : visit) {
        size_t best = 0;
        for (size_t p = 1; p < load.size(); ++p)
          if (load[p] < load[best]) best = p;
        part[k] = static_cast<std::int64_t>(best);
        load[best] += totals.at(k);
      }
      out.produces_column = true;
      out.column.resize(in.size());
      for (size_t e = 0; e < in.size(); ++e) {
        GroupKey k = detail::key_of(q.group_by, q.var_is_value, q.var_dim, in.logical[e]);
        out.column[e] = part.at(k);
      }
      for (const auto& [k, p] : part) out.report.push_back({k, p});
      return out;
    }
  }
  fail(ErrorKind::InvalidOperation, "corrupt query");
}

// Runs a whole chain; returns one result per query, producers carrying their
// per-element columns.
inline std::vector<QueryResult> run_query_chain(const QueryInput& in,
                                                const std::vector<QuerySpec>& chain) {
  QueryChainState state;
  std::vector<QueryResult> out;
  for (const auto& q : chain) out.push_back(run_query(in, q, state));
  return out;
}

}  // namespace sparseforge
