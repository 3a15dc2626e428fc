#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparseforge/index_map.hpp"

namespace sparseforge {

enum class QueryFunc { Sum, Enumerate, Reorder, Schedule };

// Comparison in a value-map case: ne, eq, bt (greater), be (greater or
// equal), lt, le.
enum class CondOp { Ne, Eq, Bt, Be, Lt, Le };

inline bool eval_cond(CondOp op, double lhs, std::int64_t rhs) {
  double r = static_cast<double>(rhs);
  switch (op) {
    case CondOp::Ne: return lhs != r;
    case CondOp::Eq: return lhs == r;
    case CondOp::Bt: return lhs > r;
    case CondOp::Be: return lhs >= r;
    case CondOp::Lt: return lhs < r;
    case CondOp::Le: return lhs <= r;
  }
  return false;
}

// One "cond -> result" case. The condition variable is either the element
// value or one of its logical coordinates; the result is a literal or sumVal,
// the group total of the closest preceding sum query in the chain.
struct ValueCase {
  bool on_value = true;
  std::int64_t var_dim = 0;
  CondOp op = CondOp::Ne;
  std::int64_t rhs = 0;
  bool yields_sum = false;
  std::int64_t result = 0;
};

struct ValueMapSpec {
  std::vector<ValueCase> cases;
  bool otherwise_yields_sum = false;
  std::int64_t otherwise = 0;
};

// Counts nonzero elements: value ne 0 -> 1 | otherwise -> 0.
inline ValueMapSpec default_value_map() {
  ValueMapSpec vm;
  vm.cases.push_back({true, 0, CondOp::Ne, 0, false, 1});
  return vm;
}

struct QuerySpec {
  QueryFunc func = QueryFunc::Sum;
  bool var_is_value = true;     // query variable: value or a logical dim
  std::int64_t var_dim = 0;
  std::optional<IndexMap> group_by;     // defaults to grouping by var_dim
  std::optional<IndexMap> traverse_by;  // defaults to group order
  std::int64_t partitions = 2;          // schedule only
  std::optional<ValueMapSpec> value_map;

  ValueMapSpec effective_value_map() const {
    return value_map ? *value_map : default_value_map();
  }
};

inline std::string query_func_name(QueryFunc f) {
  switch (f) {
    case QueryFunc::Sum: return "sum";
    case QueryFunc::Enumerate: return "enum";
    case QueryFunc::Reorder: return "reorder";
    case QueryFunc::Schedule: return "schedule";
  }
  return "?";
}

inline std::string cond_op_name(CondOp op) {
  switch (op) {
    case CondOp::Ne: return "ne";
    case CondOp::Eq: return "eq";
    case CondOp::Bt: return "bt";
    case CondOp::Be: return "be";
    case CondOp::Lt: return "lt";
    case CondOp::Le: return "le";
  }
  return "?";
}

}  // namespace sparseforge
