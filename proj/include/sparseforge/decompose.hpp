#pragma once

#include <cstdint>
#include <map>
#include <utility>

#include "sparseforge/errors.hpp"
#include "sparseforge/query.hpp"
#include "sparseforge/query_engine.hpp"
#include "sparseforge/tensor.hpp"

namespace sparseforge {

// Splits a tensor in two by a sum query: groups whose total reaches the
// threshold are selected, the rest remain. Hybrid formats store the selected
// part in a padded format and the remainder in a general one.
struct DecomposeRule {
  QuerySpec query;            // must be a Sum query
  std::int64_t min_sum = 1;   // selection threshold on the group total
};

struct DecomposeResult {
  WorkingTensor selected;
  WorkingTensor remainder;
  std::map<GroupKey, std::int64_t> totals;
};

// Expects t in expanded coordinate form with identity columns (every level
// a logical dimension), the shape produced by from_coo.
inline DecomposeResult decompose(const WorkingTensor& t, const DecomposeRule& rule) {
  if (rule.query.func != QueryFunc::Sum)
    fail(ErrorKind::InvalidOperation, "decompose is driven by a sum query");
  if (t.level_count() != t.shape.rank())
    fail(ErrorKind::InvalidOperation, "decompose expects coordinate-form input");

  QueryInput in;
  in.shape = t.shape;
  in.values = t.values;
  in.logical.resize(t.entry_count());
  for (size_t e = 0; e < t.entry_count(); ++e) in.logical[e] = t.entry_coords(e);

  QueryChainState state;
  DecomposeResult out;
  out.totals = detail::group_totals(in, rule.query, state);

  out.selected = t;
  out.remainder = t;
  for (auto* part : {&out.selected, &out.remainder}) {
    for (auto& c : part->coords) c.clear();
    part->values.clear();
    part->dangling.clear();
  }
  for (size_t e = 0; e < t.entry_count(); ++e) {
    GroupKey key = detail::key_of(rule.query.group_by, rule.query.var_is_value,
                                  rule.query.var_dim, in.logical[e]);
    auto it = out.totals.find(key);
    std::int64_t total = it == out.totals.end() ? 0 : it->second;
    WorkingTensor& part = total >= rule.min_sum ? out.selected : out.remainder;
    for (size_t l = 0; l < t.level_count(); ++l) part.coords[l].push_back(t.coords[l][e]);
    part.values.push_back(t.values[e]);
  }
  return out;
}

}  // namespace sparseforge
