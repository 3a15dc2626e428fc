// Query engine tests against the frozen statistics of the example matrix:
// group sums, value maps, slot enumeration, weight-ordered reordering, and
// balanced scheduling, both standalone and chained.

#include <cstdint>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "oracle_data.hpp"
#include "sparseforge/formats.hpp"
#include "sparseforge/parse.hpp"
#include "sparseforge/query_engine.hpp"

namespace {

using namespace sparseforge;
using std::int64_t;

QueryInput oracle_input() {
  QueryInput in;
  in.shape = TensorShape{{oracle::rows_a, oracle::cols_a}};
  for (size_t e = 0; e < oracle::coo_val.size(); ++e) {
    in.logical.push_back({oracle::coo_d0[e], oracle::coo_d1[e]});
    in.values.push_back(oracle::coo_val[e]);
  }
  return in;
}

std::map<GroupKey, int64_t> as_map(const QueryResult& r) {
  return std::map<GroupKey, int64_t>(r.report.begin(), r.report.end());
}

TEST(Query, SumPerRowCountsNonzeros) {
  QueryChainState state;
  QuerySpec q = parse_query("sum(value) groupBy (d0, d1) -> (d0)");
  QueryResult r = run_query(oracle_input(), q, state);
  EXPECT_FALSE(r.produces_column);
  // Bare-dim grouping covers the whole dimension, including the empty row.
  ASSERT_EQ(r.report.size(), static_cast<size_t>(oracle::rows_a));
  for (int64_t row = 0; row < oracle::rows_a; ++row)
    EXPECT_EQ(as_map(r).at({row}), oracle::row_nnz[static_cast<size_t>(row)]) << row;
}

TEST(Query, SumPerDiagonalSkipsEmptyGroups) {
  QueryChainState state;
  QuerySpec q = parse_query("sum(value) groupBy (d0, d1) -> (d1-d0)");
  QueryResult r = run_query(oracle_input(), q, state);
  // Arithmetic group keys enumerate only groups that hold elements.
  ASSERT_EQ(r.report.size(), oracle::diag_nnz.size());
  for (const auto& [offset, count] : oracle::diag_nnz)
    EXPECT_EQ(as_map(r).at({offset}), count) << offset;
}

TEST(Query, SumOverDimVariable) {
  // sum(d0) groups by the named dim directly, dense over its extent.
  QueryChainState state;
  QuerySpec q = parse_query("sum(d0)");
  QueryResult r = run_query(oracle_input(), q, state);
  ASSERT_EQ(r.report.size(), static_cast<size_t>(oracle::rows_a));
  EXPECT_EQ(as_map(r).at({2}), 3);
  EXPECT_EQ(as_map(r).at({3}), 0);
}

TEST(Query, ValueMapConditions) {
  QueryChainState state;
  QuerySpec big = parse_query(
      "sum(value) groupBy (d0, d1) -> (d0) with value bt 3 -> 1 | otherwise -> 0");
  QueryResult r = run_query(oracle_input(), big, state);
  // Values above 3 sit at rows 2 (4 and 5) and 4 (6).
  EXPECT_EQ(as_map(r).at({2}), 2);
  EXPECT_EQ(as_map(r).at({4}), 1);
  EXPECT_EQ(as_map(r).at({0}), 0);

  QuerySpec left = parse_query(
      "sum(value) groupBy (d0, d1) -> (d0) with d1 le 1 -> 1 | otherwise -> 0");
  QueryResult rl = run_query(oracle_input(), left, state);
  EXPECT_EQ(as_map(rl).at({0}), 1);
  EXPECT_EQ(as_map(rl).at({2}), 1);
  EXPECT_EQ(as_map(rl).at({4}), 0);

  QuerySpec weighted = parse_query("sum(value) groupBy (d0, d1) -> (d0) "
                                   "with value ne 0 -> 2 | otherwise -> 0");
  QueryResult rw = run_query(oracle_input(), weighted, state);
  EXPECT_EQ(as_map(rw).at({2}), 6);
}

TEST(Query, EnumerateAssignsSlotsInTraverseOrder) {
  QueryChainState state;
  QuerySpec q = parse_query(
      "enum(value) groupBy (d0, d1) -> (d0) traverseBy (d0, d1) -> (d1)");
  QueryResult r = run_query(oracle_input(), q, state);
  ASSERT_TRUE(r.produces_column);
  EXPECT_EQ(r.column, oracle::ell_slot_of_entry);
}

TEST(Query, EnumerateSlotChainMatchesPaddedRowFormat) {
  // The count + slot chain of the padded-row format, run end to end.
  std::vector<QuerySpec> chain = {
      parse_query(sparseforge::detail::count_query("d0")),
      parse_query(sparseforge::detail::slot_query("d0", "d1")),
  };
  auto results = run_query_chain(oracle_input(), chain);
  ASSERT_EQ(results.size(), 2u);
  EXPECT_EQ(results[1].column, oracle::ell_slot_of_entry);
}

TEST(Query, ReorderSortsByWeight) {
  QueryChainState state;
  QuerySpec q = parse_query("reorder(d0) traverseBy (d0, d1) -> (d0)");
  QueryResult r = run_query(oracle_input(), q, state);
  ASSERT_EQ(r.report.size(), static_cast<size_t>(oracle::rows_a));
  for (size_t i = 0; i < r.report.size(); ++i) {
    EXPECT_EQ(r.report[i].first, (GroupKey{static_cast<int64_t>(i)}));
    EXPECT_EQ(r.report[i].second, oracle::reorder_rows[i]) << i;
  }
}

TEST(Query, ScheduleBalancesNaturalOrder) {
  QueryChainState state;
  QuerySpec q = parse_query(
      "schedule(d0) traverseBy (d0, d1) -> (d0/2) partitions=2");
  QueryResult r = run_query(oracle_input(), q, state);
  ASSERT_TRUE(r.produces_column);
  auto part = as_map(r);
  for (int64_t row = 0; row < oracle::rows_a; ++row)
    EXPECT_EQ(part.at({row}), oracle::natural_partition_of_row[static_cast<size_t>(row)])
        << row;
  std::vector<int64_t> loads(2, 0);
  for (int64_t row = 0; row < oracle::rows_a; ++row)
    loads[static_cast<size_t>(part.at({row}))] += oracle::row_nnz[static_cast<size_t>(row)];
  std::sort(loads.begin(), loads.end(), std::greater<>());
  EXPECT_EQ(loads, oracle::natural_loads);
}

TEST(Query, ScheduleAfterReorderUsesWeightOrder) {
  // The balanced variant: visiting heavy rows first evens out the loads.
  std::vector<QuerySpec> chain = {
      parse_query(sparseforge::detail::count_query("d0")),
      parse_query("reorder(d0) traverseBy (d0, d1) -> (d0)"),
      parse_query("schedule(d0) traverseBy (d0, d1) -> (d0/2) partitions=2"),
  };
  auto results = run_query_chain(oracle_input(), chain);
  auto part = as_map(results[2]);
  for (int64_t row = 0; row < oracle::rows_a; ++row)
    EXPECT_EQ(part.at({row}), oracle::schedule_partition_of_row[static_cast<size_t>(row)])
        << row;
  std::vector<int64_t> loads(2, 0);
  for (int64_t row = 0; row < oracle::rows_a; ++row)
    loads[static_cast<size_t>(part.at({row}))] += oracle::row_nnz[static_cast<size_t>(row)];
  std::sort(loads.begin(), loads.end(), std::greater<>());
  EXPECT_EQ(loads, oracle::schedule_loads);
}

TEST(Query, SumValPullsFromPrecedingSum) {
  // Start classes: zero-valued elements begin at the row's nonzero count.
  std::vector<QuerySpec> chain = {
      parse_query(sparseforge::detail::count_query("d0")),
      parse_query("enum(value) groupBy (d0, d1) -> (d0) traverseBy (d0, d1) -> (d1) "
                  "with value eq 0 -> sumVal | otherwise -> 0"),
  };
  QueryInput in = oracle_input();
  // Append an explicit zero at (2, 0): row 2 holds 3 nonzeros, so the padded
  // slot lands after them.
  in.logical.push_back({2, 0});
  in.values.push_back(0.0);
  auto results = run_query_chain(in, chain);
  EXPECT_EQ(results[1].column.back(), 3);
  // The nonzero slots of row 2 keep 0, 1, 2.
  EXPECT_EQ(results[1].column[2], 0);
  EXPECT_EQ(results[1].column[3], 1);
  EXPECT_EQ(results[1].column[4], 2);
}

TEST(Query, EmptyInputDenseDomainStillReports) {
  QueryInput in;
  in.shape = TensorShape{{3, 2}};
  QueryChainState state;
  QuerySpec q = parse_query("sum(value) groupBy (d0, d1) -> (d0)");
  QueryResult r = run_query(in, q, state);
  ASSERT_EQ(r.report.size(), 3u);
  for (const auto& [k, v] : r.report) EXPECT_EQ(v, 0);
}

}  // namespace
