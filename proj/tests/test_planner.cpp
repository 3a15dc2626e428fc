// Conversion planner tests: golden operator sequences, stage skipping when
// maps agree, source restrictions, and end-to-end structural conversions
// validated by restoring the dense matrix.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracle_data.hpp"
#include "sparseforge/formats.hpp"
#include "sparseforge/planner.hpp"

namespace {

using namespace sparseforge;
using std::int64_t;

WorkingTensor oracle_coo() {
  return from_coo(TensorShape{{oracle::rows_a, oracle::cols_a}},
                  {oracle::coo_d0, oracle::coo_d1}, oracle::coo_val);
}

std::vector<std::string> plan_text(const std::string& src, const std::string& dst) {
  return plan_lines(plan_conversion(resolve_format(src), resolve_format(dst)));
}

// True when `needles` appear in order as prefixes of plan lines.
bool has_subsequence(const std::vector<std::string>& lines,
                     const std::vector<std::string>& needles) {
  size_t n = 0;
  for (const auto& line : lines) {
    if (n < needles.size() && line.rfind(needles[n], 0) == 0) ++n;
  }
  return n == needles.size();
}

TEST(Planner, CooToCsrGolden) {
  EXPECT_EQ(plan_text("COO", "CSR"), oracle::plan_coo_to_csr);
}

TEST(Planner, CsrToCooGolden) {
  EXPECT_EQ(plan_text("CSR", "COO"), oracle::plan_csr_to_coo);
}

TEST(Planner, CooToBlockedDiagonalSubsequence) {
  std::vector<std::string> lines = plan_text("COO", "BDIA(3)");
  std::string joined;
  for (const auto& l : lines) joined += l + "\n";
  EXPECT_TRUE(has_subsequence(lines, oracle::plan_coo_to_bdia_subsequence))
      << "plan was:\n" << joined;
  // Besides the pinned backbone, only reordering swaps and structural ops may
  // appear.
  for (const auto& line : lines) {
    bool known = line.rfind("Swap", 0) == 0 || line.rfind("Skew", 0) == 0 ||
                 line.rfind("TileSplit", 0) == 0 || line == "Sort" ||
                 line.rfind("Fill", 0) == 0 || line.rfind("Merge", 0) == 0 ||
                 line.rfind("Vectorize", 0) == 0 || line.rfind("Trim", 0) == 0;
    EXPECT_TRUE(known) << line;
  }
}

TEST(Planner, IdentityConversionIsEmpty) {
  EXPECT_TRUE(plan_text("COO", "COO").empty());
  EXPECT_TRUE(plan_text("CSR", "CSR").empty());
  EXPECT_TRUE(plan_text("BDIA(3)", "BDIA(3)").empty());

  WorkingTensor t = oracle_coo();
  WorkingTensor before = t;
  apply_plan(t, plan_conversion(resolve_format("COO"), resolve_format("COO")));
  EXPECT_EQ(t.coords, before.coords);
  EXPECT_EQ(t.values, before.values);
}

TEST(Planner, StructureOnlyConversions) {
  // Equal maps skip the whole coordinate stage.
  EXPECT_EQ(plan_text("CSR", "DCSR"), (std::vector<std::string>{"Trim(0)"}));
  EXPECT_EQ(plan_text("DCSR", "CSR"), (std::vector<std::string>{"Fill(0)"}));
  EXPECT_EQ(plan_text("COO", "DOK"), (std::vector<std::string>{"Pack(0,1)"}));
  EXPECT_EQ(plan_text("CSR", "LIL"), (std::vector<std::string>{"Pack(0,1)"}));
}

TEST(Planner, SourceRestrictions) {
  for (const std::string& src : {"ELL", "CISR(2)", "LIL", "DOK", "C2SR(2)"}) {
    try {
      plan_conversion(resolve_format(src), resolve_format("COO"));
      FAIL() << "expected UnsupportedSource from " << src;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::UnsupportedSource) << src;
    }
  }
}

TEST(Planner, NonInvertibleTargetRejected) {
  FormatEncoding bad = resolve_format("map (d0, d1) -> (d0+d1, d0+d1); trim(0,1)");
  try {
    plan_conversion(resolve_format("COO"), bad);
    FAIL() << "expected Singular";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Singular);
  }
}

TEST(Planner, OracleMatrixThroughEveryDirectTarget) {
  DenseTensor dense = to_dense(oracle_coo(), identity_map(2));
  for (const std::string& name :
       {"CSR", "CSC", "DCSR", "DCSC", "DIA", "DIA-variant", "BCSR(2,2)", "CSB(2,2)",
        "BDIA(3)"}) {
    FormatEncoding dst = resolve_format(name);
    WorkingTensor t = oracle_coo();
    convert_structure(t, resolve_format("COO"), dst);
    DenseTensor back = to_dense(t, invert_map(dst.map));
    EXPECT_TRUE(equal_dense(dense, back)) << name;
  }
}

TEST(Planner, RandomMatricesRoundTripThroughBlockedFormats) {
  std::mt19937 rng(31);
  std::uniform_int_distribution<int64_t> ext_d(1, 12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    TensorShape shape{{ext_d(rng), ext_d(rng)}};
    DenseTensor d(shape);
    for (auto& v : d.data)
      if (unit(rng) < 0.3) v = 1.0 + std::floor(unit(rng) * 9.0);
    for (const std::string& name : {"CSR", "DIA", "BCSR(3,2)", "BDIA(2)", "CSB(2,3)"}) {
      FormatEncoding dst = resolve_format(name);
      WorkingTensor t = from_dense(d);
      convert_structure(t, resolve_format("COO"), dst);
      EXPECT_TRUE(equal_dense(d, to_dense(t, invert_map(dst.map))))
          << name << " trial " << trial;
      // And back to coordinates.
      convert_structure(t, dst, resolve_format("COO"));
      EXPECT_TRUE(equal_dense(d, to_dense(t, identity_map(2)))) << name << " trial " << trial;
    }
  }
}

TEST(Planner, PlanLinesMatchOps) {
  ConversionPlan plan = plan_conversion(resolve_format("COO"), resolve_format("CSR"));
  std::vector<std::string> lines = plan_lines(plan);
  ASSERT_EQ(lines.size(), plan.ops.size());
  for (size_t i = 0; i < lines.size(); ++i) EXPECT_EQ(lines[i], print_op(plan.ops[i]));
}

TEST(Planner, IndirectTargetPlansCarryQueries) {
  std::vector<std::string> lines = plan_text("COO", "ELL");
  EXPECT_TRUE(has_subsequence(lines, {"Sum(", "Enumerate(0)", "Sort"}));
  std::vector<std::string> cisr = plan_text("COO", "CISR-plus(2)");
  EXPECT_TRUE(has_subsequence(cisr, {"Sum(", "Reorder(", "Schedule(0)", "Sort"}));
}

}  // namespace
