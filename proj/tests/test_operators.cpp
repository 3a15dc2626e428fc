// Conversion operator tests: per-operator golden examples on the example
// matrix, error premises, matrix decomposition into elementary steps, and the
// mutual-inverse property of the seven reversible operator pairs on randomly
// generated tensors.

#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "oracle_data.hpp"
#include "sparseforge/operators.hpp"
#include "sparseforge/tensor.hpp"

namespace {

using namespace sparseforge;
using std::int64_t;

WorkingTensor oracle_coo() {
  return from_coo(TensorShape{{oracle::rows_a, oracle::cols_a}},
                  {oracle::coo_d0, oracle::coo_d1}, oracle::coo_val);
}

// Stored content of a tensor, excluding level bounds: operators may widen a
// bound envelope (skewing back cannot recover the original diagonal range),
// but entries, danglings, and flags must restore exactly.
struct Signature {
  std::vector<std::vector<int64_t>> coords;
  std::vector<double> values;
  std::vector<std::vector<int64_t>> dangling;
  std::vector<std::tuple<bool, bool, bool>> flags;

  bool operator==(const Signature&) const = default;
};

Signature signature(const WorkingTensor& t) {
  Signature s;
  s.coords = t.coords;
  s.values = t.values;
  s.dangling = t.dangling;
  for (const auto& l : t.levels) s.flags.push_back({l.trimmed, l.merged, l.vectorized});
  return s;
}

// Random sparse tensor in fully trimmed coordinate form with nonzero values.
WorkingTensor random_sparse(std::mt19937& rng) {
  std::uniform_int_distribution<int> rank_d(2, 3), ext_d(1, 6), val_d(1, 9);
  size_t rank = static_cast<size_t>(rank_d(rng));
  TensorShape shape;
  int64_t volume = 1;
  for (size_t l = 0; l < rank; ++l) {
    shape.extents.push_back(ext_d(rng));
    volume *= shape.extents.back();
  }
  std::uniform_int_distribution<int64_t> cell_d(0, volume - 1);
  std::set<int64_t> cells;
  size_t want = static_cast<size_t>(cell_d(rng)) + 1;
  while (cells.size() < want) cells.insert(cell_d(rng));
  std::vector<std::vector<int64_t>> coords(rank);
  std::vector<double> values;
  for (int64_t cell : cells) {
    int64_t rest = cell;
    for (size_t l = rank; l-- > 0;) {
      coords[l].push_back(rest % shape.extents[l]);
      rest /= shape.extents[l];
    }
    values.push_back(val_d(rng));
  }
  return from_coo(shape, coords, values);
}

// Random tensor that stores every cell, zeros included, with all levels
// marked untrimmed. This is the shape Trim and Vectorize start from.
WorkingTensor random_dense_complete(std::mt19937& rng) {
  std::uniform_int_distribution<int> rank_d(2, 3), ext_d(1, 4), val_d(0, 4);
  size_t rank = static_cast<size_t>(rank_d(rng));
  TensorShape shape;
  for (size_t l = 0; l < rank; ++l) shape.extents.push_back(ext_d(rng));
  std::vector<std::vector<int64_t>> coords(rank);
  std::vector<double> values;
  std::vector<int64_t> cur(rank, 0);
  while (true) {
    for (size_t l = 0; l < rank; ++l) coords[l].push_back(cur[l]);
    values.push_back(val_d(rng));
    size_t l = rank;
    while (l-- > 0) {
      if (++cur[l] < shape.extents[l]) break;
      cur[l] = 0;
      if (l == 0) {
        WorkingTensor t = from_coo(shape, coords, values);
        for (auto& meta : t.levels) meta.trimmed = false;
        return t;
      }
    }
  }
}

TEST(Operators, PrintForms) {
  EXPECT_EQ(print_op(op_swap(0, 1)), "Swap(0,1)");
  EXPECT_EQ(print_op(op_scale(0, Rational(-1))), "Scale(0,-1)");
  EXPECT_EQ(print_op(op_scale(1, Rational(1, 2))), "Scale(1,1/2)");
  EXPECT_EQ(print_op(op_skew(0, 1, -1)), "Skew(0,1,-1)");
  EXPECT_EQ(print_op(op_tile_split(0, 3)), "TileSplit(0,3)");
  EXPECT_EQ(print_op(op_tile_union(0, 3)), "TileUnion(0,3)");
  EXPECT_EQ(print_op(op_sort()), "Sort");
  EXPECT_EQ(print_op(op_trim(0)), "Trim(0)");
  EXPECT_EQ(print_op(op_fill(0)), "Fill(0)");
  EXPECT_EQ(print_op(op_merge(0)), "Merge(0)");
  EXPECT_EQ(print_op(op_split(0)), "Split(0)");
  EXPECT_EQ(print_op(op_vectorize(2)), "Vectorize(2)");
  EXPECT_EQ(print_op(op_devectorize(2)), "Devectorize(2)");
  EXPECT_EQ(print_op(op_pack(0, 1)), "Pack(0,1)");
  EXPECT_EQ(print_op(op_partition(0)), "Partition(0)");
}

TEST(Operators, SkewProducesDiagonalColumn) {
  WorkingTensor t = oracle_coo();
  apply_op(t, op_skew(0, 1, -1));
  EXPECT_EQ(t.coords[1], (std::vector<int64_t>{0, 0, -1, 0, 1, -1}));
  EXPECT_EQ(t.coords[0], oracle::coo_d0);
  EXPECT_EQ(t.levels[1].bounds.lo, -4);
  EXPECT_EQ(t.levels[1].bounds.hi, 3);
}

TEST(Operators, TileSplitAfterSkew) {
  WorkingTensor t = oracle_coo();
  apply_op(t, op_skew(0, 1, -1));
  apply_op(t, op_tile_split(0, 3));
  // Entry for logical (4, 3) now reads (1, 1, -1) over (d0/3, d0%3, d1-d0).
  ASSERT_EQ(t.level_count(), 3u);
  size_t last = t.entry_count() - 1;
  EXPECT_EQ(t.coords[0][last], 1);
  EXPECT_EQ(t.coords[1][last], 1);
  EXPECT_EQ(t.coords[2][last], -1);
  EXPECT_EQ(t.levels[0].bounds.hi, 1);
  EXPECT_EQ(t.levels[1].bounds.lo, 0);
  EXPECT_EQ(t.levels[1].bounds.hi, 2);
}

TEST(Operators, FillMergeProducesCompressedRows) {
  WorkingTensor t = oracle_coo();
  apply_op(t, op_fill(0));
  EXPECT_FALSE(t.levels[0].trimmed);
  // The one empty row survives as a dangling node, not as padded values.
  ASSERT_EQ(t.dangling.size(), 1u);
  EXPECT_EQ(t.dangling[0], (std::vector<int64_t>{3}));
  EXPECT_EQ(t.entry_count(), 6u);
  apply_op(t, op_merge(0));
  EXPECT_TRUE(t.levels[0].merged);
}

TEST(Operators, SplitTrimRestoresCoordinateForm) {
  WorkingTensor t = oracle_coo();
  apply_op(t, op_fill(0));
  apply_op(t, op_merge(0));
  apply_op(t, op_split(0));
  EXPECT_FALSE(t.levels[0].merged);
  apply_op(t, op_trim(0));
  EXPECT_EQ(signature(t), signature(oracle_coo()));
}

TEST(Operators, SortIsStableAndIdempotent) {
  WorkingTensor t = oracle_coo();
  for (auto& col : t.coords) std::reverse(col.begin(), col.end());
  std::reverse(t.values.begin(), t.values.end());
  apply_op(t, op_sort());
  Signature once = signature(t);
  EXPECT_EQ(once, signature(oracle_coo()));
  apply_op(t, op_sort());
  EXPECT_EQ(signature(t), once);
}

TEST(Operators, PartitionRecordsEntryRanges) {
  WorkingTensor t = oracle_coo();
  apply_op(t, op_partition(0));
  // Rows 0,1,2,4 are contiguous runs of 1,1,3,1 entries.
  ASSERT_EQ(t.partitions.size(), 4u);
  EXPECT_EQ(t.partitions[2], (std::pair<size_t, size_t>{2, 5}));
}

TEST(Operators, PackSetsInterleavedLayout) {
  WorkingTensor t = oracle_coo();
  apply_op(t, op_pack(0, 1));
  EXPECT_EQ(t.layout.kind, ValueLayoutKind::AoS);
  EXPECT_EQ(t.layout.aos_start, 0u);
  EXPECT_EQ(t.layout.aos_end, 1u);
}

TEST(Operators, ScaleRejectsFractionalCoordinates) {
  WorkingTensor t = oracle_coo();
  try {
    apply_op(t, op_scale(1, Rational(1, 2)));  // odd columns exist
    FAIL() << "expected NonIntegral";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonIntegral);
  }
}

TEST(Operators, LevelOutOfRangeRejected) {
  WorkingTensor t = oracle_coo();
  for (const ConversionOp& op : {op_swap(0, 5), op_trim(7), op_merge(2), op_fill(9)}) {
    try {
      WorkingTensor copy = t;
      apply_op(copy, op);
      FAIL() << "expected InvalidOperation for " << print_op(op);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidOperation) << print_op(op);
    }
  }
}

TEST(Operators, VectorizeRejectsTrimmedLevels) {
  WorkingTensor t = oracle_coo();
  try {
    apply_op(t, op_vectorize(1));
    FAIL() << "expected InvalidOperation";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidOperation);
  }
}

TEST(Operators, MergeRequiresSortedEntries) {
  WorkingTensor t = oracle_coo();
  for (auto& col : t.coords) std::reverse(col.begin(), col.end());
  std::reverse(t.values.begin(), t.values.end());
  try {
    apply_op(t, op_merge(0));
    FAIL() << "expected InvalidOperation";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidOperation);
  }
}

// ---- Mutual inverse property of the seven reversible pairs ----

constexpr int kTrials = 500;

TEST(InversePairs, SwapSwap) {
  std::mt19937 rng(11);
  for (int i = 0; i < kTrials; ++i) {
    WorkingTensor t = random_sparse(rng);
    size_t a = rng() % t.level_count(), b = rng() % t.level_count();
    if (a == b) b = (b + 1) % t.level_count();
    Signature before = signature(t);
    apply_op(t, op_swap(std::min(a, b), std::max(a, b)));
    apply_op(t, op_swap(std::min(a, b), std::max(a, b)));
    EXPECT_EQ(signature(t), before);
  }
}

TEST(InversePairs, ScaleScaleReciprocal) {
  std::mt19937 rng(12);
  const int64_t factors[] = {1, -1, 2, -2, 3, 5};
  for (int i = 0; i < kTrials; ++i) {
    WorkingTensor t = random_sparse(rng);
    size_t l = rng() % t.level_count();
    Rational f(factors[rng() % 6]);
    Signature before = signature(t);
    apply_op(t, op_scale(l, f));
    apply_op(t, op_scale(l, Rational(1) / f));
    EXPECT_EQ(signature(t), before);
  }
}

TEST(InversePairs, SkewSkewNegated) {
  std::mt19937 rng(13);
  for (int i = 0; i < kTrials; ++i) {
    WorkingTensor t = random_sparse(rng);
    size_t a = rng() % t.level_count(), b = rng() % t.level_count();
    if (a == b) b = (b + 1) % t.level_count();
    int64_t f = static_cast<int64_t>(rng() % 5) - 2;
    Signature before = signature(t);
    apply_op(t, op_skew(a, b, f));
    apply_op(t, op_skew(a, b, -f));
    EXPECT_EQ(signature(t), before);
  }
}

TEST(InversePairs, TileSplitTileUnion) {
  std::mt19937 rng(14);
  for (int i = 0; i < kTrials; ++i) {
    WorkingTensor t = random_sparse(rng);
    size_t l = rng() % t.level_count();
    int64_t f = 2 + static_cast<int64_t>(rng() % 3);
    Signature before = signature(t);
    apply_op(t, op_tile_split(l, f));
    apply_op(t, op_tile_union(l, f));
    EXPECT_EQ(signature(t), before);
  }
}

TEST(InversePairs, FillTrim) {
  // Fill then Trim is identity on trimmed tensors without stored zeros.
  std::mt19937 rng(15);
  for (int i = 0; i < kTrials; ++i) {
    WorkingTensor t = random_sparse(rng);
    size_t l = rng() % t.level_count();
    Signature before = signature(t);
    apply_op(t, op_fill(l));
    apply_op(t, op_trim(l));
    EXPECT_EQ(signature(t), before);
  }
}

TEST(InversePairs, TrimFill) {
  // Trim then Fill is identity on tensors that store complete dense runs.
  std::mt19937 rng(16);
  for (int i = 0; i < kTrials; ++i) {
    WorkingTensor t = random_dense_complete(rng);
    size_t l = rng() % t.level_count();
    Signature before = signature(t);
    apply_op(t, op_trim(l));
    apply_op(t, op_fill(l));
    EXPECT_EQ(signature(t), before);
  }
}

TEST(InversePairs, MergeSplit) {
  std::mt19937 rng(17);
  for (int i = 0; i < kTrials; ++i) {
    WorkingTensor t = random_sparse(rng);
    size_t l = rng() % t.level_count();
    Signature before = signature(t);
    apply_op(t, op_merge(l));
    apply_op(t, op_split(l));
    EXPECT_EQ(signature(t), before);
    // The other direction on a merged tensor.
    apply_op(t, op_merge(l));
    Signature merged = signature(t);
    apply_op(t, op_split(l));
    apply_op(t, op_merge(l));
    EXPECT_EQ(signature(t), merged);
  }
}

TEST(InversePairs, VectorizeDevectorize) {
  std::mt19937 rng(18);
  for (int i = 0; i < kTrials; ++i) {
    WorkingTensor t = random_dense_complete(rng);
    size_t l = rng() % t.level_count();
    Signature before = signature(t);
    apply_op(t, op_vectorize(l));
    for (size_t k = l; k < t.level_count(); ++k) EXPECT_TRUE(t.levels[k].vectorized);
    apply_op(t, op_devectorize(l));
    EXPECT_EQ(signature(t), before);
  }
}

TEST(InversePairs, TrimAndMergeCommuteAtIndependentLevels) {
  std::mt19937 rng(19);
  for (int i = 0; i < 100; ++i) {
    WorkingTensor t = random_dense_complete(rng);
    sort_entries(t);
    // Merge the top level, trim the leaf level: order must not matter.
    size_t leaf = t.level_count() - 1;
    WorkingTensor a = t, b = t;
    apply_op(a, op_trim(leaf));
    apply_op(a, op_merge(0));
    apply_op(b, op_merge(0));
    apply_op(b, op_trim(leaf));
    EXPECT_EQ(signature(a), signature(b));
    EXPECT_TRUE(equal_dense(to_dense(a, identity_map(a.level_count())),
                            to_dense(b, identity_map(b.level_count()))));
  }
}

// ---- Matrix decomposition ----

RatMatrix op_matrix(const ConversionOp& op, size_t n) {
  RatMatrix m = RatMatrix::identity(n);
  switch (op.kind) {
    case ConversionOp::Kind::Swap:
      m.at(op.i, op.i) = 0;
      m.at(op.j, op.j) = 0;
      m.at(op.i, op.j) = 1;
      m.at(op.j, op.i) = 1;
      break;
    case ConversionOp::Kind::Scale:
      m.at(op.i, op.i) = op.factor;
      break;
    case ConversionOp::Kind::Skew:
      m.at(op.j, op.i) = op.skew;
      break;
    default:
      ADD_FAILURE() << "unexpected op in decomposition: " << print_op(op);
  }
  return m;
}

RatMatrix product_of(const std::vector<ConversionOp>& ops, size_t n) {
  RatMatrix acc = RatMatrix::identity(n);
  for (const auto& op : ops) acc = op_matrix(op, n) * acc;  // first op applied first
  return acc;
}

TEST(DecomposeMatrix, IdentityNeedsNoSteps) {
  EXPECT_TRUE(decompose_matrix(RatMatrix::identity(2)).empty());
  EXPECT_TRUE(decompose_matrix(RatMatrix::identity(3)).empty());
}

TEST(DecomposeMatrix, PureScale) {
  RatMatrix m = RatMatrix::identity(2);
  m.at(0, 0) = 2;
  auto ops = decompose_matrix(m);
  ASSERT_EQ(ops.size(), 1u);
  EXPECT_EQ(print_op(ops[0]), "Scale(0,2)");
}

TEST(DecomposeMatrix, DiagonalStorageMatrix) {
  // Physical rows (d1-d0, d0) as a matrix over (d0, d1).
  RatMatrix m(2, 2);
  m.at(0, 0) = -1;
  m.at(0, 1) = 1;
  m.at(1, 0) = 1;
  auto ops = decompose_matrix(m);
  EXPECT_EQ(product_of(ops, 2), m);
  // Each step stays elementary.
  for (const auto& op : ops)
    EXPECT_TRUE(op.kind == ConversionOp::Kind::Swap || op.kind == ConversionOp::Kind::Scale ||
                op.kind == ConversionOp::Kind::Skew);
}

TEST(DecomposeMatrix, RandomMatricesMultiplyBack) {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    size_t n = 2 + rng() % 2;
    // Build an invertible target from random elementary moves.
    RatMatrix target = RatMatrix::identity(n);
    int moves = 1 + static_cast<int>(rng() % 6);
    for (int k = 0; k < moves; ++k) {
      size_t a = rng() % n, b = rng() % n;
      if (a == b) b = (b + 1) % n;
      switch (rng() % 3) {
        case 0:
          target = op_matrix(op_swap(std::min(a, b), std::max(a, b)), n) * target;
          break;
        case 1: {
          const int64_t fs[] = {-2, -1, 2, 3};
          target = op_matrix(op_scale(a, Rational(fs[rng() % 4])), n) * target;
          break;
        }
        default:
          target =
              op_matrix(op_skew(a, b, static_cast<int64_t>(rng() % 5) - 2), n) * target;
      }
    }
    auto ops = decompose_matrix(target);
    EXPECT_EQ(product_of(ops, n), target) << "trial " << trial;
  }
}

TEST(DecomposeMatrix, SingularRejected) {
  RatMatrix m(2, 2);
  m.at(0, 0) = 1;
  m.at(0, 1) = 1;
  m.at(1, 0) = 1;
  m.at(1, 1) = 1;
  try {
    decompose_matrix(m);
    FAIL() << "expected Singular";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Singular);
  }
  try {
    decompose_matrix(RatMatrix(2, 3));
    FAIL() << "expected Singular";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Singular);
  }
}

}  // namespace
