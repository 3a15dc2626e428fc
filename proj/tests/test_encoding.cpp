// Format encoding tests: grammar parsing, validation, printing, level
// classification, and the registry of named formats.

#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "sparseforge/formats.hpp"
#include "sparseforge/parse.hpp"

namespace {

using namespace sparseforge;

TEST(Encoding, ParseCoordinateFormat) {
  FormatEncoding enc = parse_encoding("map (d0, d1) -> (d0, d1); trim(0,1)");
  EXPECT_EQ(enc.levels(), 2u);
  EXPECT_TRUE(enc.mutation.has_trim);
  EXPECT_EQ(enc.mutation.trim_start, 0u);
  EXPECT_EQ(enc.mutation.trim_end, 1u);
  EXPECT_TRUE(enc.mutation.trimmed(0));
  EXPECT_TRUE(enc.mutation.trimmed(1));
  EXPECT_TRUE(enc.mutation.merges.empty());
  EXPECT_FALSE(has_layout(enc));
}

TEST(Encoding, ParseCompressedRowFormat) {
  FormatEncoding enc = parse_encoding("map (d0, d1) -> (d0, d1); merge(0), trim(1,1)");
  EXPECT_TRUE(enc.mutation.merged(0));
  EXPECT_FALSE(enc.mutation.merged(1));
  EXPECT_FALSE(enc.mutation.trimmed(0));
  EXPECT_TRUE(enc.mutation.trimmed(1));
}

TEST(Encoding, ParseLayoutPrimitives) {
  FormatEncoding packed = parse_encoding("map (d0, d1) -> (d0, d1); trim(0,1), pack(0,1)");
  EXPECT_TRUE(packed.layout.has_pack);
  EXPECT_EQ(packed.layout.pack_start, 0u);
  EXPECT_EQ(packed.layout.pack_end, 1u);
  EXPECT_TRUE(has_layout(packed));

  FormatEncoding banked = parse_encoding(
      "map (d0, d1) -> (d0%2, d0/2, d1); merge(0,1), trim(2,2), partition(0)");
  EXPECT_TRUE(banked.layout.has_partition);
  EXPECT_EQ(banked.layout.partition_level, 0u);
}

TEST(Encoding, ParseIndirectChain) {
  FormatEncoding enc = resolve_format("ELL");
  ASSERT_EQ(enc.queries.size(), 2u);
  EXPECT_EQ(enc.queries[0].func, QueryFunc::Sum);
  EXPECT_EQ(enc.queries[1].func, QueryFunc::Enumerate);
  EXPECT_EQ(indirect_positions(enc.map), (std::vector<size_t>{0}));
}

TEST(Encoding, ClassifyLevels) {
  auto classes = classify_levels(resolve_format("BDIA(3)"));
  ASSERT_EQ(classes.size(), 3u);
  EXPECT_FALSE(classes[0].trimmed);
  EXPECT_TRUE(classes[0].merged);
  EXPECT_TRUE(classes[1].trimmed);
  EXPECT_FALSE(classes[2].trimmed);

  // The ELL row level is a direct dim consumed by the indirect reference.
  auto ell = classify_levels(resolve_format("ELL"));
  ASSERT_EQ(ell.size(), 3u);
  EXPECT_TRUE(ell[0].indirect);
  EXPECT_FALSE(ell[1].indirect);
  EXPECT_FALSE(ell[1].tainted);
  EXPECT_TRUE(ell[2].tainted);
}

TEST(Encoding, PrintParseRoundTrip) {
  for (const std::string& name : named_format_list()) {
    FormatEncoding enc = resolve_format(name);
    std::string printed = print_encoding(enc);
    FormatEncoding again = parse_encoding(printed);
    EXPECT_EQ(print_encoding(again), printed) << name;
    EXPECT_TRUE(map_equal(enc.map, again.map)) << name;
    EXPECT_EQ(enc.mutation.merges, again.mutation.merges) << name;
    EXPECT_EQ(enc.mutation.has_trim, again.mutation.has_trim) << name;
    EXPECT_EQ(enc.queries.size(), again.queries.size()) << name;
  }
}

TEST(Encoding, ValidationErrors) {
  for (const std::string& bad : {
           "map (d0, d1) -> (d0, d1); trim(1,0)",
           "map (d0, d1) -> (d0, d1); trim(0,2)",
           "map (d0, d1) -> (d0, d1); merge(2)",
           "map (d0, d1) -> (d0, d1); trim(0,1), pack(0,2)",
           "map (d0, d1) -> (d0, d1); trim(0,1), partition(2)",
           "map (d0, d1) -> (d0, d1); trim(0,1), sort(0)",
           "map (d0, d1) -> (indirect(d1), d0, d1); trim(1,2)",
       }) {
    try {
      parse_encoding(bad);
      FAIL() << "expected parse error for: " << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Parse) << bad;
    }
  }
}

TEST(Encoding, ResolveNamedFormats) {
  // Every registered name resolves and validates.
  for (const std::string& name : named_format_list()) {
    FormatEncoding enc = resolve_format(name);
    EXPECT_GE(enc.levels(), 2u) << name;
  }
}

TEST(Encoding, ResolveArguments) {
  FormatEncoding b23 = resolve_format("BCSR(2,3)");
  EXPECT_EQ(print_index_map(b23.map), "(d0, d1) -> (d0/2, d1/3, d0%2, d1%3)");
  // A single argument is reused for both block dims.
  FormatEncoding b4 = resolve_format("BCSR(4)");
  EXPECT_EQ(print_index_map(b4.map), "(d0, d1) -> (d0/4, d1/4, d0%4, d1%4)");
  // Defaults apply when no arguments are given.
  FormatEncoding bd = resolve_format("BDIA");
  EXPECT_EQ(print_index_map(bd.map), "(d0, d1) -> (d0/3, d1-d0, d0%3)");
  FormatEncoding cisr = resolve_format("CISR(4)");
  EXPECT_EQ(cisr.queries.back().partitions, 4);
}

TEST(Encoding, ResolveAliasesAndWhitespace) {
  EXPECT_TRUE(map_equal(resolve_format("DIAV").map, resolve_format("DIA-variant").map));
  EXPECT_TRUE(map_equal(resolve_format("CISRPLUS").map, resolve_format("CISR-plus").map));
  EXPECT_TRUE(map_equal(resolve_format(" BCSR( 2 , 2 ) ").map, resolve_format("BCSR(2,2)").map));
  // Raw encoding text is accepted wherever a name is.
  FormatEncoding raw = resolve_format("  map (d0, d1) -> (d1, d0); merge(0), trim(1,1)");
  EXPECT_TRUE(map_equal(raw.map, resolve_format("CSC").map));
}

TEST(Encoding, ResolveErrors) {
  for (const std::string& bad : {"NOSUCH", "BCSR(2,", "BCSR(a)", "", "   "}) {
    try {
      resolve_format(bad);
      FAIL() << "expected parse error for: " << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Parse) << bad;
    }
  }
}

TEST(Encoding, QueryPrinting) {
  QuerySpec q = parse_query(
      "sum(value) groupBy (d0, d1) -> (d1-d0) with value ne 0 -> 1 | otherwise -> 0");
  EXPECT_EQ(q.func, QueryFunc::Sum);
  EXPECT_TRUE(q.var_is_value);
  ASSERT_TRUE(q.group_by.has_value());
  EXPECT_EQ(print_index_map(*q.group_by), "(d0, d1) -> (d1-d0)");
  std::string printed = print_query(q);
  QuerySpec again = parse_query(printed);
  EXPECT_EQ(print_query(again), printed);
}

TEST(Encoding, ScheduleQueryDefaults) {
  QuerySpec q = parse_query("schedule(d0) traverseBy (d0, d1) -> (d0) partitions=4");
  EXPECT_EQ(q.func, QueryFunc::Schedule);
  EXPECT_FALSE(q.var_is_value);
  EXPECT_EQ(q.var_dim, 0);
  EXPECT_EQ(q.partitions, 4);
}

}  // namespace
