#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sparseforge/errors.hpp"
#include "sparseforge/storage.hpp"
#include "sparseforge/tensor.hpp"

namespace sparseforge {

// Coordinate triples as read from disk: one column vector per dimension.
struct CooData {
  TensorShape shape;
  std::vector<std::vector<std::int64_t>> coords;
  std::vector<double> values;
};

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] inline void parse_fail(const std::string& path, size_t line, const std::string& msg) {
  fail(ErrorKind::Parse, path + ":" + std::to_string(line) + ": " + msg);
}

inline std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// Reads a coordinate-format Matrix Market file. File indices are 1-based and
// shifted to 0-based; symmetric inputs are mirrored across the diagonal
// (diagonal entries are not duplicated); pattern entries become 1.0.
inline CooData read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);

  std::string line;
  size_t lineno = 0;
  if (!std::getline(in, line)) detail::parse_fail(path, 1, "empty file");
  ++lineno;

  std::istringstream head(line);
  std::string banner, object, format, field, symmetry;
  head >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") detail::parse_fail(path, lineno, "missing MatrixMarket banner");
  object = detail::lower(object);
  format = detail::lower(format);
  field = detail::lower(field);
  symmetry = detail::lower(symmetry);
  if (object != "matrix")
    fail(ErrorKind::UnsupportedHeader, path + ": unsupported object: " + object);
  if (format != "coordinate")
    fail(ErrorKind::UnsupportedHeader, path + ": unsupported format: " + format);
  if (field != "real" && field != "integer" && field != "pattern")
    fail(ErrorKind::UnsupportedHeader, path + ": unsupported field: " + field);
  if (symmetry != "general" && symmetry != "symmetric")
    fail(ErrorKind::UnsupportedHeader, path + ": unsupported symmetry: " + symmetry);
  bool pattern = field == "pattern";
  bool symmetric = symmetry == "symmetric";

  // Size line, after any comment lines.
  std::int64_t rows = 0, cols = 0, declared = 0;
  for (;;) {
    if (!std::getline(in, line)) detail::parse_fail(path, lineno + 1, "missing size line");
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream sz(line);
    if (!(sz >> rows >> cols >> declared)) detail::parse_fail(path, lineno, "bad size line");
    break;
  }
  if (rows < 0 || cols < 0 || declared < 0) detail::parse_fail(path, lineno, "negative size");

  CooData out;
  out.shape.extents = {rows, cols};
  out.coords.resize(2);

  std::int64_t seen = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream es(line);
    std::int64_t r = 0, c = 0;
    double v = 1.0;
    if (!(es >> r >> c)) detail::parse_fail(path, lineno, "bad entry line");
    if (!pattern && !(es >> v)) detail::parse_fail(path, lineno, "missing value");
    if (r < 1 || r > rows || c < 1 || c > cols)
      detail::parse_fail(path, lineno, "coordinate out of range");
    ++seen;
    out.coords[0].push_back(r - 1);
    out.coords[1].push_back(c - 1);
    out.values.push_back(v);
    if (symmetric && r != c) {
      out.coords[0].push_back(c - 1);
      out.coords[1].push_back(r - 1);
      out.values.push_back(v);
    }
  }
  if (seen != declared)
    detail::parse_fail(path, lineno, "entry count " + std::to_string(seen) +
                                         " does not match declared " + std::to_string(declared));
  return out;
}

inline void write_matrix_market(const std::string& path, const CooData& d) {
  if (d.shape.rank() != 2) fail(ErrorKind::InvalidOperation, "matrix market output is rank-2");
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << d.shape.extents[0] << " " << d.shape.extents[1] << " " << d.values.size() << "\n";
  for (size_t e = 0; e < d.values.size(); ++e)
    out << d.coords[0][e] + 1 << " " << d.coords[1][e] + 1 << " "
        << detail::format_value(d.values[e]) << "\n";
  if (!out) fail(ErrorKind::Io, "write failed: " + path);
}

// Extracts coordinate data from a tensor in expanded coordinate form.
inline CooData to_coo_data(const WorkingTensor& t) {
  if (t.level_count() != t.shape.rank())
    fail(ErrorKind::InvalidOperation, "tensor is not in coordinate form");
  CooData d;
  d.shape = t.shape;
  d.coords.resize(t.shape.rank());
  for (size_t e = 0; e < t.entry_count(); ++e) {
    for (size_t l = 0; l < t.shape.rank(); ++l) d.coords[l].push_back(t.coords[l][e]);
    d.values.push_back(t.values[e]);
  }
  return d;
}

// FROSTT-style .tns: whitespace-separated 1-based coordinates plus a value
// per line, '#' comments, extents taken as the per-dimension maxima.
inline CooData read_tns(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  CooData out;
  std::string line;
  size_t lineno = 0;
  size_t rank = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && (line[0] == '#' || line[0] == '%')) continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream es(line);
    std::vector<double> nums;
    double x;
    while (es >> x) nums.push_back(x);
    if (nums.size() < 2) detail::parse_fail(path, lineno, "need coordinates and a value");
    if (rank == 0) {
      rank = nums.size() - 1;
      out.coords.resize(rank);
      out.shape.extents.assign(rank, 0);
    } else if (nums.size() - 1 != rank) {
      detail::parse_fail(path, lineno, "inconsistent rank");
    }
    for (size_t k = 0; k < rank; ++k) {
      auto c = static_cast<std::int64_t>(nums[k]);
      if (c < 1) detail::parse_fail(path, lineno, "coordinates are 1-based");
      out.coords[k].push_back(c - 1);
      out.shape.extents[k] = std::max(out.shape.extents[k], c);
    }
    out.values.push_back(nums.back());
  }
  if (rank == 0) detail::parse_fail(path, lineno ? lineno : 1, "no entries");
  return out;
}

inline std::vector<double> read_vector_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  std::vector<double> out;
  double v;
  while (in >> v) out.push_back(v);
  return out;
}

inline void write_vector_text(const std::string& path, const std::vector<double>& v) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  for (double x : v) out << detail::format_value(x) << "\n";
  if (!out) fail(ErrorKind::Io, "write failed: " + path);
}

// Binary tensor container. Layout: magic "USPT", u16 version, u8 logical
// rank, extents (i64), u8 level count, per level {kind u8, lower i64,
// upper i64, idx u64-count + i64 payload, ptr u64-count + i64 payload},
// value u64-count + f64 payload, layout tag u8 (0 SoA, 1 AoS + start/end
// u8), partition count u32 + u64 range pairs. All integers little-endian.
namespace detail {

constexpr std::uint8_t kLevelSize = 1;
constexpr std::uint8_t kLevelIdx = 2;
constexpr std::uint8_t kLevelPtr = 4;
constexpr std::uint8_t kLevelDenseVector = 8;

inline void put_bytes(std::ostream& out, std::uint64_t v, int n) {
  for (int b = 0; b < n; ++b) out.put(static_cast<char>((v >> (8 * b)) & 0xff));
}
inline void put_i64(std::ostream& out, std::int64_t v) {
  put_bytes(out, static_cast<std::uint64_t>(v), 8);
}
inline void put_f64(std::ostream& out, double v) {
  put_bytes(out, std::bit_cast<std::uint64_t>(v), 8);
}

inline std::uint64_t get_bytes(std::istream& in, int n) {
  std::uint64_t v = 0;
  for (int b = 0; b < n; ++b) {
    int c = in.get();
    if (c == EOF) fail(ErrorKind::Io, "truncated container");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * b);
  }
  return v;
}
inline std::int64_t get_i64(std::istream& in) {
  return static_cast<std::int64_t>(get_bytes(in, 8));
}
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_bytes(in, 8)); }

}  // namespace detail

inline void write_container(const std::string& path, const MaterializedTensor& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out.write("USPT", 4);
  detail::put_bytes(out, 1, 2);  // version
  detail::put_bytes(out, m.logical_shape.rank(), 1);
  for (auto e : m.logical_shape.extents) detail::put_i64(out, e);
  detail::put_bytes(out, m.levels.size(), 1);
  for (const auto& lv : m.levels) {
    std::uint8_t kind = 0;
    if (lv.storage.size) kind |= detail::kLevelSize;
    if (lv.storage.idx) kind |= detail::kLevelIdx;
    if (lv.storage.ptr) kind |= detail::kLevelPtr;
    if (lv.storage.dense_vector) kind |= detail::kLevelDenseVector;
    detail::put_bytes(out, kind, 1);
    detail::put_i64(out, lv.bounds.lo);
    detail::put_i64(out, lv.bounds.hi);
    detail::put_bytes(out, lv.idx.size(), 8);
    for (auto v : lv.idx) detail::put_i64(out, v);
    detail::put_bytes(out, lv.ptr.size(), 8);
    for (auto v : lv.ptr) detail::put_i64(out, v);
  }
  detail::put_bytes(out, m.values.size(), 8);
  for (double v : m.values) detail::put_f64(out, v);
  if (m.layout.kind == ValueLayoutKind::AoS) {
    detail::put_bytes(out, 1, 1);
    detail::put_bytes(out, static_cast<std::uint64_t>(m.layout.aos_start), 1);
    detail::put_bytes(out, static_cast<std::uint64_t>(m.layout.aos_end), 1);
  } else {
    detail::put_bytes(out, 0, 1);
  }
  detail::put_bytes(out, m.partitions.size(), 4);
  for (const auto& [b, e] : m.partitions) {
    detail::put_bytes(out, b, 8);
    detail::put_bytes(out, e, 8);
  }
  if (!out) fail(ErrorKind::Io, "write failed: " + path);
}

inline MaterializedTensor read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::string(magic, 4) != "USPT")
    fail(ErrorKind::Io, path + ": bad magic");
  auto version = detail::get_bytes(in, 2);
  if (version != 1)
    fail(ErrorKind::Io, path + ": unsupported container version " + std::to_string(version));

  MaterializedTensor m;
  auto rank = detail::get_bytes(in, 1);
  for (size_t k = 0; k < rank; ++k) m.logical_shape.extents.push_back(detail::get_i64(in));
  auto nlevels = detail::get_bytes(in, 1);
  size_t parent_count = 1;
  for (size_t l = 0; l < nlevels; ++l) {
    MaterializedLevel lv;
    auto kind = detail::get_bytes(in, 1);
    lv.storage.size = kind & detail::kLevelSize;
    lv.storage.idx = kind & detail::kLevelIdx;
    lv.storage.ptr = kind & detail::kLevelPtr;
    lv.storage.dense_vector = kind & detail::kLevelDenseVector;
    lv.bounds.lo = detail::get_i64(in);
    lv.bounds.hi = detail::get_i64(in);
    auto nidx = detail::get_bytes(in, 8);
    for (std::uint64_t i = 0; i < nidx; ++i) lv.idx.push_back(detail::get_i64(in));
    auto nptr = detail::get_bytes(in, 8);
    for (std::uint64_t i = 0; i < nptr; ++i) lv.ptr.push_back(detail::get_i64(in));
    // Node counts are not serialized; rebuild them the same way
    // materialization defines them.
    if (lv.storage.idx)
      lv.node_count = lv.idx.size();
    else
      lv.node_count = parent_count * static_cast<size_t>(lv.bounds.extent());
    parent_count = lv.node_count;
    m.levels.push_back(std::move(lv));
  }
  auto nvals = detail::get_bytes(in, 8);
  for (std::uint64_t i = 0; i < nvals; ++i) m.values.push_back(detail::get_f64(in));
  auto tag = detail::get_bytes(in, 1);
  if (tag == 1) {
    m.layout.kind = ValueLayoutKind::AoS;
    m.layout.aos_start = static_cast<size_t>(detail::get_bytes(in, 1));
    m.layout.aos_end = static_cast<size_t>(detail::get_bytes(in, 1));
  } else if (tag != 0) {
    fail(ErrorKind::Io, path + ": bad layout tag");
  }
  auto nparts = detail::get_bytes(in, 4);
  for (std::uint64_t i = 0; i < nparts; ++i) {
    auto b = static_cast<size_t>(detail::get_bytes(in, 8));
    auto e = static_cast<size_t>(detail::get_bytes(in, 8));
    m.partitions.push_back({b, e});
  }
  return m;
}

}  // namespace sparseforge
