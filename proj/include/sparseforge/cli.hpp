#pragma once

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sparseforge/decompose.hpp"
#include "sparseforge/errors.hpp"
#include "sparseforge/formats.hpp"
#include "sparseforge/io.hpp"
#include "sparseforge/kernel.hpp"
#include "sparseforge/parse.hpp"
#include "sparseforge/planner.hpp"
#include "sparseforge/query_engine.hpp"
#include "sparseforge/storage.hpp"

namespace sparseforge {
namespace cli {
namespace detail {

// The expanded coordinate encoding every file ingests into.
inline FormatEncoding coordinate_encoding(size_t rank) {
  std::string dims;
  for (size_t k = 0; k < rank; ++k) dims += (k ? ", d" : "d") + std::to_string(k);
  return resolve_format("map (" + dims + ") -> (" + dims + ") trim(0, " +
                        std::to_string(rank - 1) + ")");
}

inline IndexMap identity_map(size_t rank) {
  IndexMap m;
  m.src_rank = rank;
  for (size_t k = 0; k < rank; ++k) m.dst.push_back(dim_ref(static_cast<std::int64_t>(k)));
  return m;
}

inline bool has_suffix(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

inline CooData read_any(const std::string& path) {
  if (has_suffix(path, ".tns")) return read_tns(path);
  return read_matrix_market(path);
}

inline WorkingTensor load_tensor(const std::string& path, bool sum_duplicates) {
  CooData d = read_any(path);
  return from_coo(d.shape, d.coords, d.values, sum_duplicates);
}

inline DenseTensor load_dense(const std::string& path, bool sum_duplicates) {
  WorkingTensor t = load_tensor(path, sum_duplicates);
  return to_dense(t, identity_map(t.shape.rank()));
}

inline KernelOperand load_operand(const std::string& path, const FormatEncoding& enc,
                                  bool sum_duplicates) {
  WorkingTensor t = load_tensor(path, sum_duplicates);
  convert_structure(t, coordinate_encoding(t.shape.rank()), enc);
  return KernelOperand::from_materialized(enc, materialize(t, infer_storage(enc)));
}

inline std::string key_text(const GroupKey& k) {
  std::string s;
  for (size_t i = 0; i < k.size(); ++i) s += (i ? "," : "") + std::to_string(k[i]);
  return s;
}

inline void write_dense_output(const std::string& path, const DenseTensor& d,
                               std::ostream& out) {
  if (has_suffix(path, ".mtx")) {
    CooData coo;
    coo.shape = d.shape;
    coo.coords.resize(2);
    for (std::int64_t r = 0; r < d.shape.extents[0]; ++r)
      for (std::int64_t c = 0; c < d.shape.extents[1]; ++c) {
        std::vector<std::int64_t> rc = {r, c};
        double v = d.at(rc);
        if (v != 0.0) {
          coo.coords[0].push_back(r);
          coo.coords[1].push_back(c);
          coo.values.push_back(v);
        }
      }
    write_matrix_market(path, coo);
    return;
  }
  std::ofstream file;
  std::ostream* dst = &out;
  if (!path.empty()) {
    file.open(path);
    if (!file) fail(ErrorKind::Io, "cannot write " + path);
    dst = &file;
  }
  if (d.shape.rank() == 1) {
    for (double v : d.data) *dst << sparseforge::detail::format_value(v) << "\n";
  } else {
    size_t cols = static_cast<size_t>(d.shape.extents.back());
    for (size_t i = 0; i < d.data.size(); ++i) {
      *dst << sparseforge::detail::format_value(d.data[i]);
      *dst << ((i % cols == cols - 1) ? "\n" : " ");
    }
  }
}

inline int effective_threads(int parallel) {
  if (const char* env = std::getenv("SPARSE_FORGE_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return parallel < 1 ? 1 : parallel;
}

struct ConvertOpts {
  std::string matrix, from = "COO", to, out_path;
  bool emit_plan = false, sum_dup = false;
};

inline int cmd_convert(const ConvertOpts& o, std::ostream& out) {
  FormatEncoding src = resolve_format(o.from);
  FormatEncoding dst = resolve_format(o.to);
  ConversionPlan plan = plan_conversion(src, dst);
  if (o.emit_plan)
    for (const auto& line : plan_lines(plan)) out << line << "\n";
  if (!o.matrix.empty()) {
    WorkingTensor t = load_tensor(o.matrix, o.sum_dup);
    convert_structure(t, coordinate_encoding(t.shape.rank()), src);
    apply_plan(t, plan);
    if (!o.out_path.empty()) write_container(o.out_path, materialize(t, infer_storage(dst)));
  }
  return 0;
}

struct InspectOpts {
  std::string format, matrix, query;
  bool sum_dup = false;
};

inline int cmd_inspect(const InspectOpts& o, std::ostream& out) {
  FormatEncoding enc = resolve_format(o.format);
  StorageScheme scheme = infer_storage(enc);
  if (!o.query.empty()) {
    WorkingTensor t = load_tensor(o.matrix, o.sum_dup);
    QueryInput in;
    in.shape = t.shape;
    in.values = t.values;
    for (size_t e = 0; e < t.entry_count(); ++e) in.logical.push_back(t.entry_coords(e));
    std::vector<QuerySpec> chain;
    size_t pos = 0;
    while (pos <= o.query.size()) {
      size_t semi = o.query.find(';', pos);
      std::string part = o.query.substr(pos, semi == std::string::npos ? semi : semi - pos);
      if (part.find_first_not_of(" \t") != std::string::npos) chain.push_back(parse_query(part));
      if (semi == std::string::npos) break;
      pos = semi + 1;
    }
    if (chain.empty()) fail(ErrorKind::Parse, "empty query");
    auto results = run_query_chain(in, chain);
    for (const auto& [key, value] : results.back().report)
      out << key_text(key) << "\t" << value << "\n";
    return 0;
  }
  out << explain_storage(scheme) << "\n";
  if (!o.matrix.empty()) {
    WorkingTensor t = load_tensor(o.matrix, o.sum_dup);
    convert_structure(t, coordinate_encoding(t.shape.rank()), enc);
    MaterializedTensor m = materialize(t, scheme);
    for (size_t l = 0; l < m.levels.size(); ++l) {
      if (m.levels[l].storage.idx) {
        out << "L" << l << " idx:";
        for (auto v : m.levels[l].idx) out << " " << v;
        out << "\n";
      }
      if (m.levels[l].storage.ptr) {
        out << "L" << l << " ptr:";
        for (auto v : m.levels[l].ptr) out << " " << v;
        out << "\n";
      }
    }
    out << "val:";
    for (double v : m.values) out << " " << sparseforge::detail::format_value(v);
    out << "\n";
    if (!m.partitions.empty()) {
      out << "partitions:";
      for (const auto& [b, e] : m.partitions) out << " " << b << ".." << e;
      out << "\n";
    }
  }
  return 0;
}

struct DecomposeOpts {
  std::string matrix, group_by, out_a, out_b;
  std::int64_t min_sum = 1;
  bool sum_dup = false;
};

inline int cmd_decompose(const DecomposeOpts& o) {
  WorkingTensor t = load_tensor(o.matrix, o.sum_dup);
  DecomposeRule rule;
  rule.query.func = QueryFunc::Sum;
  rule.query.var_is_value = true;
  rule.query.group_by = parse_index_map(o.group_by);
  rule.min_sum = o.min_sum;
  DecomposeResult r = decompose(t, rule);
  write_matrix_market(o.out_a, to_coo_data(r.selected));
  write_matrix_market(o.out_b, to_coo_data(r.remainder));
  return 0;
}

struct KernelOpts {
  std::string name, matrix, format = "CSR", rhs, vector, rhs_format = "DCSR", out_path;
  int parallel = 1;
  bool no_opt = false, explain = false, sum_dup = false;
};

inline int cmd_kernel(const KernelOpts& o, std::ostream& out, std::ostream& err) {
  KernelSpec spec = builtin_kernel(o.name);
  KernelOptions opts;
  opts.optimize = !o.no_opt;
  opts.threads = effective_threads(o.parallel);

  FormatEncoding enc = resolve_format(o.format);
  std::vector<KernelOperand> inputs;
  inputs.push_back(load_operand(o.matrix, enc, o.sum_dup));
  const KernelOperand& A = inputs[0];

  if (o.name == "spmv") {
    if (o.vector.empty()) {
      err << "spmv requires --vector\n";
      return 1;
    }
    std::vector<double> x = read_vector_text(o.vector);
    if (static_cast<std::int64_t>(x.size()) != A.shape().extents[1])
      fail(ErrorKind::InvalidOperation, "vector length does not match the matrix");
    DenseTensor xd(TensorShape{{A.shape().extents[1]}});
    xd.data = x;
    inputs.push_back(KernelOperand::from_dense(std::move(xd)));
  } else if (o.name == "spmm") {
    if (o.rhs.empty()) {
      err << "spmm requires --rhs\n";
      return 1;
    }
    inputs.push_back(KernelOperand::from_dense(load_dense(o.rhs, o.sum_dup)));
  } else {
    if (o.rhs.empty()) {
      err << "spgemm requires --rhs\n";
      return 1;
    }
    inputs.push_back(load_operand(o.rhs, resolve_format(o.rhs_format), o.sum_dup));
  }

  IterationPlan plan;
  DenseTensor result = run_kernel(spec, inputs, opts, &plan);
  if (o.explain) out << plan.text();
  write_dense_output(o.out_path, result, out);
  return 0;
}

struct BenchOpts {
  std::string matrix, format = "CSR", kernel = "spmv";
  int parallel = 1;
  bool no_opt = false, sum_dup = false;
};

inline int cmd_bench(const BenchOpts& o, std::ostream& out) {
  KernelOptions opts;
  opts.optimize = !o.no_opt;
  opts.threads = effective_threads(o.parallel);
  FormatEncoding enc = resolve_format(o.format);

  using clock = std::chrono::steady_clock;
  auto secs = [](clock::time_point b, clock::time_point e) {
    return std::chrono::duration<double>(e - b).count();
  };
  auto emit = [&](const std::string& stage, double s) {
    out << stage << "\t" << sparseforge::detail::format_value(s) << "\n";
  };

  auto t0 = clock::now();
  WorkingTensor t = load_tensor(o.matrix, o.sum_dup);
  auto t1 = clock::now();
  emit("read", secs(t0, t1));

  convert_structure(t, coordinate_encoding(t.shape.rank()), enc);
  MaterializedTensor m = materialize(t, infer_storage(enc));
  auto t2 = clock::now();
  emit("convert", secs(t1, t2));

  KernelSpec spec = builtin_kernel(o.kernel);
  std::vector<KernelOperand> inputs;
  inputs.push_back(KernelOperand::from_materialized(enc, std::move(m)));
  if (o.kernel == "spmv") {
    DenseTensor x(TensorShape{{t.shape.extents[1]}});
    x.data.assign(x.data.size(), 1.0);
    inputs.push_back(KernelOperand::from_dense(std::move(x)));
  } else if (o.kernel == "spmm") {
    DenseTensor b(TensorShape{{t.shape.extents[1], t.shape.extents[1]}});
    b.data.assign(b.data.size(), 1.0);
    inputs.push_back(KernelOperand::from_dense(std::move(b)));
  } else {
    // Square the matrix against itself in a row-compressed rhs encoding.
    inputs.push_back(load_operand(o.matrix, resolve_format("DCSR"), o.sum_dup));
  }
  auto t3 = clock::now();
  run_kernel(spec, inputs, opts);
  auto t4 = clock::now();
  emit("kernel", secs(t3, t4));
  return 0;
}

}  // namespace detail

// Entry point shared by the binary and the tests. Returns the process exit
// code: 0 success, 1 usage error, 2 data or I/O error.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"sparse tensor format-customization engine"};
  app.name("sparse-forge");
  app.require_subcommand(1);
  app.footer(
      "Encodings are registry names (COO, CSR, CSC, DCSR, DCSC, DOK, LIL, DIA,\n"
      "DIAV, BCSR(r,c), CSB(r,c), ELL, C2SR(k), CISR(k), CISRPLUS(k), BDIA(b),\n"
      "BELL(b)) or inline 'map (d0, d1) -> (...) ; ...' encoding text.\n"
      "SPARSE_FORGE_THREADS overrides --parallel.");

  detail::ConvertOpts cv;
  auto* convert = app.add_subcommand("convert", "Convert a matrix between storage formats");
  auto* cv_matrix = convert->add_option("--matrix", cv.matrix, "input .mtx or .tns file");
  convert->add_option("--from", cv.from, "source encoding (default COO)");
  convert->add_option("--to", cv.to, "target encoding")->required();
  convert->add_option("--out", cv.out_path, "output container file")->needs(cv_matrix);
  convert->add_flag("--emit-plan", cv.emit_plan, "print the conversion operator list");
  convert->add_flag("--sum-duplicates", cv.sum_dup, "sum duplicate coordinates");

  detail::InspectOpts is;
  auto* inspect = app.add_subcommand("inspect", "Show inferred storage or query results");
  inspect->add_option("--format", is.format, "encoding to inspect")->required();
  auto* is_matrix = inspect->add_option("--matrix", is.matrix, "input .mtx or .tns file");
  inspect->add_option("--query", is.query, "query chain; results as key\\tvalue TSV")
      ->needs(is_matrix);
  inspect->add_flag("--sum-duplicates", is.sum_dup, "sum duplicate coordinates");

  detail::DecomposeOpts dc;
  auto* decompose = app.add_subcommand("decompose", "Split a matrix by a group-sum threshold");
  decompose->add_option("--matrix", dc.matrix, "input .mtx or .tns file")->required();
  decompose->add_option("--group-by", dc.group_by, "grouping map, e.g. '(d0, d1) -> (d1 - d0)'")
      ->required();
  decompose->add_option("--min-sum", dc.min_sum, "selection threshold (default 1)");
  decompose->add_option("--out-a", dc.out_a, "output for selected groups")->required();
  decompose->add_option("--out-b", dc.out_b, "output for the remainder")->required();
  decompose->add_flag("--sum-duplicates", dc.sum_dup, "sum duplicate coordinates");

  detail::KernelOpts kn;
  auto* kernel = app.add_subcommand("kernel", "Run a compute kernel over an encoded matrix");
  kernel->add_option("name", kn.name, "kernel name")
      ->required()
      ->check(CLI::IsMember({"spmv", "spmm", "spgemm"}));
  kernel->add_option("--matrix", kn.matrix, "sparse operand .mtx or .tns file")->required();
  kernel->add_option("--format", kn.format, "sparse operand encoding (default CSR)");
  kernel->add_option("--rhs", kn.rhs, "right-hand matrix for spmm/spgemm");
  kernel->add_option("--vector", kn.vector, "right-hand vector file for spmv");
  kernel->add_option("--rhs-format", kn.rhs_format, "spgemm rhs encoding (default DCSR)");
  kernel->add_option("--out", kn.out_path, "output file (.mtx or text)");
  kernel->add_option("--parallel", kn.parallel, "worker threads (default 1)");
  kernel->add_flag("--no-opt", kn.no_opt, "disable iteration optimizations");
  kernel->add_flag("--explain", kn.explain, "print the iteration plan");
  kernel->add_flag("--sum-duplicates", kn.sum_dup, "sum duplicate coordinates");

  detail::BenchOpts bn;
  auto* bench = app.add_subcommand("bench", "Time read/convert/kernel stages (TSV output)");
  bench->add_option("--matrix", bn.matrix, "input .mtx or .tns file")->required();
  bench->add_option("--format", bn.format, "encoding to convert into (default CSR)");
  bench->add_option("--kernel", bn.kernel, "kernel to time (default spmv)")
      ->check(CLI::IsMember({"spmv", "spmm", "spgemm"}));
  bench->add_option("--parallel", bn.parallel, "worker threads (default 1)");
  bench->add_flag("--no-opt", bn.no_opt, "disable iteration optimizations");
  bench->add_flag("--sum-duplicates", bn.sum_dup, "sum duplicate coordinates");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    err << "run 'sparse-forge --help' for usage\n";
    return 1;
  }

  try {
    if (convert->parsed()) return detail::cmd_convert(cv, out);
    if (inspect->parsed()) return detail::cmd_inspect(is, out);
    if (decompose->parsed()) return detail::cmd_decompose(dc);
    if (kernel->parsed()) return detail::cmd_kernel(kn, out, err);
    if (bench->parsed()) return detail::cmd_bench(bn, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << app.help();
  return 1;
}

}  // namespace cli
}  // namespace sparseforge
