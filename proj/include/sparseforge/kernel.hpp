#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sparseforge/encoding.hpp"
#include "sparseforge/errors.hpp"
#include "sparseforge/index_map.hpp"
#include "sparseforge/parse.hpp"
#include "sparseforge/storage.hpp"
#include "sparseforge/tensor.hpp"

namespace sparseforge {

enum class IterKind { Parallel, Reduction };

// A multiply-accumulate kernel over shared logical iterators. Operand zero
// is the output; each access map sends the iterators to that operand's own
// dimensions.
struct KernelSpec {
  std::string name;
  std::vector<IterKind> kinds;
  std::vector<std::string> operand_names;
  std::vector<IndexMap> access;
};

inline KernelSpec spmv_kernel() {
  KernelSpec k;
  k.name = "spmv";
  k.kinds = {IterKind::Parallel, IterKind::Reduction};
  k.operand_names = {"y", "A", "x"};
  k.access = {parse_index_map("(d0, d1) -> (d0)"), parse_index_map("(d0, d1) -> (d0, d1)"),
              parse_index_map("(d0, d1) -> (d1)")};
  return k;
}

inline KernelSpec spmm_kernel() {
  KernelSpec k;
  k.name = "spmm";
  k.kinds = {IterKind::Parallel, IterKind::Reduction, IterKind::Parallel};
  k.operand_names = {"C", "A", "B"};
  k.access = {parse_index_map("(d0, d1, d2) -> (d0, d2)"),
              parse_index_map("(d0, d1, d2) -> (d0, d1)"),
              parse_index_map("(d0, d1, d2) -> (d1, d2)")};
  return k;
}

inline KernelSpec spgemm_kernel() {
  KernelSpec k = spmm_kernel();
  k.name = "spgemm";
  return k;
}

inline KernelSpec builtin_kernel(const std::string& name) {
  if (name == "spmv") return spmv_kernel();
  if (name == "spmm") return spmm_kernel();
  if (name == "spgemm") return spgemm_kernel();
  fail(ErrorKind::InvalidOperation, "unknown kernel: " + name);
}

// One kernel input: either a dense tensor or a materialized sparse tensor
// with the inverse map that restores its logical coordinates.
struct KernelOperand {
  bool sparse = false;
  FormatEncoding enc;
  MaterializedTensor mat;
  IndexMap restore;
  DenseTensor dense;

  static KernelOperand from_dense(DenseTensor d) {
    KernelOperand o;
    o.dense = std::move(d);
    return o;
  }
  static KernelOperand from_materialized(FormatEncoding e, MaterializedTensor m) {
    KernelOperand o;
    o.sparse = true;
    o.enc = std::move(e);
    o.restore = invert_map(o.enc.map);
    o.mat = std::move(m);
    return o;
  }

  const TensorShape& shape() const { return sparse ? mat.logical_shape : dense.shape; }
};

struct KernelOptions {
  bool optimize = true;
  bool bounds_guards = true;
  int threads = 1;
};

struct IterationPlan {
  std::vector<std::string> lines;
  size_t walk_segments = 0;    // driver loops after fusing one-to-one levels
  bool dense_borrowed = false; // dense operands indexed directly, loops removed
  std::string gemm_mode;       // co-iterate | probe | exhaustive

  std::string text() const {
    std::string s;
    for (const auto& l : lines) {
      s += l;
      s += '\n';
    }
    return s;
  }
};

namespace detail {

// Loop segments of a stored walk: an index level without a pointer array is
// one-to-one with its parent and folds into the enclosing loop.
inline std::vector<std::pair<size_t, size_t>> walk_segments_of(const MaterializedTensor& m) {
  std::vector<std::pair<size_t, size_t>> segs;
  for (size_t l = 0; l < m.levels.size(); ++l) {
    const LevelStorage& st = m.levels[l].storage;
    bool fused = l > 0 && st.idx && !st.ptr;
    if (fused && !segs.empty())
      segs.back().second = l + 1;
    else
      segs.push_back({l, l + 1});
  }
  return segs;
}

inline std::string segment_desc(const MaterializedTensor& m, std::pair<size_t, size_t> seg) {
  const LevelStorage& st = m.levels[seg.first].storage;
  std::string range = seg.second - seg.first > 1
                          ? "L" + std::to_string(seg.first) + "-L" + std::to_string(seg.second - 1)
                          : "L" + std::to_string(seg.first);
  if (st.dense_vector) return range + ": dense vector run";
  if (st.size) return range + ": dense positions";
  if (st.ptr) return range + ": ptr-bounded index walk";
  return range + ": fused index walk";
}

struct SlotData {
  std::vector<std::int64_t> logical;
  double value;
};

inline std::vector<SlotData> collect_slots(const KernelOperand& o) {
  std::vector<SlotData> out;
  walk_slots(o.mat, [&](const std::vector<std::int64_t>& phys, size_t slot) {
    out.push_back({eval_map(o.restore, phys), o.mat.values[slot]});
  });
  return out;
}

inline bool in_shape(const std::vector<std::int64_t>& c, const TensorShape& s) {
  for (size_t k = 0; k < c.size(); ++k)
    if (c[k] < 0 || c[k] >= s.extents[k]) return false;
  return true;
}

inline std::int64_t wrap(std::int64_t v, std::int64_t extent) {
  std::int64_t r = v % extent;
  return r < 0 ? r + extent : r;
}

// Iterator index each bare access dim binds, or -1 where unbound.
inline std::vector<int> binding_of(const IndexMap& access) {
  std::vector<int> bind;
  for (const auto& e : access.dst) {
    if (e->kind != DimExpr::Kind::Dim)
      fail(ErrorKind::InvalidOperation, "kernel access maps must use bare iterators");
    bind.push_back(static_cast<int>(e->value));
  }
  return bind;
}

inline bool identity_restore(const IndexMap& restore, size_t rank) {
  if (restore.dst.size() != rank) return false;
  for (size_t k = 0; k < rank; ++k)
    if (!expr_equal(restore.dst[k], dim_ref(static_cast<std::int64_t>(k)))) return false;
  return true;
}

}  // namespace detail

// Straightforward dense evaluation, the reference every execution mode is
// checked against.
inline DenseTensor dense_reference(const KernelSpec& spec,
                                   const std::vector<DenseTensor>& inputs) {
  size_t iters = spec.kinds.size();
  std::vector<std::int64_t> extent(iters, -1);
  for (size_t o = 0; o < inputs.size(); ++o) {
    auto bind = detail::binding_of(spec.access[o + 1]);
    for (size_t k = 0; k < bind.size(); ++k) {
      std::int64_t e = inputs[o].shape.extents[k];
      if (extent[static_cast<size_t>(bind[k])] == -1)
        extent[static_cast<size_t>(bind[k])] = e;
      else if (extent[static_cast<size_t>(bind[k])] != e)
        fail(ErrorKind::InvalidOperation, "operand shapes disagree on a shared iterator");
    }
  }
  auto out_bind = detail::binding_of(spec.access[0]);
  TensorShape out_shape;
  for (int v : out_bind) out_shape.extents.push_back(extent[static_cast<size_t>(v)]);
  DenseTensor out(out_shape);

  std::vector<std::int64_t> iv(iters, 0);
  auto rec = [&](auto&& self, size_t v) -> void {
    if (v == iters) {
      double prod = 1.0;
      for (size_t o = 0; o < inputs.size(); ++o) {
        auto bind = detail::binding_of(spec.access[o + 1]);
        std::vector<std::int64_t> c;
        for (int b : bind) c.push_back(iv[static_cast<size_t>(b)]);
        prod *= inputs[o].at(c);
      }
      std::vector<std::int64_t> oc;
      for (int b : out_bind) oc.push_back(iv[static_cast<size_t>(b)]);
      out.at(oc) += prod;
      return;
    }
    for (std::int64_t x = 0; x < extent[v]; ++x) {
      iv[v] = x;
      self(self, v + 1);
    }
  };
  rec(rec, 0);
  return out;
}

// Executes a kernel over the given inputs (operand zero of the spec is the
// produced output). Optimizations: one-to-one level fusion, direct indexing
// of dense operands, and co-iteration or keyed probing between two sparse
// operands. With optimize off, every operand is iterated exhaustively with
// equality guards, the literal form of the access maps.
inline DenseTensor run_kernel(const KernelSpec& spec, const std::vector<KernelOperand>& inputs,
                              const KernelOptions& opt = {},
                              IterationPlan* plan_out = nullptr) {
  if (inputs.size() + 1 != spec.access.size())
    fail(ErrorKind::InvalidOperation, "operand count does not match the kernel");
  size_t iters = spec.kinds.size();

  std::vector<std::vector<int>> bind(inputs.size());
  std::vector<std::int64_t> extent(iters, -1);
  for (size_t o = 0; o < inputs.size(); ++o) {
    bind[o] = detail::binding_of(spec.access[o + 1]);
    for (size_t k = 0; k < bind[o].size(); ++k) {
      std::int64_t e = inputs[o].shape().extents[k];
      auto& slot = extent[static_cast<size_t>(bind[o][k])];
      if (slot == -1)
        slot = e;
      else if (slot != e)
        fail(ErrorKind::InvalidOperation, "operand shapes disagree on a shared iterator");
    }
  }
  for (std::int64_t e : extent)
    if (e == -1) fail(ErrorKind::InvalidOperation, "an iterator is not bound by any operand");

  auto out_bind = detail::binding_of(spec.access[0]);
  TensorShape out_shape;
  for (int v : out_bind) out_shape.extents.push_back(extent[static_cast<size_t>(v)]);
  DenseTensor out(out_shape);

  std::vector<size_t> sparse_ops;
  for (size_t o = 0; o < inputs.size(); ++o)
    if (inputs[o].sparse) sparse_ops.push_back(o);

  IterationPlan plan;
  auto emit = [&](const std::string& s) { plan.lines.push_back(s); };
  emit("kernel " + spec.name);

  // Accumulation body shared by every mode: iterator values are complete,
  // multiply the operand factors into the output cell.
  auto accumulate = [&](DenseTensor& target, const std::vector<std::int64_t>& iv,
                        double sparse_product) {
    double prod = sparse_product;
    for (size_t o = 0; o < inputs.size(); ++o) {
      if (inputs[o].sparse) continue;
      std::vector<std::int64_t> c;
      for (int b : bind[o]) c.push_back(iv[static_cast<size_t>(b)]);
      prod *= inputs[o].dense.at(c);
    }
    std::vector<std::int64_t> oc;
    for (int b : out_bind) oc.push_back(iv[static_cast<size_t>(b)]);
    target.at(oc) += prod;
  };

  // Maps a sparse operand's restored coordinates onto iterator values.
  // Returns false when a coordinate fails its bounds guard.
  auto bind_sparse = [&](size_t o, const std::vector<std::int64_t>& logical,
                         std::vector<std::int64_t>& iv) {
    for (size_t k = 0; k < logical.size(); ++k) {
      std::int64_t v = logical[k];
      std::int64_t ex = inputs[o].shape().extents[k];
      if (v < 0 || v >= ex) {
        if (opt.bounds_guards) return false;
        v = detail::wrap(v, ex);
      }
      iv[static_cast<size_t>(bind[o][k])] = v;
    }
    return true;
  };

  if (sparse_ops.empty()) {
    // All-dense fallback; identical to the reference loop nest.
    std::vector<DenseTensor> dense;
    for (const auto& o : inputs) dense.push_back(o.dense);
    emit("dense loop nest over all iterators");
    if (plan_out) *plan_out = plan;
    return dense_reference(spec, dense);
  }

  size_t driver = sparse_ops[0];
  const KernelOperand& d_op = inputs[driver];
  auto segs = detail::walk_segments_of(d_op.mat);
  plan.walk_segments = opt.optimize ? segs.size() : d_op.mat.levels.size();
  if (opt.optimize) {
    for (auto seg : segs)
      emit("walk " + spec.operand_names[driver + 1] + " " + detail::segment_desc(d_op.mat, seg));
  } else {
    for (size_t l = 0; l < d_op.mat.levels.size(); ++l)
      emit("walk " + spec.operand_names[driver + 1] + " " +
           detail::segment_desc(d_op.mat, {l, l + 1}));
  }
  emit("restore " + print_index_map(d_op.restore, "e"));
  emit(opt.bounds_guards ? "guard restored coordinates against the logical shape"
                         : "guards disabled");

  // Which iterators stay unbound after the sparse operands are walked.
  std::vector<bool> bound(iters, false);
  for (size_t o : sparse_ops)
    for (int b : bind[o]) bound[static_cast<size_t>(b)] = true;
  std::vector<size_t> free_iters;
  for (size_t v = 0; v < iters; ++v)
    if (!bound[v]) free_iters.push_back(v);

  auto driver_slots = detail::collect_slots(d_op);

  if (sparse_ops.size() == 1) {
    if (opt.optimize) {
      plan.dense_borrowed = true;
      for (size_t o = 0; o < inputs.size(); ++o)
        if (!inputs[o].sparse)
          emit("index " + spec.operand_names[o + 1] + " directly (loop removed)");
      emit("index " + spec.operand_names[0] + " directly (loop removed)");
      for (size_t v : free_iters) emit("loop iterator d" + std::to_string(v) + " densely");

      auto body = [&](DenseTensor& target, size_t begin, size_t end) {
        std::vector<std::int64_t> iv(iters, 0);
        for (size_t s = begin; s < end; ++s) {
          if (!bind_sparse(driver, driver_slots[s].logical, iv)) continue;
          auto rec = [&](auto&& self, size_t fi) -> void {
            if (fi == free_iters.size()) {
              accumulate(target, iv, driver_slots[s].value);
              return;
            }
            for (std::int64_t x = 0; x < extent[free_iters[fi]]; ++x) {
              iv[free_iters[fi]] = x;
              self(self, fi + 1);
            }
          };
          rec(rec, 0);
        }
      };
      int workers = std::max(1, opt.threads);
      if (workers == 1 || driver_slots.size() < 2) {
        body(out, 0, driver_slots.size());
      } else {
        // Each worker accumulates privately; partial results are reduced in
        // worker order so the result is deterministic for a fixed thread count.
        std::vector<DenseTensor> partial(static_cast<size_t>(workers), DenseTensor(out_shape));
        std::vector<std::thread> pool;
        size_t chunk = (driver_slots.size() + static_cast<size_t>(workers) - 1) /
                       static_cast<size_t>(workers);
        for (int w = 0; w < workers; ++w) {
          size_t begin = static_cast<size_t>(w) * chunk;
          size_t end = std::min(driver_slots.size(), begin + chunk);
          if (begin >= end) break;
          pool.emplace_back([&, w, begin, end] { body(partial[static_cast<size_t>(w)], begin, end); });
        }
        for (auto& th : pool) th.join();
        for (const auto& p : partial)
          for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += p.data[i];
      }
    } else {
      // Exhaustive: every iterator looped densely, the stored walk only
      // supplies candidate values checked by equality guards.
      emit("loop every iterator densely with equality guards");
      std::vector<std::int64_t> iv(iters, 0);
      for (const auto& slot : driver_slots) {
        std::vector<std::int64_t> want(iters, -1);
        bool ok = true;
        for (size_t k = 0; k < slot.logical.size(); ++k) {
          std::int64_t v = slot.logical[k];
          std::int64_t ex = inputs[driver].shape().extents[k];
          if (v < 0 || v >= ex) {
            if (opt.bounds_guards) {
              ok = false;
              break;
            }
            v = detail::wrap(v, ex);
          }
          want[static_cast<size_t>(bind[driver][k])] = v;
        }
        if (!ok) continue;
        auto rec = [&](auto&& self, size_t v) -> void {
          if (v == iters) {
            accumulate(out, iv, slot.value);
            return;
          }
          for (std::int64_t x = 0; x < extent[v]; ++x) {
            if (want[v] != -1 && x != want[v]) continue;
            iv[v] = x;
            self(self, v + 1);
          }
        };
        rec(rec, 0);
      }
    }
    if (plan_out) *plan_out = plan;
    return out;
  }

  // Two sparse operands: contraction between the driver and the second
  // sparse input over their shared iterators.
  size_t other = sparse_ops[1];
  if (sparse_ops.size() > 2)
    fail(ErrorKind::InvalidOperation, "at most two sparse operands are supported");
  const KernelOperand& b_op = inputs[other];

  std::vector<size_t> shared;  // iterators bound by both sparse operands
  for (int ba : bind[driver])
    for (int bb : bind[other])
      if (ba == bb) shared.push_back(static_cast<size_t>(ba));

  bool co_iterable = opt.optimize && shared.size() == 1 && d_op.mat.levels.size() == 2 &&
                     b_op.mat.levels.size() == 2 &&
                     detail::identity_restore(d_op.restore, 2) &&
                     detail::identity_restore(b_op.restore, 2) &&
                     d_op.mat.levels[1].storage.ptr && b_op.mat.levels[0].storage.idx &&
                     !b_op.mat.levels[0].storage.ptr && b_op.enc.mutation.merged(0) &&
                     b_op.mat.levels[1].storage.ptr &&
                     bind[driver][1] == static_cast<int>(shared[0]) &&
                     bind[other][0] == static_cast<int>(shared[0]);

  if (co_iterable) {
    plan.gemm_mode = "co-iterate";
    emit("co-iterate " + spec.operand_names[driver + 1] + " L1 with " +
         spec.operand_names[other + 1] + " L0 (two-pointer over sorted indices)");
    const MaterializedLevel& al0 = d_op.mat.levels[0];
    const MaterializedLevel& al1 = d_op.mat.levels[1];
    const MaterializedLevel& bl0 = b_op.mat.levels[0];
    const MaterializedLevel& bl1 = b_op.mat.levels[1];
    std::vector<std::int64_t> iv(iters, 0);
    for (size_t p = 0; p < al0.node_count; ++p) {
      std::int64_t i = al0.storage.size ? al0.bounds.lo + static_cast<std::int64_t>(p)
                                        : al0.idx[p];
      if (i < 0 || i >= d_op.shape().extents[0]) {
        if (opt.bounds_guards) continue;
        i = detail::wrap(i, d_op.shape().extents[0]);
      }
      iv[static_cast<size_t>(bind[driver][0])] = i;
      size_t pa = static_cast<size_t>(al1.ptr[p]);
      size_t pa_end = static_cast<size_t>(al1.ptr[p + 1]);
      size_t pb = 0;
      while (pa < pa_end && pb < bl0.idx.size()) {
        std::int64_t ka = al1.idx[pa], kb = bl0.idx[pb];
        if (ka < kb) {
          ++pa;
        } else if (ka > kb) {
          ++pb;
        } else {
          if (ka >= 0 && ka < d_op.shape().extents[1]) {
            iv[shared[0]] = ka;
            for (std::int64_t q = bl1.ptr[pb]; q < bl1.ptr[pb + 1]; ++q) {
              std::int64_t j = bl1.idx[static_cast<size_t>(q)];
              if (j < 0 || j >= b_op.shape().extents[1]) continue;
              iv[static_cast<size_t>(bind[other][1])] = j;
              accumulate(out, iv, d_op.mat.values[pa] * b_op.mat.values[static_cast<size_t>(q)]);
            }
          }
          ++pa;
        }
      }
    }
    if (plan_out) *plan_out = plan;
    return out;
  }

  auto other_slots = detail::collect_slots(b_op);

  if (opt.optimize) {
    // Keyed probe: index the second operand by its shared-iterator values.
    plan.gemm_mode = "probe";
    std::string key_desc;
    for (size_t v : shared) key_desc += (key_desc.empty() ? "d" : ", d") + std::to_string(v);
    emit("probe " + spec.operand_names[other + 1] + " keyed by (" + key_desc + ")");
    std::map<std::vector<std::int64_t>, std::vector<std::pair<std::vector<std::int64_t>, double>>>
        adj;
    std::vector<std::int64_t> iv(iters, 0);
    for (const auto& slot : other_slots) {
      if (!bind_sparse(other, slot.logical, iv)) continue;
      std::vector<std::int64_t> key;
      for (size_t v : shared) key.push_back(iv[v]);
      std::vector<std::int64_t> rest;
      for (int b : bind[other])
        if (std::find(shared.begin(), shared.end(), static_cast<size_t>(b)) == shared.end())
          rest.push_back(iv[static_cast<size_t>(b)]);
      adj[key].push_back({rest, slot.value});
    }
    for (const auto& slot : driver_slots) {
      if (!bind_sparse(driver, slot.logical, iv)) continue;
      std::vector<std::int64_t> key;
      for (size_t v : shared) key.push_back(iv[v]);
      auto it = adj.find(key);
      if (it == adj.end()) continue;
      for (const auto& [rest, bv] : it->second) {
        size_t r = 0;
        for (int b : bind[other])
          if (std::find(shared.begin(), shared.end(), static_cast<size_t>(b)) == shared.end())
            iv[static_cast<size_t>(b)] = rest[r++];
        auto rec = [&](auto&& self, size_t fi) -> void {
          if (fi == free_iters.size()) {
            accumulate(out, iv, slot.value * bv);
            return;
          }
          for (std::int64_t x = 0; x < extent[free_iters[fi]]; ++x) {
            iv[free_iters[fi]] = x;
            self(self, fi + 1);
          }
        };
        rec(rec, 0);
      }
    }
  } else {
    plan.gemm_mode = "exhaustive";
    emit("nested walks with shared-iterator equality guards");
    std::vector<std::int64_t> iv(iters, 0);
    for (const auto& sa : driver_slots) {
      if (!bind_sparse(driver, sa.logical, iv)) continue;
      std::vector<std::int64_t> want;
      for (size_t v : shared) want.push_back(iv[v]);
      for (const auto& sb : other_slots) {
        if (!bind_sparse(other, sb.logical, iv)) continue;
        bool match = true;
        for (size_t s = 0; s < shared.size(); ++s)
          if (iv[shared[s]] != want[s]) match = false;
        if (!match) continue;
        // Driver bindings win on shared iterators; restore them.
        for (size_t s = 0; s < shared.size(); ++s) iv[shared[s]] = want[s];
        auto rec = [&](auto&& self, size_t fi) -> void {
          if (fi == free_iters.size()) {
            accumulate(out, iv, sa.value * sb.value);
            return;
          }
          for (std::int64_t x = 0; x < extent[free_iters[fi]]; ++x) {
            iv[free_iters[fi]] = x;
            self(self, fi + 1);
          }
        };
        rec(rec, 0);
      }
    }
  }
  if (plan_out) *plan_out = plan;
  return out;
}

}  // namespace sparseforge
