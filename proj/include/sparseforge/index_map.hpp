#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparseforge/errors.hpp"
#include "sparseforge/expr.hpp"
#include "sparseforge/matrix.hpp"

namespace sparseforge {

// Index map from logical dims (d0..dn-1) to physical level expressions.
struct IndexMap {
  size_t src_rank = 0;
  std::vector<ExprPtr> dst;

  size_t dst_rank() const { return dst.size(); }
};

inline IndexMap identity_map(size_t rank) {
  IndexMap m;
  m.src_rank = rank;
  for (size_t i = 0; i < rank; ++i) m.dst.push_back(dim_ref(static_cast<std::int64_t>(i)));
  return m;
}

inline std::string print_index_map(const IndexMap& m, const std::string& src_prefix = "d") {
  std::string s = "(";
  for (size_t i = 0; i < m.src_rank; ++i) {
    if (i) s += ", ";
    s += src_prefix + std::to_string(i);
  }
  s += ") -> (";
  for (size_t i = 0; i < m.dst.size(); ++i) {
    if (i) s += ", ";
    s += print_expr(m.dst[i], src_prefix);
  }
  return s + ")";
}

inline bool map_equal(const IndexMap& a, const IndexMap& b) {
  if (a.src_rank != b.src_rank || a.dst.size() != b.dst.size()) return false;
  for (size_t i = 0; i < a.dst.size(); ++i)
    if (!expr_equal(a.dst[i], b.dst[i])) return false;
  return true;
}

inline bool is_indirect_expr(const ExprPtr& e) {
  return e->kind == DimExpr::Kind::Indirect;
}

inline std::vector<size_t> indirect_positions(const IndexMap& m) {
  std::vector<size_t> out;
  for (size_t i = 0; i < m.dst.size(); ++i)
    if (is_indirect_expr(m.dst[i])) out.push_back(i);
  return out;
}

inline bool has_indirect(const IndexMap& m) { return !indirect_positions(m).empty(); }

// A div/mod pair over the same inner expression and factor, e.g. positions
// holding g/f and g%f. Such pairs encode tiling and are treated as one
// logical quantity g = f * div + mod.
struct TilePair {
  size_t div_pos = 0;
  size_t mod_pos = 0;
  ExprPtr inner;
  std::int64_t factor = 0;
};

inline std::vector<TilePair> tile_pairs(const IndexMap& m) {
  std::vector<TilePair> out;
  std::vector<bool> used(m.dst.size(), false);
  for (size_t i = 0; i < m.dst.size(); ++i) {
    const ExprPtr& e = m.dst[i];
    if (e->kind != DimExpr::Kind::FloorDiv) continue;
    for (size_t j = 0; j < m.dst.size(); ++j) {
      const ExprPtr& o = m.dst[j];
      if (used[j] || o->kind != DimExpr::Kind::Mod || o->value != e->value) continue;
      if (!expr_equal(e->a, o->a)) continue;
      out.push_back({i, j, canonical_expr(e->a), e->value});
      used[i] = used[j] = true;
      break;
    }
  }
  return out;
}

// Affine matrix of a map: row i holds the coefficients of dst expression i
// over the source dims. Rejects div, mod, indirect, and constant offsets.
inline RatMatrix index_map_matrix(const IndexMap& m) {
  RatMatrix out(m.dst.size(), m.src_rank);
  for (size_t i = 0; i < m.dst.size(); ++i) {
    LinearForm lf = normalize_expr(m.dst[i]);
    if (lf.constant != 0)
      fail(ErrorKind::NonAffine, "constant offset in map expression: " + print_expr(m.dst[i]));
    for (const auto& t : lf.terms) {
      if (t.atom->kind != DimExpr::Kind::Dim)
        fail(ErrorKind::NonAffine, "map expression is not affine: " + print_expr(m.dst[i]));
      out.at(i, static_cast<size_t>(t.atom->value)) = t.coeff;
    }
  }
  return out;
}

inline std::vector<std::int64_t> eval_map(const IndexMap& m,
                                          std::span<const std::int64_t> coords) {
  std::vector<std::int64_t> out;
  out.reserve(m.dst.size());
  for (const auto& e : m.dst) out.push_back(eval_expr(e, coords));
  return out;
}

// Inverts a map back to logical coordinates, expressed over the physical
// level variables e0..em-1. Indirect levels carry no coordinate information
// and are skipped; div/mod tile pairs are resolved jointly. Fractional
// solution rows become exact floor divisions of an integer combination.
inline IndexMap invert_map(const IndexMap& m) {
  const size_t n = m.src_rank;
  std::vector<TilePair> pairs = tile_pairs(m);
  std::vector<bool> in_pair(m.dst.size(), false);
  for (const auto& p : pairs) in_pair[p.div_pos] = in_pair[p.mod_pos] = true;

  // One equation per direct quantity: lhs coefficients over d, rhs
  // coefficients over e.
  struct Equation {
    std::vector<Rational> lhs;
    std::vector<Rational> rhs;
  };
  std::vector<Equation> eqs;
  auto affine_row = [&](const ExprPtr& e) {
    LinearForm lf = normalize_expr(e);
    if (lf.constant != 0)
      fail(ErrorKind::NonAffine, "constant offset in map expression: " + print_expr(e));
    std::vector<Rational> row(n);
    for (const auto& t : lf.terms) {
      if (t.atom->kind != DimExpr::Kind::Dim)
        fail(ErrorKind::Singular, "map is not invertible: " + print_expr(e));
      row[static_cast<size_t>(t.atom->value)] = t.coeff;
    }
    return row;
  };

  for (size_t i = 0; i < m.dst.size(); ++i) {
    if (in_pair[i] || is_indirect_expr(m.dst[i])) continue;
    Equation eq;
    eq.lhs = affine_row(m.dst[i]);
    eq.rhs.assign(m.dst.size(), Rational(0));
    eq.rhs[i] = 1;
    eqs.push_back(std::move(eq));
  }
  for (const auto& p : pairs) {
    Equation eq;
    eq.lhs = affine_row(p.inner);
    eq.rhs.assign(m.dst.size(), Rational(0));
    eq.rhs[p.div_pos] = p.factor;
    eq.rhs[p.mod_pos] = 1;
    eqs.push_back(std::move(eq));
  }

  if (eqs.size() != n) fail(ErrorKind::Singular, "map is not invertible");
  RatMatrix a(n, n), r(n, m.dst.size());
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) a.at(i, j) = eqs[i].lhs[j];
    for (size_t j = 0; j < m.dst.size(); ++j) r.at(i, j) = eqs[i].rhs[j];
  }
  RatMatrix sol = a.inverse() * r;  // d = sol * e

  IndexMap inv;
  inv.src_rank = m.dst.size();
  for (size_t i = 0; i < n; ++i) {
    std::int64_t denom = 1;
    for (size_t j = 0; j < m.dst.size(); ++j)
      denom = std::lcm(denom, sol.at(i, j).den());
    ExprPtr combo;
    for (size_t j = 0; j < m.dst.size(); ++j) {
      Rational c = sol.at(i, j) * Rational(denom);
      if (c.is_zero()) continue;
      ExprPtr term = mul_expr(c.as_integer(), dim_ref(static_cast<std::int64_t>(j)));
      combo = combo ? add_expr(combo, term) : term;
    }
    if (!combo) combo = const_expr(0);
    inv.dst.push_back(denom == 1 ? canonical_expr(combo)
                                 : div_expr(canonical_expr(combo), denom));
  }
  return inv;
}

}  // namespace sparseforge
