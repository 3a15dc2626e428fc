#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sparseforge/errors.hpp"

namespace sparseforge {

// Destination expression of an index map. Expressions are immutable and
// shared; normalization flattens them into an integer linear combination of
// atoms (dims, floor divisions, modulos, indirect references) plus a constant.
struct DimExpr;
using ExprPtr = std::shared_ptr<const DimExpr>;

struct DimExpr {
  enum class Kind { Dim, Const, Add, Mul, FloorDiv, Mod, Indirect };

  Kind kind;
  std::int64_t value = 0;  // Dim: dim id, Const: value, Mul: factor,
                           // FloorDiv/Mod: divisor
  ExprPtr a, b;
  std::vector<ExprPtr> args;  // Indirect only
};

inline ExprPtr make_expr(DimExpr e) {
  return std::make_shared<const DimExpr>(std::move(e));
}

inline ExprPtr dim_ref(std::int64_t i) {
  return make_expr({DimExpr::Kind::Dim, i, nullptr, nullptr, {}});
}
inline ExprPtr const_expr(std::int64_t c) {
  return make_expr({DimExpr::Kind::Const, c, nullptr, nullptr, {}});
}
inline ExprPtr add_expr(ExprPtr a, ExprPtr b) {
  return make_expr({DimExpr::Kind::Add, 0, std::move(a), std::move(b), {}});
}
inline ExprPtr mul_expr(std::int64_t k, ExprPtr e) {
  return make_expr({DimExpr::Kind::Mul, k, std::move(e), nullptr, {}});
}
inline ExprPtr sub_expr(ExprPtr a, ExprPtr b) {
  return add_expr(std::move(a), mul_expr(-1, std::move(b)));
}
inline ExprPtr div_expr(ExprPtr e, std::int64_t f) {
  if (f <= 0) fail(ErrorKind::Parse, "division factor must be positive");
  return make_expr({DimExpr::Kind::FloorDiv, f, std::move(e), nullptr, {}});
}
inline ExprPtr mod_expr(ExprPtr e, std::int64_t f) {
  if (f <= 0) fail(ErrorKind::Parse, "modulo factor must be positive");
  return make_expr({DimExpr::Kind::Mod, f, std::move(e), nullptr, {}});
}
inline ExprPtr indirect_expr(std::vector<ExprPtr> args) {
  return make_expr({DimExpr::Kind::Indirect, 0, nullptr, nullptr, std::move(args)});
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t f) {
  std::int64_t q = a / f, r = a % f;
  return r != 0 && r < 0 ? q - 1 : q;
}
inline std::int64_t floor_mod(std::int64_t a, std::int64_t f) {
  return a - floor_div(a, f) * f;
}

// Evaluates over concrete source coordinates. Indirect atoms cannot be
// evaluated here; the query engine resolves them.
inline std::int64_t eval_expr(const ExprPtr& e, std::span<const std::int64_t> dims) {
  switch (e->kind) {
    case DimExpr::Kind::Dim:
      if (e->value < 0 || static_cast<size_t>(e->value) >= dims.size())
        fail(ErrorKind::InvalidOperation, "dim id out of range in expression");
      return dims[static_cast<size_t>(e->value)];
    case DimExpr::Kind::Const:
      return e->value;
    case DimExpr::Kind::Add:
      return eval_expr(e->a, dims) + eval_expr(e->b, dims);
    case DimExpr::Kind::Mul:
      return e->value * eval_expr(e->a, dims);
    case DimExpr::Kind::FloorDiv:
      return floor_div(eval_expr(e->a, dims), e->value);
    case DimExpr::Kind::Mod:
      return floor_mod(eval_expr(e->a, dims), e->value);
    case DimExpr::Kind::Indirect:
      fail(ErrorKind::InvalidOperation, "indirect expression has no direct value");
  }
  fail(ErrorKind::InvalidOperation, "corrupt expression");
}

// Closed integer interval, used to bound level coordinates.
struct Interval {
  std::int64_t lo = 0;
  std::int64_t hi = -1;  // empty by default

  std::int64_t extent() const { return hi < lo ? 0 : hi - lo + 1; }
};

inline Interval expr_bounds(const ExprPtr& e, std::span<const Interval> dims) {
  switch (e->kind) {
    case DimExpr::Kind::Dim: {
      if (e->value < 0 || static_cast<size_t>(e->value) >= dims.size())
        fail(ErrorKind::InvalidOperation, "dim id out of range in expression");
      return dims[static_cast<size_t>(e->value)];
    }
    case DimExpr::Kind::Const:
      return {e->value, e->value};
    case DimExpr::Kind::Add: {
      auto x = expr_bounds(e->a, dims), y = expr_bounds(e->b, dims);
      return {x.lo + y.lo, x.hi + y.hi};
    }
    case DimExpr::Kind::Mul: {
      auto x = expr_bounds(e->a, dims);
      if (e->value >= 0) return {e->value * x.lo, e->value * x.hi};
      return {e->value * x.hi, e->value * x.lo};
    }
    case DimExpr::Kind::FloorDiv: {
      auto x = expr_bounds(e->a, dims);
      return {floor_div(x.lo, e->value), floor_div(x.hi, e->value)};
    }
    case DimExpr::Kind::Mod: {
      auto x = expr_bounds(e->a, dims);
      if (floor_div(x.lo, e->value) == floor_div(x.hi, e->value))
        return {floor_mod(x.lo, e->value), floor_mod(x.hi, e->value)};
      return {0, e->value - 1};
    }
    case DimExpr::Kind::Indirect:
      fail(ErrorKind::InvalidOperation, "indirect expression has no static bounds");
  }
  fail(ErrorKind::InvalidOperation, "corrupt expression");
}

// Linear normal form: sum of coeff * atom plus a constant, where an atom is a
// dim, a floor division, a modulo, or an indirect reference.
struct LinearTerm {
  ExprPtr atom;
  std::int64_t coeff;
};

struct LinearForm {
  std::vector<LinearTerm> terms;
  std::int64_t constant = 0;
};

std::string print_expr(const ExprPtr& e, const std::string& prefix = "d");

namespace detail {

inline int atom_rank(const ExprPtr& e) {
  switch (e->kind) {
    case DimExpr::Kind::Dim: return 0;
    case DimExpr::Kind::FloorDiv: return 1;
    case DimExpr::Kind::Mod: return 2;
    case DimExpr::Kind::Indirect: return 3;
    default: return 4;
  }
}

inline bool atom_less(const ExprPtr& x, const ExprPtr& y) {
  int rx = atom_rank(x), ry = atom_rank(y);
  if (rx != ry) return rx < ry;
  if (x->kind == DimExpr::Kind::Dim) return x->value < y->value;
  return print_expr(x) < print_expr(y);
}

inline void accumulate(LinearForm& out, const ExprPtr& e, std::int64_t scale);

inline ExprPtr normalize_inner(const ExprPtr& e);

inline void add_term(LinearForm& out, const ExprPtr& atom, std::int64_t coeff) {
  if (coeff == 0) return;
  // Keyed by printed form; skip printing for the common first term so that
  // printing an atom (which normalizes it) cannot recurse into itself.
  if (!out.terms.empty()) {
    std::string key = print_expr(atom);
    for (auto& t : out.terms)
      if (print_expr(t.atom) == key) {
        t.coeff += coeff;
        return;
      }
  }
  out.terms.push_back({atom, coeff});
}

inline void accumulate(LinearForm& out, const ExprPtr& e, std::int64_t scale) {
  switch (e->kind) {
    case DimExpr::Kind::Dim:
      add_term(out, e, scale);
      return;
    case DimExpr::Kind::Const:
      out.constant += scale * e->value;
      return;
    case DimExpr::Kind::Add:
      accumulate(out, e->a, scale);
      accumulate(out, e->b, scale);
      return;
    case DimExpr::Kind::Mul:
      accumulate(out, e->a, scale * e->value);
      return;
    case DimExpr::Kind::FloorDiv:
      add_term(out, div_expr(normalize_inner(e->a), e->value), scale);
      return;
    case DimExpr::Kind::Mod:
      add_term(out, mod_expr(normalize_inner(e->a), e->value), scale);
      return;
    case DimExpr::Kind::Indirect: {
      std::vector<ExprPtr> args;
      for (const auto& a : e->args) args.push_back(normalize_inner(a));
      add_term(out, indirect_expr(std::move(args)), scale);
      return;
    }
  }
}

}  // namespace detail

inline LinearForm normalize_expr(const ExprPtr& e) {
  LinearForm out;
  detail::accumulate(out, e, 1);
  std::vector<LinearTerm> kept;
  for (auto& t : out.terms)
    if (t.coeff != 0) kept.push_back(t);
  std::sort(kept.begin(), kept.end(),
            [](const LinearTerm& a, const LinearTerm& b) {
              return detail::atom_less(a.atom, b.atom);
            });
  out.terms = std::move(kept);
  return out;
}

// Rebuilds the canonical expression from a normal form.
inline ExprPtr from_linear(const LinearForm& lf) {
  ExprPtr out;
  auto append = [&](ExprPtr piece) {
    out = out ? add_expr(out, std::move(piece)) : std::move(piece);
  };
  for (const auto& t : lf.terms) {
    if (t.coeff == 1)
      append(t.atom);
    else
      append(mul_expr(t.coeff, t.atom));
  }
  if (lf.constant != 0 || !out) append(const_expr(lf.constant));
  return out;
}

namespace detail {
inline ExprPtr normalize_inner(const ExprPtr& e) { return from_linear(normalize_expr(e)); }
}  // namespace detail

inline ExprPtr canonical_expr(const ExprPtr& e) { return detail::normalize_inner(e); }

// Prints in a stable order: positive terms by atom order, then negated terms,
// then the constant.
inline std::string print_expr(const ExprPtr& e, const std::string& prefix) {
  auto atom_str = [&](const ExprPtr& a) -> std::string {
    switch (a->kind) {
      case DimExpr::Kind::Dim:
        return prefix + std::to_string(a->value);
      case DimExpr::Kind::FloorDiv:
      case DimExpr::Kind::Mod: {
        std::string inner = print_expr(a->a, prefix);
        bool simple = a->a->kind == DimExpr::Kind::Dim;
        std::string op = a->kind == DimExpr::Kind::FloorDiv ? "/" : "%";
        return (simple ? inner : "(" + inner + ")") + op + std::to_string(a->value);
      }
      case DimExpr::Kind::Indirect: {
        std::string s = "indirect(";
        for (size_t i = 0; i < a->args.size(); ++i) {
          if (i) s += ", ";
          s += print_expr(a->args[i], prefix);
        }
        return s + ")";
      }
      default:
        return std::to_string(a->value);
    }
  };

  LinearForm lf = normalize_expr(e);
  std::string s;
  auto emit = [&](const LinearTerm& t, bool positive) {
    std::int64_t c = positive ? t.coeff : -t.coeff;
    if (!s.empty()) s += positive ? "+" : "-";
    else if (!positive) s += "-";
    if (c != 1) s += std::to_string(c) + "*";
    s += atom_str(t.atom);
  };
  for (const auto& t : lf.terms)
    if (t.coeff > 0) emit(t, true);
  for (const auto& t : lf.terms)
    if (t.coeff < 0) emit(t, false);
  if (lf.constant != 0 || s.empty()) {
    if (!s.empty()) s += lf.constant > 0 ? "+" : "-";
    std::int64_t c = s.empty() ? lf.constant
                               : (lf.constant > 0 ? lf.constant : -lf.constant);
    s += std::to_string(c);
  }
  return s;
}

inline bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  return print_expr(a) == print_expr(b);
}

}  // namespace sparseforge
