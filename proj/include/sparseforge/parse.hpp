#pragma once

#include <cctype>
#include <cstdint>
#include <string>
#include <vector>

#include "sparseforge/encoding.hpp"
#include "sparseforge/errors.hpp"
#include "sparseforge/expr.hpp"
#include "sparseforge/index_map.hpp"
#include "sparseforge/query.hpp"

namespace sparseforge {

// Text form of an encoding:
//
//   map (d0, d1) -> (d1-d0, d0); merge(0), trim(0,0)
//
// with optional primitives trim(S,E), merge(L,...), pack(S,E), partition(L)
// and an indirect block holding the query chain:
//
//   indirect { sum(value) groupBy (d0, d1) -> (d0) with value ne 0 -> 1 |
//              otherwise -> 0 ; enum(value) ... }
//
// Destination expressions support +, -, integer scaling, and postfix /f and
// %f with a positive literal factor.

namespace detail {

struct Lexer {
  explicit Lexer(const std::string& text) : text_(text) { advance(); }

  enum class Tok { End, Ident, Int, Sym };

  Tok kind = Tok::End;
  std::string ident;
  std::int64_t number = 0;
  std::string sym;

  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    if (pos_ >= text_.size()) {
      kind = Tok::End;
      return;
    }
    char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      kind = Tok::Ident;
      ident = text_.substr(start, pos_ - start);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
        ++pos_;
      kind = Tok::Int;
      number = std::stoll(text_.substr(start, pos_ - start));
      return;
    }
    if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
      kind = Tok::Sym;
      sym = "->";
      pos_ += 2;
      return;
    }
    kind = Tok::Sym;
    sym = std::string(1, c);
    ++pos_;
  }

  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorKind::Parse, what + " near position " + std::to_string(pos_) + " in \"" +
                               text_ + "\"");
  }

  bool at_sym(const std::string& s) const { return kind == Tok::Sym && sym == s; }
  bool at_ident(const std::string& s) const { return kind == Tok::Ident && ident == s; }

  void expect_sym(const std::string& s) {
    if (!at_sym(s)) error("expected '" + s + "'");
    advance();
  }
  void expect_ident(const std::string& s) {
    if (!at_ident(s)) error("expected '" + s + "'");
    advance();
  }
  std::int64_t expect_int() {
    if (kind != Tok::Int) error("expected integer");
    std::int64_t v = number;
    advance();
    return v;
  }
  bool accept_sym(const std::string& s) {
    if (!at_sym(s)) return false;
    advance();
    return true;
  }
  bool accept_ident(const std::string& s) {
    if (!at_ident(s)) return false;
    advance();
    return true;
  }

 private:
  std::string text_;
  size_t pos_ = 0;
};

class MapParser {
 public:
  explicit MapParser(Lexer& lex) : lex_(lex) {}

  IndexMap parse_map() {
    IndexMap m;
    lex_.expect_sym("(");
    m.src_rank = 0;
    while (true) {
      std::int64_t id = parse_dim_name();
      if (id != static_cast<std::int64_t>(m.src_rank))
        lex_.error("source dims must be d0, d1, ... in order");
      ++m.src_rank;
      if (!lex_.accept_sym(",")) break;
    }
    lex_.expect_sym(")");
    lex_.expect_sym("->");
    lex_.expect_sym("(");
    while (true) {
      m.dst.push_back(canonical_expr(parse_expr()));
      if (!lex_.accept_sym(",")) break;
    }
    lex_.expect_sym(")");
    for (const auto& e : m.dst) check_dims(e, m.src_rank);
    return m;
  }

  ExprPtr parse_expr() {
    ExprPtr e = parse_term();
    while (true) {
      if (lex_.accept_sym("+"))
        e = add_expr(e, parse_term());
      else if (lex_.accept_sym("-"))
        e = sub_expr(e, parse_term());
      else
        return e;
    }
  }

 private:
  ExprPtr parse_term() {
    ExprPtr e = parse_factor();
    while (true) {
      if (lex_.accept_sym("/"))
        e = div_expr(e, lex_.expect_int());
      else if (lex_.accept_sym("%"))
        e = mod_expr(e, lex_.expect_int());
      else
        return e;
    }
  }

  ExprPtr parse_factor() {
    if (lex_.accept_sym("-")) return mul_expr(-1, parse_factor());
    if (lex_.accept_sym("(")) {
      ExprPtr e = parse_expr();
      lex_.expect_sym(")");
      return e;
    }
    if (lex_.kind == Lexer::Tok::Int) {
      std::int64_t v = lex_.expect_int();
      if (lex_.accept_sym("*")) return mul_expr(v, parse_factor());
      return const_expr(v);
    }
    if (lex_.at_ident("indirect")) {
      lex_.advance();
      lex_.expect_sym("(");
      std::vector<ExprPtr> args;
      while (true) {
        args.push_back(canonical_expr(parse_expr()));
        if (!lex_.accept_sym(",")) break;
      }
      lex_.expect_sym(")");
      return indirect_expr(std::move(args));
    }
    return dim_ref(parse_dim_name());
  }

  std::int64_t parse_dim_name() {
    if (lex_.kind != Lexer::Tok::Ident || lex_.ident.size() < 2 || lex_.ident[0] != 'd')
      lex_.error("expected dim name dN");
    for (size_t i = 1; i < lex_.ident.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(lex_.ident[i])))
        lex_.error("expected dim name dN");
    std::int64_t id = std::stoll(lex_.ident.substr(1));
    lex_.advance();
    return id;
  }

  static void check_dims(const ExprPtr& e, size_t rank) {
    switch (e->kind) {
      case DimExpr::Kind::Dim:
        if (e->value < 0 || static_cast<size_t>(e->value) >= rank)
          fail(ErrorKind::Parse, "dim id out of range: d" + std::to_string(e->value));
        return;
      case DimExpr::Kind::Const:
        return;
      case DimExpr::Kind::Add:
        check_dims(e->a, rank);
        check_dims(e->b, rank);
        return;
      case DimExpr::Kind::Mul:
      case DimExpr::Kind::FloorDiv:
      case DimExpr::Kind::Mod:
        check_dims(e->a, rank);
        return;
      case DimExpr::Kind::Indirect:
        for (const auto& a : e->args) {
          if (a->kind == DimExpr::Kind::Indirect)
            fail(ErrorKind::Parse, "indirect references cannot nest");
          check_dims(a, rank);
        }
        return;
    }
  }

  Lexer& lex_;
};

inline QuerySpec parse_query(Lexer& lex) {
  QuerySpec q;
  if (lex.accept_ident("sum"))
    q.func = QueryFunc::Sum;
  else if (lex.accept_ident("enum"))
    q.func = QueryFunc::Enumerate;
  else if (lex.accept_ident("reorder"))
    q.func = QueryFunc::Reorder;
  else if (lex.accept_ident("schedule"))
    q.func = QueryFunc::Schedule;
  else
    lex.error("expected query function");

  MapParser maps(lex);
  lex.expect_sym("(");
  if (lex.accept_ident("value")) {
    q.var_is_value = true;
  } else if (lex.kind == Lexer::Tok::Ident && lex.ident.size() >= 2 && lex.ident[0] == 'd') {
    q.var_is_value = false;
    q.var_dim = std::stoll(lex.ident.substr(1));
    lex.advance();
  } else {
    lex.error("expected query variable");
  }
  lex.expect_sym(")");

  while (true) {
    if (lex.accept_ident("groupBy")) {
      q.group_by = maps.parse_map();
    } else if (lex.accept_ident("traverseBy")) {
      q.traverse_by = maps.parse_map();
    } else if (lex.accept_ident("partitions")) {
      lex.expect_sym("=");
      q.partitions = lex.expect_int();
    } else if (lex.accept_ident("with")) {
      ValueMapSpec vm;
      bool saw_otherwise = false;
      while (true) {
        auto parse_result = [&](bool& yields, std::int64_t& result) {
          if (lex.accept_ident("sumVal")) {
            yields = true;
            return;
          }
          bool neg = lex.accept_sym("-");
          result = lex.expect_int();
          if (neg) result = -result;
        };
        if (lex.accept_ident("otherwise")) {
          lex.expect_sym("->");
          parse_result(vm.otherwise_yields_sum, vm.otherwise);
          saw_otherwise = true;
          break;
        }
        ValueCase vc;
        if (lex.accept_ident("value")) {
          vc.on_value = true;
        } else if (lex.kind == Lexer::Tok::Ident && lex.ident.size() >= 2 &&
                   lex.ident[0] == 'd') {
          vc.on_value = false;
          vc.var_dim = std::stoll(lex.ident.substr(1));
          lex.advance();
        } else {
          lex.error("expected value-map variable");
        }
        if (lex.accept_ident("ne"))
          vc.op = CondOp::Ne;
        else if (lex.accept_ident("eq"))
          vc.op = CondOp::Eq;
        else if (lex.accept_ident("bt"))
          vc.op = CondOp::Bt;
        else if (lex.accept_ident("be"))
          vc.op = CondOp::Be;
        else if (lex.accept_ident("lt"))
          vc.op = CondOp::Lt;
        else if (lex.accept_ident("le"))
          vc.op = CondOp::Le;
        else
          lex.error("expected comparison (ne, eq, bt, be, lt, le)");
        bool neg = lex.accept_sym("-");
        vc.rhs = lex.expect_int();
        if (neg) vc.rhs = -vc.rhs;
        lex.expect_sym("->");
        parse_result(vc.yields_sum, vc.result);
        vm.cases.push_back(vc);
        if (!lex.accept_sym("|")) break;
      }
      if (!saw_otherwise) lex.error("value map must end with otherwise");
      q.value_map = vm;
    } else {
      break;
    }
  }
  return q;
}

}  // namespace detail

inline IndexMap parse_index_map(const std::string& text) {
  detail::Lexer lex(text);
  detail::MapParser maps(lex);
  IndexMap m = maps.parse_map();
  if (lex.kind != detail::Lexer::Tok::End) lex.error("trailing input after map");
  return m;
}

inline QuerySpec parse_query(const std::string& text) {
  detail::Lexer lex(text);
  QuerySpec q = detail::parse_query(lex);
  if (lex.kind != detail::Lexer::Tok::End) lex.error("trailing input after query");
  return q;
}

inline FormatEncoding parse_encoding(const std::string& text) {
  detail::Lexer lex(text);
  lex.expect_ident("map");
  detail::MapParser maps(lex);
  FormatEncoding enc;
  enc.map = maps.parse_map();

  if (lex.accept_sym(";")) {
    while (true) {
      if (lex.accept_ident("trim")) {
        lex.expect_sym("(");
        enc.mutation.has_trim = true;
        enc.mutation.trim_start = static_cast<size_t>(lex.expect_int());
        lex.expect_sym(",");
        enc.mutation.trim_end = static_cast<size_t>(lex.expect_int());
        lex.expect_sym(")");
      } else if (lex.accept_ident("merge")) {
        lex.expect_sym("(");
        while (true) {
          enc.mutation.merges.push_back(static_cast<size_t>(lex.expect_int()));
          if (!lex.accept_sym(",")) break;
        }
        lex.expect_sym(")");
      } else if (lex.accept_ident("pack")) {
        lex.expect_sym("(");
        enc.layout.has_pack = true;
        enc.layout.pack_start = static_cast<size_t>(lex.expect_int());
        lex.expect_sym(",");
        enc.layout.pack_end = static_cast<size_t>(lex.expect_int());
        lex.expect_sym(")");
      } else if (lex.accept_ident("partition")) {
        lex.expect_sym("(");
        enc.layout.has_partition = true;
        enc.layout.partition_level = static_cast<size_t>(lex.expect_int());
        lex.expect_sym(")");
      } else if (lex.accept_ident("indirect")) {
        lex.expect_sym("{");
        while (true) {
          enc.queries.push_back(detail::parse_query(lex));
          if (!lex.accept_sym(";")) break;
        }
        lex.expect_sym("}");
      } else {
        lex.error("expected primitive (trim, merge, pack, partition, indirect)");
      }
      if (!lex.accept_sym(",")) break;
    }
  }
  if (lex.kind != detail::Lexer::Tok::End) lex.error("trailing input after encoding");
  validate_encoding(enc);
  return enc;
}

inline std::string print_value_map(const ValueMapSpec& vm) {
  std::string s;
  auto result_str = [](bool yields, std::int64_t v) {
    return yields ? std::string("sumVal") : std::to_string(v);
  };
  for (const auto& c : vm.cases) {
    s += (c.on_value ? std::string("value") : "d" + std::to_string(c.var_dim)) + " " +
         cond_op_name(c.op) + " " + std::to_string(c.rhs) + " -> " +
         result_str(c.yields_sum, c.result) + " | ";
  }
  s += "otherwise -> " + result_str(vm.otherwise_yields_sum, vm.otherwise);
  return s;
}

inline std::string print_query(const QuerySpec& q) {
  std::string s = query_func_name(q.func) + "(" +
                  (q.var_is_value ? std::string("value") : "d" + std::to_string(q.var_dim)) +
                  ")";
  if (q.group_by) s += " groupBy " + print_index_map(*q.group_by);
  if (q.traverse_by) s += " traverseBy " + print_index_map(*q.traverse_by);
  if (q.func == QueryFunc::Schedule) s += " partitions=" + std::to_string(q.partitions);
  if (q.value_map) s += " with " + print_value_map(*q.value_map);
  return s;
}

inline std::string print_encoding(const FormatEncoding& enc) {
  std::string s = "map " + print_index_map(enc.map);
  std::vector<std::string> prims;
  if (!enc.mutation.merges.empty()) {
    std::string m = "merge(";
    for (size_t i = 0; i < enc.mutation.merges.size(); ++i) {
      if (i) m += ",";
      m += std::to_string(enc.mutation.merges[i]);
    }
    prims.push_back(m + ")");
  }
  if (enc.mutation.has_trim)
    prims.push_back("trim(" + std::to_string(enc.mutation.trim_start) + "," +
                    std::to_string(enc.mutation.trim_end) + ")");
  if (enc.layout.has_pack)
    prims.push_back("pack(" + std::to_string(enc.layout.pack_start) + "," +
                    std::to_string(enc.layout.pack_end) + ")");
  if (enc.layout.has_partition)
    prims.push_back("partition(" + std::to_string(enc.layout.partition_level) + ")");
  if (!enc.queries.empty()) {
    std::string q = "indirect { ";
    for (size_t i = 0; i < enc.queries.size(); ++i) {
      if (i) q += " ; ";
      q += print_query(enc.queries[i]);
    }
    prims.push_back(q + " }");
  }
  if (!prims.empty()) {
    s += "; ";
    for (size_t i = 0; i < prims.size(); ++i) {
      if (i) s += ", ";
      s += prims[i];
    }
  }
  return s;
}

}  // namespace sparseforge
