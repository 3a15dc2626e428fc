#pragma once

#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparseforge/encoding.hpp"
#include "sparseforge/errors.hpp"
#include "sparseforge/parse.hpp"

namespace sparseforge {

// Built-in matrix formats, expressed in the encoding grammar. Parameterized
// names take their arguments in parentheses: BCSR(2,2), BDIA(3), CISR(2).

namespace detail {

inline std::string count_query(const std::string& group) {
  return "sum(value) groupBy (d0, d1) -> (" + group + ") with value ne 0 -> 1 | "
         "otherwise -> 0";
}

inline std::string slot_query(const std::string& group, const std::string& traverse) {
  return "enum(value) groupBy (d0, d1) -> (" + group + ") traverseBy (d0, d1) -> (" +
         traverse + ") with value eq 0 -> sumVal | otherwise -> 0";
}

}  // namespace detail

inline std::optional<std::string> named_format_text(const std::string& name,
                                                    const std::vector<std::int64_t>& args) {
  auto arg = [&](size_t i, std::int64_t fallback) {
    return i < args.size() ? args[i] : fallback;
  };
  auto s = [](std::int64_t v) { return std::to_string(v); };

  if (name == "COO") return "map (d0, d1) -> (d0, d1); trim(0,1)";
  if (name == "DOK") return "map (d0, d1) -> (d0, d1); trim(0,1), pack(0,1)";
  if (name == "CSR") return "map (d0, d1) -> (d0, d1); merge(0), trim(1,1)";
  if (name == "CSC") return "map (d0, d1) -> (d1, d0); merge(0), trim(1,1)";
  if (name == "DCSR") return "map (d0, d1) -> (d0, d1); merge(0), trim(0,1)";
  if (name == "DCSC") return "map (d0, d1) -> (d1, d0); merge(0), trim(0,1)";
  if (name == "LIL") return "map (d0, d1) -> (d0, d1); merge(0), trim(1,1), pack(0,1)";
  if (name == "DIA") return "map (d0, d1) -> (d1-d0, d0); merge(0), trim(0,0)";
  if (name == "DIA-variant" || name == "DIAV")
    return "map (d0, d1) -> (d1-d0, d1); merge(0), trim(0,0)";
  if (name == "BCSR") {
    std::string r = s(arg(0, 2)), c = s(arg(1, arg(0, 2)));
    return "map (d0, d1) -> (d0/" + r + ", d1/" + c + ", d0%" + r + ", d1%" + c +
           "); merge(0), trim(1,1)";
  }
  if (name == "CSB") {
    std::string r = s(arg(0, 2)), c = s(arg(1, arg(0, 2)));
    return "map (d0, d1) -> (d0/" + r + ", d1/" + c + ", d0%" + r + ", d1%" + c +
           "); merge(0,1), trim(2,3)";
  }
  if (name == "ELL")
    return "map (d0, d1) -> (indirect(d1), d0, d1); merge(0), trim(0,0), indirect { " +
           detail::count_query("d0") + " ; " + detail::slot_query("d0", "d1") + " }";
  if (name == "C2SR") {
    std::string k = s(arg(0, 2));
    return "map (d0, d1) -> (d0%" + k + ", d0/" + k +
           ", d1); merge(0,1), trim(2,2), partition(0)";
  }
  if (name == "CISR" || name == "CISR-plus" || name == "CISRPLUS") {
    std::string k = s(arg(0, 2));
    std::string chain = detail::count_query("d0");
    if (name != "CISR") chain += " ; reorder(d0) traverseBy (d0, d1) -> (d0)";
    chain += " ; schedule(d0) traverseBy (d0, d1) -> (d0/" + k + ") partitions=" + k;
    return "map (d0, d1) -> (indirect(d0), d0, d1); merge(0,1), trim(1,2), "
           "partition(0), indirect { " +
           chain + " }";
  }
  if (name == "BDIA") {
    std::string b = s(arg(0, 3));
    return "map (d0, d1) -> (d0/" + b + ", d1-d0, d0%" + b + "); merge(0), trim(1,1)";
  }
  if (name == "BELL") {
    std::string b = s(arg(0, 2));
    return "map (d0, d1) -> (indirect(d1/" + b + "), d0/" + b + ", d1/" + b + ", d0%" +
           b + ", d1%" + b + "); merge(0), trim(0,0), indirect { " +
           detail::count_query("d0/" + b + ", d1/" + b) + " ; " +
           detail::slot_query("d0/" + b, "d1/" + b) + " }";
  }
  return std::nullopt;
}

// Accepts either a registered name (with optional arguments) or a raw
// encoding string starting with "map".
inline FormatEncoding resolve_format(const std::string& text) {
  size_t start = text.find_first_not_of(" \t\r\n");
  if (start == std::string::npos) fail(ErrorKind::Parse, "empty format");
  if (text.compare(start, 3, "map") == 0 &&
      (start + 3 >= text.size() ||
       !std::isalnum(static_cast<unsigned char>(text[start + 3]))))
    return parse_encoding(text);

  std::string t;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) t += c;
  std::string name = t;
  std::vector<std::int64_t> args;
  auto open = t.find('(');
  if (open != std::string::npos) {
    if (t.back() != ')') fail(ErrorKind::Parse, "malformed format name: " + text);
    name = t.substr(0, open);
    std::string inner = t.substr(open + 1, t.size() - open - 2);
    size_t pos = 0;
    while (pos < inner.size()) {
      size_t next = inner.find(',', pos);
      if (next == std::string::npos) next = inner.size();
      std::string piece = inner.substr(pos, next - pos);
      if (piece.empty() || piece.find_first_not_of("0123456789") != std::string::npos)
        fail(ErrorKind::Parse, "format arguments must be positive integers: " + text);
      args.push_back(std::stoll(piece));
      pos = next + 1;
    }
  }
  auto enc_text = named_format_text(name, args);
  if (!enc_text)
    fail(ErrorKind::Parse, "unknown format name: " + name);
  return parse_encoding(*enc_text);
}

inline std::vector<std::string> named_format_list() {
  return {"COO",  "DOK", "CSR",  "CSC",  "DCSR", "DCSC",      "LIL",  "DIA", "DIA-variant",
          "BCSR", "CSB", "ELL",  "C2SR", "CISR", "CISR-plus", "BDIA", "BELL"};
}

}  // namespace sparseforge
