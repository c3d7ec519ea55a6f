#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "srcurv/linalg.hpp"
#include "srcurv/rational.hpp"

namespace srcurv {

// "key = value" lines; '#' starts a comment; later keys override earlier ones.
using Config = std::map<std::string, std::string>;

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline Config parse_config(std::string_view text) {
  Config cfg;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(line_no) + ": missing '='");
    auto key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    cfg[key] = trim(std::string_view(line).substr(eq + 1));
  }
  return cfg;
}

// Comma or whitespace separated numbers, each a rational or decimal.
inline std::vector<Rational> parse_rational_list(std::string_view s) {
  std::vector<Rational> out;
  std::string tok;
  auto flush = [&] {
    if (!tok.empty()) out.push_back(parse_rational(tok));
    tok.clear();
  };
  for (char c : s) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c)))
      flush();
    else
      tok.push_back(c);
  }
  flush();
  return out;
}

inline std::vector<double> parse_real_list(std::string_view s) {
  std::vector<double> out;
  for (const auto& r : parse_rational_list(s)) out.push_back(to_double(r));
  return out;
}

// Rows separated by '|', entries by commas or spaces: "0 1 | 0 0".
inline DenseMatrix<Rational> parse_matrix(std::string_view s) {
  std::vector<std::vector<Rational>> rows;
  for (const auto& r : split(s, '|')) rows.push_back(parse_rational_list(r));
  if (rows.empty() || rows[0].empty()) throw std::invalid_argument("empty matrix");
  DenseMatrix<Rational> m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw std::invalid_argument("ragged matrix rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

inline std::string format_matrix(const DenseMatrix<Rational>& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (i) out += " | ";
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += " ";
      out += to_string(m(i, j));
    }
  }
  return out;
}

}  // namespace srcurv
