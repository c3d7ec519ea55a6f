#pragma once

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <utility>
#include <vector>

#include "srcurv/flag.hpp"
#include "srcurv/linalg.hpp"
#include "srcurv/rational.hpp"

namespace srcurv {

// Boxes of a Young diagram listed row by row: (row a, column i), both 1-based.
using Box = std::pair<std::size_t, std::size_t>;

inline std::vector<Box> diagram_boxes(const YoungDiagram& d) {
  std::vector<Box> out;
  for (std::size_t a = 0; a < d.rows.size(); ++a)
    for (std::size_t i = 1; i <= d.rows[a]; ++i) out.emplace_back(a + 1, i);
  return out;
}

namespace detail {

inline Rational s_hat_entry(std::size_t i, std::size_t j) {
  Rational v(1, Integer(factorial(static_cast<unsigned>(i - 1)) * factorial(static_cast<unsigned>(j - 1)) * (i + j - 1)));
  return (i + j - 1) % 2 ? Rational(-v) : v;
}

inline Rational s_hat_inv_entry(std::size_t na, std::size_t nb, std::size_t i, std::size_t j) {
  const auto ua = static_cast<unsigned>(na), ub = static_cast<unsigned>(nb);
  const auto ui = static_cast<unsigned>(i), uj = static_cast<unsigned>(j);
  Integer num = binomial(ua + ui - 1, ui - 1) * binomial(ub + uj - 1, uj - 1) * factorial(ua) * factorial(ub);
  Integer den = factorial(ua - ui) * factorial(ub - uj) * (i + j - 1);
  return Rational(-num, den);
}

inline Rational c_entry(std::size_t i, std::size_t j) {
  Integer den = factorial(static_cast<unsigned>(i - 1)) * factorial(static_cast<unsigned>(j - 1)) * (i + j + 1) *
                (i + 1) * (j + 1);
  Rational v(Integer(i + j + 2), den);
  return (i + j) % 2 ? Rational(-v) : v;
}

}  // namespace detail

struct CanonicalTables {
  YoungDiagram diagram;
  std::vector<Box> boxes;
  DenseMatrix<Rational> S_hat, S_hat_inv, C;
};

// Leading coefficients of S(t), S(t)^{-1} and the first curvature correction, indexed by boxes.
inline CanonicalTables canonical_tables(const YoungDiagram& d) {
  CanonicalTables t;
  t.diagram = d;
  t.boxes = diagram_boxes(d);
  const std::size_t N = t.boxes.size();
  t.S_hat = DenseMatrix<Rational>(N, N);
  t.S_hat_inv = DenseMatrix<Rational>(N, N);
  t.C = DenseMatrix<Rational>(N, N);
  for (std::size_t r = 0; r < N; ++r) {
    auto [a, i] = t.boxes[r];
    for (std::size_t c = 0; c < N; ++c) {
      auto [b, j] = t.boxes[c];
      t.C(r, c) = detail::c_entry(i, j);
      if (a != b) continue;
      t.S_hat(r, c) = detail::s_hat_entry(i, j);
      t.S_hat_inv(r, c) = detail::s_hat_inv_entry(d.rows[a - 1], d.rows[b - 1], i, j);
    }
  }
  if (!(t.S_hat * t.S_hat_inv == DenseMatrix<Rational>::identity(N)))
    throw std::logic_error("canonical_tables: S_hat * S_hat_inv is not the identity");
  return t;
}

inline Rational omega_coefficient(std::size_t n, std::size_t m) {
  if (n < 1 || m < 1) throw std::invalid_argument("omega_coefficient: row lengths must be >= 1");
  const auto diff = n > m ? n - m : m - n;
  if (diff >= 2) return Rational(0);
  if (diff == 1) return Rational(1, Integer(4 * (n + m)));
  return Rational(Integer(n), Integer(4 * n * n - 1));
}

// Double-sum form; the row-n binomials run over i <= n and the row-m ones over j <= m.
inline Rational omega_double_sum(std::size_t n, std::size_t m) {
  const auto un = static_cast<unsigned>(n), um = static_cast<unsigned>(m);
  Rational s = 0;
  for (unsigned i = 1; i <= un; ++i)
    for (unsigned j = 1; j <= um; ++j) {
      Rational term = Rational(binomial(un + i - 1, i - 1) * binomial(un + 1, i + 1) * binomial(um + j - 1, j - 1) *
                               binomial(um + 1, j + 1)) *
                      Rational(i + j + 2, i + j + 1);
      s += (i + j) % 2 ? Rational(-term) : term;
    }
  return Rational(Integer(n * m), Integer((n + 1) * (m + 1))) * s;
}

// (S_hat^{-1} C S_hat^{-1})_{ab,11} for rows of lengths n and m.
inline Rational omega_from_tables(std::size_t n, std::size_t m) {
  Rational s = 0;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      s += detail::s_hat_inv_entry(n, n, 1, i) * detail::c_entry(i, j) * detail::s_hat_inv_entry(m, m, j, 1);
  return s;
}

// Every Young diagram with n boxes, rows non-increasing.
inline std::vector<YoungDiagram> all_diagrams(std::size_t n) {
  std::vector<YoungDiagram> out;
  std::vector<std::size_t> cur;
  auto rec = [&](auto&& self, std::size_t left, std::size_t cap) -> void {
    if (left == 0) {
      out.push_back(YoungDiagram{cur});
      return;
    }
    for (std::size_t r = std::min(left, cap); r >= 1; --r) {
      cur.push_back(r);
      self(self, left - r, r);
      cur.pop_back();
    }
  };
  rec(rec, n, n);
  return out;
}

}  // namespace srcurv
