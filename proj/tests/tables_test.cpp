#include <functional>

#include <gtest/gtest.h>

#include "srcurv/tables.hpp"

namespace srcurv {
namespace {

Rational q(long p, long d = 1) { return Rational(p, d); }

// All partitions of n, rows non-increasing.
std::vector<YoungDiagram> partitions(std::size_t n) {
  std::vector<YoungDiagram> out;
  std::vector<std::size_t> cur;
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t left, std::size_t cap) {
    if (left == 0) {
      out.push_back(YoungDiagram{cur});
      return;
    }
    for (std::size_t r = std::min(left, cap); r >= 1; --r) {
      cur.push_back(r);
      rec(left - r, r);
      cur.pop_back();
    }
  };
  rec(n, n);
  return out;
}

TEST(CanonicalTables, SingleRowOfTwo) {
  auto t = canonical_tables(YoungDiagram{{2}});
  DenseMatrix<Rational> S(2, 2), Si(2, 2);
  S(0, 0) = -1;
  S(0, 1) = S(1, 0) = q(1, 2);
  S(1, 1) = q(-1, 3);
  Si(0, 0) = -4;
  Si(0, 1) = Si(1, 0) = -6;
  Si(1, 1) = -12;
  EXPECT_EQ(t.S_hat, S);
  EXPECT_EQ(t.S_hat_inv, Si);
}

TEST(CanonicalTables, SingleBox) {
  auto t = canonical_tables(YoungDiagram{{1}});
  EXPECT_EQ(t.S_hat(0, 0), -1);
  EXPECT_EQ(t.S_hat_inv(0, 0), -1);
  EXPECT_EQ(t.C(0, 0), q(1, 3));
}

TEST(CanonicalTables, InverseIdentityUpToSizeEight) {
  std::size_t count = 0;
  for (std::size_t n = 1; n <= 8; ++n)
    for (const auto& d : partitions(n)) {
      auto t = canonical_tables(d);
      EXPECT_EQ(t.S_hat * t.S_hat_inv, DenseMatrix<Rational>::identity(n));
      EXPECT_EQ(t.S_hat, t.S_hat.transpose());
      EXPECT_EQ(t.C, t.C.transpose());
      ++count;
    }
  EXPECT_EQ(count, 1u + 2 + 3 + 5 + 7 + 11 + 15 + 22);
}

TEST(CanonicalTables, BlockStructure) {
  auto t = canonical_tables(YoungDiagram{{2, 1}});
  ASSERT_EQ(t.boxes.size(), 3u);
  EXPECT_EQ(t.boxes[2], (Box{2, 1}));
  EXPECT_EQ(t.S_hat(0, 2), 0);
  EXPECT_EQ(t.S_hat_inv(1, 2), 0);
  EXPECT_NE(t.C(0, 2), 0);
}

TEST(Omega, DisplayedValues) {
  EXPECT_EQ(omega_coefficient(1, 1), q(1, 3));
  EXPECT_EQ(omega_coefficient(2, 2), q(2, 15));
  EXPECT_EQ(omega_coefficient(2, 1), q(1, 12));
  EXPECT_EQ(omega_coefficient(1, 2), q(1, 12));
  EXPECT_EQ(omega_coefficient(3, 1), 0);
  EXPECT_THROW(omega_coefficient(0, 1), std::invalid_argument);
}

TEST(Omega, DoubleSumAndTablesMatchClosedForm) {
  for (std::size_t n = 1; n <= 8; ++n)
    for (std::size_t m = 1; m <= 8; ++m) {
      EXPECT_EQ(omega_double_sum(n, m), omega_coefficient(n, m)) << n << "," << m;
      EXPECT_EQ(omega_from_tables(n, m), omega_coefficient(n, m)) << n << "," << m;
    }
}

}  // namespace
}  // namespace srcurv
