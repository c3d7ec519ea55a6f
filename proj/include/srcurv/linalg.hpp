#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace srcurv {

template <class Real>
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
template <class Real>
using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

// Small row-major matrix for exact scalar types (Eigen's decompositions assume a real field with ordering
// and sqrt; Gauss-Jordan only needs + - * /).
template <class T>
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  DenseMatrix transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  friend DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("matrix product shape mismatch");
    DenseMatrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t l = 0; l < a.cols_; ++l) {
        if (a(i, l) == T(0)) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += a(i, l) * b(l, j);
      }
    return c;
  }
  friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw std::invalid_argument("matrix sum shape mismatch");
    for (std::size_t i = 0; i < a.data_.size(); ++i) a.data_[i] += b.data_[i];
    return a;
  }
  friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw std::invalid_argument("matrix difference shape mismatch");
    for (std::size_t i = 0; i < a.data_.size(); ++i) a.data_[i] -= b.data_[i];
    return a;
  }
  friend DenseMatrix operator*(const T& s, DenseMatrix a) {
    for (auto& v : a.data_) v *= s;
    return a;
  }
  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  DenseMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    DenseMatrix b(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
      for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
    return b;
  }

  template <class U, class F>
  DenseMatrix<U> map(F f) const {
    DenseMatrix<U> out(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out(i, j) = f((*this)(i, j));
    return out;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<T> data_;
};

// Row echelon form in place; returns rank.
template <class T>
std::size_t row_reduce(DenseMatrix<T>& m) {
  std::size_t r = 0;
  for (std::size_t c = 0; c < m.cols() && r < m.rows(); ++c) {
    std::size_t piv = r;
    while (piv < m.rows() && m(piv, c) == T(0)) ++piv;
    if (piv == m.rows()) continue;
    if (piv != r)
      for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m(piv, j), m(r, j));
    for (std::size_t i = r + 1; i < m.rows(); ++i) {
      if (m(i, c) == T(0)) continue;
      T f = m(i, c) / m(r, c);
      for (std::size_t j = c; j < m.cols(); ++j) m(i, j) -= f * m(r, j);
    }
    ++r;
  }
  return r;
}

template <class T>
std::size_t exact_rank(DenseMatrix<T> m) {
  return row_reduce(m);
}

template <class T>
std::optional<DenseMatrix<T>> try_inverse(const DenseMatrix<T>& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("inverse of non-square matrix");
  DenseMatrix<T> w = a;
  DenseMatrix<T> inv = DenseMatrix<T>::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    while (piv < n && w(piv, c) == T(0)) ++piv;
    if (piv == n) return std::nullopt;
    for (std::size_t j = 0; j < n; ++j) {
      std::swap(w(piv, j), w(c, j));
      std::swap(inv(piv, j), inv(c, j));
    }
    T d = w(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      w(c, j) /= d;
      inv(c, j) /= d;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == c || w(i, c) == T(0)) continue;
      T f = w(i, c);
      for (std::size_t j = 0; j < n; ++j) {
        w(i, j) -= f * w(c, j);
        inv(i, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

template <class T>
DenseMatrix<T> inverse(const DenseMatrix<T>& a) {
  auto inv = try_inverse(a);
  if (!inv) throw std::domain_error("singular matrix");
  return *inv;
}

template <class T>
T determinant(DenseMatrix<T> m) {
  const std::size_t n = m.rows();
  T det(1);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    while (piv < n && m(piv, c) == T(0)) ++piv;
    if (piv == n) return T(0);
    if (piv != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(piv, j), m(c, j));
      det = -det;
    }
    det *= m(c, c);
    for (std::size_t i = c + 1; i < n; ++i) {
      if (m(i, c) == T(0)) continue;
      T f = m(i, c) / m(c, c);
      for (std::size_t j = c; j < n; ++j) m(i, j) -= f * m(c, j);
    }
  }
  return det;
}

// Characteristic polynomial coefficients (monic, highest degree first) by Faddeev-LeVerrier.
template <class T>
std::vector<T> characteristic_polynomial(const DenseMatrix<T>& a) {
  const std::size_t n = a.rows();
  std::vector<T> c(n + 1, T(0));
  c[0] = T(1);
  DenseMatrix<T> m(n, n);
  for (std::size_t k = 1; k <= n; ++k) {
    m = a * m;
    for (std::size_t i = 0; i < n; ++i) m(i, i) += c[k - 1];
    DenseMatrix<T> am = a * m;
    T tr(0);
    for (std::size_t i = 0; i < n; ++i) tr += am(i, i);
    c[k] = -tr / T(static_cast<long>(k));
  }
  return c;
}

struct NumericalRank {
  std::size_t rank = 0;
  bool indeterminate = false;
  double gap_ratio = 0;  // last kept / first dropped singular value
  std::vector<double> singular_values;
};

// Singular values below tau * sigma_max count as zero; a kept/dropped ratio below min_gap is flagged.
template <class Derived>
NumericalRank numerical_rank(const Eigen::MatrixBase<Derived>& m, double tau = 1e-8, double min_gap = 10.0) {
  NumericalRank out;
  if (m.size() == 0) return out;
  Eigen::JacobiSVD<Mat<typename Derived::Scalar>> svd(m.eval());
  const auto& s = svd.singularValues();
  for (Eigen::Index i = 0; i < s.size(); ++i) out.singular_values.push_back(static_cast<double>(s(i)));
  const double smax = out.singular_values.front();
  if (smax == 0.0) return out;
  for (double v : out.singular_values)
    if (v > tau * smax) ++out.rank;
  if (out.rank < out.singular_values.size()) {
    double dropped = out.singular_values[out.rank];
    double kept = out.singular_values[out.rank - 1];
    out.gap_ratio = dropped > 0 ? kept / dropped : std::numeric_limits<double>::infinity();
    out.indeterminate = out.gap_ratio < min_gap;
  } else {
    out.gap_ratio = std::numeric_limits<double>::infinity();
  }
  return out;
}

template <class Real>
Mat<Real> symmetrize(const Mat<Real>& m) {
  return (m + m.transpose()) / Real(2);
}

// Least squares with column scaling; returns coefficients and the max abs residual.
template <class Real>
std::pair<Mat<Real>, Real> least_squares(const Mat<Real>& design, const Mat<Real>& rhs) {
  Vec<Real> scale = design.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < scale.size(); ++j)
    if (scale(j) == Real(0)) scale(j) = Real(1);
  Mat<Real> d = design * scale.cwiseInverse().asDiagonal();
  Mat<Real> coef = d.colPivHouseholderQr().solve(rhs);
  coef = scale.cwiseInverse().asDiagonal() * coef;
  Real res = (design * coef - rhs).cwiseAbs().maxCoeff();
  return {coef, res};
}

}  // namespace srcurv
