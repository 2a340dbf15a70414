#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace rough {

// Small dense row-major matrix; n is 1 or 2 in all experiments, so this
// stays allocation-light and unoptimized on purpose.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : r_(rows), c_(cols), v_(static_cast<size_t>(rows) * cols, 0.0) {}

  static Matrix identity(int n) {
    Matrix I(n, n);
    for (int i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
  }
  static Matrix zero(int n) { return Matrix(n, n); }

  int rows() const { return r_; }
  int cols() const { return c_; }
  double& operator()(int i, int j) { return v_[static_cast<size_t>(i) * c_ + j]; }
  double operator()(int i, int j) const { return v_[static_cast<size_t>(i) * c_ + j]; }
  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  std::span<const double> flat() const { return v_; }
  std::span<double> flat() { return v_; }

  Matrix& operator+=(const Matrix& o) {
    for (size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    for (size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
  }
  Matrix& operator*=(double s) {
    for (auto& x : v_) x *= s;
    return *this;
  }

  double frobenius() const {
    double s = 0;
    for (double x : v_) s += x * x;
    return std::sqrt(s);
  }
  double max_abs() const {
    double s = 0;
    for (double x : v_) s = std::max(s, std::fabs(x));
    return s;
  }
  bool is_zero() const {
    for (double x : v_)
      if (x != 0.0) return false;
    return true;
  }

  Matrix transpose() const {
    Matrix t(c_, r_);
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

 private:
  int r_ = 0, c_ = 0;
  std::vector<double> v_;
};

inline Matrix operator+(Matrix a, const Matrix& b) { a += b; return a; }
inline Matrix operator-(Matrix a, const Matrix& b) { a -= b; return a; }

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline double trace(const Matrix& a) {
  double s = 0;
  for (int i = 0; i < std::min(a.rows(), a.cols()); ++i) s += a(i, i);
  return s;
}

// out[a] += M[a][b] * v[b] over raw spans, M row-major n x n.
inline void matvec_acc(std::span<const double> M, std::span<const double> v,
                       std::span<double> out, int n) {
  for (int a = 0; a < n; ++a) {
    double s = 0;
    for (int b = 0; b < n; ++b) s += M[static_cast<size_t>(a) * n + b] * v[b];
    out[a] += s;
  }
}

}  // namespace rough
