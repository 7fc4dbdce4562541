#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace ionlab {

/// Square real matrix with entries only on diagonals -bw..bw.
class BandedMatrix {
 public:
  BandedMatrix() = default;
  BandedMatrix(std::size_t n, std::size_t bw) : n_(n), bw_(bw), data_((2 * bw + 1) * n, 0.0) {}

  static BandedMatrix diagonal(std::span<const double> d) {
    BandedMatrix m(d.size(), 0);
    std::copy(d.begin(), d.end(), m.data_.begin());
    return m;
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t bandwidth() const noexcept { return bw_; }

  bool in_band(std::size_t i, std::size_t j) const noexcept {
    return (i > j ? i - j : j - i) <= bw_;
  }

  double operator()(std::size_t i, std::size_t j) const {
    return in_band(i, j) ? data_[slot(i, j)] : 0.0;
  }

  double& at(std::size_t i, std::size_t j) {
    if (i >= n_ || j >= n_ || !in_band(i, j)) throw std::out_of_range("BandedMatrix::at: outside band");
    return data_[slot(i, j)];
  }

  std::vector<double> apply(std::span<const double> x) const {
    if (x.size() != n_) throw std::invalid_argument("BandedMatrix::apply: size mismatch");
    std::vector<double> y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t j0 = i > bw_ ? i - bw_ : 0, j1 = std::min(n_ - 1, i + bw_);
      double acc = 0.0;
      for (std::size_t j = j0; j <= j1; ++j) acc += data_[slot(i, j)] * x[j];
      y[i] = acc;
    }
    return y;
  }

  /// x^T A y.
  double form(std::span<const double> x, std::span<const double> y) const {
    const auto ay = apply(y);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i) acc += x[i] * ay[i];
    return acc;
  }

  friend BandedMatrix operator*(const BandedMatrix& a, const BandedMatrix& b) {
    if (a.n_ != b.n_) throw std::invalid_argument("BandedMatrix: size mismatch");
    const std::size_t n = a.n_;
    BandedMatrix c(n, std::min(a.bw_ + b.bw_, n == 0 ? 0 : n - 1));
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k0 = i > a.bw_ ? i - a.bw_ : 0, k1 = std::min(n - 1, i + a.bw_);
      for (std::size_t k = k0; k <= k1; ++k) {
        const double aik = a.data_[a.slot(i, k)];
        if (aik == 0.0) continue;
        const std::size_t j0 = k > b.bw_ ? k - b.bw_ : 0, j1 = std::min(n - 1, k + b.bw_);
        for (std::size_t j = j0; j <= j1; ++j) c.data_[c.slot(i, j)] += aik * b.data_[b.slot(k, j)];
      }
    }
    return c;
  }

  friend BandedMatrix operator-(const BandedMatrix& a, const BandedMatrix& b) { return a.axpy(b, -1.0); }
  friend BandedMatrix operator+(const BandedMatrix& a, const BandedMatrix& b) { return a.axpy(b, 1.0); }

  BandedMatrix scaled(double s) const {
    BandedMatrix out = *this;
    for (double& x : out.data_) x *= s;
    return out;
  }

  /// max |A_ij - sign * A_ji|; sign = +1 tests symmetry, -1 antisymmetry.
  double symmetry_defect(double sign = 1.0) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i; j <= std::min(n_ - 1, i + bw_); ++j)
        worst = std::max(worst, std::abs((*this)(i, j) - sign * (*this)(j, i)));
    return worst;
  }

  double max_abs() const {
    double worst = 0.0;
    for (double x : data_) worst = std::max(worst, std::abs(x));
    return worst;
  }

 private:
  std::size_t slot(std::size_t i, std::size_t j) const noexcept {
    // diagonal offset j - i stored in row block (j - i + bw)
    return (j + bw_ - i) * n_ + i;
  }

  BandedMatrix axpy(const BandedMatrix& b, double s) const {
    if (n_ != b.n_) throw std::invalid_argument("BandedMatrix: size mismatch");
    BandedMatrix c(n_, std::max(bw_, b.bw_));
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t j0 = i > c.bw_ ? i - c.bw_ : 0, j1 = std::min(n_ - 1, i + c.bw_);
      for (std::size_t j = j0; j <= j1; ++j) c.data_[c.slot(i, j)] = (*this)(i, j) + s * b(i, j);
    }
    return c;
  }

  std::size_t n_ = 0;
  std::size_t bw_ = 0;
  std::vector<double> data_;
};

inline BandedMatrix commutator(const BandedMatrix& a, const BandedMatrix& b) { return a * b - b * a; }

}  // namespace ionlab
