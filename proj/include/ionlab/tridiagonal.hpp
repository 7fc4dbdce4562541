#pragma once

// Thomas algorithm for tridiagonal systems. The factorisation is kept so
// the constant Crank-Nicolson and imaginary-time matrices are factored once.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace ionlab {

/// LU factors of a tridiagonal matrix with constant off-diagonals `off`
/// and diagonal `diag`. T is double or std::complex<double>.
template <typename T>
class TridiagonalFactor {
 public:
  TridiagonalFactor() = default;

  TridiagonalFactor(std::span<const T> diag, T off) : off_(off), inv_pivot_(diag.size()), l_(diag.size()) {
    const std::size_t n = diag.size();
    if (n == 0) throw std::invalid_argument("TridiagonalFactor: empty system");
    T pivot = diag[0];
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) {
        l_[i] = off_ / pivot;
        pivot = diag[i] - l_[i] * off_;
      }
      if (pivot == T{}) throw std::runtime_error("TridiagonalFactor: zero pivot");
      inv_pivot_[i] = T(1) / pivot;
    }
  }

  std::size_t size() const noexcept { return inv_pivot_.size(); }

  /// Solves in place.
  template <typename U>
  void solve(std::span<U> rhs) const {
    const std::size_t n = size();
    if (rhs.size() != n) throw std::invalid_argument("TridiagonalFactor::solve: size mismatch");
    for (std::size_t i = 1; i < n; ++i) rhs[i] -= l_[i] * rhs[i - 1];
    rhs[n - 1] *= inv_pivot_[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - off_ * rhs[i + 1]) * inv_pivot_[i];
  }

 private:
  T off_{};
  std::vector<T> inv_pivot_;
  std::vector<T> l_;
};

}  // namespace ionlab
