#pragma once

// Dense Hermitian linear algebra, first-kind Bessel functions of order -1/0/1,
// and a radix-2 FFT with a power-spectrum front end.

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "hofsim/errors.hpp"

namespace hofsim {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

namespace numerics {

/// Dense Hermitian matrix. The only mutators write an (i, j) entry together
/// with its conjugate mirror, so entry(i,j) == conj(entry(j,i)) holds bit-for-bit.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(std::size_t dim)
      : m_(Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))) {
    if (dim == 0) throw InvalidInput("HermitianMatrix: dimension must be positive");
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }

  Complex operator()(std::size_t i, std::size_t j) const { return m_(idx(i), idx(j)); }

  void set_diagonal(std::size_t i, double value) { m_(idx(i), idx(i)) = Complex(value, 0.0); }

  /// Sets entry (i, j) and its mirror. For i == j only the real part is kept.
  void set(std::size_t i, std::size_t j, Complex value) {
    if (i == j) {
      set_diagonal(i, value.real());
      return;
    }
    m_(idx(i), idx(j)) = value;
    m_(idx(j), idx(i)) = std::conj(value);
  }

  void add(std::size_t i, std::size_t j, Complex value) {
    if (i == j) {
      set_diagonal(i, m_(idx(i), idx(i)).real() + value.real());
      return;
    }
    set(i, j, m_(idx(i), idx(j)) + value);
  }

  const Eigen::MatrixXcd& dense() const noexcept { return m_; }

  double trace() const { return m_.diagonal().real().sum(); }

  double max_abs() const { return m_.cwiseAbs().maxCoeff(); }

 private:
  Eigen::Index idx(std::size_t i) const {
    if (i >= dim()) throw InvalidInput("HermitianMatrix: index out of range");
    return static_cast<Eigen::Index>(i);
  }

  Eigen::MatrixXcd m_;
};

/// Sparse Hermitian storage: real diagonal plus the strictly upper nonzeros.
/// The hot path of every integrator; `Upper` entries are (row < col).
struct SparseHermitian {
  struct Upper {
    std::size_t row;
    std::size_t col;
    Complex value;
  };

  std::size_t dim = 0;
  std::vector<double> diagonal;
  std::vector<Upper> upper;

  static SparseHermitian from_dense(const HermitianMatrix& h) {
    SparseHermitian s;
    s.dim = h.dim();
    s.diagonal.resize(s.dim);
    for (std::size_t i = 0; i < s.dim; ++i) {
      s.diagonal[i] = h(i, i).real();
      for (std::size_t j = i + 1; j < s.dim; ++j) {
        const Complex v = h(i, j);
        if (v != Complex{}) s.upper.push_back({i, j, v});
      }
    }
    return s;
  }

  HermitianMatrix to_dense() const {
    HermitianMatrix h(dim);
    for (std::size_t i = 0; i < dim; ++i) h.set_diagonal(i, diagonal[i]);
    for (const auto& e : upper) h.set(e.row, e.col, e.value);
    return h;
  }
};

struct EigenDecomposition {
  std::vector<double> eigenvalues;        // ascending
  std::vector<ComplexVector> eigenvectors;  // eigenvectors[j] pairs with eigenvalues[j]
};

/// Full spectrum of a Hermitian matrix. Backed by Eigen's Householder
/// tridiagonalization followed by implicit symmetric QR.
inline EigenDecomposition eig_hermitian(const HermitianMatrix& h, bool with_vectors = true) {
  if (!h.dense().allFinite()) throw InvalidInput("eig_hermitian: non-finite matrix entry");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
      h.dense(), with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw InvalidInput("eig_hermitian: eigensolver did not converge");

  EigenDecomposition out;
  const auto n = static_cast<std::size_t>(h.dim());
  out.eigenvalues.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
  if (with_vectors) {
    out.eigenvectors.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const auto col = solver.eigenvectors().col(static_cast<Eigen::Index>(j));
      out.eigenvectors[j].assign(col.data(), col.data() + n);
    }
  }
  return out;
}

inline std::vector<double> eigenvalues(const HermitianMatrix& h) {
  return eig_hermitian(h, false).eigenvalues;
}

/// First-kind Bessel function J_order(x) for order in {-1, 0, 1}, |x| <= 50.
inline double bessel_j(int order, double x) {
  if (order < -1 || order > 1) {
    throw UnsupportedOrder("bessel_j: order " + std::to_string(order) + " not in {-1, 0, 1}");
  }
  if (!std::isfinite(x) || std::abs(x) > 50.0) throw InvalidInput("bessel_j: argument outside [-50, 50]");
  if (order == 0) return std::cyl_bessel_j(0.0, std::abs(x));
  // J_1 is odd, and J_{-1} = -J_1.
  const double j1 = std::cyl_bessel_j(1.0, std::abs(x)) * (x < 0.0 ? -1.0 : 1.0);
  return order == 1 ? j1 : -j1;
}

enum class Window { Rectangular, Hann };

inline std::size_t next_pow2(std::size_t n) { return std::bit_ceil(std::max<std::size_t>(n, 1)); }

/// In-place iterative radix-2 DFT, X[m] = sum_k x[k] exp(-2 pi i m k / M).
inline void fft_inplace(std::span<Complex> data) {
  const std::size_t n = data.size();
  if (n == 0 || !std::has_single_bit(n)) throw InvalidInput("fft: length must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -kTwoPi / static_cast<double>(len);
    const std::size_t half = len / 2;
    // Twiddles computed directly rather than by recurrence to avoid error growth.
    std::vector<Complex> w(half);
    for (std::size_t k = 0; k < half; ++k) w[k] = std::polar(1.0, angle * static_cast<double>(k));
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex u = data[start + k];
        const Complex v = data[start + k + half] * w[k];
        data[start + k] = u + v;
        data[start + k + half] = u - v;
      }
    }
  }
}

struct PowerSpectrum {
  std::vector<double> frequencies;  // Hz, ascending
  std::vector<double> power;        // |DFT|^2, same order
  double bin_width = 0.0;           // Hz
};

/// Squared DFT magnitudes on an ascending frequency axis.
///
/// The series is zero padded to next_pow2(size) * zero_pad_factor points. The
/// axis is negated relative to the raw DFT so that a component evolving as
/// exp(-i E t) appears at +E / (2 pi). With M padded points the reported bins
/// are j * df for j = -(M/2 - 1) ... M/2.
inline PowerSpectrum fft_power(std::span<const Complex> series, double dt, int zero_pad_factor,
                               Window window = Window::Rectangular) {
  if (series.size() < 2) throw InvalidInput("fft_power: need at least two samples");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("fft_power: dt must be positive");
  if (zero_pad_factor < 1) throw InvalidInput("fft_power: zero_pad_factor must be >= 1");

  const std::size_t n = series.size();
  const std::size_t m = next_pow2(n) * static_cast<std::size_t>(zero_pad_factor);
  ComplexVector buf(m);
  for (std::size_t k = 0; k < n; ++k) {
    double w = 1.0;
    if (window == Window::Hann) {
      w = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(k) / static_cast<double>(n - 1));
    }
    buf[k] = series[k] * w;
  }
  fft_inplace(buf);

  PowerSpectrum out;
  out.bin_width = 1.0 / (static_cast<double>(m) * dt);
  out.frequencies.resize(m);
  out.power.resize(m);
  // Reported bin j sits at +j*df and holds raw DFT bin (-j mod m).
  const auto half = static_cast<std::ptrdiff_t>(m / 2);
  for (std::ptrdiff_t j = -(half - 1), slot = 0; j <= half; ++j, ++slot) {
    const auto raw = static_cast<std::size_t>(((-j) % static_cast<std::ptrdiff_t>(m) + static_cast<std::ptrdiff_t>(m)) %
                                              static_cast<std::ptrdiff_t>(m));
    out.frequencies[static_cast<std::size_t>(slot)] = static_cast<double>(j) * out.bin_width;
    out.power[static_cast<std::size_t>(slot)] = std::norm(buf[raw]);
  }
  return out;
}

/// As above, but validates that `times` is uniformly spaced (1e-9 relative).
inline PowerSpectrum fft_power(std::span<const double> times, std::span<const Complex> series,
                               int zero_pad_factor, Window window = Window::Rectangular) {
  if (times.size() != series.size()) throw InvalidInput("fft_power: times/values size mismatch");
  if (times.size() < 2) throw InvalidInput("fft_power: need at least two samples");
  const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (std::abs((times[k] - times[k - 1]) - dt) > 1e-9 * dt) {
      throw InvalidInput("fft_power: non-uniform sample spacing");
    }
  }
  return fft_power(series, dt, zero_pad_factor, window);
}

}  // namespace numerics
}  // namespace hofsim
