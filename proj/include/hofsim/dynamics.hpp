#pragma once

// Open-system dynamics in the {0, 1}-excitation block of an N-qubit chain.
//
// Basis: index 0 is the ground state |0...0>, index n (1..N) the single
// excitation on site n. Every Hamiltonian here conserves excitation number,
// and the collapse operators (sigma_n^- and sigma_n^z) map this block into
// itself, so states live in dimension N+1 and density matrices in (N+1)^2.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "hofsim/errors.hpp"
#include "hofsim/integrator.hpp"
#include "hofsim/numerics.hpp"
#include "hofsim/parallel.hpp"

namespace hofsim::dynamics {

using numerics::HermitianMatrix;
using numerics::SparseHermitian;

/// Anything that can produce the N x N single-excitation block at time t.
template <class S>
concept HamiltonianSource = requires(const S& s, double t, SparseHermitian& out) {
  { s.sites() } -> std::convertible_to<std::size_t>;
  s.fill(t, out);
};

class ConstantHamiltonian {
 public:
  explicit ConstantHamiltonian(const HermitianMatrix& h) : h_(SparseHermitian::from_dense(h)) {}
  explicit ConstantHamiltonian(SparseHermitian h) : h_(std::move(h)) {}

  std::size_t sites() const { return h_.dim; }
  void fill(double, SparseHermitian& out) const { out = h_; }
  const SparseHermitian& matrix() const { return h_; }

 private:
  SparseHermitian h_;
};

/// Relaxation and dephasing times. Infinite times switch a channel off.
struct NoiseSpec {
  double t1 = std::numeric_limits<double>::infinity();
  double t2_star = std::numeric_limits<double>::infinity();

  static NoiseSpec noiseless() { return {}; }

  double gamma1() const { return std::isinf(t1) ? 0.0 : 1.0 / t1; }
  /// Pure dephasing rate 1/T2* - 1/(2 T1).
  double gamma_phi() const {
    const double total = std::isinf(t2_star) ? 0.0 : 1.0 / t2_star;
    return total - 0.5 * gamma1();
  }
  bool is_noiseless() const { return gamma1() == 0.0 && gamma_phi() == 0.0; }

  void validate() const {
    if (!(t1 > 0.0) || !(t2_star > 0.0)) throw InvalidInput("NoiseSpec: T1 and T2* must be positive");
    if (gamma_phi() < -1e-12 * std::max(gamma1(), 1.0)) throw InvalidInput("NoiseSpec: T2* must not exceed 2 T1");
  }
};

struct TimeGrid {
  double t_end = 4e-6;
  double dt_sample = 2e-9;
  double rtol = 1e-8;
  double atol = 1e-10;
  double max_step = 2e-10;

  /// Default grid for a drive whose fastest modulation frequency is nu_max
  /// (rad/s): max_step = 1 / (20 nu_max / 2pi).
  static TimeGrid for_drive(double t_end, double dt_sample, double nu_max) {
    TimeGrid g;
    g.t_end = t_end;
    g.dt_sample = dt_sample;
    g.max_step = kTwoPi / (20.0 * nu_max);
    return g;
  }

  std::size_t samples() const { return static_cast<std::size_t>(std::llround(t_end / dt_sample)) + 1; }
  double time(std::size_t k) const { return static_cast<double>(k) * dt_sample; }

  void validate() const {
    if (!(dt_sample > 0.0) || !(t_end > 0.0) || dt_sample > t_end) {
      throw InvalidInput("TimeGrid: need 0 < dt_sample <= t_end");
    }
    if (std::abs(static_cast<double>(samples() - 1) * dt_sample - t_end) > 1e-9 * t_end) {
      throw InvalidInput("TimeGrid: t_end must be a multiple of dt_sample");
    }
    if (!(max_step > 0.0) || !(rtol > 0.0) || !(atol > 0.0)) throw InvalidInput("TimeGrid: bad integrator settings");
  }

  StepControl control() const { return {rtol, atol, max_step, 0.0}; }
};

struct TrajectoryConfig {
  std::size_t count = 500;
  std::uint64_t seed = 1;
};

// --- states -----------------------------------------------------------------

/// (|psi_0> + |psi_site>) / sqrt(2) in the (N+1)-dim block; site is 1-based.
inline ComplexVector superposition_state(std::size_t n_sites, std::size_t site) {
  if (site < 1 || site > n_sites) throw InvalidInput("site must lie in 1..N");
  ComplexVector psi(n_sites + 1);
  psi[0] = psi[site] = 1.0 / std::sqrt(2.0);
  return psi;
}

inline ComplexVector basis_state(std::size_t n_sites, std::size_t index) {
  if (index > n_sites) throw InvalidInput("basis index must lie in 0..N");
  ComplexVector psi(n_sites + 1);
  psi[index] = 1.0;
  return psi;
}

inline double norm_squared(const ComplexVector& psi) {
  double s = 0.0;
  for (const auto& a : psi) s += std::norm(a);
  return s;
}

/// Row-major (N+1) x (N+1) density matrix.
struct DensityMatrix {
  std::size_t dim = 0;
  ComplexVector entries;

  static DensityMatrix pure(const ComplexVector& psi) {
    DensityMatrix rho{psi.size(), ComplexVector(psi.size() * psi.size())};
    for (std::size_t a = 0; a < rho.dim; ++a) {
      for (std::size_t b = 0; b < rho.dim; ++b) rho.entries[a * rho.dim + b] = psi[a] * std::conj(psi[b]);
    }
    return rho;
  }

  Complex operator()(std::size_t a, std::size_t b) const { return entries[a * dim + b]; }

  Complex trace() const {
    Complex t{};
    for (std::size_t a = 0; a < dim; ++a) t += entries[a * dim + a];
    return t;
  }

  /// Largest |rho_ab - conj(rho_ba)|.
  double hermiticity_error() const {
    double e = 0.0;
    for (std::size_t a = 0; a < dim; ++a) {
      for (std::size_t b = 0; b < dim; ++b) e = std::max(e, std::abs((*this)(a, b) - std::conj((*this)(b, a))));
    }
    return e;
  }

  /// Hermitian part, for spectral checks.
  HermitianMatrix hermitian_part() const {
    HermitianMatrix h(dim);
    for (std::size_t a = 0; a < dim; ++a) {
      h.set_diagonal(a, (*this)(a, a).real());
      for (std::size_t b = a + 1; b < dim; ++b) h.set(a, b, 0.5 * ((*this)(a, b) + std::conj((*this)(b, a))));
    }
    return h;
  }
};

/// <sigma_n^-> = conj(amp_0) * amp_n, which evolves as exp(-i E_j t) for
/// single-excitation energies E_j measured from the ground state.
inline Complex expectation_sigma_minus(const ComplexVector& psi, std::size_t site) {
  if (site < 1 || site >= psi.size()) throw InvalidInput("site must lie in 1..N");
  return std::conj(psi[0]) * psi[site];
}

inline Complex expectation_sigma_minus(const DensityMatrix& rho, std::size_t site) {
  if (site < 1 || site >= rho.dim) throw InvalidInput("site must lie in 1..N");
  return rho(site, 0);
}

// --- right-hand sides ---------------------------------------------------------

/// out = -i H psi on the (N+1) block; H acts on indices 1..N.
inline void apply_hamiltonian(const SparseHermitian& h, const ComplexVector& psi, ComplexVector& out) {
  out.assign(psi.size(), Complex{});
  for (std::size_t i = 0; i < h.dim; ++i) out[i + 1] = h.diagonal[i] * psi[i + 1];
  for (const auto& e : h.upper) {
    out[e.row + 1] += e.value * psi[e.col + 1];
    out[e.col + 1] += std::conj(e.value) * psi[e.row + 1];
  }
  for (auto& v : out) v = Complex(v.imag(), -v.real());  // multiply by -i
}

/// Lindblad generator specialised to this block with collapse operators
/// sqrt(gamma1) sigma_n^- and sqrt(gamma_phi / 2) sigma_n^z on every site.
///
/// Both dissipators act elementwise except for the refill of rho_00:
///   D_relax:  d rho_00 += gamma1 sum_n rho_nn,
///             d rho_ab -= gamma1/2 ([a>0] + [b>0]) rho_ab
///   D_deph:   d rho_ab -= gamma_phi * #{a, b that are sites}, for a != b.
class LindbladGenerator {
 public:
  LindbladGenerator(std::size_t n_sites, const NoiseSpec& noise) : dim_(n_sites + 1), gamma1_(noise.gamma1()) {
    const double gphi = noise.gamma_phi();
    decay_.assign(dim_ * dim_, 0.0);
    for (std::size_t a = 0; a < dim_; ++a) {
      for (std::size_t b = 0; b < dim_; ++b) {
        const double sites = static_cast<double>((a > 0) + (b > 0));
        double rate = 0.5 * gamma1_ * sites;
        if (a != b) rate += gphi * sites;
        decay_[a * dim_ + b] = rate;
      }
    }
  }

  std::size_t dim() const { return dim_; }

  void operator()(const SparseHermitian& h, const ComplexVector& rho, ComplexVector& out) const {
    const std::size_t d = dim_;
    out.assign(d * d, Complex{});
    // out = H rho - rho H, assembled row/column-wise from the sparse entries.
    for (std::size_t i = 0; i < h.dim; ++i) {
      const std::size_t a = i + 1;
      const double e = h.diagonal[i];
      if (e == 0.0) continue;
      for (std::size_t b = 0; b < d; ++b) {
        out[a * d + b] += e * rho[a * d + b];
        out[b * d + a] -= rho[b * d + a] * e;
      }
    }
    for (const auto& u : h.upper) {
      const std::size_t r = u.row + 1;
      const std::size_t c = u.col + 1;
      const Complex v = u.value;
      const Complex vc = std::conj(v);
      for (std::size_t b = 0; b < d; ++b) {
        out[r * d + b] += v * rho[c * d + b];
        out[c * d + b] += vc * rho[r * d + b];
        out[b * d + c] -= rho[b * d + r] * v;
        out[b * d + r] -= rho[b * d + c] * vc;
      }
    }
    for (std::size_t k = 0; k < d * d; ++k) {
      const Complex comm = out[k];
      out[k] = Complex(comm.imag(), -comm.real()) - decay_[k] * rho[k];
    }
    if (gamma1_ > 0.0) {
      Complex refill{};
      for (std::size_t a = 1; a < d; ++a) refill += rho[a * d + a];
      out[0] += gamma1_ * refill;
    }
  }

 private:
  std::size_t dim_;
  double gamma1_;
  std::vector<double> decay_;
};

// --- propagators ------------------------------------------------------------

/// Integrates i d|psi>/dt = H(t)|psi>, calling observer(k, t_k, psi) at every
/// sample instant k * dt_sample (including t = 0).
template <HamiltonianSource Source, class Observer>
void evolve_unitary(const ComplexVector& initial, const Source& source, const TimeGrid& grid, Observer&& observer) {
  grid.validate();
  if (initial.size() != source.sites() + 1) throw InvalidInput("evolve_unitary: state dimension must be N+1");
  SparseHermitian h;
  auto rhs = [&](double t, const ComplexVector& y, ComplexVector& dy) {
    source.fill(t, h);
    apply_hamiltonian(h, y, dy);
  };
  DormandPrince<decltype(rhs)> stepper(rhs, initial.size(), grid.control());
  ComplexVector psi = initial;
  double t = 0.0;
  observer(std::size_t{0}, 0.0, static_cast<const ComplexVector&>(psi));
  for (std::size_t k = 1; k < grid.samples(); ++k) {
    stepper.advance(t, psi, grid.time(k));
    observer(k, t, static_cast<const ComplexVector&>(psi));
  }
}

template <HamiltonianSource Source>
std::vector<ComplexVector> evolve_unitary(const ComplexVector& initial, const Source& source, const TimeGrid& grid) {
  std::vector<ComplexVector> out;
  out.reserve(grid.samples());
  evolve_unitary(initial, source, grid, [&](std::size_t, double, const ComplexVector& psi) { out.push_back(psi); });
  return out;
}

template <HamiltonianSource Source, class Observer>
void evolve_lindblad(const DensityMatrix& initial, const Source& source, const NoiseSpec& noise,
                     const TimeGrid& grid, Observer&& observer) {
  grid.validate();
  noise.validate();
  if (initial.dim != source.sites() + 1) throw InvalidInput("evolve_lindblad: density matrix dimension must be N+1");
  const LindbladGenerator generator(source.sites(), noise);
  SparseHermitian h;
  auto rhs = [&](double t, const ComplexVector& y, ComplexVector& dy) {
    source.fill(t, h);
    generator(h, y, dy);
  };
  DormandPrince<decltype(rhs)> stepper(rhs, initial.entries.size(), grid.control());
  DensityMatrix rho = initial;
  double t = 0.0;
  observer(std::size_t{0}, 0.0, static_cast<const DensityMatrix&>(rho));
  for (std::size_t k = 1; k < grid.samples(); ++k) {
    stepper.advance(t, rho.entries, grid.time(k));
    observer(k, t, static_cast<const DensityMatrix&>(rho));
  }
}

template <HamiltonianSource Source>
std::vector<DensityMatrix> evolve_lindblad(const DensityMatrix& initial, const Source& source,
                                           const NoiseSpec& noise, const TimeGrid& grid) {
  std::vector<DensityMatrix> out;
  out.reserve(grid.samples());
  evolve_lindblad(initial, source, noise, grid,
                  [&](std::size_t, double, const DensityMatrix& rho) { out.push_back(rho); });
  return out;
}

/// The coherence column rho_{n0} (n = 1..N) of the master equation above is
/// closed under its generator: H never touches |psi_0>, and both dissipators
/// damp rho_{n0} at the uniform rate gamma1/2 + gamma_phi = 1/T2*. This
/// integrates just that column, which is all <sigma_n^-> depends on.
/// `coherence[n-1]` holds rho_{n0}; observer(k, t, coherence) per sample.
template <HamiltonianSource Source, class Observer>
void evolve_lindblad_coherences(const ComplexVector& coherence, const Source& source, const NoiseSpec& noise,
                                const TimeGrid& grid, Observer&& observer) {
  grid.validate();
  noise.validate();
  const std::size_t n_sites = source.sites();
  if (coherence.size() != n_sites) throw InvalidInput("evolve_lindblad_coherences: need N coherences");
  const double rate = 0.5 * noise.gamma1() + noise.gamma_phi();
  SparseHermitian h;
  // Stored with a dummy ground slot so apply_hamiltonian's offset applies.
  auto rhs = [&](double t, const ComplexVector& y, ComplexVector& dy) {
    source.fill(t, h);
    apply_hamiltonian(h, y, dy);
    for (std::size_t n = 1; n <= n_sites; ++n) dy[n] -= rate * y[n];
  };
  DormandPrince<decltype(rhs)> stepper(rhs, n_sites + 1, grid.control());
  ComplexVector y(n_sites + 1);
  for (std::size_t n = 0; n < n_sites; ++n) y[n + 1] = coherence[n];
  ComplexVector view(n_sites);
  auto emit = [&](std::size_t k, double t) {
    for (std::size_t n = 0; n < n_sites; ++n) view[n] = y[n + 1];
    observer(k, t, static_cast<const ComplexVector&>(view));
  };
  double t = 0.0;
  emit(0, 0.0);
  for (std::size_t k = 1; k < grid.samples(); ++k) {
    stepper.advance(t, y, grid.time(k));
    emit(k, t);
  }
}

// --- quantum trajectories ---------------------------------------------------

/// Per-trajectory generator: splitmix64 of (seed, index) seeds a mt19937_64,
/// so streams do not depend on which worker runs which trajectory.
class TrajectoryRng {
 public:
  TrajectoryRng(std::uint64_t seed, std::uint64_t index) : engine_(mix(seed ^ mix(index + 0x632be59bd9b4e019ULL))) {}

  /// Uniform in (0, 1].
  double uniform() { return 1.0 - static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
};

/// Sample-wise trajectory means and standard errors. Indexing is
/// [sample][site - 1].
struct TrajectoryAverage {
  std::vector<double> times;
  std::vector<std::vector<Complex>> sigma_minus;
  std::vector<std::vector<Complex>> sigma_minus_stderr;  // (SE of real part, SE of imag part)
  std::vector<std::vector<double>> population;
  std::vector<std::vector<double>> population_stderr;
  std::size_t count = 0;
  std::size_t jumps = 0;
};

namespace detail {

struct TrajectorySamples {
  std::vector<std::vector<Complex>> sigma_minus;  // [sample][site-1]
  std::vector<std::vector<double>> population;
  std::size_t jumps = 0;
};

/// Applies a randomly chosen collapse operator to the (unnormalised) state.
inline void apply_jump(ComplexVector& psi, const NoiseSpec& noise, double r) {
  const std::size_t n_sites = psi.size() - 1;
  const double g1 = noise.gamma1();
  const double c2 = 0.5 * noise.gamma_phi();
  const double norm = norm_squared(psi);
  double total = c2 * norm * static_cast<double>(n_sites);
  for (std::size_t n = 1; n <= n_sites; ++n) total += g1 * std::norm(psi[n]);
  double target = r * total;
  for (std::size_t n = 1; n <= n_sites; ++n) {
    const double w = g1 * std::norm(psi[n]);
    if (target < w || (n == n_sites && c2 == 0.0)) {
      const Complex moved = psi[n];
      std::fill(psi.begin(), psi.end(), Complex{});
      psi[0] = moved;
      return;
    }
    target -= w;
  }
  for (std::size_t n = 1; n <= n_sites; ++n) {
    const double w = c2 * norm;
    if (target < w || n == n_sites) {
      // sigma_n^z: +1 on |psi_n>, -1 on everything else in the block.
      for (std::size_t a = 0; a < psi.size(); ++a) {
        if (a != n) psi[a] = -psi[a];
      }
      return;
    }
    target -= w;
  }
}

inline void normalize(ComplexVector& psi) {
  const double s = 1.0 / std::sqrt(norm_squared(psi));
  for (auto& a : psi) a *= s;
}

template <HamiltonianSource Source>
TrajectorySamples run_trajectory(const ComplexVector& initial, const Source& source, const NoiseSpec& noise,
                                 const TimeGrid& grid, TrajectoryRng rng) {
  const std::size_t n_sites = source.sites();
  const double half_g1 = 0.5 * noise.gamma1();
  const double half_total_deph = 0.25 * noise.gamma_phi() * static_cast<double>(n_sites);
  SparseHermitian ham;
  // Non-Hermitian effective generator: -i H - (1/2) sum L^dag L.
  auto rhs = [&](double t, const ComplexVector& y, ComplexVector& dy) {
    source.fill(t, ham);
    apply_hamiltonian(ham, y, dy);
    dy[0] -= half_total_deph * y[0];
    for (std::size_t n = 1; n <= n_sites; ++n) dy[n] -= (half_g1 + half_total_deph) * y[n];
  };
  DormandPrince<decltype(rhs)> stepper(rhs, initial.size(), grid.control());

  TrajectorySamples out;
  out.sigma_minus.assign(grid.samples(), std::vector<Complex>(n_sites));
  out.population.assign(grid.samples(), std::vector<double>(n_sites));
  auto record = [&](std::size_t k, const ComplexVector& psi) {
    const double inv = 1.0 / norm_squared(psi);
    for (std::size_t n = 1; n <= n_sites; ++n) {
      out.sigma_minus[k][n - 1] = std::conj(psi[0]) * psi[n] * inv;
      out.population[k][n - 1] = std::norm(psi[n]) * inv;
    }
  };

  ComplexVector psi = initial;
  ComplexVector trial(psi.size());
  double threshold = rng.uniform();
  double t = 0.0;
  record(0, psi);
  const bool noiseless = noise.is_noiseless();
  double h = grid.max_step;

  for (std::size_t k = 1; k < grid.samples(); ++k) {
    const double t_target = grid.time(k);
    while (t < t_target) {
      const double remaining = t_target - t;
      h = std::min({h, grid.max_step, remaining});
      const bool last = h >= remaining * (1.0 - 1e-12);
      if (last) h = remaining;
      const double err = stepper.attempt(t, psi, h, trial);
      if (err > 1.0) {
        h = DormandPrince<decltype(rhs)>::next_step(h, err);
        if (h < grid.max_step * 1e-10) throw IntegrationError("step-size underflow", t);
        continue;
      }
      const double next_h = DormandPrince<decltype(rhs)>::next_step(h, err);
      if (noiseless || norm_squared(trial) > threshold) {
        t = last ? t_target : t + h;
        psi.swap(trial);
        stepper.accept(t);
        h = next_h;
        continue;
      }
      // The norm crossed the threshold inside this step: bisect on the step
      // length until the squared norm matches it within 1e-12.
      double lo = 0.0;
      double hi = h;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        stepper.attempt(t, psi, mid, trial);
        const double nrm = norm_squared(trial);
        if (std::abs(nrm - threshold) <= 1e-12) {
          hi = mid;
          break;
        }
        if (nrm > threshold) lo = mid; else hi = mid;
        if (hi - lo <= 1e-16 * std::max(t, grid.max_step)) break;
      }
      stepper.attempt(t, psi, hi, trial);
      t = (hi >= remaining * (1.0 - 1e-12)) ? t_target : t + hi;
      psi.swap(trial);
      apply_jump(psi, noise, rng.uniform());
      normalize(psi);
      stepper.reset();
      ++out.jumps;
      threshold = rng.uniform();
      h = next_h;
    }
    record(k, psi);
  }
  return out;
}

}  // namespace detail

/// Quantum-jump unravelling of evolve_lindblad, averaged over cfg.count
/// trajectories. Reduction runs in trajectory order, so results are
/// bit-identical for any thread count.
template <HamiltonianSource Source>
TrajectoryAverage evolve_trajectories(const ComplexVector& initial, const Source& source, const NoiseSpec& noise,
                                      const TimeGrid& grid, const TrajectoryConfig& cfg, std::size_t threads = 1) {
  grid.validate();
  noise.validate();
  if (cfg.count == 0) throw InvalidInput("evolve_trajectories: trajectory count must be positive");
  if (initial.size() != source.sites() + 1) throw InvalidInput("evolve_trajectories: state dimension must be N+1");
  ComplexVector psi0 = initial;
  detail::normalize(psi0);

  const std::size_t samples = grid.samples();
  const std::size_t n_sites = source.sites();
  TrajectoryAverage avg;
  avg.count = cfg.count;
  avg.times.resize(samples);
  for (std::size_t k = 0; k < samples; ++k) avg.times[k] = grid.time(k);

  // Running sums, accumulated strictly in trajectory order. Blocks bound the
  // memory held by finished trajectories; block size does not affect results.
  const std::size_t cells = samples * n_sites;
  std::vector<Complex> sum(cells);
  std::vector<double> sum_re2(cells), sum_im2(cells), psum(cells), psum2(cells);
  const std::size_t block = std::max<std::size_t>(32, 4 * resolve_threads(threads));
  for (std::size_t first = 0; first < cfg.count; first += block) {
    const std::size_t len = std::min(block, cfg.count - first);
    auto runs = parallel_map(len, threads, [&](std::size_t i) {
      return detail::run_trajectory(psi0, source, noise, grid, TrajectoryRng(cfg.seed, first + i));
    });
    for (const auto& r : runs) {
      for (std::size_t k = 0; k < samples; ++k) {
        for (std::size_t n = 0; n < n_sites; ++n) {
          const std::size_t c = k * n_sites + n;
          const Complex v = r.sigma_minus[k][n];
          sum[c] += v;
          sum_re2[c] += v.real() * v.real();
          sum_im2[c] += v.imag() * v.imag();
          const double p = r.population[k][n];
          psum[c] += p;
          psum2[c] += p * p;
        }
      }
      avg.jumps += r.jumps;
    }
  }

  avg.sigma_minus.assign(samples, std::vector<Complex>(n_sites));
  avg.sigma_minus_stderr.assign(samples, std::vector<Complex>(n_sites));
  avg.population.assign(samples, std::vector<double>(n_sites));
  avg.population_stderr.assign(samples, std::vector<double>(n_sites));
  const double m = static_cast<double>(cfg.count);
  for (std::size_t k = 0; k < samples; ++k) {
    for (std::size_t n = 0; n < n_sites; ++n) {
      const std::size_t c = k * n_sites + n;
      const Complex mean = sum[c] / m;
      const double pmean = psum[c] / m;
      avg.sigma_minus[k][n] = mean;
      avg.population[k][n] = pmean;
      if (cfg.count > 1) {
        const double var_re = std::max(0.0, (sum_re2[c] - m * mean.real() * mean.real()) / (m - 1.0));
        const double var_im = std::max(0.0, (sum_im2[c] - m * mean.imag() * mean.imag()) / (m - 1.0));
        const double var_p = std::max(0.0, (psum2[c] - m * pmean * pmean) / (m - 1.0));
        avg.sigma_minus_stderr[k][n] = Complex(std::sqrt(var_re / m), std::sqrt(var_im / m));
        avg.population_stderr[k][n] = std::sqrt(var_p / m);
      }
    }
  }
  return avg;
}

}  // namespace hofsim::dynamics
