#pragma once

// Single-excitation lattice Hamiltonians: the zigzag chain with complex
// nearest and next-nearest hoppings, the Harper chain, and the q-band
// momentum-space problem at rational flux.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "hofsim/errors.hpp"
#include "hofsim/numerics.hpp"
#include "hofsim/parallel.hpp"

namespace hofsim::model {

using numerics::HermitianMatrix;

enum class Boundary { Open, Periodic };
enum class ModelKind { Zigzag, Harper };

inline const char* to_string(Boundary b) { return b == Boundary::Open ? "open" : "periodic"; }
inline const char* to_string(ModelKind m) { return m == ModelKind::Zigzag ? "zigzag" : "harper"; }

/// Residual of `total_phase` against the nearest multiple of 2 pi.
inline double phase_residual(double total_phase) {
  const double r = std::remainder(total_phase, kTwoPi);
  return std::abs(r);
}

/// Zigzag lattice parameters. Sites are 1-based; `phi` is the per-link phase,
/// and the flux through each rhombic cell is 3 * phi.
struct LatticeSpec {
  std::size_t n = 3;
  double coupling = 1.0;
  double phi = 0.0;
  Boundary boundary = Boundary::Open;

  double cell_flux() const { return 3.0 * phi; }

  void validate() const {
    if (n < 3) throw InvalidInput("LatticeSpec: N must be >= 3, got " + std::to_string(n));
    if (!std::isfinite(coupling) || !std::isfinite(phi)) throw InvalidInput("LatticeSpec: non-finite parameter");
    if (boundary == Boundary::Periodic) {
      const double total = static_cast<double>(n) * phi;
      if (phase_residual(total) > 1e-12 * std::max(1.0, std::abs(total) / kTwoPi)) {
        throw FluxQuantizationError("periodic zigzag requires N*phi = 0 mod 2pi; N*phi = " + std::to_string(total));
      }
    }
  }
};

/// <psi_n|H|psi_{n+2}> = J e^{i n phi}, <psi_n|H|psi_{n+1}> = J e^{-i (n+1) phi};
/// the periodic chain wraps both link classes with the same formulas mod N.
inline HermitianMatrix build_zigzag(const LatticeSpec& spec) {
  spec.validate();
  const std::size_t n_sites = spec.n;
  const bool periodic = spec.boundary == Boundary::Periodic;
  HermitianMatrix h(n_sites);
  for (std::size_t n = 1; n <= n_sites; ++n) {
    const double nd = static_cast<double>(n);
    if (n + 1 <= n_sites || periodic) {
      h.add(n - 1, n % n_sites, spec.coupling * std::polar(1.0, -(nd + 1.0) * spec.phi));
    }
    if (n + 2 <= n_sites || periodic) {
      h.add(n - 1, (n + 1) % n_sites, spec.coupling * std::polar(1.0, nd * spec.phi));
    }
  }
  return h;
}

/// Hopping J between neighbours, on-site 2 J cos(n Phi) for n = 1..N.
inline HermitianMatrix build_harper(std::size_t n_sites, double coupling, double flux, Boundary boundary) {
  if (n_sites < 2) throw InvalidInput("build_harper: N must be >= 2");
  if (!std::isfinite(coupling) || !std::isfinite(flux)) throw InvalidInput("build_harper: non-finite parameter");
  HermitianMatrix h(n_sites);
  for (std::size_t n = 1; n <= n_sites; ++n) {
    h.set_diagonal(n - 1, 2.0 * coupling * std::cos(static_cast<double>(n) * flux));
    if (n < n_sites) h.add(n - 1, n, coupling);
  }
  if (boundary == Boundary::Periodic) h.add(n_sites - 1, 0, coupling);
  return h;
}

/// Phase of the product of hopping amplitudes along a closed path
/// a0 -> a1 -> ... -> a0 (1-based sites), wrapped to (-pi, pi].
inline double loop_phase(const HermitianMatrix& h, const std::vector<std::size_t>& path) {
  Complex product{1.0, 0.0};
  for (std::size_t k = 0; k < path.size(); ++k) {
    const std::size_t from = path[k];
    const std::size_t to = path[(k + 1) % path.size()];
    product *= h(to - 1, from - 1);
  }
  return std::arg(product);
}

/// Rational flux Phi / 2pi = p / q at wave vector k in the magnetic Brillouin zone.
struct BandProblem {
  long p = 0;
  long q = 1;
  double k = 0.0;

  double cell_flux() const { return kTwoPi * static_cast<double>(p) / static_cast<double>(q); }
  double phi() const { return cell_flux() / 3.0; }

  void validate() const {
    if (q < 1) throw InvalidInput("BandProblem: q must be >= 1");
    if (std::gcd(p, q) != 1) throw InvalidInput("BandProblem: p and q must be coprime");
    const double edge = std::numbers::pi / static_cast<double>(q);
    if (!(std::abs(k) <= edge * (1.0 + 1e-12))) throw InvalidInput("BandProblem: k outside [-pi/q, pi/q]");
  }
};

/// Coupling between band indices v and v+1 (cyclic in v mod q).
inline Complex band_coupling(const BandProblem& bp, double coupling, long v) {
  const double x = bp.k + static_cast<double>(v) * bp.phi();
  return coupling * (std::polar(1.0, x) + std::polar(1.0, -2.0 * x));
}

inline HermitianMatrix band_hamiltonian(const BandProblem& bp, double coupling) {
  bp.validate();
  const auto q = static_cast<std::size_t>(bp.q);
  HermitianMatrix h(q);
  for (std::size_t v = 0; v < q; ++v) {
    const Complex f = band_coupling(bp, coupling, static_cast<long>(v));
    const std::size_t w = (v + 1) % q;
    if (w == v) {
      // q = 1: the band couples to itself, f + conj(f) on the diagonal.
      h.set_diagonal(v, h(v, v).real() + 2.0 * f.real());
    } else {
      h.add(v, w, f);
    }
  }
  return h;
}

/// Wave vectors 2 pi m / N inside one magnetic Brillouin zone: N/q values.
inline std::vector<double> allowed_k(std::size_t n_sites, long q) {
  if (q < 1 || n_sites % static_cast<std::size_t>(q) != 0) {
    throw InvalidInput("allowed_k: q must divide N");
  }
  const auto per_band = static_cast<long>(n_sites / static_cast<std::size_t>(q));
  std::vector<double> ks;
  ks.reserve(static_cast<std::size_t>(per_band));
  for (long m = -(per_band / 2); m < -(per_band / 2) + per_band; ++m) {
    ks.push_back(kTwoPi * static_cast<double>(m) / static_cast<double>(n_sites));
  }
  return ks;
}

/// Union over allowed k of the q band energies, sorted ascending.
inline std::vector<double> band_spectrum(long p, long q, std::size_t n_sites, double coupling) {
  std::vector<double> all;
  for (double k : allowed_k(n_sites, q)) {
    const auto e = numerics::eigenvalues(band_hamiltonian({p, q, k}, coupling));
    all.insert(all.end(), e.begin(), e.end());
  }
  std::sort(all.begin(), all.end());
  return all;
}

/// Round to nearest with ties to even. Values within 1e-9 of a half-integer
/// count as ties, since e.g. N * phi / 2pi = 2.5 rarely arrives exactly.
inline double round_half_even(double x) {
  const double lower = std::floor(x);
  if (std::abs(x - lower - 0.5) < 1e-9) return std::fmod(lower, 2.0) == 0.0 ? lower : lower + 1.0;
  return std::round(x);
}

/// Nearest flux the periodic chain can carry. Zigzag snaps phi = Phi/3 to
/// 2 pi m / N, Harper snaps Phi to 2 pi m / N. Ties round half to even so the
/// grid is symmetric under Phi -> 2 pi - Phi when 3 | N.
inline double snap_flux(ModelKind model, std::size_t n_sites, double flux) {
  const double nd = static_cast<double>(n_sites);
  if (model == ModelKind::Zigzag) {
    const double m = std::fmod(round_half_even(nd * (flux / 3.0) / kTwoPi), nd);
    return 3.0 * kTwoPi * m / nd;
  }
  const double m = std::fmod(round_half_even(nd * flux / kTwoPi), nd);
  return kTwoPi * m / nd;
}

struct ExactRow {
  double flux_requested = 0.0;  // Phi, radians
  double flux = 0.0;            // Phi actually used
  std::vector<double> eigenvalues;  // ascending, units of J
  std::optional<std::string> error;
};

/// Eigenvalues in units of J for one cell flux Phi.
inline std::vector<double> exact_spectrum(ModelKind model, std::size_t n_sites, Boundary boundary, double flux) {
  if (model == ModelKind::Zigzag) {
    return numerics::eigenvalues(build_zigzag({n_sites, 1.0, flux / 3.0, boundary}));
  }
  if (boundary == Boundary::Periodic &&
      phase_residual(static_cast<double>(n_sites) * flux) >
          1e-12 * std::max(1.0, static_cast<double>(n_sites) * std::abs(flux) / kTwoPi)) {
    throw FluxQuantizationError("periodic Harper chain requires N*Phi = 0 mod 2pi");
  }
  return numerics::eigenvalues(build_harper(n_sites, 1.0, flux, boundary));
}

/// Spectrum for every flux in `flux_grid`. With `snap` set, periodic chains
/// use the nearest quantized flux; otherwise quantization failures are
/// recorded on the row and the remaining rows still run.
inline std::vector<ExactRow> exact_butterfly(std::size_t n_sites, Boundary boundary,
                                             const std::vector<double>& flux_grid, ModelKind model,
                                             bool snap = true, std::size_t threads = 1) {
  return parallel_map(flux_grid.size(), threads, [&](std::size_t i) {
    ExactRow row;
    row.flux_requested = flux_grid[i];
    row.flux = (snap && boundary == Boundary::Periodic) ? snap_flux(model, n_sites, flux_grid[i]) : flux_grid[i];
    try {
      row.eigenvalues = exact_spectrum(model, n_sites, boundary, row.flux);
    } catch (const FluxQuantizationError& e) {
      row.error = e.what();
    }
    return row;
  });
}

}  // namespace hofsim::model
