#pragma once

// Fourier-transform spectroscopy: record 2<sigma_n^-> from the superposition
// (|psi_0> + |psi_n>)/sqrt(2), square the FFT, sum over initial sites and pick
// the peaks. Peaks sit at the single-excitation energies E_j / 2pi because the
// ground state energy is the zero reference.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hofsim/dynamics.hpp"
#include "hofsim/errors.hpp"
#include "hofsim/model.hpp"
#include "hofsim/numerics.hpp"

namespace hofsim::spectroscopy {

using numerics::Window;

// Lindblad integrates the closed rho_{n0} column; FullLindblad the whole
// (N+1)^2 density matrix (reference, slow).
enum class Engine { Unitary, Lindblad, Trajectories, FullLindblad };

inline const char* to_string(Engine e) {
  switch (e) {
    case Engine::Unitary: return "unitary";
    case Engine::Lindblad: return "lindblad";
    case Engine::Trajectories: return "trajectories";
    case Engine::FullLindblad: return "full-lindblad";
  }
  return "?";
}

struct ExpectationRecord {
  std::size_t site = 1;
  std::vector<double> times;   // s
  std::vector<Complex> values;  // 2 <sigma_n^->  =  <sigma^x> + i <sigma^y>
  std::vector<Complex> stderr_values;  // trajectory engine only; componentwise SE of `values`
  double flux = 0.0;                    // Phi, radians
  std::string schedule_digest;

  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

struct RecordRequest {
  std::size_t site = 1;
  double flux = 0.0;
  Engine engine = Engine::Lindblad;
  dynamics::NoiseSpec noise;
  dynamics::TimeGrid grid;
  dynamics::TrajectoryConfig trajectories;
  std::size_t trajectory_threads = 1;
  std::string schedule_digest;
};

/// Prepares (|psi_0> + |psi_site>)/sqrt(2), evolves it with the chosen engine
/// and samples 2 <sigma_site^->.
template <dynamics::HamiltonianSource Source>
ExpectationRecord record_run(const Source& source, const RecordRequest& req) {
  const std::size_t n_sites = source.sites();
  const ComplexVector psi0 = dynamics::superposition_state(n_sites, req.site);

  ExpectationRecord rec;
  rec.site = req.site;
  rec.flux = req.flux;
  rec.schedule_digest = req.schedule_digest;
  rec.times.resize(req.grid.samples());
  rec.values.resize(req.grid.samples());

  switch (req.engine) {
    case Engine::Unitary:
      dynamics::evolve_unitary(psi0, source, req.grid, [&](std::size_t k, double t, const ComplexVector& psi) {
        rec.times[k] = t;
        rec.values[k] = 2.0 * dynamics::expectation_sigma_minus(psi, req.site);
      });
      break;
    case Engine::Lindblad: {
      // rho_{n0}(0) = psi_n conj(psi_0); only that column feeds <sigma^->.
      ComplexVector coherence(n_sites);
      for (std::size_t n = 1; n <= n_sites; ++n) coherence[n - 1] = psi0[n] * std::conj(psi0[0]);
      dynamics::evolve_lindblad_coherences(coherence, source, req.noise, req.grid,
                                           [&](std::size_t k, double t, const ComplexVector& c) {
                                             rec.times[k] = t;
                                             rec.values[k] = 2.0 * c[req.site - 1];
                                           });
      break;
    }
    case Engine::FullLindblad:
      dynamics::evolve_lindblad(dynamics::DensityMatrix::pure(psi0), source, req.noise, req.grid,
                                [&](std::size_t k, double t, const dynamics::DensityMatrix& rho) {
                                  rec.times[k] = t;
                                  rec.values[k] = 2.0 * dynamics::expectation_sigma_minus(rho, req.site);
                                });
      break;
    case Engine::Trajectories: {
      const auto avg =
          dynamics::evolve_trajectories(psi0, source, req.noise, req.grid, req.trajectories, req.trajectory_threads);
      rec.times = avg.times;
      rec.stderr_values.resize(rec.times.size());
      for (std::size_t k = 0; k < rec.times.size(); ++k) {
        rec.values[k] = 2.0 * avg.sigma_minus[k][req.site - 1];
        rec.stderr_values[k] = 2.0 * avg.sigma_minus_stderr[k][req.site - 1];
      }
      break;
    }
  }
  return rec;
}

struct SpectrumRow {
  double flux = 0.0;                // Phi, radians
  std::vector<double> frequencies;  // Hz, ascending
  std::vector<double> power;        // summed raw |FT|^2
  double bin_width = 0.0;           // Hz
};

struct SpectrumOptions {
  int zero_pad_factor = 4;
  Window window = Window::Rectangular;
};

inline SpectrumRow single_site_spectrum(const ExpectationRecord& rec, const SpectrumOptions& opt = {}) {
  const auto ps = numerics::fft_power(rec.times, rec.values, opt.zero_pad_factor, opt.window);
  return {rec.flux, ps.frequencies, ps.power, ps.bin_width};
}

/// Sum of per-site power spectra; all records must share one time grid.
inline SpectrumRow spectrum_of(const std::vector<ExpectationRecord>& records, const SpectrumOptions& opt = {}) {
  if (records.empty()) throw InvalidInput("spectrum_of: no records");
  const auto& ref = records.front();
  SpectrumRow row;
  for (const auto& rec : records) {
    if (rec.times.size() != ref.times.size()) throw InvalidInput("spectrum_of: mismatched time grids");
    for (std::size_t k = 0; k < rec.times.size(); ++k) {
      if (std::abs(rec.times[k] - ref.times[k]) > 1e-12 * std::max(1e-12, std::abs(ref.times.back()))) {
        throw InvalidInput("spectrum_of: mismatched time grids");
      }
    }
    const SpectrumRow one = single_site_spectrum(rec, opt);
    if (row.power.empty()) {
      row = one;
    } else {
      for (std::size_t i = 0; i < row.power.size(); ++i) row.power[i] += one.power[i];
    }
  }
  row.flux = ref.flux;
  return row;
}

struct Peak {
  double frequency = 0.0;  // Hz
  double height = 0.0;
};

using PeakList = std::vector<Peak>;

/// Strict local maxima with power >= rel_threshold * max, refined by a
/// parabola through the log-power of the three bins around each maximum.
/// Maxima closer than `min_separation` Hz are merged, keeping the higher.
inline PeakList detect_peaks(const SpectrumRow& row, double rel_threshold, double min_separation) {
  if (!(rel_threshold > 0.0 && rel_threshold < 1.0)) throw InvalidInput("detect_peaks: rel_threshold must be in (0, 1)");
  PeakList found;
  const auto& p = row.power;
  if (p.size() < 3) return found;
  const double pmax = *std::max_element(p.begin(), p.end());
  if (!(pmax > 0.0)) return found;
  const double df = row.frequencies[1] - row.frequencies[0];

  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    if (!(p[i] > p[i - 1] && p[i] > p[i + 1]) || p[i] < rel_threshold * pmax) continue;
    // Floor the neighbours so round-off-level bins around an exact on-bin
    // tone do not produce a spurious offset.
    const double floor = p[i] * 1e-24;
    const double l = std::log(std::max(p[i - 1], floor));
    const double c = std::log(p[i]);
    const double r = std::log(std::max(p[i + 1], floor));
    const double denom = l - 2.0 * c + r;
    double delta = 0.0;
    if (denom < 0.0) delta = std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
    const double height = std::exp(c - 0.25 * (l - r) * delta);
    found.push_back({row.frequencies[i] + delta * df, height});
  }

  std::vector<std::size_t> order(found.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return found[a].height > found[b].height; });
  PeakList kept;
  for (std::size_t idx : order) {
    const bool close = std::any_of(kept.begin(), kept.end(), [&](const Peak& k) {
      return std::abs(k.frequency - found[idx].frequency) < min_separation;
    });
    if (!close) kept.push_back(found[idx]);
  }
  std::sort(kept.begin(), kept.end(), [](const Peak& a, const Peak& b) { return a.frequency < b.frequency; });
  return kept;
}

/// Comparison overlay: single-excitation energies E_1..E_N (ascending)
/// measured from the ground state, whose energy is the zero reference.
struct ReferenceEnergies {
  double ground = 0.0;
  std::vector<double> single_excitation;
};

inline ReferenceEnergies eigenenergies_reference(const numerics::HermitianMatrix& h) {
  return {0.0, numerics::eigenvalues(h)};
}

inline ReferenceEnergies eigenenergies_reference(const model::LatticeSpec& spec) {
  return eigenenergies_reference(model::build_zigzag(spec));
}

}  // namespace hofsim::spectroscopy
