#pragma once

// Butterfly experiments over a flux grid: exact diagonalization per flux, and
// the spectroscopic pipeline (N evolutions per flux, summed spectrum, peaks),
// plus the comparison against the effective model and CSV emission.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hofsim/dynamics.hpp"
#include "hofsim/errors.hpp"
#include "hofsim/model.hpp"
#include "hofsim/modulation.hpp"
#include "hofsim/numerics.hpp"
#include "hofsim/parallel.hpp"
#include "hofsim/spectroscopy.hpp"

namespace hofsim::sweep {

using spectroscopy::Engine;
using spectroscopy::PeakList;
using spectroscopy::SpectrumRow;

inline constexpr double kMHz = kTwoPi * 1e6;  // rad/s per MHz of nu/2pi

/// Phi_i = 2 pi i / count for i = 0..count-1, i.e. Phi/2pi uniform on [0, 1).
inline std::vector<double> flux_grid(std::size_t count) {
  if (count == 0) throw InvalidInput("flux grid: count must be positive");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(count);
  return out;
}

/// Called once per finished flux row: (rows done, rows total, flux index).
using Progress = std::function<void(std::size_t, std::size_t, std::size_t)>;

struct ExactSweepConfig {
  model::ModelKind model = model::ModelKind::Zigzag;
  std::size_t n = 300;
  model::Boundary boundary = model::Boundary::Periodic;
  std::vector<double> fluxes = flux_grid(120);
  bool snap = true;
  std::size_t threads = 1;
};

struct SpectroSweepConfig {
  std::size_t n = 14;
  std::vector<double> fluxes = flux_grid(120);
  double g = 10.0 * kMHz;
  double alpha = 1.0;
  modulation::FrequencyPlan plan = modulation::FrequencyPlan::from_modulation(250.0 * kMHz, 150.0 * kMHz,
                                                                              100.0 * kMHz, 5000.0 * kMHz);
  double detuning_ratio = 10.0;
  Engine engine = Engine::Lindblad;
  dynamics::NoiseSpec noise{20e-6, 2e-6};
  dynamics::TimeGrid grid = dynamics::TimeGrid::for_drive(4e-6, 2e-9, 250.0 * kMHz);
  dynamics::TrajectoryConfig trajectories;
  spectroscopy::SpectrumOptions spectrum;
  double rel_threshold = 0.05;
  double min_separation_bins = 1.0;
  std::size_t threads = 1;

  void validate() const {
    if (n < 1) throw InvalidInput("sweep: N must be >= 1");
    if (fluxes.empty()) throw InvalidInput("sweep: empty flux grid");
    auto sorted = fluxes;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw InvalidInput("sweep: flux grid values must be unique");
    }
    plan.validate();
    noise.validate();
    grid.validate();
    if (!(min_separation_bins >= 0.0)) throw InvalidInput("sweep: min_separation_bins must be >= 0");
  }
};

struct TaskFailure {
  std::size_t flux_index = 0;
  std::size_t site = 0;  // 0 for row-level failures
  std::string message;
};

enum class Variant { Exact, Spectroscopic };

struct ButterflyDataset {
  Variant variant = Variant::Exact;
  std::vector<double> flux_requested;  // Phi, radians
  std::vector<double> flux;            // Phi actually simulated
  std::vector<std::vector<double>> eigenvalues;  // exact variant, units of J
  std::vector<SpectrumRow> spectra;              // spectroscopic variant
  std::vector<PeakList> peaks;
  std::vector<std::string> schedule_digests;
  std::vector<double> row_seconds;  // summed task wall time per row
  std::vector<TaskFailure> failures;
  std::vector<std::string> warnings;
  double wall_seconds = 0.0;
};

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline ButterflyDataset run_exact_sweep(const ExactSweepConfig& cfg, const Progress& progress = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  ButterflyDataset ds;
  ds.variant = Variant::Exact;
  std::atomic<std::size_t> done{0};
  std::mutex report;
  struct Cell {
    model::ExactRow row;
    double seconds = 0.0;
  };
  auto cells = parallel_map(cfg.fluxes.size(), cfg.threads, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    Cell c;
    // One flux per call keeps per-row timing and failure isolation.
    c.row = model::exact_butterfly(cfg.n, cfg.boundary, {cfg.fluxes[i]}, cfg.model, cfg.snap, 1).front();
    c.seconds = seconds_since(start);
    if (progress) {
      std::lock_guard lock(report);
      progress(++done, cfg.fluxes.size(), i);
    }
    return c;
  });
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto& row = cells[i].row;
    ds.flux_requested.push_back(row.flux_requested);
    ds.flux.push_back(row.flux);
    ds.eigenvalues.push_back(std::move(row.eigenvalues));
    ds.row_seconds.push_back(cells[i].seconds);
    if (row.error) ds.failures.push_back({i, 0, *row.error});
  }
  ds.wall_seconds = seconds_since(t0);
  return ds;
}

/// Hex FNV-1a digest of the schedule arrays, tying records to their drive.
inline std::string schedule_digest(const modulation::DriveSchedule& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const std::vector<double>& v) {
    for (double x : v) {
      std::uint64_t bits;
      std::memcpy(&bits, &x, sizeof bits);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xffU;
        h *= 0x100000001b3ULL;
      }
    }
  };
  mix(s.omega_bar);
  mix(s.epsilon);
  mix(s.nu);
  mix(s.theta);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline modulation::DriveSchedule schedule_for(const SpectroSweepConfig& cfg, double flux) {
  return modulation::make_schedule({cfg.n, cfg.g}, flux / 3.0, cfg.alpha, cfg.plan);
}

/// One record_run per (flux, site) in a deterministic parallel map; rows are
/// reduced in (flux, site) order. A failing task drops only its own record.
inline ButterflyDataset run_spectro_sweep(const SpectroSweepConfig& cfg, const Progress& progress = {}) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const modulation::DeviceSpec device{cfg.n, cfg.g};
  device.validate();

  ButterflyDataset ds;
  ds.variant = Variant::Spectroscopic;
  ds.warnings = modulation::schedule_warnings(device, cfg.plan, cfg.detuning_ratio);
  std::vector<modulation::DrivenHamiltonian> drives;
  drives.reserve(cfg.fluxes.size());
  for (double flux : cfg.fluxes) {
    auto s = schedule_for(cfg, flux);
    ds.schedule_digests.push_back(schedule_digest(s));
    drives.emplace_back(device, std::move(s));
  }

  struct Cell {
    std::optional<spectroscopy::ExpectationRecord> record;
    std::string error;
    double seconds = 0.0;
  };
  const std::size_t n_fluxes = cfg.fluxes.size();
  std::vector<std::atomic<std::size_t>> remaining(n_fluxes);
  for (auto& r : remaining) r.store(cfg.n);
  std::atomic<std::size_t> rows_done{0};
  std::mutex report;

  auto cells = parallel_map(n_fluxes * cfg.n, cfg.threads, [&](std::size_t task) {
    const std::size_t fi = task / cfg.n;
    const std::size_t site = task % cfg.n + 1;
    const auto start = std::chrono::steady_clock::now();
    Cell c;
    try {
      spectroscopy::RecordRequest req;
      req.site = site;
      req.flux = cfg.fluxes[fi];
      req.engine = cfg.engine;
      req.noise = cfg.noise;
      req.grid = cfg.grid;
      req.trajectories = cfg.trajectories;
      req.trajectory_threads = 1;
      req.schedule_digest = ds.schedule_digests[fi];
      c.record = spectroscopy::record_run(drives[fi], req);
    } catch (const std::exception& e) {
      c.error = e.what();
    }
    c.seconds = seconds_since(start);
    if (remaining[fi].fetch_sub(1) == 1 && progress) {
      std::lock_guard lock(report);
      progress(++rows_done, n_fluxes, fi);
    }
    return c;
  });

  for (std::size_t fi = 0; fi < n_fluxes; ++fi) {
    std::vector<spectroscopy::ExpectationRecord> records;
    double seconds = 0.0;
    for (std::size_t site = 1; site <= cfg.n; ++site) {
      auto& c = cells[fi * cfg.n + site - 1];
      seconds += c.seconds;
      if (c.record) {
        records.push_back(std::move(*c.record));
      } else {
        ds.failures.push_back({fi, site, c.error});
      }
    }
    ds.flux_requested.push_back(cfg.fluxes[fi]);
    ds.flux.push_back(cfg.fluxes[fi]);
    ds.row_seconds.push_back(seconds);
    if (records.empty()) {
      ds.spectra.push_back({cfg.fluxes[fi], {}, {}, 0.0});
      ds.peaks.emplace_back();
      continue;
    }
    SpectrumRow row = spectroscopy::spectrum_of(records, cfg.spectrum);
    ds.peaks.push_back(spectroscopy::detect_peaks(row, cfg.rel_threshold, cfg.min_separation_bins * row.bin_width));
    ds.spectra.push_back(std::move(row));
  }
  ds.wall_seconds = seconds_since(t0);
  return ds;
}

// --- comparison against the effective model ---------------------------------

struct FluxDeviation {
  double flux = 0.0;                   // Phi, radians
  std::vector<double> theory_mhz;      // E_j / 2pi, ascending
  std::vector<double> peaks_mhz;       // detected, ascending
  std::vector<double> peak_error_mhz;  // per peak, distance to nearest E_j
  std::vector<double> level_error_mhz;  // per E_j, distance to nearest peak (inf if none)
  std::size_t matched = 0;
  std::size_t unmatched_peaks = 0;
  std::size_t unmatched_levels = 0;
  double mean_mhz = 0.0;  // over matched peaks; NaN if none
  double max_mhz = 0.0;
};

struct TheoryReport {
  std::vector<FluxDeviation> rows;
  double match_window_mhz = 0.0;
  std::size_t matched = 0;
  std::size_t unmatched_peaks = 0;
  std::size_t unmatched_levels = 0;
  double mean_mhz = 0.0;  // over all matched peaks of all fluxes
  double max_mhz = 0.0;
};

/// E_j / 2pi in MHz of the open zigzag chain with J = g J0(alpha) J1(alpha).
inline std::vector<double> theory_levels_mhz(std::size_t n, double g, double alpha, double flux) {
  const double j = modulation::effective_strength(g, alpha);
  std::vector<double> e;
  if (n >= 3) {
    e = numerics::eigenvalues(model::build_zigzag({n, j, flux / 3.0, model::Boundary::Open}));
  } else {
    numerics::HermitianMatrix h(n);
    if (n == 2) h.set(0, 1, j * std::polar(1.0, -2.0 * flux / 3.0));
    e = numerics::eigenvalues(h);
  }
  for (double& x : e) x /= kMHz;
  return e;
}

inline double nearest_distance(double x, const std::vector<double>& sorted) {
  double best = std::numeric_limits<double>::infinity();
  for (double y : sorted) best = std::min(best, std::abs(x - y));
  return best;
}

/// Matches each peak to its nearest level. A peak farther than
/// `match_window_mhz` from every level is unmatched, as is a level with no
/// peak inside the window.
inline FluxDeviation compare_row(double flux, std::vector<double> theory_mhz, std::vector<double> peaks_mhz,
                                 double match_window_mhz) {
  FluxDeviation d;
  d.flux = flux;
  std::sort(theory_mhz.begin(), theory_mhz.end());
  std::sort(peaks_mhz.begin(), peaks_mhz.end());
  d.theory_mhz = std::move(theory_mhz);
  d.peaks_mhz = std::move(peaks_mhz);
  double sum = 0.0;
  for (double p : d.peaks_mhz) {
    const double e = nearest_distance(p, d.theory_mhz);
    d.peak_error_mhz.push_back(e);
    if (e <= match_window_mhz) {
      ++d.matched;
      sum += e;
      d.max_mhz = std::max(d.max_mhz, e);
    } else {
      ++d.unmatched_peaks;
    }
  }
  for (double level : d.theory_mhz) {
    const double e = nearest_distance(level, d.peaks_mhz);
    d.level_error_mhz.push_back(e);
    if (!(e <= match_window_mhz)) ++d.unmatched_levels;
  }
  d.mean_mhz = d.matched ? sum / static_cast<double>(d.matched) : std::numeric_limits<double>::quiet_NaN();
  return d;
}

inline TheoryReport compare_to_theory(const ButterflyDataset& ds, const SpectroSweepConfig& cfg,
                                      double match_window_mhz = 1.5) {
  if (ds.variant != Variant::Spectroscopic) throw InvalidInput("compare_to_theory: needs a spectroscopic dataset");
  TheoryReport rep;
  rep.match_window_mhz = match_window_mhz;
  double sum = 0.0;
  for (std::size_t i = 0; i < ds.flux.size(); ++i) {
    std::vector<double> peaks;
    for (const auto& p : ds.peaks[i]) peaks.push_back(p.frequency / 1e6);
    auto row = compare_row(ds.flux[i], theory_levels_mhz(cfg.n, cfg.g, cfg.alpha, ds.flux[i]), std::move(peaks),
                           match_window_mhz);
    rep.matched += row.matched;
    rep.unmatched_peaks += row.unmatched_peaks;
    rep.unmatched_levels += row.unmatched_levels;
    rep.max_mhz = std::max(rep.max_mhz, row.max_mhz);
    for (std::size_t k = 0; k < row.peak_error_mhz.size(); ++k) {
      if (row.peak_error_mhz[k] <= match_window_mhz) sum += row.peak_error_mhz[k];
    }
    rep.rows.push_back(std::move(row));
  }
  rep.mean_mhz = rep.matched ? sum / static_cast<double>(rep.matched) : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

// --- CSV ----------------------------------------------------------------------

/// Shortest round-trip representation, independent of the C locale.
inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::initializer_list<const char*> header) : out_(out) {
    bool first = true;
    for (const char* h : header) {
      if (!first) out_ << ',';
      out_ << h;
      first = false;
    }
    out_ << '\n';
  }

  void row(std::initializer_list<double> values) {
    line_.clear();
    for (double v : values) {
      if (!line_.empty()) line_ += ',';
      line_ += format_double(v);
    }
    line_ += '\n';
    out_ << line_;
  }

 private:
  std::ostream& out_;
  std::string line_;
};

inline double over_2pi(double flux) { return flux / kTwoPi; }

inline void write_exact_csv(std::ostream& out, const ButterflyDataset& ds) {
  CsvWriter w(out, {"flux_over_2pi", "eigenvalue_over_J"});
  for (std::size_t i = 0; i < ds.flux.size(); ++i) {
    for (double e : ds.eigenvalues[i]) w.row({over_2pi(ds.flux[i]), e});
  }
}

/// Heatmap rows; bins with |f| > max_frequency_mhz are dropped (0 keeps all).
inline void write_spectro_csv(std::ostream& out, const ButterflyDataset& ds, double max_frequency_mhz) {
  CsvWriter w(out, {"flux_over_2pi", "frequency_mhz", "power"});
  for (std::size_t i = 0; i < ds.spectra.size(); ++i) {
    const auto& row = ds.spectra[i];
    for (std::size_t k = 0; k < row.frequencies.size(); ++k) {
      const double f = row.frequencies[k] / 1e6;
      if (max_frequency_mhz > 0.0 && std::abs(f) > max_frequency_mhz) continue;
      w.row({over_2pi(ds.flux[i]), f, row.power[k]});
    }
  }
}

inline void write_peaks_csv(std::ostream& out, const ButterflyDataset& ds) {
  CsvWriter w(out, {"flux_over_2pi", "peak_mhz", "height"});
  for (std::size_t i = 0; i < ds.peaks.size(); ++i) {
    for (const auto& p : ds.peaks[i]) w.row({over_2pi(ds.flux[i]), p.frequency / 1e6, p.height});
  }
}

inline void write_theory_csv(std::ostream& out, const TheoryReport& rep) {
  CsvWriter w(out, {"flux_over_2pi", "eigenvalue_mhz"});
  for (const auto& r : rep.rows) {
    for (double e : r.theory_mhz) w.row({over_2pi(r.flux), e});
  }
}

inline void write_deviation_csv(std::ostream& out, const TheoryReport& rep) {
  CsvWriter w(out, {"flux_over_2pi", "peaks", "matched", "unmatched_peaks", "unmatched_levels", "mean_dev_mhz",
                    "max_dev_mhz"});
  for (const auto& r : rep.rows) {
    w.row({over_2pi(r.flux), static_cast<double>(r.peaks_mhz.size()), static_cast<double>(r.matched),
           static_cast<double>(r.unmatched_peaks), static_cast<double>(r.unmatched_levels), r.mean_mhz, r.max_mhz});
  }
}

}  // namespace hofsim::sweep
