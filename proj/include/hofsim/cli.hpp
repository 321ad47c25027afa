#pragma once

// Command-line front end. run() parses arguments, applies flag overrides on
// top of the config file, executes one subcommand and returns the exit code:
// 0 success, 1 configuration or usage error, 2 runtime error.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hofsim/config.hpp"
#include "hofsim/errors.hpp"
#include "hofsim/model.hpp"
#include "hofsim/modulation.hpp"
#include "hofsim/spectroscopy.hpp"
#include "hofsim/sweep.hpp"

#ifndef HOFSIM_VERSION
#define HOFSIM_VERSION "0.0.0"
#endif

namespace hofsim::cli {

namespace fs = std::filesystem;
using config::Json;
using config::RunConfig;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

/// Flags shared by the subcommands. Unset options leave the config alone.
struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> out_dir;
  std::optional<std::string> model;
  std::optional<std::size_t> n;
  std::optional<std::size_t> fluxes;
  std::optional<std::string> boundary;
  std::optional<std::string> engine;
  std::optional<std::size_t> trajectories;
  bool no_noise = false;
  std::optional<long long> site;
  std::optional<double> alpha;
  std::optional<double> flux;  // Phi / 2pi
  std::optional<double> phi;   // phi / 2pi
  std::optional<std::string> window;
};

enum class Command { ButterflyExact, ButterflySpectro, Evolve, Couplings, DefaultConfig };

inline const char* command_name(Command c) {
  switch (c) {
    case Command::ButterflyExact: return "butterfly-exact";
    case Command::ButterflySpectro: return "butterfly-spectro";
    case Command::Evolve: return "evolve";
    case Command::Couplings: return "couplings";
    case Command::DefaultConfig: return "default-config";
  }
  return "?";
}

inline RunConfig resolve_config(Command cmd, const Overrides& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : config::load_file(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.execution.threads = *o.threads;
  if (o.out_dir) c.execution.out_dir = *o.out_dir;
  if (o.model) c.exact.model = config::parse_model(*o.model, "--model");
  if (o.boundary) c.exact.boundary = config::parse_boundary(*o.boundary, "--boundary");
  if (o.engine) c.engine = config::parse_engine(*o.engine, "--engine");
  if (o.window) c.spectrum.window = config::parse_window(*o.window, "--window");
  if (o.trajectories) c.trajectories = *o.trajectories;
  if (o.no_noise) c.noise.enabled = false;
  if (o.alpha) c.device.alpha = *o.alpha;
  if (o.site) {
    if (*o.site < 1) throw ConfigError("config key '--site': sites are numbered 1..N");
    c.evolve.site = static_cast<std::size_t>(*o.site);
  }
  if (o.flux && o.phi) throw ConfigError("config key '--flux': give either --flux or --phi");
  if (o.flux) c.evolve.flux_over_2pi = *o.flux;
  if (o.phi) c.evolve.flux_over_2pi = 3.0 * *o.phi;
  if (cmd == Command::ButterflyExact) {
    if (o.n) c.exact.n = *o.n;
    if (o.fluxes) c.exact.fluxes = *o.fluxes;
  } else {
    if (o.n) c.device.n = *o.n;
    if (o.fluxes) c.sweep_fluxes = *o.fluxes;
  }
  c.validate();
  return c;
}

/// <out_dir>/<command>-<config hash>
inline fs::path run_directory(Command cmd, const RunConfig& c) {
  return fs::path(c.execution.out_dir) / (std::string(command_name(cmd)) + "-" + config::config_hash(c));
}

inline std::ofstream open_output(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

inline Json manifest_base(Command cmd, const RunConfig& c) {
  Json m;
  m["tool"] = "hofsim";
  m["version"] = HOFSIM_VERSION;
  m["command"] = command_name(cmd);
  m["config_hash"] = config::config_hash(c);
  m["config"] = config::to_json(c);
  m["seed"] = c.seed;
  m["threads"] = resolve_threads(c.execution.threads);
  return m;
}

inline Json dataset_manifest(const sweep::ButterflyDataset& ds) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < ds.flux.size(); ++i) {
    Json r;
    r["flux_over_2pi_requested"] = ds.flux_requested[i] / kTwoPi;
    r["flux_over_2pi"] = ds.flux[i] / kTwoPi;
    r["seconds"] = ds.row_seconds[i];
    if (ds.variant == sweep::Variant::Exact) {
      double trace = 0.0;
      for (double e : ds.eigenvalues[i]) trace += e;
      r["trace_over_J"] = trace;
    } else {
      r["schedule_digest"] = ds.schedule_digests[i];
      r["peaks"] = ds.peaks[i].size();
    }
    rows.push_back(std::move(r));
  }
  Json failures = Json::array();
  for (const auto& f : ds.failures) {
    failures.push_back({{"flux_index", f.flux_index}, {"site", f.site}, {"message", f.message}});
  }
  return {{"rows", rows}, {"failures", failures}, {"warnings", ds.warnings}, {"wall_seconds", ds.wall_seconds}};
}

inline void write_manifest(const fs::path& dir, const Json& m) {
  auto out = open_output(dir / "manifest.json");
  out << m.dump(2) << '\n';
}

inline sweep::Progress stderr_progress(std::ostream& err, const std::vector<double>& fluxes) {
  return [&err, &fluxes](std::size_t done, std::size_t total, std::size_t index) {
    err << "[" << done << "/" << total << "] flux/2pi = " << fluxes[index] / kTwoPi << '\n';
  };
}

inline int cmd_butterfly_exact(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto cfg = config::exact_sweep_config(c);
  const auto ds = sweep::run_exact_sweep(cfg, stderr_progress(err, cfg.fluxes));
  const fs::path dir = run_directory(Command::ButterflyExact, c);
  fs::create_directories(dir);
  {
    auto f = open_output(dir / "exact.csv");
    sweep::write_exact_csv(f, ds);
  }
  Json m = manifest_base(Command::ButterflyExact, c);
  m["dataset"] = dataset_manifest(ds);
  m["files"] = {"exact.csv"};
  write_manifest(dir, m);
  out << dir.string() << '\n';
  for (const auto& f : ds.failures) err << "row " << f.flux_index << ": " << f.message << '\n';
  return ds.failures.empty() ? kExitOk : kExitRuntime;
}

inline int cmd_butterfly_spectro(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto cfg = config::spectro_sweep_config(c);
  const auto ds = sweep::run_spectro_sweep(cfg, stderr_progress(err, cfg.fluxes));
  for (const auto& w : ds.warnings) err << "warning: " << w << '\n';
  const auto rep = sweep::compare_to_theory(ds, cfg, c.spectrum.match_window_mhz);
  const fs::path dir = run_directory(Command::ButterflySpectro, c);
  fs::create_directories(dir);
  {
    auto f = open_output(dir / "spectro.csv");
    sweep::write_spectro_csv(f, ds, c.spectrum.max_frequency_mhz);
  }
  {
    auto f = open_output(dir / "peaks.csv");
    sweep::write_peaks_csv(f, ds);
  }
  {
    auto f = open_output(dir / "theory.csv");
    sweep::write_theory_csv(f, rep);
  }
  {
    auto f = open_output(dir / "deviation.csv");
    sweep::write_deviation_csv(f, rep);
  }
  Json m = manifest_base(Command::ButterflySpectro, c);
  m["dataset"] = dataset_manifest(ds);
  m["theory"] = {{"mean_deviation_mhz", rep.mean_mhz},
                 {"max_deviation_mhz", rep.max_mhz},
                 {"matched_peaks", rep.matched},
                 {"unmatched_peaks", rep.unmatched_peaks},
                 {"unmatched_levels", rep.unmatched_levels},
                 {"match_window_mhz", rep.match_window_mhz}};
  m["files"] = {"spectro.csv", "peaks.csv", "theory.csv", "deviation.csv"};
  write_manifest(dir, m);
  out << dir.string() << '\n';
  out << "mean deviation " << rep.mean_mhz << " MHz, max " << rep.max_mhz << " MHz over " << rep.matched
      << " matched peaks; unmatched peaks " << rep.unmatched_peaks << ", unmatched levels " << rep.unmatched_levels
      << '\n';
  for (const auto& f : ds.failures) {
    err << "flux " << f.flux_index << " site " << f.site << ": " << f.message << '\n';
  }
  return ds.failures.empty() ? kExitOk : kExitRuntime;
}

inline int cmd_evolve(const RunConfig& c, std::ostream& out, std::ostream& err) {
  auto cfg = config::spectro_sweep_config(c);
  const double flux = kTwoPi * c.evolve.flux_over_2pi;
  const modulation::DeviceSpec device{cfg.n, cfg.g};
  auto schedule = sweep::schedule_for(cfg, flux);
  for (const auto& w : modulation::schedule_warnings(device, cfg.plan, cfg.detuning_ratio)) {
    err << "warning: " << w << '\n';
  }
  spectroscopy::RecordRequest req;
  req.site = c.evolve.site;
  req.flux = flux;
  req.engine = cfg.engine;
  req.noise = cfg.noise;
  req.grid = cfg.grid;
  req.trajectories = cfg.trajectories;
  req.trajectory_threads = c.execution.threads;
  req.schedule_digest = sweep::schedule_digest(schedule);
  const modulation::DrivenHamiltonian drive(device, std::move(schedule));
  const auto rec = spectroscopy::record_run(drive, req);
  const auto row = spectroscopy::single_site_spectrum(rec, cfg.spectrum);
  const auto peaks = spectroscopy::detect_peaks(row, cfg.rel_threshold, cfg.min_separation_bins * row.bin_width);

  const fs::path dir = run_directory(Command::Evolve, c);
  fs::create_directories(dir);
  {
    auto f = open_output(dir / "trace.csv");
    sweep::CsvWriter w(f, {"t_us", "sx", "sy"});
    for (std::size_t k = 0; k < rec.times.size(); ++k) w.row({rec.times[k] * 1e6, rec.values[k].real(), rec.values[k].imag()});
  }
  sweep::ButterflyDataset ds;
  ds.variant = sweep::Variant::Spectroscopic;
  ds.flux = {flux};
  ds.spectra = {row};
  ds.peaks = {peaks};
  {
    auto f = open_output(dir / "spectrum.csv");
    sweep::write_spectro_csv(f, ds, c.spectrum.max_frequency_mhz);
  }
  {
    auto f = open_output(dir / "peaks.csv");
    sweep::write_peaks_csv(f, ds);
  }
  Json m = manifest_base(Command::Evolve, c);
  m["schedule_digest"] = rec.schedule_digest;
  m["site"] = rec.site;
  m["flux_over_2pi"] = c.evolve.flux_over_2pi;
  m["files"] = {"trace.csv", "spectrum.csv", "peaks.csv"};
  write_manifest(dir, m);
  out << dir.string() << '\n';
  return kExitOk;
}

/// Prints |J|/2pi and phase per link and checks the phase pattern against
/// the zigzag model with J = g J0(alpha) J1(alpha).
inline int cmd_couplings(const RunConfig& c, std::ostream& out, std::ostream&) {
  if (c.device.n < 3) throw ConfigError("config key 'device.n': couplings needs N >= 3");
  const auto cfg = config::spectro_sweep_config(c);
  const double phi = kTwoPi * c.evolve.flux_over_2pi / 3.0;
  const modulation::DeviceSpec device{cfg.n, cfg.g};
  const auto schedule = modulation::make_schedule(device, phi, cfg.alpha, cfg.plan);
  const auto heff = modulation::effective_hamiltonian(modulation::effective_couplings(device, schedule));
  const double j = modulation::effective_strength(cfg.g, cfg.alpha);
  const auto ref = model::build_zigzag({cfg.n, j, phi, model::Boundary::Open});
  const double tol = 1e-12 * std::max(std::abs(j), 1.0);

  const fs::path dir = run_directory(Command::Couplings, c);
  fs::create_directories(dir);
  auto f = open_output(dir / "couplings.csv");
  sweep::CsvWriter csv(f, {"from", "to", "abs_over_2pi_mhz", "phase_rad", "expected_phase_rad", "match"});

  bool all_ok = true;
  out << std::left << std::setw(6) << "link" << std::setw(10) << "n->m" << std::setw(18) << "|J|/2pi [MHz]"
      << std::setw(14) << "phase" << std::setw(14) << "expected" << "ok\n";
  for (std::size_t d = 1; d <= 2; ++d) {
    for (std::size_t n = 1; n + d <= cfg.n; ++n) {
      const Complex v = heff(n - 1, n - 1 + d);
      const Complex e = ref(n - 1, n - 1 + d);
      const bool ok = std::abs(v - e) <= tol;
      all_ok = all_ok && ok;
      const double mag = std::abs(v) / config::kMHz;
      out << std::setw(6) << (d == 1 ? "nn" : "nnn") << std::setw(10)
          << (std::to_string(n) + "->" + std::to_string(n + d)) << std::setw(18) << std::setprecision(6) << mag
          << std::setw(14) << std::arg(v) << std::setw(14) << std::arg(e) << (ok ? "yes" : "NO") << '\n';
      csv.row({static_cast<double>(n), static_cast<double>(n + d), mag, std::arg(v), std::arg(e), ok ? 1.0 : 0.0});
    }
  }
  out << (all_ok ? "phase pattern matches the zigzag model\n" : "phase pattern MISMATCH\n");
  Json m = manifest_base(Command::Couplings, c);
  m["pattern_matches"] = all_ok;
  m["files"] = {"couplings.csv"};
  write_manifest(dir, m);
  return all_ok ? kExitOk : kExitRuntime;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"hofsim: zigzag-lattice Hofstadter butterfly simulator"};
  app.set_version_flag("--version", std::string(HOFSIM_VERSION));
  app.require_subcommand(1);
  Overrides o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--threads", o.threads, "worker threads (0 = all cores, 1 = serial)");
    sub->add_option("--out-dir", o.out_dir, "parent directory for run outputs");
  };
  auto add_device = [&](CLI::App* sub) {
    sub->add_option("--n", o.n, "number of qubits");
    sub->add_option("--alpha", o.alpha, "modulation index epsilon/nu");
  };
  auto add_engine = [&](CLI::App* sub) {
    sub->add_option("--engine", o.engine, "unitary | lindblad | trajectories | full-lindblad");
    sub->add_option("--trajectories", o.trajectories, "trajectory count");
    sub->add_flag("--no-noise", o.no_noise, "disable T1/T2* decoherence");
    sub->add_option("--window", o.window, "rectangular | hann");
  };

  auto* exact = app.add_subcommand("butterfly-exact", "eigenvalues versus flux");
  add_common(exact);
  exact->add_option("--model", o.model, "zigzag | harper");
  exact->add_option("--n", o.n, "number of sites");
  exact->add_option("--fluxes", o.fluxes, "flux values over [0, 1)");
  exact->add_option("--boundary", o.boundary, "open | periodic");

  auto* spectro = app.add_subcommand("butterfly-spectro", "spectroscopic butterfly from simulated dynamics");
  add_common(spectro);
  add_device(spectro);
  add_engine(spectro);
  spectro->add_option("--fluxes", o.fluxes, "flux values over [0, 1)");

  auto* evolve = app.add_subcommand("evolve", "one (flux, site) time trace and its spectrum");
  add_common(evolve);
  add_device(evolve);
  add_engine(evolve);
  evolve->add_option("--site", o.site, "initially prepared qubit, 1..N");
  evolve->add_option("--flux", o.flux, "cell flux Phi/2pi");
  evolve->add_option("--phi", o.phi, "link phase phi/2pi (Phi = 3 phi)");

  auto* couplings = app.add_subcommand("couplings", "effective coupling table");
  add_common(couplings);
  add_device(couplings);
  couplings->add_option("--flux", o.flux, "cell flux Phi/2pi");
  couplings->add_option("--phi", o.phi, "link phase phi/2pi (Phi = 3 phi)");

  auto* defaults = app.add_subcommand("default-config", "print the default config as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << HOFSIM_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  Command cmd = Command::DefaultConfig;
  if (exact->parsed()) cmd = Command::ButterflyExact;
  if (spectro->parsed()) cmd = Command::ButterflySpectro;
  if (evolve->parsed()) cmd = Command::Evolve;
  if (couplings->parsed()) cmd = Command::Couplings;
  (void)defaults;

  RunConfig c;
  try {
    c = resolve_config(cmd, o);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    switch (cmd) {
      case Command::ButterflyExact: return cmd_butterfly_exact(c, out, err);
      case Command::ButterflySpectro: return cmd_butterfly_spectro(c, out, err);
      case Command::Evolve: return cmd_evolve(c, out, err);
      case Command::Couplings: return cmd_couplings(c, out, err);
      case Command::DefaultConfig: out << config::to_json(c).dump(2) << '\n'; return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidInput& e) {
    err << "error: invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace hofsim::cli
