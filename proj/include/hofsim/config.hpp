#pragma once

// Run configuration in laboratory units (MHz for nu/2pi and g/2pi, GHz for the
// central frequency, us for T1/T2*, ns for sampling). The to_* functions at the
// bottom are the only place these become rad/s and seconds.

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hofsim/errors.hpp"
#include "hofsim/model.hpp"
#include "hofsim/spectroscopy.hpp"
#include "hofsim/sweep.hpp"

namespace hofsim::config {

using Json = nlohmann::json;

struct ExactSection {
  model::ModelKind model = model::ModelKind::Zigzag;
  std::size_t n = 300;
  model::Boundary boundary = model::Boundary::Periodic;
  std::size_t fluxes = 120;
  bool snap = true;
  bool operator==(const ExactSection&) const = default;
};

struct DeviceSection {
  std::size_t n = 14;
  double g_over_2pi_mhz = 10.0;
  double alpha = 1.0;
  std::array<double, 3> nu_over_2pi_mhz{250.0, 150.0, 100.0};
  double omega_bar1_over_2pi_ghz = 5.0;
  double detuning_ratio = 10.0;
  bool operator==(const DeviceSection&) const = default;
};

struct NoiseSection {
  bool enabled = true;
  double t1_us = 20.0;
  double t2_star_us = 2.0;
  bool operator==(const NoiseSection&) const = default;
};

struct TimeSection {
  double t_end_us = 4.0;
  double dt_sample_ns = 2.0;
  double rtol = 1e-8;
  double atol = 1e-10;
  double max_step_ns = 0.0;  // 0: 1 / (20 nu_max / 2pi)
  bool operator==(const TimeSection&) const = default;
};

struct SpectrumSection {
  int zero_pad_factor = 4;
  numerics::Window window = numerics::Window::Rectangular;
  double rel_threshold = 0.05;
  double min_separation_bins = 1.0;
  double max_frequency_mhz = 20.0;  // heatmap CSV range; 0 keeps every bin
  double match_window_mhz = 1.5;
  bool operator==(const SpectrumSection&) const = default;
};

struct EvolveSection {
  std::size_t site = 1;
  double flux_over_2pi = 0.025;
  bool operator==(const EvolveSection&) const = default;
};

struct ExecutionSection {
  std::size_t threads = 0;  // 0: all hardware threads
  std::string out_dir = "runs";
  bool operator==(const ExecutionSection&) const = default;
};

struct RunConfig {
  ExactSection exact;
  DeviceSection device;
  NoiseSection noise;
  TimeSection time;
  spectroscopy::Engine engine = spectroscopy::Engine::Lindblad;
  std::size_t trajectories = 500;
  SpectrumSection spectrum;
  std::size_t sweep_fluxes = 120;
  EvolveSection evolve;
  std::uint64_t seed = 1;
  ExecutionSection execution;
  bool operator==(const RunConfig&) const = default;

  void validate() const;
};

// --- enum names -----------------------------------------------------------------

inline model::ModelKind parse_model(const std::string& s, const std::string& key) {
  if (s == "zigzag") return model::ModelKind::Zigzag;
  if (s == "harper") return model::ModelKind::Harper;
  throw ConfigError("config key '" + key + "': expected zigzag or harper, got '" + s + "'");
}

inline model::Boundary parse_boundary(const std::string& s, const std::string& key) {
  if (s == "open") return model::Boundary::Open;
  if (s == "periodic") return model::Boundary::Periodic;
  throw ConfigError("config key '" + key + "': expected open or periodic, got '" + s + "'");
}

inline spectroscopy::Engine parse_engine(const std::string& s, const std::string& key) {
  using spectroscopy::Engine;
  for (Engine e : {Engine::Unitary, Engine::Lindblad, Engine::Trajectories, Engine::FullLindblad}) {
    if (s == spectroscopy::to_string(e)) return e;
  }
  throw ConfigError("config key '" + key + "': expected unitary, lindblad, trajectories or full-lindblad, got '" + s +
                    "'");
}

inline const char* window_name(numerics::Window w) { return w == numerics::Window::Hann ? "hann" : "rectangular"; }

inline numerics::Window parse_window(const std::string& s, const std::string& key) {
  if (s == "rectangular") return numerics::Window::Rectangular;
  if (s == "hann") return numerics::Window::Hann;
  throw ConfigError("config key '" + key + "': expected rectangular or hann, got '" + s + "'");
}

// --- JSON -------------------------------------------------------------------------

inline Json to_json(const RunConfig& c) {
  Json j;
  j["exact"] = {{"model", model::to_string(c.exact.model)},
                {"n", c.exact.n},
                {"boundary", model::to_string(c.exact.boundary)},
                {"fluxes", c.exact.fluxes},
                {"snap", c.exact.snap}};
  j["device"] = {{"n", c.device.n},
                 {"g_over_2pi_mhz", c.device.g_over_2pi_mhz},
                 {"alpha", c.device.alpha},
                 {"nu_over_2pi_mhz", c.device.nu_over_2pi_mhz},
                 {"omega_bar1_over_2pi_ghz", c.device.omega_bar1_over_2pi_ghz},
                 {"detuning_ratio", c.device.detuning_ratio}};
  j["noise"] = {{"enabled", c.noise.enabled}, {"t1_us", c.noise.t1_us}, {"t2_star_us", c.noise.t2_star_us}};
  j["time"] = {{"t_end_us", c.time.t_end_us},
               {"dt_sample_ns", c.time.dt_sample_ns},
               {"rtol", c.time.rtol},
               {"atol", c.time.atol},
               {"max_step_ns", c.time.max_step_ns}};
  j["engine"] = spectroscopy::to_string(c.engine);
  j["trajectories"] = {{"count", c.trajectories}};
  j["spectrum"] = {{"zero_pad_factor", c.spectrum.zero_pad_factor},
                   {"window", window_name(c.spectrum.window)},
                   {"rel_threshold", c.spectrum.rel_threshold},
                   {"min_separation_bins", c.spectrum.min_separation_bins},
                   {"max_frequency_mhz", c.spectrum.max_frequency_mhz},
                   {"match_window_mhz", c.spectrum.match_window_mhz}};
  j["sweep"] = {{"fluxes", c.sweep_fluxes}};
  j["evolve"] = {{"site", c.evolve.site}, {"flux_over_2pi", c.evolve.flux_over_2pi}};
  j["seed"] = c.seed;
  j["execution"] = {{"threads", c.execution.threads}, {"out_dir", c.execution.out_dir}};
  return j;
}

namespace detail {

/// Reads keys of one JSON object into fields, rejecting unknown keys and
/// type mismatches with the dotted key path in the message.
class Reader {
 public:
  Reader(const Json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) throw ConfigError("config key '" + where() + "': expected an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.push_back(key);
    if (!obj_.contains(key)) return;
    const Json& v = obj_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) throw ConfigError("");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("");
      }
      out = v.get<T>();
    } catch (const std::exception&) {
      throw ConfigError("config key '" + path(key) + "': wrong type (" + v.dump() + ")");
    }
  }

  void read(const char* key, std::array<double, 3>& out) {
    seen_.push_back(key);
    if (!obj_.contains(key)) return;
    const Json& v = obj_.at(key);
    if (!v.is_array() || v.size() != 3) throw ConfigError("config key '" + path(key) + "': expected 3 numbers");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!v[i].is_number()) throw ConfigError("config key '" + path(key) + "': expected 3 numbers");
      out[i] = v[i].get<double>();
    }
  }

  template <class Enum, class Parse>
  void read_enum(const char* key, Enum& out, Parse parse) {
    std::string s;
    bool present = obj_.contains(key);
    read(key, s);
    if (present) out = parse(s, path(key));
  }

  Reader child(const char* key) {
    seen_.push_back(key);
    static const Json empty = Json::object();
    return Reader(obj_.contains(key) ? obj_.at(key) : empty, path(key));
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items()) {
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) {
        throw ConfigError("config key '" + path(k) + "': unknown key");
      }
    }
  }

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

 private:
  std::string where() const { return prefix_.empty() ? "<root>" : prefix_; }

  const Json& obj_;
  std::string prefix_;
  std::vector<std::string> seen_;
};

}  // namespace detail

/// Missing keys keep their defaults; unknown keys are errors.
inline RunConfig from_json(const Json& j) {
  RunConfig c;
  detail::Reader root(j, "");
  {
    auto r = root.child("exact");
    r.read_enum("model", c.exact.model, parse_model);
    r.read("n", c.exact.n);
    r.read_enum("boundary", c.exact.boundary, parse_boundary);
    r.read("fluxes", c.exact.fluxes);
    r.read("snap", c.exact.snap);
    r.finish();
  }
  {
    auto r = root.child("device");
    r.read("n", c.device.n);
    r.read("g_over_2pi_mhz", c.device.g_over_2pi_mhz);
    r.read("alpha", c.device.alpha);
    r.read("nu_over_2pi_mhz", c.device.nu_over_2pi_mhz);
    r.read("omega_bar1_over_2pi_ghz", c.device.omega_bar1_over_2pi_ghz);
    r.read("detuning_ratio", c.device.detuning_ratio);
    r.finish();
  }
  {
    auto r = root.child("noise");
    r.read("enabled", c.noise.enabled);
    r.read("t1_us", c.noise.t1_us);
    r.read("t2_star_us", c.noise.t2_star_us);
    r.finish();
  }
  {
    auto r = root.child("time");
    r.read("t_end_us", c.time.t_end_us);
    r.read("dt_sample_ns", c.time.dt_sample_ns);
    r.read("rtol", c.time.rtol);
    r.read("atol", c.time.atol);
    r.read("max_step_ns", c.time.max_step_ns);
    r.finish();
  }
  root.read_enum("engine", c.engine, parse_engine);
  {
    auto r = root.child("trajectories");
    r.read("count", c.trajectories);
    r.finish();
  }
  {
    auto r = root.child("spectrum");
    r.read("zero_pad_factor", c.spectrum.zero_pad_factor);
    r.read_enum("window", c.spectrum.window, parse_window);
    r.read("rel_threshold", c.spectrum.rel_threshold);
    r.read("min_separation_bins", c.spectrum.min_separation_bins);
    r.read("max_frequency_mhz", c.spectrum.max_frequency_mhz);
    r.read("match_window_mhz", c.spectrum.match_window_mhz);
    r.finish();
  }
  {
    auto r = root.child("sweep");
    r.read("fluxes", c.sweep_fluxes);
    r.finish();
  }
  {
    auto r = root.child("evolve");
    r.read("site", c.evolve.site);
    r.read("flux_over_2pi", c.evolve.flux_over_2pi);
    r.finish();
  }
  root.read("seed", c.seed);
  {
    auto r = root.child("execution");
    r.read("threads", c.execution.threads);
    r.read("out_dir", c.execution.out_dir);
    r.finish();
  }
  root.finish();
  c.validate();
  return c;
}

inline RunConfig parse_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

inline RunConfig load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

namespace detail {

inline void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("config key '" + key + "': " + what);
}

}  // namespace detail

inline void RunConfig::validate() const {
  using detail::require;
  require(exact.n >= (exact.model == model::ModelKind::Zigzag ? 3u : 2u), "exact.n",
          "must be >= 3 for zigzag, >= 2 for harper");
  require(exact.fluxes >= 1, "exact.fluxes", "must be >= 1");
  require(device.n >= 1, "device.n", "must be >= 1");
  require(device.g_over_2pi_mhz > 0.0, "device.g_over_2pi_mhz", "must be positive");
  require(device.alpha >= 0.0 && device.alpha <= 1.8, "device.alpha", "must lie in [0, 1.8]");
  for (double v : device.nu_over_2pi_mhz) require(v > 0.0, "device.nu_over_2pi_mhz", "must be positive");
  const auto& nu = device.nu_over_2pi_mhz;
  require(std::abs(nu[0] - nu[1] - nu[2]) <= 1e-9 * nu[0], "device.nu_over_2pi_mhz", "need nu1 = nu2 + nu3");
  require(std::isfinite(device.omega_bar1_over_2pi_ghz), "device.omega_bar1_over_2pi_ghz", "must be finite");
  require(device.detuning_ratio > 0.0, "device.detuning_ratio", "must be positive");
  require(noise.t1_us > 0.0, "noise.t1_us", "must be positive");
  require(noise.t2_star_us > 0.0, "noise.t2_star_us", "must be positive");
  require(noise.t2_star_us <= 2.0 * noise.t1_us * (1.0 + 1e-12), "noise.t2_star_us", "must not exceed 2 T1");
  require(time.t_end_us > 0.0, "time.t_end_us", "must be positive");
  require(time.dt_sample_ns > 0.0 && time.dt_sample_ns <= 1e3 * time.t_end_us, "time.dt_sample_ns",
          "must be positive and at most t_end");
  const double steps = 1e3 * time.t_end_us / time.dt_sample_ns;
  require(std::abs(steps - std::round(steps)) <= 1e-9 * steps, "time.t_end_us", "must be a multiple of dt_sample");
  require(time.rtol > 0.0, "time.rtol", "must be positive");
  require(time.atol > 0.0, "time.atol", "must be positive");
  const double nu_max = *std::max_element(nu.begin(), nu.end());
  require(time.max_step_ns >= 0.0 && time.max_step_ns <= 1e3 / (20.0 * nu_max) * (1.0 + 1e-12), "time.max_step_ns",
          "must lie in [0, 1 / (20 nu_max)]");
  require(trajectories >= 1, "trajectories.count", "must be >= 1");
  require(spectrum.zero_pad_factor >= 1, "spectrum.zero_pad_factor", "must be >= 1");
  require(spectrum.rel_threshold > 0.0 && spectrum.rel_threshold < 1.0, "spectrum.rel_threshold",
          "must lie in (0, 1)");
  require(spectrum.min_separation_bins >= 0.0, "spectrum.min_separation_bins", "must be >= 0");
  require(spectrum.max_frequency_mhz >= 0.0, "spectrum.max_frequency_mhz", "must be >= 0");
  require(spectrum.match_window_mhz > 0.0, "spectrum.match_window_mhz", "must be positive");
  require(sweep_fluxes >= 1, "sweep.fluxes", "must be >= 1");
  require(evolve.site >= 1 && evolve.site <= device.n, "evolve.site", "must lie in 1..device.n");
  require(std::isfinite(evolve.flux_over_2pi), "evolve.flux_over_2pi", "must be finite");
}

/// Canonical text of everything that affects results (execution settings
/// excluded), and its 64-bit FNV-1a digest in hex.
inline std::string canonical_text(const RunConfig& c) {
  Json j = to_json(c);
  j.erase("execution");
  return j.dump();
}

inline std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_text(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// --- the unit-conversion site -----------------------------------------------------

inline constexpr double kMHz = sweep::kMHz;  // rad/s per MHz
inline constexpr double kGHz = 1e3 * kMHz;

inline double g_angular(const RunConfig& c) { return c.device.g_over_2pi_mhz * kMHz; }

inline modulation::FrequencyPlan frequency_plan(const RunConfig& c) {
  const auto& nu = c.device.nu_over_2pi_mhz;
  return modulation::FrequencyPlan::from_modulation(nu[0] * kMHz, nu[1] * kMHz, nu[2] * kMHz,
                                                    c.device.omega_bar1_over_2pi_ghz * kGHz);
}

inline dynamics::NoiseSpec noise_spec(const RunConfig& c) {
  if (!c.noise.enabled) return dynamics::NoiseSpec::noiseless();
  return {c.noise.t1_us * 1e-6, c.noise.t2_star_us * 1e-6};
}

inline dynamics::TimeGrid time_grid(const RunConfig& c) {
  const auto& nu = c.device.nu_over_2pi_mhz;
  auto grid = dynamics::TimeGrid::for_drive(c.time.t_end_us * 1e-6, c.time.dt_sample_ns * 1e-9,
                                            *std::max_element(nu.begin(), nu.end()) * kMHz);
  grid.rtol = c.time.rtol;
  grid.atol = c.time.atol;
  if (c.time.max_step_ns > 0.0) grid.max_step = c.time.max_step_ns * 1e-9;
  return grid;
}

inline sweep::ExactSweepConfig exact_sweep_config(const RunConfig& c) {
  sweep::ExactSweepConfig e;
  e.model = c.exact.model;
  e.n = c.exact.n;
  e.boundary = c.exact.boundary;
  e.fluxes = sweep::flux_grid(c.exact.fluxes);
  e.snap = c.exact.snap;
  e.threads = c.execution.threads;
  return e;
}

inline sweep::SpectroSweepConfig spectro_sweep_config(const RunConfig& c) {
  sweep::SpectroSweepConfig s;
  s.n = c.device.n;
  s.fluxes = sweep::flux_grid(c.sweep_fluxes);
  s.g = g_angular(c);
  s.alpha = c.device.alpha;
  s.plan = frequency_plan(c);
  s.detuning_ratio = c.device.detuning_ratio;
  s.engine = c.engine;
  s.noise = noise_spec(c);
  s.grid = time_grid(c);
  s.trajectories = {c.trajectories, c.seed};
  s.spectrum = {c.spectrum.zero_pad_factor, c.spectrum.window};
  s.rel_threshold = c.spectrum.rel_threshold;
  s.min_separation_bins = c.spectrum.min_separation_bins;
  s.threads = c.execution.threads;
  return s;
}

}  // namespace hofsim::config
