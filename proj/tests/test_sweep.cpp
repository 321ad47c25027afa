#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "hofsim/sweep.hpp"

using namespace hofsim;
using namespace hofsim::sweep;

namespace {

SpectroSweepConfig small_spectro(std::size_t n, std::size_t fluxes) {
  SpectroSweepConfig cfg;
  cfg.n = n;
  cfg.fluxes = flux_grid(fluxes);
  cfg.engine = Engine::Unitary;
  cfg.noise = dynamics::NoiseSpec::noiseless();
  return cfg;
}

std::string csv_of(void (*fn)(std::ostream&, const ButterflyDataset&), const ButterflyDataset& ds) {
  std::ostringstream os;
  fn(os, ds);
  return os.str();
}

}  // namespace

TEST(FluxGrid, UniformOverOnePeriod) {
  const auto g = flux_grid(120);
  ASSERT_EQ(g.size(), 120u);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_NEAR(g[119], kTwoPi * 119.0 / 120.0, 1e-15);
  EXPECT_THROW(flux_grid(0), InvalidInput);
}

TEST(ExactSweep, TracesAndOrdering) {
  ExactSweepConfig cfg;
  cfg.n = 60;
  cfg.fluxes = flux_grid(24);
  std::size_t calls = 0;
  const auto ds = run_exact_sweep(cfg, [&](std::size_t done, std::size_t total, std::size_t) {
    ++calls;
    EXPECT_LE(done, total);
  });
  EXPECT_EQ(calls, 24u);
  ASSERT_EQ(ds.eigenvalues.size(), 24u);
  EXPECT_TRUE(ds.failures.empty());
  for (std::size_t i = 0; i < 24; ++i) {
    EXPECT_EQ(ds.flux_requested[i], cfg.fluxes[i]);
    EXPECT_NEAR(std::accumulate(ds.eigenvalues[i].begin(), ds.eigenvalues[i].end(), 0.0), 0.0, 1e-9 * 60);
  }
}

TEST(ExactSweep, ThreadCountDoesNotChangeResults) {
  ExactSweepConfig cfg;
  cfg.n = 90;
  cfg.fluxes = flux_grid(16);
  const auto a = run_exact_sweep(cfg);
  cfg.threads = 3;
  const auto b = run_exact_sweep(cfg);
  EXPECT_EQ(a.eigenvalues, b.eigenvalues);
  EXPECT_EQ(csv_of(write_exact_csv, a), csv_of(write_exact_csv, b));
}

TEST(ExactSweep, UnsnappedRowsFailIndividually) {
  ExactSweepConfig cfg;
  cfg.n = 7;
  cfg.fluxes = {0.0, 0.5};
  cfg.snap = false;
  const auto ds = run_exact_sweep(cfg);
  ASSERT_EQ(ds.failures.size(), 1u);
  EXPECT_EQ(ds.failures[0].flux_index, 1u);
  EXPECT_EQ(ds.eigenvalues[0].size(), 7u);
  EXPECT_TRUE(ds.eigenvalues[1].empty());
}

TEST(SpectroSweep, ConfigValidation) {
  auto cfg = small_spectro(5, 4);
  cfg.fluxes.push_back(cfg.fluxes[2]);
  EXPECT_THROW(run_spectro_sweep(cfg), InvalidInput);
  cfg = small_spectro(5, 4);
  cfg.fluxes.clear();
  EXPECT_THROW(run_spectro_sweep(cfg), InvalidInput);
}

TEST(SpectroSweep, ScheduleFollowsCellFlux) {
  const auto cfg = small_spectro(6, 4);
  const double flux = 0.3 * kTwoPi;
  const auto s = schedule_for(cfg, flux);
  EXPECT_NEAR(s.theta[1], 2.0 * flux / 3.0, 1e-15);
  EXPECT_EQ(schedule_digest(s), schedule_digest(schedule_for(cfg, flux)));
  EXPECT_NE(schedule_digest(s), schedule_digest(schedule_for(cfg, flux + 1e-9)));
  EXPECT_EQ(schedule_digest(s).size(), 16u);
}

TEST(SpectroSweep, NoiselessSmallChainTracksTheory) {
  const auto cfg = small_spectro(5, 12);
  std::size_t rows = 0;
  const auto ds = run_spectro_sweep(cfg, [&](std::size_t, std::size_t, std::size_t) { ++rows; });
  EXPECT_EQ(rows, 12u);
  EXPECT_TRUE(ds.failures.empty());
  EXPECT_TRUE(ds.warnings.empty());
  ASSERT_EQ(ds.spectra.size(), 12u);
  const auto rep = compare_to_theory(ds, cfg);
  EXPECT_GT(rep.matched, 12u * 4u);
  EXPECT_LE(rep.mean_mhz, 0.5);
  for (const auto& r : rep.rows) EXPECT_EQ(r.theory_mhz.size(), 5u);
}

TEST(SpectroSweep, FailingTasksAreRecordedNotFatal) {
  auto cfg = small_spectro(3, 2);
  cfg.engine = Engine::Trajectories;
  cfg.trajectories.count = 0;
  const auto ds = run_spectro_sweep(cfg);
  EXPECT_EQ(ds.failures.size(), 6u);
  EXPECT_EQ(ds.failures[0].site, 1u);
  EXPECT_FALSE(ds.failures[0].message.empty());
  ASSERT_EQ(ds.peaks.size(), 2u);
  EXPECT_TRUE(ds.peaks[0].empty());
}

TEST(SpectroSweep, WarnsOnSmallDetuning) {
  auto cfg = small_spectro(3, 1);
  cfg.g = 20 * kMHz;
  cfg.grid = dynamics::TimeGrid::for_drive(0.1e-6, 2e-9, 250 * kMHz);
  EXPECT_EQ(run_spectro_sweep(cfg).warnings.size(), 1u);
}

TEST(SpectroSweep, CsvBitwiseIdenticalAcrossThreads) {
  auto cfg = small_spectro(4, 3);
  cfg.engine = Engine::Trajectories;
  cfg.noise = {2e-6, 0.5e-6};
  cfg.trajectories = {20, 7};
  cfg.grid = dynamics::TimeGrid::for_drive(0.5e-6, 4e-9, 250 * kMHz);
  const auto a = run_spectro_sweep(cfg);
  cfg.threads = 3;
  const auto b = run_spectro_sweep(cfg);
  std::ostringstream sa, sb;
  write_spectro_csv(sa, a, 0.0);
  write_spectro_csv(sb, b, 0.0);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(csv_of(write_peaks_csv, a), csv_of(write_peaks_csv, b));
}

TEST(Theory, LevelsMatchZigzagModel) {
  const double g = 10 * kMHz;
  const auto e = theory_levels_mhz(6, g, 1.0, 0.9);
  const auto ref = numerics::eigenvalues(
      model::build_zigzag({6, modulation::effective_strength(g, 1.0), 0.3, model::Boundary::Open}));
  ASSERT_EQ(e.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(e[i], ref[i] / kTwoPi / 1e6, 1e-12);
  EXPECT_EQ(theory_levels_mhz(1, g, 1.0, 0.0), std::vector<double>{0.0});
}

TEST(Theory, CompareRowExactMatch) {
  const auto d = compare_row(0.0, {-2.0, 1.0, 3.5}, {3.5, -2.0, 1.0}, 1.5);
  EXPECT_EQ(d.matched, 3u);
  EXPECT_EQ(d.unmatched_peaks, 0u);
  EXPECT_EQ(d.unmatched_levels, 0u);
  EXPECT_EQ(d.mean_mhz, 0.0);
  EXPECT_EQ(d.max_mhz, 0.0);
}

TEST(Theory, CompareRowCountsMisses) {
  const auto d = compare_row(0.0, {-2.0, 1.0, 3.5}, {-1.8, 1.3, 9.0}, 1.5);
  EXPECT_EQ(d.matched, 2u);
  EXPECT_EQ(d.unmatched_peaks, 1u);
  EXPECT_EQ(d.unmatched_levels, 1u);
  EXPECT_NEAR(d.mean_mhz, 0.25, 1e-12);
  EXPECT_NEAR(d.max_mhz, 0.3, 1e-12);
  EXPECT_TRUE(std::isnan(compare_row(0.0, {1.0}, {}, 1.5).mean_mhz));
}

TEST(Csv, HeadersAndFormatting) {
  ButterflyDataset ds;
  ds.flux = {0.0, kTwoPi / 4};
  ds.eigenvalues = {{-1.5, 0.1}, {2.0}};
  EXPECT_EQ(csv_of(write_exact_csv, ds), "flux_over_2pi,eigenvalue_over_J\n0,-1.5\n0,0.1\n0.25,2\n");
  ds.peaks = {{{1.5e6, 3.0}}, {}};
  EXPECT_EQ(csv_of(write_peaks_csv, ds), "flux_over_2pi,peak_mhz,height\n0,1.5,3\n");
  ds.spectra = {{0.0, {-30e6, 0.0, 30e6}, {1.0, 2.0, 3.0}, 30e6}};
  ds.flux = {0.0};
  std::ostringstream os;
  write_spectro_csv(os, ds, 20.0);
  EXPECT_EQ(os.str(), "flux_over_2pi,frequency_mhz,power\n0,0,2\n");
}

TEST(Csv, RoundTripPrecision) {
  for (double x : {0.1, 1.0 / 3.0, -2.2250738585072014e-308, 6.02214076e23, 1e-300}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(-0.0), "-0");
}
