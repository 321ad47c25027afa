#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hofsim/dynamics.hpp"
#include "hofsim/modulation.hpp"

using namespace hofsim;
using namespace hofsim::dynamics;

namespace {

constexpr double kMHz = kTwoPi * 1e6;
const modulation::FrequencyPlan kPlan =
    modulation::FrequencyPlan::from_modulation(250 * kMHz, 150 * kMHz, 100 * kMHz, 5000 * kMHz);

TimeGrid coarse_grid(double t_end, double dt, double max_step) {
  TimeGrid g;
  g.t_end = t_end;
  g.dt_sample = dt;
  g.max_step = max_step;
  return g;
}

HermitianMatrix random_hermitian(std::size_t n, double scale, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> d;
  HermitianMatrix h(n);
  for (std::size_t i = 0; i < n; ++i) {
    h.set_diagonal(i, scale * d(rng));
    for (std::size_t j = i + 1; j < n; ++j) h.set(i, j, scale * Complex(d(rng), d(rng)));
  }
  return h;
}

modulation::DrivenHamiltonian driven(std::size_t n, double phi) {
  const modulation::DeviceSpec dev{n, 10 * kMHz};
  return {dev, modulation::make_schedule(dev, phi, 1.0, kPlan)};
}

const NoiseSpec kPaperNoise{20e-6, 2e-6};

}  // namespace

TEST(Unitary, ZeroHamiltonianLeavesStateAlone) {
  const ConstantHamiltonian h(HermitianMatrix(3));
  const auto psi0 = superposition_state(3, 2);
  const auto out = evolve_unitary(psi0, h, coarse_grid(1e-6, 1e-7, 1e-8));
  ASSERT_EQ(out.size(), 11u);
  for (const auto& psi : out) {
    for (std::size_t i = 0; i < 4; ++i) EXPECT_LT(std::abs(psi[i] - psi0[i]), 1e-14);
  }
}

TEST(Unitary, TwoSiteRabi) {
  const double j = 3 * kMHz;
  HermitianMatrix hm(2);
  hm.set(0, 1, j);
  const auto out = evolve_unitary(basis_state(2, 1), ConstantHamiltonian(hm), coarse_grid(1e-6, 1e-8, 1e-9));
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double t = 1e-8 * k;
    EXPECT_NEAR(std::norm(out[k][2]), std::pow(std::sin(j * t), 2), 1e-7) << t;
  }
}

TEST(Unitary, MatchesSpectralPropagator) {
  const std::size_t n = 6;
  const auto hm = random_hermitian(n, 2 * kMHz, 7);
  const auto eig = numerics::eig_hermitian(hm);
  const auto psi0 = superposition_state(n, 4);
  const auto grid = coarse_grid(2e-6, 1e-7, 1e-9);
  const auto out = evolve_unitary(psi0, ConstantHamiltonian(hm), grid);
  for (std::size_t k = 0; k < out.size(); k += 4) {
    const double t = grid.time(k);
    for (std::size_t a = 1; a <= n; ++a) {
      Complex expect{};
      for (std::size_t j = 0; j < n; ++j) {
        Complex proj{};
        for (std::size_t b = 1; b <= n; ++b) proj += std::conj(eig.eigenvectors[j][b - 1]) * psi0[b];
        expect += eig.eigenvectors[j][a - 1] * std::polar(1.0, -eig.eigenvalues[j] * t) * proj;
      }
      EXPECT_LT(std::abs(out[k][a] - expect), 1e-7) << t;
    }
    EXPECT_EQ(out[k][0], psi0[0]);
  }
}

TEST(Unitary, DrivenNormConserved) {
  const auto h = driven(5, kTwoPi / 120.0);
  double worst = 0.0;
  evolve_unitary(superposition_state(5, 1), h, TimeGrid::for_drive(4e-6, 2e-9, 250 * kMHz),
                 [&](std::size_t, double, const ComplexVector& psi) {
                   worst = std::max(worst, std::abs(norm_squared(psi) - 1.0));
                   EXPECT_NEAR(std::abs(psi[0]), 1.0 / std::sqrt(2.0), 1e-15);
                 });
  EXPECT_LT(worst, 1e-6);
}

TEST(Unitary, RejectsWrongDimension) {
  EXPECT_THROW(evolve_unitary(ComplexVector(3), ConstantHamiltonian(HermitianMatrix(3)), coarse_grid(1e-6, 1e-7, 1e-8)),
               InvalidInput);
  EXPECT_THROW(superposition_state(3, 0), InvalidInput);
  EXPECT_THROW(superposition_state(3, 4), InvalidInput);
}

TEST(Noise, Rates) {
  EXPECT_TRUE(NoiseSpec::noiseless().is_noiseless());
  EXPECT_DOUBLE_EQ(kPaperNoise.gamma1(), 1.0 / 20e-6);
  EXPECT_DOUBLE_EQ(kPaperNoise.gamma_phi(), 1.0 / 2e-6 - 0.5 / 20e-6);
  EXPECT_THROW((NoiseSpec{1e-6, 3e-6}.validate()), InvalidInput);
  EXPECT_THROW((NoiseSpec{-1.0, 3e-6}.validate()), InvalidInput);
}

TEST(Lindblad, SingleQubitDecay) {
  const ConstantHamiltonian h(HermitianMatrix(1));
  const auto grid = coarse_grid(4e-6, 1e-7, 1e-8);
  evolve_lindblad(DensityMatrix::pure(superposition_state(1, 1)), h, kPaperNoise, grid,
                  [&](std::size_t, double t, const DensityMatrix& rho) {
                    EXPECT_NEAR(std::abs(expectation_sigma_minus(rho, 1) - 0.5 * std::exp(-t / 2e-6)), 0.0, 1e-6);
                    EXPECT_NEAR(rho(1, 1).real(), 0.5 * std::exp(-t / 20e-6), 1e-6);
                    EXPECT_NEAR(rho.trace().real(), 1.0, 1e-9);
                  });
}

TEST(Lindblad, NoiselessMatchesUnitary) {
  const auto h = driven(4, 0.3);
  const auto grid = TimeGrid::for_drive(0.4e-6, 2e-9, 250 * kMHz);
  const auto psi0 = superposition_state(4, 2);
  const auto states = evolve_unitary(psi0, h, grid);
  evolve_lindblad(DensityMatrix::pure(psi0), h, NoiseSpec::noiseless(), grid,
                  [&](std::size_t k, double, const DensityMatrix& rho) {
                    const auto pure = DensityMatrix::pure(states[k]);
                    for (std::size_t i = 0; i < rho.entries.size(); ++i) {
                      ASSERT_LT(std::abs(rho.entries[i] - pure.entries[i]), 1e-7) << k;
                    }
                  });
}

TEST(Lindblad, TraceHermiticityPositivity) {
  const auto h = driven(4, 1.1);
  evolve_lindblad(DensityMatrix::pure(superposition_state(4, 3)), h, NoiseSpec{3e-6, 1e-6},
                  TimeGrid::for_drive(2e-6, 50e-9, 250 * kMHz), [&](std::size_t, double, const DensityMatrix& rho) {
                    EXPECT_NEAR(rho.trace().real(), 1.0, 1e-8);
                    EXPECT_NEAR(rho.trace().imag(), 0.0, 1e-10);
                    EXPECT_LT(rho.hermiticity_error(), 1e-9);
                    EXPECT_GT(numerics::eigenvalues(rho.hermitian_part()).front(), -1e-8);
                  });
}

TEST(Lindblad, GeneratorMatchesDenseOracle) {
  // L(rho) = -i[H, rho] + sum_k C rho C^dag - (1/2){C^dag C, rho}, built densely.
  const std::size_t n = 4;
  const std::size_t d = n + 1;
  const NoiseSpec noise{5e-6, 3e-6};
  const auto hm = random_hermitian(n, 1e6, 3);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
  h.bottomRightCorner(n, n) = hm.dense();
  std::vector<Eigen::MatrixXcd> ops;
  for (std::size_t s = 1; s <= n; ++s) {
    Eigen::MatrixXcd lower = Eigen::MatrixXcd::Zero(d, d);
    lower(0, s) = std::sqrt(noise.gamma1());
    ops.push_back(lower);
    Eigen::MatrixXcd z = -Eigen::MatrixXcd::Identity(d, d);
    z(s, s) = 1.0;
    ops.push_back(std::sqrt(0.5 * noise.gamma_phi()) * z);
  }
  std::mt19937 rng(11);
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd rho(d, d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) rho(a, b) = Complex(nd(rng), nd(rng));
  }
  Eigen::MatrixXcd expect = -kI * (h * rho - rho * h);
  for (const auto& c : ops) {
    expect += c * rho * c.adjoint() - 0.5 * (c.adjoint() * c * rho + rho * c.adjoint() * c);
  }
  ComplexVector flat(d * d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) flat[a * d + b] = rho(a, b);
  }
  ComplexVector out;
  LindbladGenerator(n, noise)(SparseHermitian::from_dense(hm), flat, out);
  double worst = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) worst = std::max(worst, std::abs(out[a * d + b] - expect(a, b)));
  }
  EXPECT_LT(worst, 1e-12 * expect.cwiseAbs().maxCoeff());
}

TEST(Lindblad, CoherenceColumnMatchesFullMasterEquation) {
  const std::size_t n = 5;
  const auto h = driven(n, kTwoPi / 120.0);
  const auto grid = TimeGrid::for_drive(0.6e-6, 4e-9, 250 * kMHz);
  const auto psi0 = superposition_state(n, 2);
  std::vector<std::vector<Complex>> full;
  evolve_lindblad(DensityMatrix::pure(psi0), h, kPaperNoise, grid, [&](std::size_t, double, const DensityMatrix& rho) {
    std::vector<Complex> col;
    for (std::size_t s = 1; s <= n; ++s) col.push_back(expectation_sigma_minus(rho, s));
    full.push_back(col);
  });
  ComplexVector c0(n);
  for (std::size_t s = 1; s <= n; ++s) c0[s - 1] = psi0[s] * std::conj(psi0[0]);
  evolve_lindblad_coherences(c0, h, kPaperNoise, grid, [&](std::size_t k, double, const ComplexVector& c) {
    for (std::size_t s = 0; s < n; ++s) EXPECT_LT(std::abs(c[s] - full[k][s]), 1e-8) << k;
  });
}

TEST(Trajectories, SingleNoiselessEqualsUnitary) {
  const auto h = driven(4, 0.5);
  const auto grid = TimeGrid::for_drive(0.3e-6, 2e-9, 250 * kMHz);
  const auto psi0 = superposition_state(4, 1);
  const auto states = evolve_unitary(psi0, h, grid);
  const auto avg = evolve_trajectories(psi0, h, NoiseSpec::noiseless(), grid, {1, 5});
  EXPECT_EQ(avg.jumps, 0u);
  for (std::size_t k = 0; k < states.size(); ++k) {
    for (std::size_t s = 1; s <= 4; ++s) {
      EXPECT_LT(std::abs(avg.sigma_minus[k][s - 1] - expectation_sigma_minus(states[k], s)), 1e-7);
    }
  }
}

TEST(Trajectories, SingleQubitWithinThreeStandardErrors) {
  const ConstantHamiltonian h(HermitianMatrix(1));
  const auto grid = coarse_grid(4e-6, 0.25e-6, 1e-8);
  const auto avg = evolve_trajectories(superposition_state(1, 1), h, kPaperNoise, grid, {2000, 1});
  EXPECT_GT(avg.jumps, 0u);
  for (std::size_t k = 1; k < avg.times.size(); ++k) {
    const double t = avg.times[k];
    const Complex mean = avg.sigma_minus[k][0];
    const Complex se = avg.sigma_minus_stderr[k][0];
    EXPECT_LE(std::abs(mean.real() - 0.5 * std::exp(-t / 2e-6)), 3 * se.real()) << t;
    EXPECT_LE(std::abs(mean.imag()), 3 * se.imag() + 1e-15) << t;
    // Populations at successive samples share their few early jumps, so allow 4 SE.
    EXPECT_LE(std::abs(avg.population[k][0] - 0.5 * std::exp(-t / 20e-6)), 4 * avg.population_stderr[k][0] + 1e-12)
        << t;
  }
}

TEST(Trajectories, DrivenAgreesWithMasterEquation) {
  const std::size_t n = 5;
  const auto h = driven(n, kTwoPi / 120.0);
  const auto grid = TimeGrid::for_drive(1e-6, 100e-9, 250 * kMHz);
  const auto psi0 = superposition_state(n, 1);
  const NoiseSpec noise{2e-6, 0.5e-6};
  const auto avg = evolve_trajectories(psi0, h, noise, grid, {500, 3});
  ComplexVector c0(n);
  c0[0] = 0.5;
  evolve_lindblad_coherences(c0, h, noise, grid, [&](std::size_t k, double, const ComplexVector& c) {
    if (k == 0) return;
    for (std::size_t s = 0; s < n; ++s) {
      const Complex m = avg.sigma_minus[k][s];
      const Complex se = avg.sigma_minus_stderr[k][s];
      EXPECT_LE(std::abs(m.real() - c[s].real()), 5 * se.real() + 1e-9) << k << " " << s;
      EXPECT_LE(std::abs(m.imag() - c[s].imag()), 5 * se.imag() + 1e-9) << k << " " << s;
    }
  });
}

TEST(Trajectories, StandardErrorShrinksWithCount) {
  const ConstantHamiltonian h(HermitianMatrix(1));
  const auto grid = coarse_grid(2e-6, 1e-6, 1e-8);
  const auto small = evolve_trajectories(superposition_state(1, 1), h, kPaperNoise, grid, {200, 9});
  const auto large = evolve_trajectories(superposition_state(1, 1), h, kPaperNoise, grid, {800, 9});
  const double ratio = small.sigma_minus_stderr[2][0].real() / large.sigma_minus_stderr[2][0].real();
  EXPECT_NEAR(ratio, 2.0, 0.4);
}

TEST(Trajectories, IndependentOfThreadCount) {
  const auto h = driven(4, 0.9);
  const auto grid = TimeGrid::for_drive(0.3e-6, 10e-9, 250 * kMHz);
  const auto psi0 = superposition_state(4, 2);
  const NoiseSpec noise{1e-6, 0.3e-6};
  const auto a = evolve_trajectories(psi0, h, noise, grid, {70, 42}, 1);
  const auto b = evolve_trajectories(psi0, h, noise, grid, {70, 42}, 3);
  EXPECT_EQ(a.jumps, b.jumps);
  EXPECT_EQ(a.sigma_minus, b.sigma_minus);
  EXPECT_EQ(a.population, b.population);
  EXPECT_EQ(a.sigma_minus_stderr, b.sigma_minus_stderr);
  const auto c = evolve_trajectories(psi0, h, noise, grid, {70, 43}, 1);
  EXPECT_NE(a.sigma_minus, c.sigma_minus);
}

TEST(Trajectories, RejectsZeroCount) {
  EXPECT_THROW(evolve_trajectories(superposition_state(1, 1), ConstantHamiltonian(HermitianMatrix(1)), kPaperNoise,
                                   coarse_grid(1e-6, 1e-7, 1e-8), {0, 1}),
               InvalidInput);
}
