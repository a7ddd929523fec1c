#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "wavescat/evolve.hpp"
#include "wavescat/harness/scenario.hpp"

namespace {

using namespace wavescat;
using harness::Scenario;
using harness::make_config;

constexpr double kPi = std::numbers::pi;

/// Free evolution of psi(x, 0) = (pi sigma^2)^(-1/4) exp(-(x - x0)^2 / 2 sigma^2 + i k0 x)
/// with hbar = m = 1.
complex free_gaussian(double x, double t, double x0, double sigma, double k0) {
  const complex i{0.0, 1.0};
  const complex a = 1.0 + i * t / (sigma * sigma);
  const double u = x - x0 - k0 * t;
  return std::pow(kPi * sigma * sigma, -0.25) / std::sqrt(a) *
         std::exp(-u * u / (2.0 * sigma * sigma * a) + i * k0 * (x - x0 - 0.5 * k0 * t) + i * k0 * x0);
}

double l2_error_against_free_gaussian(const WaveState& s, double x0, double sigma, double k0) {
  double e = 0.0;
  for (std::size_t j = 0; j < s.psi.size(); ++j) {
    e += std::norm(s.psi[j] - free_gaussian(s.grid.x(j), s.time, x0, sigma, k0));
  }
  return std::sqrt(e * s.grid.dx());
}

WaveState gaussian_state(const GridSpec& g, double x0, double sigma, double k0) {
  WaveState s{g, std::vector<complex>(g.n_points), 0.0};
  for (std::size_t j = 0; j < g.n_points; ++j) s.psi[j] = free_gaussian(g.x(j), 0.0, x0, sigma, k0);
  return s;
}

/// Small step-scattering configuration: 20 wavelengths wide, 16 points per wavelength.
harness::RunConfig small_run(double e_over_v0, Scheme scheme, double w_over_lambda = 20.0, double taper = 0.5) {
  Scenario s;
  s.e_over_v0 = e_over_v0;
  s.w_over_lambda = w_over_lambda;
  s.scheme = scheme;
  s.points_per_wavelength = 16.0;
  s.taper_fraction = taper;  // 0.5: smoothest edges keep the spectral tails off the grid edges
  return make_config(s);
}

TEST(PropagatorConfig, SchemeBoundaryPairing) {
  EXPECT_NO_THROW(PropagatorConfig::crank_nicolson(0.1).validate());
  EXPECT_NO_THROW(PropagatorConfig::split_step(0.1).validate());
  EXPECT_THROW((PropagatorConfig{Scheme::CrankNicolson, 0.1, Boundary::Periodic}.validate()), ConfigError);
  EXPECT_THROW((PropagatorConfig{Scheme::SplitStepSpectral, 0.1, Boundary::HardWall}.validate()), ConfigError);
  EXPECT_THROW(PropagatorConfig::split_step(0.0).validate(), ConfigError);
  const GridSpec g{-10.0, 10.0, 64};
  const auto s = gaussian_state(g, 0.0, 1.0, 1.0);
  EXPECT_THROW(step(s, PotentialProfile{}, PropagatorConfig{Scheme::CrankNicolson, 0.1, Boundary::Periodic}),
               ConfigError);
}

TEST(PhaseLimitedDt, BoundsFastestMode) {
  const GridSpec g{-10.0, 10.0, 200};
  const double dt = phase_limited_dt(g, PotentialProfile::step(3.0), {}, 0.2);
  const double e_max = 0.5 * std::pow(kPi / g.dx(), 2) + 3.0;
  EXPECT_NEAR(dt * e_max, 0.2, 1e-14);
}

TEST(SamplePotential, BoundaryGetsMean) {
  const GridSpec g{-1.0, 1.0, 16};
  const auto v = sample_potential(g, PotentialProfile::step(2.0));
  EXPECT_EQ(v[7], 0.0);
  EXPECT_EQ(v[8], 1.0);  // x = 0 exactly
  EXPECT_EQ(v[9], 2.0);
}

/// Si(z) by composite Simpson quadrature of sin(t)/t.
double sine_integral(double z) {
  const int n = 4000;
  const double h = z / n;
  auto f = [](double t) { return t == 0.0 ? 1.0 : std::sin(t) / t; };
  double sum = f(0.0) + f(z);
  for (int j = 1; j < n; ++j) sum += (j % 2 == 1 ? 4.0 : 2.0) * f(j * h);
  return sum * h / 3.0;
}

TEST(BandLimitedPotential, StepMatchesSineIntegralProfile) {
  // Band-limited unit-slope step: v0 (1/2 + Si(pi x / dx) / pi). The periodic image of the
  // step shifts samples by O(dx / length).
  const GridSpec g{-200.0, 200.0, 4000};
  const double v0 = 3.0;
  const auto v = band_limited_potential(g, PotentialProfile::step(v0));
  double worst = 0.0;
  for (std::size_t j = 1900; j <= 2100; ++j) {
    const double x = g.x(j);
    const double expected = v0 * (0.5 + sine_integral(kPi * x / g.dx()) / kPi);
    worst = std::max(worst, std::abs(v[j] - expected));
  }
  EXPECT_LT(worst, 1e-3 * v0);
  EXPECT_NEAR(v[2000], 0.5 * v0, 1e-12);  // node on the step
  EXPECT_NEAR(v[2001], v0 * (0.5 + sine_integral(kPi) / kPi), 1e-3 * v0);  // Gibbs overshoot
}

TEST(BandLimitedPotential, OddAboutStepAndMeanPreserved) {
  const GridSpec g{-10.0, 10.0, 256};
  const double v0 = 2.0;
  const auto v = band_limited_potential(g, PotentialProfile::step(v0));
  double sum = 0.0;
  for (double x : v) sum += x;
  EXPECT_NEAR(sum / 256.0, 0.5 * v0, 1e-12);
  for (std::size_t j = 1; j < 128; ++j) EXPECT_NEAR(v[128 + j] + v[128 - j], v0, 1e-12) << j;
}

TEST(BandLimitedPotential, ShiftsWithTheProfile) {
  const GridSpec g{-10.0, 10.0, 200};
  const double dx = g.dx();
  const auto a = band_limited_potential(g, PotentialProfile(PiecewiseConstant{{-1.23, 2.0}, {0.0, 4.0, 0.0}}));
  const auto b =
      band_limited_potential(g, PotentialProfile(PiecewiseConstant{{-1.23 + dx, 2.0 + dx}, {0.0, 4.0, 0.0}}));
  for (std::size_t j = 0; j + 1 < 200; ++j) EXPECT_NEAR(b[j + 1], a[j], 1e-12) << j;
}

TEST(BandLimitedPotential, ConstantProfileIsExact) {
  const GridSpec g{-5.0, 5.0, 64};
  const auto v = band_limited_potential(g, PotentialProfile(PiecewiseConstant{{-20.0, 20.0}, {1.0, 2.5, 1.0}}));
  for (double x : v) EXPECT_NEAR(x, 2.5, 1e-12);
}

class BothSchemes : public ::testing::TestWithParam<Scheme> {};

TEST_P(BothSchemes, SingleStepPreservesNorm) {
  const auto cfg = small_run(2.0, GetParam());
  auto s = build_packet(cfg.grid, cfg.packet);
  s.psi[s.psi.size() / 3] += complex(0.2, -0.1);  // not a smooth state
  const double n0 = norm(s);
  const auto next = step(s, cfg.potential, cfg.propagator);
  EXPECT_NEAR(norm(next), n0, 1e-12);
  EXPECT_DOUBLE_EQ(next.time, cfg.propagator.dt);
}

TEST_P(BothSchemes, NormOverTenThousandSteps) {
  const auto cfg = small_run(2.0, GetParam());
  auto s = build_packet(cfg.grid, cfg.packet);
  Propagator prop(cfg.grid, cfg.potential, cfg.propagator);
  for (int block = 0; block < 10; ++block) {
    prop.advance(s, 1000);
    ASSERT_LT(std::abs(norm(s) - 1.0), 1e-9) << "after " << (block + 1) * 1000 << " steps";
  }
}

TEST_P(BothSchemes, ConjugateEvolutionRetracesTheRun) {
  // With a real potential each step satisfies conj(U) = U^-1: evolving, conjugating,
  // evolving again and conjugating returns the initial state.
  const auto cfg = small_run(2.0, GetParam());
  const auto s0 = build_packet(cfg.grid, cfg.packet);
  auto s = s0;
  Propagator prop(cfg.grid, cfg.potential, cfg.propagator);
  prop.advance(s, 2000);
  for (auto& z : s.psi) z = std::conj(z);
  prop.advance(s, 2000);
  double err = 0.0;
  for (std::size_t j = 0; j < s.psi.size(); ++j) err = std::max(err, std::abs(std::conj(s.psi[j]) - s0.psi[j]));
  EXPECT_LT(err, 1e-10);
}

TEST_P(BothSchemes, ConstantPotentialIsGlobalPhase) {
  const GridSpec g{-30.0, 30.0, 1024};
  const double v0 = 1.7;
  const auto cfg = GetParam() == Scheme::CrankNicolson ? PropagatorConfig::crank_nicolson(0.01)
                                                       : PropagatorConfig::split_step(0.01);
  auto free = gaussian_state(g, -5.0, 2.0, 3.0);
  auto shifted = free;
  Propagator p0(g, PotentialProfile::step(0.0), cfg);
  Propagator p1(g, PotentialProfile(PiecewiseConstant{{0.0}, {v0, v0}}), cfg);
  for (int n = 1; n <= 50; ++n) {
    p0.advance(free, 1);
    p1.advance(shifted, 1);
    const complex phase = std::polar(1.0, -v0 * cfg.dt * n);
    double err = 0.0;
    for (std::size_t j = 0; j < g.n_points; ++j) err = std::max(err, std::abs(shifted.psi[j] - phase * free.psi[j]));
    ASSERT_LT(err, 1e-10 * n) << "step " << n;
  }
}

TEST_P(BothSchemes, EnergyIsConserved) {
  const auto cfg = small_run(2.0, GetParam());
  const auto op = GetParam() == Scheme::CrankNicolson ? EnergyOperator::FiniteDifference : EnergyOperator::Spectral;
  const auto s0 = build_packet(cfg.grid, cfg.packet);
  const double e0 = energy_expectation(s0, cfg.potential, cfg.units, op);
  EXPECT_NEAR(energy_expectation(s0, cfg.potential, cfg.units, EnergyOperator::Spectral), 12.5, 0.05);
  const auto out = propagate(s0, cfg.potential, cfg.propagator, cfg.stop, cfg.record_every, cfg.units);
  const double e1 = energy_expectation(out.state, cfg.potential, cfg.units, op);
  EXPECT_LT(std::abs(e1 - e0) / std::abs(e0), 1e-6);
}

TEST_P(BothSchemes, NoReflectionWithoutStep) {
  const auto cfg = small_run(std::numeric_limits<double>::infinity(), GetParam());
  const auto out = propagate(build_packet(cfg.grid, cfg.packet), cfg.potential, cfg.propagator, cfg.stop,
                             cfg.record_every, cfg.units);
  EXPECT_LT(out.trajectory.left_probability.back(), 1e-6);
}

TEST_P(BothSchemes, TotalReflectionBelowStep) {
  const auto cfg = small_run(0.5, GetParam());
  const auto out = propagate(build_packet(cfg.grid, cfg.packet), cfg.potential, cfg.propagator, cfg.stop,
                             cfg.record_every, cfg.units);
  EXPECT_LT(out.trajectory.right_probability.back(), 1e-6);
}

TEST_P(BothSchemes, TrajectoryInvariants) {
  const auto cfg = small_run(2.0, GetParam());
  const auto out = propagate(build_packet(cfg.grid, cfg.packet), cfg.potential, cfg.propagator, cfg.stop,
                             cfg.record_every, cfg.units);
  const auto& t = out.trajectory;
  ASSERT_GT(t.size(), 10u);
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (j > 0) {
      EXPECT_GT(t.times[j], t.times[j - 1]);
    }
    EXPECT_NEAR(t.norms[j], t.norms.front(), 1e-9);
    EXPECT_NEAR(t.left_probability[j] + t.right_probability[j], t.norms[j], 1e-9);
  }
}

TEST_P(BothSchemes, Deterministic) {
  const auto cfg = small_run(2.0, GetParam());
  const auto a = propagate(build_packet(cfg.grid, cfg.packet), cfg.potential, cfg.propagator, cfg.stop,
                           cfg.record_every, cfg.units);
  const auto b = propagate(build_packet(cfg.grid, cfg.packet), cfg.potential, cfg.propagator, cfg.stop,
                           cfg.record_every, cfg.units);
  EXPECT_EQ(a.trajectory.left_probability, b.trajectory.left_probability);
  EXPECT_EQ(a.trajectory.mean_positions, b.trajectory.mean_positions);
  EXPECT_EQ(a.state.psi, b.state.psi);
}

INSTANTIATE_TEST_SUITE_P(Evolve, BothSchemes, ::testing::Values(Scheme::CrankNicolson, Scheme::SplitStepSpectral),
                         [](const auto& info) { return info.param == Scheme::CrankNicolson ? "CrankNicolson" : "SplitStep"; });

TEST(SplitStep, FreeGaussianMatchesClosedForm) {
  const double sigma = 2.0;
  const double k0 = 5.0;
  const double dx = 0.02;
  const GridSpec g{-50.0, 110.0, static_cast<std::size_t>(std::llround(160.0 / dx))};
  auto s = gaussian_state(g, 0.0, sigma, k0);
  Propagator prop(g, PotentialProfile{}, PropagatorConfig::split_step(1e-3));
  prop.advance(s, 10000);
  EXPECT_DOUBLE_EQ(s.time, 10.0);
  EXPECT_LT(l2_error_against_free_gaussian(s, 0.0, sigma, k0), 1e-6);
}

TEST(CrankNicolson, FreeGaussianConvergesAtSecondOrder) {
  // Halving dx and dt together cuts the error by about four.
  const double sigma = 2.0;
  const double k0 = 2.0;
  const double t_end = 2.0;
  std::vector<double> errors;
  for (double dx : {0.04, 0.02, 0.01}) {
    const GridSpec g{-30.0, 30.0, static_cast<std::size_t>(std::llround(60.0 / dx))};
    const double dt = dx / 4.0;
    auto s = gaussian_state(g, -4.0, sigma, k0);
    Propagator prop(g, PotentialProfile{}, PropagatorConfig::crank_nicolson(dt));
    prop.advance(s, static_cast<std::size_t>(std::llround(t_end / dt)));
    errors.push_back(l2_error_against_free_gaussian(s, -4.0, sigma, k0));
  }
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double order = std::log2(errors[i - 1] / errors[i]);
    EXPECT_NEAR(order, 2.0, 0.1) << "errors " << errors[i - 1] << " -> " << errors[i];
  }
}

TEST(Propagate, FreePacketMovesAtGroupVelocity) {
  const double k0 = 5.0;
  const GridSpec g{-60.0, 100.0, 8192};
  const auto packet = PacketSpec::flat_top(-30.0, 40.0, k0);
  const auto out = propagate(build_packet(g, packet), PotentialProfile{}, PropagatorConfig::split_step(0.002),
                             MaxTime{10.0}, 500);
  EXPECT_NEAR(out.state.time, 10.0, 1e-12);
  EXPECT_NEAR(out.trajectory.mean_positions.back(), -30.0 + k0 * 10.0, 0.01 * 50.0);
}

TEST(Propagate, FreeGroupVelocityFit) {
  // sigma_k / k0 well below 0.02 for a 40-wavelength flat-top.
  const double k0 = 5.0;
  const GridSpec g{-60.0, 100.0, 8192};
  const auto out = propagate(build_packet(g, PacketSpec::flat_top(-30.0, 40.0 * 2.0 * kPi / k0, k0)),
                             PotentialProfile{}, PropagatorConfig::split_step(0.002), MaxTime{10.0}, 250);
  const auto& t = out.trajectory;
  double st = 0, sx = 0, stt = 0, stx = 0;
  const double n = static_cast<double>(t.size());
  for (std::size_t j = 0; j < t.size(); ++j) {
    st += t.times[j];
    sx += t.mean_positions[j];
    stt += t.times[j] * t.times[j];
    stx += t.times[j] * t.mean_positions[j];
  }
  const double slope = (n * stx - st * sx) / (n * stt - st * st);
  EXPECT_NEAR(slope, k0, 0.005 * k0);
}

TEST(Propagate, BoundaryContactAborts) {
  const GridSpec g{-20.0, 20.0, 2048};
  try {
    propagate(build_packet(g, PacketSpec::gaussian(0.0, 1.0, 5.0)), PotentialProfile{},
              PropagatorConfig::split_step(0.002), MaxTime{10.0}, 50);
    FAIL() << "expected boundary contact";
  } catch (const BoundaryContactError& e) {
    EXPECT_GT(e.time(), 0.0);
    EXPECT_LT(e.time(), 10.0);
    EXPECT_GT(e.edge_probability(), 1e-8);
  }
}

TEST(Propagate, SeparatedHonoursMaxTime) {
  auto cfg = small_run(2.0, Scheme::SplitStepSpectral);
  auto sep = std::get<Separated>(cfg.stop);
  sep.max_time = 1.0;
  EXPECT_THROW(propagate(build_packet(cfg.grid, cfg.packet), cfg.potential, cfg.propagator, sep, cfg.record_every),
               DomainError);
}

TEST(InteractionWindow, AnalyticValue) {
  Trajectory t;
  for (int j = 0; j < 100; ++j) {
    t.times.push_back(j);
    const double p = std::clamp((j - 30.0) / 20.0, 0.0, 1.0);
    t.right_probability.push_back(p);
    t.left_probability.push_back(1.0 - p);
  }
  const auto info = interaction_window(t, 100.0, 5.0);
  EXPECT_DOUBLE_EQ(info.analytic, 20.0);
  EXPECT_NEAR(info.t1, 30.02, 1e-9);
  EXPECT_NEAR(info.t2, 49.98, 1e-9);
  EXPECT_NEAR(info.measured, 19.96, 1e-9);
}

TEST(InteractionWindow, DoublesWithWidth) {
  std::vector<double> windows;
  for (double ratio : {40.0, 80.0}) {
    const auto cfg = small_run(2.0, Scheme::SplitStepSpectral, ratio, 0.3);
    const auto out = propagate(build_packet(cfg.grid, cfg.packet), cfg.potential, cfg.propagator, cfg.stop,
                               cfg.record_every, cfg.units);
    const auto info = interaction_window(out.trajectory, cfg.packet.width_wI, cfg.packet.k0);
    windows.push_back(info.measured);
  }
  EXPECT_NEAR(windows[1] / windows[0], 2.0, 0.1);
}

TEST(InteractionWindow, FreeRunHasNoCollision) {
  const GridSpec g{-60.0, 60.0, 4096};
  const auto out = propagate(build_packet(g, PacketSpec::flat_top(-30.0, 20.0, 5.0)), PotentialProfile{},
                             PropagatorConfig::split_step(0.002), MaxTime{1.0}, 50);
  EXPECT_THROW(interaction_window(out.trajectory, 20.0, 5.0), DomainError);
}

TEST(InteractionWindow, CollisionAlreadyUnderWay) {
  Trajectory t;
  for (int j = 0; j < 10; ++j) {
    t.times.push_back(j);
    t.right_probability.push_back(0.5);
    t.left_probability.push_back(0.5);
  }
  EXPECT_THROW(interaction_window(t, 10.0, 5.0), DomainError);
}

TEST(Units, PhysicalTimeScalesWithMassOverHbar) {
  // With m = 2, hbar = 1 the packet moves at k0 / 2; internal evolution is identical.
  const UnitSystem u{1.0, 2.0};
  const GridSpec g{-40.0, 80.0, 4096};
  const auto packet = PacketSpec::gaussian(-10.0, 3.0, 4.0);
  const auto out = propagate(build_packet(g, packet), PotentialProfile{}, PropagatorConfig::split_step(0.004),
                             MaxTime{8.0}, 100, u);
  EXPECT_NEAR(out.trajectory.mean_positions.back(), -10.0 + u.group_velocity(4.0) * 8.0, 1e-6);

  const auto ref = propagate(build_packet(g, packet), PotentialProfile{}, PropagatorConfig::split_step(0.002),
                             MaxTime{4.0}, 100);
  EXPECT_NEAR(out.trajectory.mean_positions.back(), ref.trajectory.mean_positions.back(), 1e-9);
}

}  // namespace
