// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
// The headline run (E = 2 V0, k0 = 5, w_I = 200 wavelengths, split-step) is shared by the
// probability, width, velocity, timing and current criteria.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "wavescat/wavescat.hpp"

namespace {

using namespace wavescat;
using namespace wavescat::harness;

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %2d %-32s %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, static_cast<double>(args)...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Runs a criterion; an exception counts as a failure with its message.
void guarded(int id, const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, name, false, std::string("error: ") + e.what());
  }
}

complex free_gaussian(double x, double t, double sigma, double k0) {
  const complex i{0.0, 1.0};
  const complex a = 1.0 + i * t / (sigma * sigma);
  const double u = x - k0 * t;
  return std::pow(std::numbers::pi * sigma * sigma, -0.25) / std::sqrt(a) *
         std::exp(-u * u / (2.0 * sigma * sigma * a) + i * k0 * (x - 0.5 * k0 * t));
}

}  // namespace

int main() {
  const double r_exact = 17.0 - 12.0 * std::numbers::sqrt2;
  const double t_exact = 12.0 * std::numbers::sqrt2 - 16.0;

  guarded(1, "analytic unitarity", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> log_e(-4.0, 4.0);
    std::uniform_real_distribution<double> frac(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const double e = std::pow(10.0, log_e(rng));
      double v0 = e * frac(rng);
      if (!(v0 > 0.0)) v0 = 0.5 * e;
      const auto p = step_probabilities(e, v0);
      worst = std::max(worst, std::abs(p.r + p.t - 1.0));
    }
    const double secs = seconds_since(t0);
    report(1, "analytic unitarity", worst <= 1e-12 && secs < 1.0,
           fmt("max |R+T-1| = %.3g over 1e4 pairs (tol 1e-12), %.3f s (limit 1 s)", worst, secs));
  });

  // Headline split-step run shared by criteria 2, 3, 4, 5, 8 and 10.
  RunConfig headline = make_config(headline_scenario(Scheme::SplitStepSpectral));
  std::optional<RunOutput> split;
  double split_secs = 0.0;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    split = run_full(headline);
    split_secs = seconds_since(t0);
    std::printf("       headline split-step run: n_points = %zu, dx = %.4g, dt = %.4g, t_end = %.2f, %.1f s\n",
                headline.grid.n_points, headline.grid.dx(), headline.propagator.dt, split->result.final_time,
                split_secs);
  } catch (const std::exception& e) {
    std::printf("       headline split-step run failed: %s\n", e.what());
  }
  auto need_split = [&] {
    if (!split) throw std::runtime_error("headline run unavailable");
    return split->result;
  };

  guarded(2, "headline reproduction", [&] {
    const auto r = need_split();
    const auto a = step_probabilities(headline.energy(), std::get<Step>(headline.potential.kind()).v0);
    const bool analytic_ok = std::abs(a.r - r_exact) <= 1e-12 && std::abs(a.t - t_exact) <= 1e-12;
    const double tol_l = 0.01 * r_exact + 1e-3;
    const double tol_r = 0.01 * t_exact + 1e-3;
    const bool ok = analytic_ok && std::abs(r.p_left - a.r) <= tol_l && std::abs(r.p_right - a.t) <= tol_r &&
                    split_secs < 120.0;
    report(2, "headline reproduction", ok,
           fmt("R = %.6f T = %.6f; P_left = %.6f (|d| %.2g, tol %.2g)", a.r, a.t, r.p_left,
               std::abs(r.p_left - a.r), tol_l) +
               fmt(", P_right = %.6f (|d| %.2g, tol %.2g), %.1f s", r.p_right, std::abs(r.p_right - a.t), tol_r,
                   split_secs));
  });

  guarded(3, "width ratios", [&] {
    const auto r = need_split();
    const double wt = r.width_transmitted / r.width_incident;
    const double wr = r.width_reflected / r.width_incident;
    const double target = 1.0 / std::numbers::sqrt2;
    const bool ok = std::abs(wt - target) <= 0.05 * target && std::abs(wr - 1.0) <= 0.05;
    report(3, "width ratios", ok,
           fmt("w_T/w_I = %.5f (target %.5f, tol 5%%), w_R/w_I = %.5f (target 1, tol 5%%)", wt, target, wr));
  });

  guarded(4, "group velocities", [&] {
    const auto r = need_split();
    const double v_in = headline.units.group_velocity(headline.packet.k0);
    const double v_t = v_in / std::numbers::sqrt2;
    const bool ok = std::abs(r.v_incident - v_in) <= 0.005 * v_in && std::abs(r.v_transmitted - v_t) <= 0.01 * v_t;
    report(4, "group velocities", ok,
           fmt("v_in = %.6f (target %.6f, tol 0.5%%), v_T = %.6f (target %.6f, tol 1%%)", r.v_incident, v_in,
               r.v_transmitted, v_t));
  });

  guarded(5, "interaction window", [&] {
    const auto r = need_split();
    if (!r.timing) throw std::runtime_error("no timing measured");
    const auto& t = *r.timing;
    report(5, "interaction window", std::abs(t.measured - t.analytic) <= 0.1 * t.analytic,
           fmt("t2 - t1 = %.4f (t1 %.3f, t2 %.3f), w_I m/hbar k0 = %.4f, tol 10%%", t.measured, t.t1, t.t2,
               t.analytic));
  });

  guarded(6, "width convergence", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto report_table = convergence_study(headline, {25.0, 50.0, 100.0, 200.0});
    std::string detail = "|P_left - R|:";
    for (const auto& row : report_table.table) {
      detail += fmt(" %g:%.3g", row.w_over_lambda, reflection_error(row));
    }
    report(6, "width convergence", report_table.strictly_decreasing,
           detail + fmt(" (strictly decreasing required), %.1f s", seconds_since(t0)));
  });

  guarded(7, "evanescent regime", [&] {
    Scenario s = headline_scenario();
    s.e_over_v0 = 0.5;
    const auto cfg = make_config(s);
    const auto r = run(cfg);
    const auto amps = step_amplitudes(cfg.energy(), std::get<Step>(cfg.potential.kind()).v0, cfg.units);
    const double mod = std::abs(amps.b_over_a);
    report(7, "evanescent regime", r.p_right < 1e-6 && std::abs(mod - 1.0) <= 1e-12,
           fmt("P_right = %.3g (limit 1e-6), |B/A| - 1 = %.3g (tol 1e-12)", r.p_right, mod - 1.0));
  });

  guarded(8, "scheme cross-validation", [&] {
    const auto r_split = need_split();
    const auto cn_cfg = make_config(headline_scenario(Scheme::CrankNicolson));
    const auto t0 = std::chrono::steady_clock::now();
    const auto cn = run_full(cn_cfg);
    const double secs = seconds_since(t0);
    auto drift = [](const Trajectory& t) {
      double d = 0.0;
      for (double n : t.norms) d = std::max(d, std::abs(n - t.norms.front()));
      return d;
    };
    const double d_split = drift(split->trajectory);
    const double d_cn = drift(cn.trajectory);
    const double diff = std::abs(cn.result.p_left - r_split.p_left);
    report(8, "scheme cross-validation", diff <= 1e-3 && d_split <= 1e-9 && d_cn <= 1e-9,
           fmt("P_left CN %.6f vs split %.6f (|d| %.2g, tol 1e-3)", cn.result.p_left, r_split.p_left, diff) +
               fmt("; norm drift split %.2g, CN %.2g (tol 1e-9), CN %.1f s", d_split, d_cn, secs));
  });

  guarded(9, "free-particle oracle", [&] {
    const double sigma = 2.0;
    const double k0 = 5.0;
    const double dx = 0.02;
    const GridSpec g{-50.0, 110.0, static_cast<std::size_t>(std::llround(160.0 / dx))};
    WaveState s{g, std::vector<complex>(g.n_points), 0.0};
    for (std::size_t j = 0; j < g.n_points; ++j) s.psi[j] = free_gaussian(g.x(j), 0.0, sigma, k0);
    Propagator prop(g, PotentialProfile{}, PropagatorConfig::split_step(1e-3));
    prop.advance(s, 10000);
    double err = 0.0;
    for (std::size_t j = 0; j < g.n_points; ++j) err += std::norm(s.psi[j] - free_gaussian(g.x(j), s.time, sigma, k0));
    err = std::sqrt(err * dx);
    report(9, "free-particle oracle", err < 1e-6,
           fmt("L2 error at t = %.3g: %.3g (limit 1e-6; sigma 2, k0 5, dx 0.02, dt 1e-3)", s.time, err));
  });

  guarded(10, "current cross-check", [&] {
    const auto r = need_split();
    if (!r.current_estimate) throw std::runtime_error("no current plateau");
    const auto& c = *r.current_estimate;
    const double dr = std::abs(c.r - r.p_left) / r.p_left;
    const double dt = std::abs(c.t - r.p_right) / r.p_right;
    report(10, "current cross-check", dr <= 0.01 && dt <= 0.01,
           fmt("|j_B|/j_A = %.6f vs P_left %.6f (%.2g rel); j_C/j_A = %.6f", c.r, r.p_left, dr, c.t) +
               fmt(" vs P_right %.6f (%.2g rel), tol 1%%", r.p_right, dt));
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
