#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "aoi/analysis.hpp"
#include "aoi/distribution.hpp"
#include "aoi/errors.hpp"
#include "aoi/golden_section.hpp"

namespace aoi {

// What is minimized over gamma: the full solver, or the zero-wait AoI.
enum class SweepObjective { OptimalWait, ZeroWait };

enum class Boundary { None, Lower, Upper };

inline const char* to_string(Boundary b) {
  switch (b) {
    case Boundary::Lower: return "lower";
    case Boundary::Upper: return "upper";
    default: return "none";
  }
}

struct SweepPoint {
  double gamma = 0.0;
  double lambda_star = std::numeric_limits<double>::quiet_NaN();
  double theta = std::numeric_limits<double>::quiet_NaN();
  bool zero_wait = false;
  bool ok = false;
  std::string error;
};

struct CutoffSweep {
  std::vector<SweepPoint> grid;
  SweepPoint best;
  Boundary boundary = Boundary::None;
};

struct SweepOptions {
  SweepObjective objective = SweepObjective::OptimalWait;
  double refine_width = 1e-6;
  unsigned threads = 0;  // 0: hardware concurrency, capped at 8
  SolverOptions solver;
};

struct GammaRange {
  double lo;
  double hi;
};

// [c + 1e-4, c + 20 * scale] with scale = E[X] - c, or 1 when X == c.
inline GammaRange default_gamma_range(const ServiceDistribution& dist) {
  const double c = dist.shift();
  double scale = dist.mean() - c;
  if (!(scale > 0.0)) scale = 1.0;
  return {c + 1e-4, c + 20.0 * scale};
}

// One cutoff value; solver errors are captured in the point, not thrown.
inline SweepPoint evaluate_cutoff(const ServiceDistribution& dist, double gamma,
                                  const SweepOptions& opts = {}) {
  SweepPoint pt;
  pt.gamma = gamma;
  try {
    if (opts.objective == SweepObjective::ZeroWait) {
      const EpochStats stats = epoch_stats(dist, gamma);
      pt.lambda_star = aoi_zero_wait(stats);
      pt.theta = dist.shift();
      pt.zero_wait = true;
    } else {
      const SolveResult r = solve_lambda(dist, gamma, opts.solver);
      pt.lambda_star = r.lambda_star;
      pt.theta = r.theta;
      pt.zero_wait = r.zero_wait;
    }
    pt.ok = std::isfinite(pt.lambda_star);
    if (!pt.ok) pt.error = "non-finite AoI";
  } catch (const Error& e) {
    pt.error = e.what();
  }
  return pt;
}

namespace detail {

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::clamp(std::thread::hardware_concurrency(), 1u, 8u);
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// Minimizes lambda*(gamma) over [gamma_min, gamma_max].
///
/// lambda*(gamma) carries no unimodality guarantee, so a coarse grid
/// (log-spaced in gamma - c) is scanned first and golden-section search then
/// refines between the neighbours of the best grid point. Grid points are
/// evaluated in parallel and stored by index, so the result does not depend
/// on scheduling.
inline CutoffSweep optimize_gamma(const ServiceDistribution& dist, double gamma_min,
                                  double gamma_max, std::size_t grid_points,
                                  const SweepOptions& opts = {}) {
  const double c = dist.shift();
  if (!(gamma_min > c) || !(gamma_max > gamma_min) || !std::isfinite(gamma_max)) {
    throw DomainError("cutoff range must satisfy c < gamma_min < gamma_max < inf");
  }
  if (grid_points < 2) throw DomainError("grid needs at least 2 points");

  CutoffSweep sweep;
  sweep.grid.resize(grid_points);
  const double log_lo = std::log(gamma_min - c);
  const double log_hi = std::log(gamma_max - c);
  std::vector<double> gammas(grid_points);
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(grid_points - 1);
    gammas[i] = c + std::exp(log_lo + t * (log_hi - log_lo));
  }
  gammas.front() = gamma_min;
  gammas.back() = gamma_max;

  detail::parallel_for(grid_points, opts.threads,
                       [&](std::size_t i) { sweep.grid[i] = evaluate_cutoff(dist, gammas[i], opts); });

  std::optional<std::size_t> best_index;
  for (std::size_t i = 0; i < grid_points; ++i) {
    if (!sweep.grid[i].ok) continue;
    if (!best_index || sweep.grid[i].lambda_star < sweep.grid[*best_index].lambda_star) {
      best_index = i;
    }
  }
  if (!best_index) throw Error("every grid point failed: " + sweep.grid.front().error);

  const std::size_t i = *best_index;
  sweep.best = sweep.grid[i];
  const double lo = gammas[i == 0 ? 0 : i - 1];
  const double hi = gammas[std::min(i + 1, grid_points - 1)];
  auto objective = [&](double gamma) {
    const SweepPoint pt = evaluate_cutoff(dist, gamma, opts);
    return pt.ok ? pt.lambda_star : std::numeric_limits<double>::infinity();
  };
  const ScalarMinimum refined = golden_section_minimize(objective, lo, hi, opts.refine_width);
  if (refined.fx < sweep.best.lambda_star) sweep.best = evaluate_cutoff(dist, refined.x, opts);

  if (sweep.best.gamma - gamma_min <= opts.refine_width) {
    sweep.boundary = Boundary::Lower;
  } else if (gamma_max - sweep.best.gamma <= opts.refine_width) {
    sweep.boundary = Boundary::Upper;
  }
  return sweep;
}

inline CutoffSweep optimize_gamma(const ServiceDistribution& dist, std::size_t grid_points = 200,
                                  const SweepOptions& opts = {}) {
  const GammaRange range = default_gamma_range(dist);
  return optimize_gamma(dist, range.lo, range.hi, grid_points, opts);
}

/// For c + Exp(rate), the cutoff gamma_bar(c) > c at which zero-wait stops
/// being optimal: the root of (1 + u) e^{-u} = 1 - (rate c)^2 / 2 with
/// u = rate (gamma - c). Defined only for 0 < rate c < sqrt(2).
inline double zero_wait_boundary(double c, double rate = 1.0) {
  detail::require_rate(rate);
  const double x = rate * c;
  if (!(x > 0.0) || !(x < std::sqrt(2.0))) {
    throw DomainError("zero-wait boundary is defined only for 0 < c < sqrt(2)/rate");
  }
  const double level = 1.0 - 0.5 * x * x;
  auto h = [level](double u) { return (1.0 + u) * std::exp(-u) - level; };
  double lo = 0.0;
  double hi = 1.0;
  while (h(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (h(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return c + 0.5 * (lo + hi) / rate;
}

struct PolicyValue {
  const char* name;
  double gamma;  // +inf for no cutoff
  double theta;
  double lambda;
};

// The four benchmark policies, in order:
//   no_cutoff_zero_wait, optimal_cutoff_zero_wait,
//   no_cutoff_optimal_wait, optimal_cutoff_optimal_wait.
using PolicyComparison = std::array<PolicyValue, 4>;

inline PolicyComparison compare_policies(const ServiceDistribution& dist,
                                         std::size_t grid_points = 200, SweepOptions opts = {}) {
  const double c = dist.shift();
  const EpochStats untruncated = epoch_stats(dist, kInfinity);
  PolicyComparison out{};

  out[0] = {"no_cutoff_zero_wait", kInfinity, c, aoi_zero_wait(untruncated)};

  opts.objective = SweepObjective::ZeroWait;
  const CutoffSweep zw = optimize_gamma(dist, grid_points, opts);
  out[1] = {"optimal_cutoff_zero_wait", zw.best.gamma, c, zw.best.lambda_star};
  if (out[0].lambda <= out[1].lambda) out[1] = {out[1].name, kInfinity, c, out[0].lambda};

  const SolveResult no_cutoff = solve_lambda(dist, kInfinity, opts.solver);
  out[2] = {"no_cutoff_optimal_wait", kInfinity, no_cutoff.theta, no_cutoff.lambda_star};

  opts.objective = SweepObjective::OptimalWait;
  const CutoffSweep full = optimize_gamma(dist, grid_points, opts);
  out[3] = {"optimal_cutoff_optimal_wait", full.best.gamma, full.best.theta, full.best.lambda_star};
  // The full class contains the other three; keep whichever candidate is best.
  if (out[2].lambda < out[3].lambda) out[3] = {out[3].name, kInfinity, out[2].theta, out[2].lambda};
  if (std::isfinite(out[1].gamma)) {
    const SolveResult at_zw = solve_lambda(dist, out[1].gamma, opts.solver);
    if (at_zw.lambda_star < out[3].lambda) {
      out[3] = {out[3].name, out[1].gamma, at_zw.theta, at_zw.lambda_star};
    }
  }
  return out;
}

struct ShiftSweepRow {
  double c;
  double gamma_star;
  double lambda_double_star;
  std::optional<double> gamma_bar;  // empty for rate c >= sqrt(2)
  bool zero_wait;
  Boundary boundary;
};

/// Optimal cutoff and AoI of c + Exp(rate) for each c.
inline std::vector<ShiftSweepRow> shift_sweep(double rate, const std::vector<double>& shifts,
                                              std::size_t grid_points = 200,
                                              const SweepOptions& opts = {}) {
  std::vector<ShiftSweepRow> rows;
  rows.reserve(shifts.size());
  for (const double c : shifts) {
    const auto dist = ServiceDistribution::exponential_family(rate, c);
    const CutoffSweep sweep = optimize_gamma(dist, grid_points, opts);
    ShiftSweepRow row{c, sweep.best.gamma, sweep.best.lambda_star, std::nullopt,
                      sweep.best.zero_wait, sweep.boundary};
    if (c > 0.0 && rate * c < std::sqrt(2.0)) row.gamma_bar = zero_wait_boundary(c, rate);
    rows.push_back(row);
  }
  return rows;
}

struct CrossoverRow {
  double c;
  double cutoff_zero_wait;        // optimal cutoff & zero-wait
  double no_cutoff_optimal_wait;  // no cutoff & optimal wait
};

struct CrossoverReport {
  std::vector<CrossoverRow> rows;
  std::vector<double> crossings;  // c where the two curves swap order (interpolated)
};

/// Compares optimal-cutoff zero-wait against no-cutoff optimal waiting for
/// c + Exp(rate) over a grid of shifts.
inline CrossoverReport crossover_report(double rate, const std::vector<double>& shifts,
                                        std::size_t grid_points = 200, SweepOptions opts = {}) {
  CrossoverReport report;
  opts.objective = SweepObjective::ZeroWait;
  for (const double c : shifts) {
    const auto dist = ServiceDistribution::exponential_family(rate, c);
    const double no_cutoff_zw = aoi_zero_wait(epoch_stats(dist, kInfinity));
    const double zw = std::min(optimize_gamma(dist, grid_points, opts).best.lambda_star, no_cutoff_zw);
    const double wait = solve_lambda(dist, kInfinity, opts.solver).lambda_star;
    report.rows.push_back({c, zw, wait});
  }
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    const auto& a = report.rows[i - 1];
    const auto& b = report.rows[i];
    const double da = a.cutoff_zero_wait - a.no_cutoff_optimal_wait;
    const double db = b.cutoff_zero_wait - b.no_cutoff_optimal_wait;
    if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
      report.crossings.push_back(a.c + (b.c - a.c) * da / (da - db));
    }
  }
  return report;
}

}  // namespace aoi
