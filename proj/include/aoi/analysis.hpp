#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "aoi/distribution.hpp"
#include "aoi/errors.hpp"

namespace aoi {

/// Cutoff-dependent scalars of one epoch under a gamma-cutoff policy.
///
/// The busy period is T = (N - 1) gamma + Y with N ~ Geometric(p) independent
/// of the completed service Y, hence
///   E[T]   = (1/p - 1) gamma + E[Y]
///   E[T^2] = (1-p)(2-p)/p^2 gamma^2 + 2 (1/p - 1) gamma E[Y] + E[Y^2].
struct EpochStats {
  double gamma;
  TruncatedAgeMoments moments;
  double et;
  double et2;

  // (1/p - 1) gamma, i.e. the expected time lost to preemptions.
  double preemption_time() const {
    return moments.q == 0.0 ? 0.0 : moments.q / moments.p * gamma;
  }
};

inline EpochStats epoch_stats(const ServiceDistribution& dist, double gamma) {
  const TruncatedAgeMoments m = truncated_moments(dist, gamma);
  EpochStats s{gamma, m, m.ey, m.ey2};
  if (m.q > 0.0) {
    const double ratio = m.q / m.p;
    s.et = ratio * gamma + m.ey;
    s.et2 = ratio * (1.0 + m.q) / m.p * gamma * gamma + 2.0 * ratio * gamma * m.ey + m.ey2;
  }
  return s;
}

/// Zero-wait optimality test:
///   (1/2 (1/p - 1) gamma^2 + 1/2 E[Y^2]) / ((1/p - 1) gamma + E[Y]) <= c.
inline bool zero_wait_optimal(const EpochStats& stats, double shift) {
  const double lost = stats.preemption_time();
  const double num = 0.5 * lost * (lost == 0.0 ? 0.0 : stats.gamma) + 0.5 * stats.moments.ey2;
  const double den = lost + stats.moments.ey;
  return num <= shift * den;
}

/// Average AoI of the zero-wait policy: E[Y] + E[T^2] / (2 E[T]).
inline double aoi_zero_wait(const EpochStats& stats) {
  return stats.moments.ey + 0.5 * stats.et2 / stats.et;
}

/// Root of the Dinkelbach function when waiting is allowed to go negative,
/// E[Y] + sqrt(1-p)/p * gamma. The relaxation makes this a lower bound on the
/// optimal AoI.
inline double always_wait_aoi(const EpochStats& stats) {
  if (stats.moments.q == 0.0) return stats.moments.ey;
  return stats.moments.ey + std::sqrt(stats.moments.q) / stats.moments.p * stats.gamma;
}

/// w(t) = max(theta - t, 0) for a starting age t in [c, gamma].
inline double waiting_time(double theta, double t, double shift, double gamma) {
  if (!(t >= shift) || !(t <= gamma)) {
    throw DomainError("starting age " + detail::format_number(t) + " outside [" +
                      detail::format_number(shift) + ", " + detail::format_number(gamma) + "]");
  }
  return std::max(theta - t, 0.0);
}

// E[Q] and E[L] of one epoch.
struct PolicyCost {
  double expected_area;
  double expected_length;
  double ratio() const { return expected_area / expected_length; }
};

/// Expected epoch area and length under threshold waiting w(t) = [theta - t]^+
/// with the cutoff baked into `stats`.
///
/// The waiting terms are integrals against f_Y over [c, min(theta, gamma)];
/// above theta they vanish, so the kink of w is never integrated through.
inline PolicyCost policy_cost(const ServiceDistribution& dist, const EpochStats& stats,
                              double theta) {
  const double c = dist.shift();
  const auto& m = stats.moments;
  double ew = 0.0;   // E[w(Y)]
  double eyw = 0.0;  // E[Y w(Y)]
  double ew2 = 0.0;  // E[w(Y)^2]
  if (theta > c) {
    const double upper = std::min(theta, stats.gamma);
    if (const auto* g = std::get_if<GenericDensity>(&dist.kind())) {
      const auto& f = *g->pdf;
      ew = integrate([&](double y) { return (theta - y) * f(y); }, c, upper) / m.p;
      eyw = integrate([&](double y) { return y * (theta - y) * f(y); }, c, upper) / m.p;
      ew2 = integrate([&](double y) { return (theta - y) * (theta - y) * f(y); }, c, upper) / m.p;
    } else {
      double m0 = 1.0;
      double m1 = m.ey;
      double m2 = m.ey2;
      if (upper < stats.gamma) {
        const PartialMoments pm = dist.partial_moments(upper);
        m0 = pm.mass / m.p;
        m1 = pm.first / m.p;
        m2 = pm.second / m.p;
      }
      ew = theta * m0 - m1;
      eyw = theta * m1 - m2;
      ew2 = theta * theta * m0 - 2.0 * theta * m1 + m2;
    }
  }
  const double length = ew + stats.et;
  const double area = eyw + m.ey * stats.et + 0.5 * ew2 + ew * stats.et + 0.5 * stats.et2;
  return {area, length};
}

/// Dinkelbach function g(lambda) = E[Q] - lambda E[L] minimized over waiting
/// functions; the minimizer is the threshold theta = lambda - E[T].
inline double g_eval(double lambda, const ServiceDistribution& dist, const EpochStats& stats) {
  const PolicyCost cost = policy_cost(dist, stats, lambda - stats.et);
  return cost.expected_area - lambda * cost.expected_length;
}

struct SolverOptions {
  double tol_lambda = 1e-9;
  double tol_g = 1e-8;
  int max_iterations = 200;
  double left_offset = 1e-12;
};

struct SolveResult {
  double gamma = 0.0;
  double lambda_star = 0.0;
  double theta = 0.0;  // waiting threshold, canonicalized to c for zero-wait
  bool zero_wait = false;
  int iterations = 0;
  double residual = 0.0;  // |g(lambda_star)|
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double et = 0.0;
};

/// Optimal average AoI for a fixed cutoff.
///
/// Zero-wait is checked first and answered in closed form. Otherwise the root
/// of g lies in (E[T] + c, E[T] + gamma] and is found by bisection. With no
/// cutoff the right end is replaced by the zero-wait AoI, which is feasible and
/// therefore has g <= 0.
inline SolveResult solve_lambda(const ServiceDistribution& dist, double gamma,
                                const SolverOptions& opts = {}) {
  const double c = dist.shift();
  const EpochStats stats = epoch_stats(dist, gamma);
  SolveResult r;
  r.gamma = gamma;
  r.et = stats.et;

  if (zero_wait_optimal(stats, c)) {
    r.lambda_star = aoi_zero_wait(stats);
    r.theta = c;
    r.zero_wait = true;
    r.residual = std::abs(g_eval(r.lambda_star, dist, stats));
    r.bracket_lo = r.bracket_hi = r.lambda_star;
    return r;
  }

  double lo = stats.et + c + opts.left_offset;
  double hi = std::isinf(gamma) ? aoi_zero_wait(stats) : stats.et + gamma;
  r.bracket_lo = lo;
  r.bracket_hi = hi;
  auto g = [&](double lambda) { return g_eval(lambda, dist, stats); };

  const double g_lo = g(lo);
  const double g_hi = g(hi);
  if (g_hi > opts.tol_g) {
    throw BisectionBracketFailure("g(" + detail::format_number(hi) + ") = " +
                                  detail::format_number(g_hi) + " > 0 at the right end");
  }
  if (g_lo <= 0.0) {
    // The root sits within left_offset of E[T] + c.
    if (-g_lo > opts.tol_g) {
      throw BisectionBracketFailure("g(" + detail::format_number(lo) + ") = " +
                                    detail::format_number(g_lo) + " <= 0 at the left end");
    }
    r.lambda_star = lo;
    r.theta = lo - stats.et;
    r.residual = std::abs(g_lo);
    return r;
  }

  double mid = 0.5 * (lo + hi);
  double g_mid = g(mid);
  int it = 1;
  for (; it < opts.max_iterations; ++it) {
    if (g_mid == 0.0 || (hi - lo <= opts.tol_lambda && std::abs(g_mid) <= opts.tol_g)) break;
    if (g_mid > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    const double next = 0.5 * (lo + hi);
    if (next == mid) break;
    mid = next;
    g_mid = g(mid);
  }
  r.lambda_star = mid;
  r.theta = mid - stats.et;
  r.iterations = it;
  r.residual = std::abs(g_mid);
  return r;
}

}  // namespace aoi
