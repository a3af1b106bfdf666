#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "aoi/analysis.hpp"
#include "aoi/simulation.hpp"
#include "oracle.hpp"

using namespace aoi;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

oracle::Density density_of(const ServiceDistribution& d) {
  if (const auto* e = std::get_if<Exponential>(&d.kind())) return oracle::shifted_exponential(e->rate, 0.0);
  if (const auto* s = std::get_if<ShiftedExponential>(&d.kind())) {
    return oracle::shifted_exponential(s->rate, s->shift);
  }
  ADD_FAILURE() << "no oracle density for " << d.token();
  return {};
}

}  // namespace

TEST(EpochStats, StandardExponentialHasUnitBusyPeriod) {
  const auto d = ServiceDistribution::exponential(1.0);
  for (double g : {0.001, 0.01, 0.1, 1.0, 5.0, 30.0}) {
    EXPECT_NEAR(epoch_stats(d, g).et, 1.0, 1e-12) << g;
  }
  const auto inf = epoch_stats(d, kInfinity);
  EXPECT_EQ(inf.et, 1.0);
  EXPECT_EQ(inf.et2, 2.0);
}

TEST(EpochStats, DeterministicCollapses) {
  const auto s = epoch_stats(ServiceDistribution::deterministic(1.7), 4.0);
  EXPECT_EQ(s.et, 1.7);
  EXPECT_DOUBLE_EQ(s.et2, 1.7 * 1.7);
}

TEST(EpochStats, MatchesGeometricSeriesOracle) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> rate_d(0.4, 2.5), c_d(0.0, 2.0), u_d(0.05, 5.0);
  for (int i = 0; i < 25; ++i) {
    const double rate = rate_d(gen);
    const double c = i % 3 ? c_d(gen) : 0.0;
    const double g = c + u_d(gen) / rate;
    const auto s = epoch_stats(ServiceDistribution::exponential_family(rate, c), g);
    const auto t = oracle::truncated(oracle::shifted_exponential(rate, c), g);
    const auto [et, et2] = oracle::busy_moments(t.p, g, t.ey, t.ey2);
    EXPECT_LT(rel_err(s.et, et), 1e-8) << i;
    EXPECT_LT(rel_err(s.et2, et2), 1e-8) << i;
    EXPECT_GE(s.et, s.moments.ey);
    EXPECT_GE(s.et2, s.et * s.et);
    EXPECT_NEAR(s.et, (1.0 / s.moments.p - 1.0) * g + s.moments.ey, 1e-9 * s.et);
  }
}

TEST(EpochStats, PropagatesTruncationMassZero) {
  EXPECT_THROW(epoch_stats(ServiceDistribution::shifted_exponential(1.0, 1.0), 1.0), TruncationMassZero);
}

TEST(ZeroWait, ShiftAboveRootTwoAlwaysZeroWait) {
  const auto d = ServiceDistribution::shifted_exponential(1.0, 1.5);
  for (double g = 1.5 + 1e-3; g < 20.0; g *= 1.3) {
    EXPECT_TRUE(zero_wait_optimal(epoch_stats(d, g), 1.5)) << g;
  }
  EXPECT_TRUE(zero_wait_optimal(epoch_stats(d, kInfinity), 1.5));
}

TEST(ZeroWait, NeverForUnshiftedLaws) {
  const auto d = ServiceDistribution::exponential(1.0);
  for (double g : {1e-4, 0.01, 0.5, 3.0, kInfinity}) {
    EXPECT_FALSE(zero_wait_optimal(epoch_stats(d, g), 0.0)) << g;
  }
  const auto e = ServiceDistribution::erlang(2, 1.0);
  EXPECT_FALSE(zero_wait_optimal(epoch_stats(e, 2.0), 0.0));
}

TEST(ZeroWait, DeterministicAlwaysZeroWait) {
  for (double c : {0.1, 1.0, 7.0}) {
    EXPECT_TRUE(zero_wait_optimal(epoch_stats(ServiceDistribution::deterministic(c), c), c));
    EXPECT_TRUE(zero_wait_optimal(epoch_stats(ServiceDistribution::deterministic(c), 3 * c), c));
  }
}

TEST(AoiZeroWait, KnownValues) {
  EXPECT_DOUBLE_EQ(aoi_zero_wait(epoch_stats(ServiceDistribution::exponential(1.0), kInfinity)), 2.0);
  EXPECT_DOUBLE_EQ(aoi_zero_wait(epoch_stats(ServiceDistribution::deterministic(2.0), 5.0)), 3.0);
  // E[X] = 2.5, E[X^2] = 2 + 3 + 2.25 = 7.25.
  EXPECT_NEAR(aoi_zero_wait(epoch_stats(ServiceDistribution::shifted_exponential(1.0, 1.5), kInfinity)),
              2.5 + 7.25 / 5.0, 1e-12);
}

TEST(AoiZeroWait, StandardExponentialMatchesSimulation) {
  const auto d = ServiceDistribution::exponential(1.0);
  const SimReport r = run_simulation({kInfinity, 0.0}, d, 1000000, 17);
  EXPECT_LT(std::abs(r.avg_aoi - 2.0), 3.0 * r.std_error);
}

TEST(GEval, ThresholdAtLeftEdgeMeansNoWaiting) {
  for (const auto& d : {ServiceDistribution::exponential(1.0),
                        ServiceDistribution::shifted_exponential(1.0, 0.8),
                        ServiceDistribution::erlang(3, 2.0, 0.1)}) {
    const auto s = epoch_stats(d, d.shift() + 1.3);
    const double lambda = s.et + d.shift();
    const double expected = s.moments.ey * s.et + 0.5 * s.et2 - lambda * s.et;
    EXPECT_NEAR(g_eval(lambda, d, s), expected, 1e-10);
  }
}

// E[Q] - lambda E[L] estimated from the epoch stream, batch-means error.
TEST(GEval, StandardExponentialMatchesMonteCarlo) {
  const auto d = ServiceDistribution::exponential(1.0);
  const double gamma = 1.0, lambda = 2.0;
  const auto s = epoch_stats(d, gamma);
  const Policy policy{gamma, std::min(lambda - s.et, gamma)};
  CounterRng rng(123);
  const int n = 1000000, batches = 100;
  std::vector<double> batch(batches, 0.0);
  double age = 0.0;
  for (int i = 0; i < 1000; ++i) age = sample_epoch(policy, d, rng, age).end_age;
  for (int i = 0; i < n; ++i) {
    const auto e = sample_epoch(policy, d, rng, age);
    age = e.end_age;
    batch[i / (n / batches)] += e.area - lambda * e.length;
  }
  double mean = 0.0;
  for (double b : batch) mean += b;
  mean /= n;
  double ss = 0.0;
  for (double b : batch) ss += std::pow(b / (n / batches) - mean, 2);
  const double se = std::sqrt(ss / (batches - 1) / batches);
  EXPECT_LT(std::abs(g_eval(lambda, d, s) - mean), 3.0 * se) << g_eval(lambda, d, s) << " vs " << mean;
}

TEST(GEval, StrictlyDecreasing) {
  std::mt19937_64 gen(8);
  for (const auto& d : {ServiceDistribution::exponential(1.0),
                        ServiceDistribution::shifted_exponential(2.0, 0.3),
                        ServiceDistribution::deterministic(1.0),
                        ServiceDistribution::erlang(2, 1.0, 0.2)}) {
    const auto s = epoch_stats(d, d.shift() + 1.5);
    std::uniform_real_distribution<double> lam(0.0, s.et + d.shift() + 4.0);
    for (int i = 0; i < 100; ++i) {
      double a = lam(gen), b = lam(gen);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      EXPECT_GT(g_eval(a, d, s), g_eval(b, d, s)) << d.token() << " " << a << " " << b;
    }
  }
}

TEST(Solve, StandardExponentialTinyCutoff) {
  const auto r = solve_lambda(ServiceDistribution::exponential(1.0), 0.01);
  EXPECT_GT(r.lambda_star, 1.0);
  EXPECT_LE(r.lambda_star, 1.01);
  EXPECT_FALSE(r.zero_wait);
  EXPECT_GT(r.theta, 0.0);
  EXPECT_LE(r.theta, 0.01);
}

TEST(Solve, ShiftedExponentialZeroWaitRegime) {
  const auto d = ServiceDistribution::shifted_exponential(1.0, 1.5);
  const auto r = solve_lambda(d, 2.0);
  EXPECT_TRUE(r.zero_wait);
  EXPECT_EQ(r.theta, 1.5);
  EXPECT_EQ(r.lambda_star, aoi_zero_wait(epoch_stats(d, 2.0)));
}

TEST(Solve, StandardExponentialMatchesSimulatedPolicy) {
  const auto d = ServiceDistribution::exponential(1.0);
  const auto r = solve_lambda(d, 1.0);
  const auto sim = run_simulation(policy_from(r, d), d, 1000000, 5);
  EXPECT_LT(rel_err(sim.avg_aoi, r.lambda_star), 0.01);
  EXPECT_LT(std::abs(sim.avg_aoi - r.lambda_star), 3.0 * sim.std_error);
}

TEST(Solve, BoundsAndFixedPointOnRandomInstances) {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> rate_d(0.3, 3.0), c_d(0.0, 2.5), u_d(-3.0, 1.5);
  for (int i = 0; i < 60; ++i) {
    const double rate = rate_d(gen);
    const double c = i % 4 ? c_d(gen) : 0.0;
    const double g = c + std::pow(10.0, u_d(gen)) / rate;
    const auto d = ServiceDistribution::exponential_family(rate, c);
    const auto r = solve_lambda(d, g);
    const auto s = epoch_stats(d, g);
    EXPECT_GT(r.lambda_star, s.et);
    EXPECT_LE(r.lambda_star, s.et + g + 1e-12);
    EXPECT_EQ(r.zero_wait, zero_wait_optimal(s, c));
    if (!r.zero_wait) {
      EXPECT_GT(r.lambda_star, s.et + c);
    }
    EXPECT_GE(r.theta, c);
    EXPECT_LE(r.theta, g);
    const double ratio = oracle::policy_ratio(density_of(d), g, r.theta).value();
    EXPECT_LT(rel_err(ratio, r.lambda_star), 1e-6) << d.token() << " gamma=" << g;
  }
}

// The always-wait closed form solves the relaxation where waiting may be
// negative, so it can only undercut the optimum.
TEST(Solve, AlwaysWaitClosedFormIsALowerBound) {
  for (const auto& d : {ServiceDistribution::exponential(1.0),
                        ServiceDistribution::shifted_exponential(1.0, 0.5),
                        ServiceDistribution::erlang(2, 1.0)}) {
    for (double u : {0.05, 0.5, 1.0, 3.0, 8.0}) {
      const double g = d.shift() + u;
      const auto s = epoch_stats(d, g);
      const double aw = always_wait_aoi(s);
      EXPECT_LE(aw - s.et, g + 1e-12);
      EXPECT_LE(aw, solve_lambda(d, g).lambda_star + 1e-9) << d.token() << " " << g;
    }
  }
  // Exp(1), gamma = 1: E[Y] + sqrt(e^-1)/(1 - e^-1).
  const auto s = epoch_stats(ServiceDistribution::exponential(1.0), 1.0);
  EXPECT_NEAR(always_wait_aoi(s), 0.418023 + 0.959517, 1e-5);
}

TEST(Solve, NoCutoffMatchesBruteForceThreshold) {
  for (const auto& d : {ServiceDistribution::exponential(1.0),
                        ServiceDistribution::shifted_exponential(1.0, 0.3),
                        ServiceDistribution::shifted_exponential(2.0, 0.2)}) {
    const auto r = solve_lambda(d, kInfinity);
    const auto dens = density_of(d);
    const double brute = oracle::brute_minimize(
        [&](double theta) { return oracle::policy_ratio(dens, kInfinity, theta).value(); }, d.shift(),
        d.shift() + 5.0 * d.mean(), 200);
    EXPECT_LT(rel_err(r.lambda_star, brute), 1e-7) << d.token();
    EXPECT_TRUE(std::isinf(r.gamma));
  }
  const auto det = solve_lambda(ServiceDistribution::deterministic(2.0), kInfinity);
  EXPECT_TRUE(det.zero_wait);
  EXPECT_DOUBLE_EQ(det.lambda_star, 3.0);
}

TEST(Solve, GenericDensityAgreesWithSimpsonOracle) {
  const auto d = ServiceDistribution::erlang(3, 1.2, 0.15);
  for (double g : {0.6, 1.5, 4.0}) {
    const auto r = solve_lambda(d, g);
    const double ratio = oracle::policy_ratio(oracle::erlang(3, 1.2, 0.15), g, r.theta).value();
    EXPECT_LT(rel_err(ratio, r.lambda_star), 1e-6) << g;
  }
}

TEST(Solve, BracketFailureIsReported) {
  SolverOptions opts;
  opts.left_offset = 100.0;
  EXPECT_THROW(solve_lambda(ServiceDistribution::exponential(1.0), 1.0, opts), BisectionBracketFailure);
}

TEST(Solve, ConvergesWithinTolerances) {
  const auto d = ServiceDistribution::exponential(1.0);
  const auto r = solve_lambda(d, 2.0);
  EXPECT_LE(r.residual, 1e-8);
  EXPECT_LT(r.iterations, 200);
  EXPECT_DOUBLE_EQ(r.bracket_lo, 1.0 + 1e-12);
  EXPECT_DOUBLE_EQ(r.bracket_hi, 3.0);
}

TEST(WaitingTime, Threshold) {
  EXPECT_EQ(waiting_time(5.0, 3.0, 0.0, 10.0), 2.0);
  EXPECT_EQ(waiting_time(1.0, 1.0, 1.0, 4.0), 0.0);
  EXPECT_EQ(waiting_time(1.0, 3.5, 1.0, 4.0), 0.0);
  EXPECT_EQ(waiting_time(4.0, 4.0, 1.0, 4.0), 0.0);
  EXPECT_THROW(waiting_time(2.0, 0.5, 1.0, 4.0), DomainError);
  EXPECT_THROW(waiting_time(2.0, 4.5, 1.0, 4.0), DomainError);
}
