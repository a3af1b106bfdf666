#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aoi/analysis.hpp"
#include "aoi/cutoff.hpp"
#include "aoi/distribution.hpp"
#include "aoi/errors.hpp"
#include "aoi/rng.hpp"

namespace aoi {

/// Constant cutoff plus waiting threshold. theta == c encodes zero-wait.
struct Policy {
  double gamma = kInfinity;
  double theta = 0.0;

  bool operator==(const Policy&) const = default;
};

inline void validate_policy(const Policy& policy, const ServiceDistribution& dist) {
  const double c = dist.shift();
  if (!(policy.gamma >= c)) throw ConfigError("policy cutoff gamma must be >= c");
  if (!(policy.theta >= c) || !(policy.theta <= policy.gamma)) {
    throw ConfigError("policy threshold theta must lie in [c, gamma]");
  }
}

// Policy from a solver result, theta clamped into [c, gamma].
inline Policy policy_from(const SolveResult& r, const ServiceDistribution& dist) {
  return {r.gamma, std::clamp(r.theta, dist.shift(), r.gamma)};
}

struct EpochRecord {
  double start_age = 0.0;  // age when the epoch starts
  double wait = 0.0;
  std::uint64_t uploads = 0;
  double busy = 0.0;     // (uploads - 1) * gamma + end_age
  double end_age = 0.0;  // service time of the upload that completed
  double length = 0.0;   // wait + busy
  double area = 0.0;     // start_age * length + length^2 / 2
};

/// One epoch: wait until the age reaches theta, then upload fresh
/// measurements back to back, preempting any whose service exceeds gamma,
/// until one completes.
template <typename Rng>
EpochRecord sample_epoch(const Policy& policy, const ServiceDistribution& dist, Rng& rng,
                         double start_age) {
  EpochRecord e;
  e.start_age = start_age;
  e.wait = std::max(policy.theta - start_age, 0.0);
  for (;;) {
    ++e.uploads;
    const double x = dist.sample(rng);
    if (x > policy.gamma) {
      e.busy += policy.gamma;
      continue;
    }
    e.busy += x;
    e.end_age = x;
    break;
  }
  e.length = e.wait + e.busy;
  e.area = e.start_age * e.length + 0.5 * e.length * e.length;
  return e;
}

struct SimReport {
  double avg_aoi = 0.0;
  std::uint64_t epochs = 0;  // epochs after warmup
  double std_error = 0.0;    // batch means, delta method for the ratio
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t warmup = 0;
  std::uint64_t batches = 0;
  double total_area = 0.0;
  double total_length = 0.0;

  bool operator==(const SimReport&) const = default;
};

struct SimOptions {
  std::optional<std::uint64_t> warmup;  // default: max(1% of epochs, 100)
  std::uint64_t batches = 100;
  std::uint64_t stream = 0;
};

inline std::uint64_t default_warmup(std::uint64_t n_epochs) {
  return std::max<std::uint64_t>(n_epochs / 100, 100);
}

/// Renewal-reward estimate sum(Q) / sum(L) of the long-run average AoI.
/// The first epoch starts at age c.
inline SimReport run_simulation(const Policy& policy, const ServiceDistribution& dist,
                                std::uint64_t n_epochs, std::uint64_t seed,
                                const SimOptions& opts = {}) {
  validate_policy(policy, dist);
  if (n_epochs < 1000) throw ConfigError("simulation needs at least 1000 epochs");
  const std::uint64_t warmup = opts.warmup.value_or(default_warmup(n_epochs));
  if (warmup >= n_epochs) throw ConfigError("warmup must be smaller than the epoch count");
  const std::uint64_t used = n_epochs - warmup;
  if (opts.batches < 2 || opts.batches > used) throw ConfigError("batch count must be in [2, epochs]");

  CounterRng rng(seed, opts.stream);
  double age = dist.shift();
  for (std::uint64_t i = 0; i < warmup; ++i) age = sample_epoch(policy, dist, rng, age).end_age;

  std::vector<double> batch_area(opts.batches, 0.0);
  std::vector<double> batch_length(opts.batches, 0.0);
  const std::uint64_t per_batch = used / opts.batches;
  for (std::uint64_t i = 0; i < used; ++i) {
    const EpochRecord e = sample_epoch(policy, dist, rng, age);
    age = e.end_age;
    const std::uint64_t b = std::min(i / per_batch, opts.batches - 1);
    batch_area[b] += e.area;
    batch_length[b] += e.length;
  }

  SimReport r;
  r.epochs = used;
  r.seed = seed;
  r.stream = opts.stream;
  r.warmup = warmup;
  r.batches = opts.batches;
  for (std::uint64_t b = 0; b < opts.batches; ++b) {
    r.total_area += batch_area[b];
    r.total_length += batch_length[b];
  }
  r.avg_aoi = r.total_area / r.total_length;
  double ss = 0.0;
  for (std::uint64_t b = 0; b < opts.batches; ++b) {
    const double d = batch_area[b] - r.avg_aoi * batch_length[b];
    ss += d * d;
  }
  const double nb = static_cast<double>(opts.batches);
  r.std_error = std::sqrt(nb / (nb - 1.0) * ss) / r.total_length;
  return r;
}

/// Independent replications on separate streams (seed, index), run in
/// parallel; reports are ordered by replication index.
inline std::vector<SimReport> run_replications(const Policy& policy,
                                               const ServiceDistribution& dist,
                                               std::uint64_t n_epochs, std::uint64_t seed,
                                               std::size_t replications,
                                               SimOptions opts = {}, unsigned threads = 0) {
  validate_policy(policy, dist);
  std::vector<SimReport> reports(replications);
  std::vector<std::string> errors(replications);
  detail::parallel_for(replications, threads, [&](std::size_t i) {
    SimOptions local = opts;
    local.stream = i;
    try {
      reports[i] = run_simulation(policy, dist, n_epochs, seed, local);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  for (const auto& err : errors) {
    if (!err.empty()) throw ConfigError(err);
  }
  return reports;
}

enum class AgeEvent { Start, UploadStart, Preemption, Delivery, Drop };

inline const char* to_string(AgeEvent e) {
  switch (e) {
    case AgeEvent::Start: return "start";
    case AgeEvent::UploadStart: return "upload";
    case AgeEvent::Preemption: return "preempt";
    case AgeEvent::Delivery: return "delivery";
    case AgeEvent::Drop: return "drop";
  }
  return "?";
}

struct AgePoint {
  double t;
  double age;
  AgeEvent event;
};

struct Trajectory {
  std::vector<AgePoint> points;
  std::vector<EpochRecord> epochs;
};

/// Piecewise-linear age sample path: slope 1 between breakpoints, a vertical
/// drop to the completed service time at each delivery. Preemptions are
/// marked but leave the age untouched.
inline Trajectory export_trajectory(const Policy& policy, const ServiceDistribution& dist,
                                    std::uint64_t n_epochs, std::uint64_t seed) {
  validate_policy(policy, dist);
  if (n_epochs < 1 || n_epochs > 10000) throw ConfigError("trajectory epochs must be in [1, 10000]");
  CounterRng rng(seed);
  Trajectory tr;
  double t = 0.0;
  double age = dist.shift();
  tr.points.push_back({t, age, AgeEvent::Start});
  for (std::uint64_t i = 0; i < n_epochs; ++i) {
    const double start_age = age;
    EpochRecord e;
    e.start_age = start_age;
    e.wait = std::max(policy.theta - start_age, 0.0);
    if (e.wait > 0.0) {
      t += e.wait;
      age += e.wait;
      tr.points.push_back({t, age, AgeEvent::UploadStart});
    }
    for (;;) {
      ++e.uploads;
      const double x = dist.sample(rng);
      if (x > policy.gamma) {
        e.busy += policy.gamma;
        t += policy.gamma;
        age += policy.gamma;
        tr.points.push_back({t, age, AgeEvent::Preemption});
        continue;
      }
      e.busy += x;
      e.end_age = x;
      t += x;
      age += x;
      tr.points.push_back({t, age, AgeEvent::Delivery});
      age = x;
      tr.points.push_back({t, age, AgeEvent::Drop});
      break;
    }
    e.length = e.wait + e.busy;
    e.area = e.start_age * e.length + 0.5 * e.length * e.length;
    tr.epochs.push_back(e);
  }
  return tr;
}

// Trapezoid area under the sample path.
inline double trajectory_area(const std::vector<AgePoint>& points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += 0.5 * (points[i].age + points[i - 1].age) * (points[i].t - points[i - 1].t);
  }
  return area;
}

}  // namespace aoi
