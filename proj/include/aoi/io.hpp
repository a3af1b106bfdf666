#pragma once

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aoi/analysis.hpp"
#include "aoi/cutoff.hpp"
#include "aoi/simulation.hpp"

// CSV and JSON renderings. Both use the shortest round-trip decimal form of
// every double, so the two formats carry identical values. Non-finite values
// are written as inf / -inf / nan (JSON: the same words as strings).

namespace aoi::io {

using nlohmann::json;

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return detail::format_number(v);
}

inline json jnum(double v) {
  if (std::isfinite(v)) return v;
  return num(v);
}

inline const char* flag(bool b) { return b ? "true" : "false"; }

// ---- solve ---------------------------------------------------------------

inline void solve_csv(std::ostream& os, const SolveResult& r) {
  os << "gamma,lambda_star,theta,zero_wait,bracket_lo,bracket_hi,iterations,residual,et\n"
     << num(r.gamma) << ',' << num(r.lambda_star) << ',' << num(r.theta) << ','
     << flag(r.zero_wait) << ',' << num(r.bracket_lo) << ',' << num(r.bracket_hi) << ','
     << r.iterations << ',' << num(r.residual) << ',' << num(r.et) << '\n';
}

inline json solve_json(const SolveResult& r) {
  return {{"gamma", jnum(r.gamma)},           {"lambda_star", jnum(r.lambda_star)},
          {"theta", jnum(r.theta)},           {"zero_wait", r.zero_wait},
          {"bracket_lo", jnum(r.bracket_lo)}, {"bracket_hi", jnum(r.bracket_hi)},
          {"iterations", r.iterations},       {"residual", jnum(r.residual)},
          {"et", jnum(r.et)}};
}

// ---- cutoff sweep ----------------------------------------------------------

// Grid rows first, then the refined optimum tagged row=best.
inline void sweep_csv(std::ostream& os, const CutoffSweep& s) {
  os << "gamma,lambda_star,theta,zero_wait,row\n";
  auto row = [&os](const SweepPoint& p, const char* tag) {
    os << num(p.gamma) << ',' << num(p.lambda_star) << ',' << num(p.theta) << ','
       << flag(p.zero_wait) << ',' << tag << '\n';
  };
  for (const auto& p : s.grid) row(p, "grid");
  row(s.best, "best");
}

inline json point_json(const SweepPoint& p) {
  json j = {{"gamma", jnum(p.gamma)},
            {"lambda_star", jnum(p.lambda_star)},
            {"theta", jnum(p.theta)},
            {"zero_wait", p.zero_wait}};
  if (!p.ok) j["error"] = p.error;
  return j;
}

inline json sweep_json(const CutoffSweep& s) {
  json grid = json::array();
  for (const auto& p : s.grid) grid.push_back(point_json(p));
  return {{"grid", grid}, {"best", point_json(s.best)}, {"boundary", to_string(s.boundary)}};
}

inline void shift_sweep_csv(std::ostream& os, const std::vector<ShiftSweepRow>& rows) {
  os << "c,gamma_star,lambda_double_star,gamma_bar,zero_wait,boundary\n";
  for (const auto& r : rows) {
    os << num(r.c) << ',' << num(r.gamma_star) << ',' << num(r.lambda_double_star) << ','
       << (r.gamma_bar ? num(*r.gamma_bar) : std::string{}) << ',' << flag(r.zero_wait) << ','
       << to_string(r.boundary) << '\n';
  }
}

inline json shift_sweep_json(const std::vector<ShiftSweepRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"c", jnum(r.c)},
                   {"gamma_star", jnum(r.gamma_star)},
                   {"lambda_double_star", jnum(r.lambda_double_star)},
                   {"gamma_bar", r.gamma_bar ? jnum(*r.gamma_bar) : json(nullptr)},
                   {"zero_wait", r.zero_wait},
                   {"boundary", to_string(r.boundary)}});
  }
  return out;
}

// ---- policy comparison -----------------------------------------------------

inline void compare_csv(std::ostream& os, const PolicyComparison& cmp,
                        const std::optional<CrossoverReport>& crossover) {
  os << "policy,gamma,theta,lambda\n";
  for (const auto& p : cmp) {
    os << p.name << ',' << num(p.gamma) << ',' << num(p.theta) << ',' << num(p.lambda) << '\n';
  }
  if (!crossover) return;
  os << '\n' << "c,optimal_cutoff_zero_wait,no_cutoff_optimal_wait\n";
  for (const auto& r : crossover->rows) {
    os << num(r.c) << ',' << num(r.cutoff_zero_wait) << ',' << num(r.no_cutoff_optimal_wait)
       << '\n';
  }
  os << '\n' << "crossing_c\n";
  for (const double c : crossover->crossings) os << num(c) << '\n';
}

inline json compare_json(const PolicyComparison& cmp,
                         const std::optional<CrossoverReport>& crossover) {
  json policies = json::array();
  for (const auto& p : cmp) {
    policies.push_back({{"policy", p.name},
                        {"gamma", jnum(p.gamma)},
                        {"theta", jnum(p.theta)},
                        {"lambda", jnum(p.lambda)}});
  }
  json out = {{"policies", policies}};
  if (crossover) {
    json rows = json::array();
    for (const auto& r : crossover->rows) {
      rows.push_back({{"c", jnum(r.c)},
                      {"optimal_cutoff_zero_wait", jnum(r.cutoff_zero_wait)},
                      {"no_cutoff_optimal_wait", jnum(r.no_cutoff_optimal_wait)}});
    }
    json crossings = json::array();
    for (const double c : crossover->crossings) crossings.push_back(jnum(c));
    out["crossover"] = {{"rows", rows}, {"crossings", crossings}};
  }
  return out;
}

// ---- simulation ------------------------------------------------------------

// Analytic comparison attached by `simulate --check`.
struct SimCheck {
  double analytic_aoi;  // E[Q]/E[L] of the simulated policy
  double lambda_star;   // solver optimum for the same cutoff
  double gap_stderr;    // (avg_aoi - analytic_aoi) / std_error
};

inline void sim_csv(std::ostream& os, const SimReport& r, const Policy& policy,
                    const std::optional<SimCheck>& check) {
  os << "gamma,theta,avg_aoi,std_error,epochs,warmup,batches,seed,stream,total_area,total_length";
  if (check) os << ",analytic_aoi,lambda_star,gap_stderr";
  os << '\n'
     << num(policy.gamma) << ',' << num(policy.theta) << ',' << num(r.avg_aoi) << ','
     << num(r.std_error) << ',' << r.epochs << ',' << r.warmup << ',' << r.batches << ','
     << r.seed << ',' << r.stream << ',' << num(r.total_area) << ',' << num(r.total_length);
  if (check) {
    os << ',' << num(check->analytic_aoi) << ',' << num(check->lambda_star) << ','
       << num(check->gap_stderr);
  }
  os << '\n';
}

inline json sim_json(const SimReport& r, const Policy& policy, const std::optional<SimCheck>& check) {
  json j = {{"gamma", jnum(policy.gamma)},   {"theta", jnum(policy.theta)},
            {"avg_aoi", jnum(r.avg_aoi)},     {"std_error", jnum(r.std_error)},
            {"epochs", r.epochs},             {"warmup", r.warmup},
            {"batches", r.batches},           {"seed", r.seed},
            {"stream", r.stream},             {"total_area", jnum(r.total_area)},
            {"total_length", jnum(r.total_length)}};
  if (check) {
    j["analytic_aoi"] = jnum(check->analytic_aoi);
    j["lambda_star"] = jnum(check->lambda_star);
    j["gap_stderr"] = jnum(check->gap_stderr);
  }
  return j;
}

inline void trajectory_csv(std::ostream& os, const std::vector<AgePoint>& points) {
  os << "t,age\n";
  for (const auto& p : points) os << num(p.t) << ',' << num(p.age) << '\n';
}

inline json trajectory_json(const std::vector<AgePoint>& points) {
  json out = json::array();
  for (const auto& p : points) {
    out.push_back({{"t", jnum(p.t)}, {"age", jnum(p.age)}, {"event", to_string(p.event)}});
  }
  return out;
}

}  // namespace aoi::io
