#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aoi/analysis.hpp"
#include "aoi/cutoff.hpp"
#include "aoi/distribution.hpp"
#include "aoi/io.hpp"
#include "aoi/simulation.hpp"

namespace aoi::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

struct RunConfig {
  std::string command;
  std::string dist;
  std::string gamma = "inf";
  std::string theta = "auto";
  std::optional<double> gamma_min;
  std::optional<double> gamma_max;
  std::uint64_t grid = 200;
  std::uint64_t epochs = 1000000;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> warmup;
  std::string format = "csv";
  std::string output;
  std::string trajectory;
  bool check = false;
  bool c_sweep = false;
  double c_min = 0.0;
  double c_max = 2.0;
  std::uint64_t c_steps = 41;

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string quote(const std::string& s) { return '"' + s + '"'; }

inline double parse_real(const std::string& text, const std::string& what) {
  if (text == "inf" || text == "infinity") return kInfinity;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || std::isnan(v)) {
    throw ConfigError(what + " must be a number or 'inf', got '" + text + "'");
  }
  return v;
}

}  // namespace detail

/// Flat key=value rendering mirroring the flags; readable by --config.
/// The command itself is positional and not part of the file.
inline std::string to_config_text(const RunConfig& cfg) {
  using aoi::detail::format_number;
  using detail::quote;
  std::ostringstream os;
  os << "dist=" << quote(cfg.dist) << '\n'
     << "gamma=" << quote(cfg.gamma) << '\n'
     << "theta=" << quote(cfg.theta) << '\n';
  if (cfg.gamma_min) os << "gamma-min=" << format_number(*cfg.gamma_min) << '\n';
  if (cfg.gamma_max) os << "gamma-max=" << format_number(*cfg.gamma_max) << '\n';
  os << "grid=" << cfg.grid << '\n'
     << "epochs=" << cfg.epochs << '\n'
     << "seed=" << cfg.seed << '\n';
  if (cfg.warmup) os << "warmup=" << *cfg.warmup << '\n';
  os << "format=" << quote(cfg.format) << '\n';
  if (!cfg.output.empty()) os << "output=" << quote(cfg.output) << '\n';
  if (!cfg.trajectory.empty()) os << "trajectory=" << quote(cfg.trajectory) << '\n';
  os << "check=" << (cfg.check ? "true" : "false") << '\n'
     << "c-sweep=" << (cfg.c_sweep ? "true" : "false") << '\n'
     << "c-min=" << format_number(cfg.c_min) << '\n'
     << "c-max=" << format_number(cfg.c_max) << '\n'
     << "c-steps=" << cfg.c_steps << '\n';
  return os.str();
}

struct ParseOutcome {
  RunConfig config;
  std::optional<int> exit_code;  // set when parsing ended the run (help, error)
};

inline void build_app(CLI::App& app, RunConfig& cfg) {
  app.require_subcommand(0);
  app.add_option("command", cfg.command, "solve | sweep | compare | simulate")
      ->required()
      ->check(CLI::IsMember({"solve", "sweep", "compare", "simulate"}));
  app.set_config("--config", "", "flat key=value file mirroring the flags");
  app.add_option("--dist", cfg.dist, "service law, e.g. exp:rate=1, sexp:rate=1,c=0.5, det:c=2")
      ->required();
  app.add_option("--gamma", cfg.gamma, "cutoff (number or inf)");
  app.add_option("--theta", cfg.theta, "waiting threshold: auto or a number");
  app.add_option("--gamma-min", cfg.gamma_min, "sweep lower cutoff");
  app.add_option("--gamma-max", cfg.gamma_max, "sweep upper cutoff");
  app.add_option("--grid", cfg.grid, "coarse sweep grid points");
  app.add_option("--epochs", cfg.epochs, "simulated epochs");
  app.add_option("--seed", cfg.seed, "64-bit seed")->envname("AOI_SEED");
  app.add_option("--warmup", cfg.warmup, "discarded epochs (default max(1%, 100))");
  app.add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--output", cfg.output, "output file (default: stdout)");
  app.add_option("--trajectory", cfg.trajectory, "write the age sample path (t, age) here");
  app.add_flag("--check", cfg.check, "compare the simulation with the analytic value");
  app.add_flag("--c-sweep", cfg.c_sweep, "sweep the shift c of a shifted exponential");
  app.add_option("--c-min", cfg.c_min, "first shift of the c grid");
  app.add_option("--c-max", cfg.c_max, "last shift of the c grid");
  app.add_option("--c-steps", cfg.c_steps, "points in the c grid (0 disables the crossover table)");
}

inline ParseOutcome parse_args(const std::vector<std::string>& args, std::ostream& err) {
  ParseOutcome out;
  CLI::App app{"Age-of-information optimal preemption and waiting"};
  app.name("aoi");
  build_app(app, out.config);
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    err << app.help();
    out.exit_code = kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    out.exit_code = kExitConfig;
  }
  return out;
}

namespace detail {

struct Prepared {
  ServiceDistribution dist;
  double gamma;
  std::optional<double> theta;  // empty: auto
};

inline Prepared prepare(const RunConfig& cfg) {
  Prepared p{parse_distribution(cfg.dist), parse_real(cfg.gamma, "--gamma"), std::nullopt};
  if (p.gamma < p.dist.shift()) throw ConfigError("--gamma must be >= c");
  if (cfg.theta != "auto") p.theta = parse_real(cfg.theta, "--theta");
  if (cfg.grid < 2) throw ConfigError("--grid must be >= 2");
  if (cfg.c_min < 0.0 || cfg.c_max < cfg.c_min) throw ConfigError("need 0 <= --c-min <= --c-max");
  if (cfg.command == "simulate") {
    if (cfg.trajectory.empty() || cfg.epochs >= 1000) {
      if (cfg.epochs < 1000) throw ConfigError("--epochs must be >= 1000");
      if (cfg.warmup && *cfg.warmup >= cfg.epochs) throw ConfigError("--warmup must be < --epochs");
    }
    if (!cfg.trajectory.empty() && cfg.epochs < 1) throw ConfigError("--epochs must be >= 1");
  }
  return p;
}

inline std::vector<double> shift_grid(const RunConfig& cfg) {
  std::vector<double> cs;
  if (cfg.c_steps == 0) return cs;
  if (cfg.c_steps == 1) return {cfg.c_min};
  for (std::uint64_t i = 0; i < cfg.c_steps; ++i) {
    cs.push_back(cfg.c_min + (cfg.c_max - cfg.c_min) * static_cast<double>(i) /
                                 static_cast<double>(cfg.c_steps - 1));
  }
  return cs;
}

inline double exponential_rate(const ServiceDistribution& dist) {
  if (const auto* e = std::get_if<Exponential>(&dist.kind())) return e->rate;
  if (const auto* s = std::get_if<ShiftedExponential>(&dist.kind())) return s->rate;
  throw ConfigError("this mode needs an exp or sexp distribution");
}

inline void emit(std::ostream& os, const io::json& j) { os << j.dump(2) << '\n'; }

inline void run_solve(const RunConfig& cfg, const Prepared& p, std::ostream& os) {
  const SolveResult r = solve_lambda(p.dist, p.gamma);
  if (cfg.format == "json") {
    emit(os, io::solve_json(r));
  } else {
    io::solve_csv(os, r);
  }
}

inline void run_sweep(const RunConfig& cfg, const Prepared& p, std::ostream& os) {
  if (cfg.c_sweep) {
    const auto rows = shift_sweep(exponential_rate(p.dist), shift_grid(cfg), cfg.grid);
    if (cfg.format == "json") {
      emit(os, io::shift_sweep_json(rows));
    } else {
      io::shift_sweep_csv(os, rows);
    }
    return;
  }
  const GammaRange range = default_gamma_range(p.dist);
  const CutoffSweep sweep = optimize_gamma(p.dist, cfg.gamma_min.value_or(range.lo),
                                           cfg.gamma_max.value_or(range.hi), cfg.grid);
  if (cfg.format == "json") {
    emit(os, io::sweep_json(sweep));
  } else {
    io::sweep_csv(os, sweep);
  }
}

inline void run_compare(const RunConfig& cfg, const Prepared& p, std::ostream& os) {
  const PolicyComparison cmp = compare_policies(p.dist, cfg.grid);
  std::optional<CrossoverReport> crossover;
  if (p.dist.is_exponential_family() && cfg.c_steps > 0) {
    crossover = crossover_report(exponential_rate(p.dist), shift_grid(cfg), cfg.grid);
  }
  if (cfg.format == "json") {
    emit(os, io::compare_json(cmp, crossover));
  } else {
    io::compare_csv(os, cmp, crossover);
  }
}

inline void run_simulate(const RunConfig& cfg, const Prepared& p, std::ostream& os) {
  Policy policy{p.gamma, p.dist.shift()};
  std::optional<SolveResult> solved;
  if (p.theta) {
    policy.theta = *p.theta;
  } else {
    solved = solve_lambda(p.dist, p.gamma);
    policy = policy_from(*solved, p.dist);
  }
  validate_policy(policy, p.dist);

  if (!cfg.trajectory.empty()) {
    const Trajectory tr = export_trajectory(policy, p.dist, std::min<std::uint64_t>(cfg.epochs, 10000),
                                            cfg.seed);
    std::ofstream f(cfg.trajectory);
    if (!f) throw ConfigError("cannot open trajectory file " + cfg.trajectory);
    const bool as_json = cfg.trajectory.size() >= 5 &&
                         cfg.trajectory.compare(cfg.trajectory.size() - 5, 5, ".json") == 0;
    if (as_json) {
      f << io::trajectory_json(tr.points).dump(2) << '\n';
    } else {
      io::trajectory_csv(f, tr.points);
    }
    if (cfg.epochs < 1000) return;
  }

  SimOptions opts;
  opts.warmup = cfg.warmup;
  const SimReport report = run_simulation(policy, p.dist, cfg.epochs, cfg.seed, opts);
  std::optional<io::SimCheck> check;
  if (cfg.check) {
    if (!solved) solved = solve_lambda(p.dist, p.gamma);
    const double analytic = policy_cost(p.dist, epoch_stats(p.dist, p.gamma), policy.theta).ratio();
    check = io::SimCheck{analytic, solved->lambda_star,
                         (report.avg_aoi - analytic) / report.std_error};
  }
  if (cfg.format == "json") {
    emit(os, io::sim_json(report, policy, check));
  } else {
    io::sim_csv(os, report, policy, check);
  }
}

}  // namespace detail

/// Executes a parsed configuration. Returns 0 on success, 2 for invalid
/// configuration (detected before any computation), 3 for numerical failures.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::optional<detail::Prepared> prepared;
  try {
    prepared = detail::prepare(cfg);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  std::ostringstream buffer;
  try {
    if (cfg.command == "solve") {
      detail::run_solve(cfg, *prepared, buffer);
    } else if (cfg.command == "sweep") {
      detail::run_sweep(cfg, *prepared, buffer);
    } else if (cfg.command == "compare") {
      detail::run_compare(cfg, *prepared, buffer);
    } else if (cfg.command == "simulate") {
      detail::run_simulate(cfg, *prepared, buffer);
    } else {
      err << "config error: unknown command '" << cfg.command << "'\n";
      return kExitConfig;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  }

  if (cfg.output.empty()) {
    out << buffer.str();
  } else {
    std::ofstream f(cfg.output);
    if (!f) {
      err << "config error: cannot open output file " << cfg.output << '\n';
      return kExitConfig;
    }
    f << buffer.str();
  }
  return kExitOk;
}

inline int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const ParseOutcome parsed = parse_args(args, err);
  if (parsed.exit_code) return *parsed.exit_code;
  return run(parsed.config, out, err);
}

}  // namespace aoi::cli
