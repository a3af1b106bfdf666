#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <utility>
#include <variant>

#include <boost/math/special_functions/gamma.hpp>

#include "aoi/errors.hpp"
#include "aoi/quadrature.hpp"
#include "aoi/rng.hpp"

namespace aoi {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Below this P(X <= gamma) every upload is preempted for practical purposes.
inline constexpr double kMinTruncationMass = 1e-12;

// Generic densities are integrated up to the point where the envelope tail
// mass drops below this.
inline constexpr double kTailMass = 1e-12;

struct Exponential {
  double rate;
};

struct ShiftedExponential {
  double rate;
  double shift;
};

// Point mass at `value`. Not a continuous law; every epoch quantity collapses
// to a closed form, which makes it useful for edge cases.
struct Deterministic {
  double value;
};

// Arbitrary density on [shift, inf). Sampling is by rejection from the
// envelope envelope_bound * Exp(envelope_rate) shifted to `shift`, so the
// caller must guarantee pdf(x) <= envelope_bound * envelope_rate *
// exp(-envelope_rate * (x - shift)).
struct GenericDensity {
  std::shared_ptr<const std::function<double(double)>> pdf;
  double shift;
  double envelope_rate;
  double envelope_bound;
  std::string name;
};

// Raw partial moments: integral of y^k f_X(y) over [c, upper] for k = 0, 1, 2.
struct PartialMoments {
  double mass = 0.0;
  double first = 0.0;
  double second = 0.0;
};

// Moments of the completed service time Y = X | X <= gamma.
struct TruncatedAgeMoments {
  double gamma;
  double p;   // P(X <= gamma)
  double q;   // 1 - p, computed without cancellation where possible
  double ey;  // E[Y]
  double ey2; // E[Y^2]
};

namespace detail {

inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

// P(Gamma(k + 1, 1) <= x), i.e. 1 - e^{-x} sum_{j<=k} x^j / j!.
inline double gamma_cdf_unit(int k, double x) {
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(static_cast<double>(k + 1), x);
}

// Partial moments of c + Exp(rate) over [c, upper].
inline PartialMoments shifted_exponential_partial(double rate, double c, double upper) {
  if (upper < c) return {};
  const double x = std::isinf(upper) ? kInfinity : rate * (upper - c);
  const double g0 = gamma_cdf_unit(0, x);
  const double g1 = gamma_cdf_unit(1, x);
  const double g2 = gamma_cdf_unit(2, x);
  const double z1 = g1 / rate;
  const double z2 = 2.0 * g2 / (rate * rate);
  return {g0, c * g0 + z1, c * c * g0 + 2.0 * c * z1 + z2};
}

inline void require_rate(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw DomainError("rate must be positive and finite, got " + format_number(rate));
  }
}

inline void require_shift(double c, bool strictly_positive) {
  if (!std::isfinite(c) || c < 0.0 || (strictly_positive && c == 0.0)) {
    throw DomainError("shift c must be " + std::string(strictly_positive ? "> 0" : ">= 0") +
                      ", got " + format_number(c));
  }
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace detail

/// A service-time law X with X >= shift() almost surely.
///
/// Instances are immutable; every query is const and safe to call
/// concurrently. The exponential family and the point mass use closed forms,
/// generic densities fall back to adaptive quadrature.
class ServiceDistribution {
 public:
  using Kind = std::variant<Exponential, ShiftedExponential, Deterministic, GenericDensity>;

  static ServiceDistribution exponential(double rate) {
    detail::require_rate(rate);
    return ServiceDistribution(Exponential{rate});
  }

  static ServiceDistribution shifted_exponential(double rate, double shift) {
    detail::require_rate(rate);
    detail::require_shift(shift, true);
    return ServiceDistribution(ShiftedExponential{rate, shift});
  }

  // Exponential when shift == 0, shifted exponential otherwise.
  static ServiceDistribution exponential_family(double rate, double shift) {
    return shift == 0.0 ? exponential(rate) : shifted_exponential(rate, shift);
  }

  static ServiceDistribution deterministic(double value) {
    detail::require_shift(value, true);
    return ServiceDistribution(Deterministic{value});
  }

  static ServiceDistribution generic(std::function<double(double)> pdf, double shift,
                                     double envelope_rate, double envelope_bound,
                                     std::string name = "generic") {
    detail::require_shift(shift, false);
    detail::require_rate(envelope_rate);
    if (!(envelope_bound >= 1.0) || !std::isfinite(envelope_bound)) {
      throw DomainError("envelope bound must be >= 1");
    }
    ServiceDistribution d(GenericDensity{
        std::make_shared<const std::function<double(double)>>(std::move(pdf)), shift,
        envelope_rate, envelope_bound, std::move(name)});
    const auto full = d.partial_moments(kInfinity);
    if (std::abs(full.mass - 1.0) > 1e-6) {
      throw DomainError("density integrates to " + detail::format_number(full.mass) +
                        " instead of 1");
    }
    d.mean_ = full.first;
    d.second_moment_ = full.second;
    return d;
  }

  /// Erlang(k, rate) shifted to start at `shift`, exposed as a generic
  /// density so it exercises the quadrature and rejection-sampling paths.
  static ServiceDistribution erlang(int k, double rate, double shift = 0.0) {
    if (k < 1) throw DomainError("erlang shape k must be >= 1");
    detail::require_rate(rate);
    detail::require_shift(shift, false);
    const double log_norm = k * std::log(rate) - std::lgamma(static_cast<double>(k));
    auto pdf = [k, rate, shift, log_norm](double x) {
      const double z = x - shift;
      if (z < 0.0) return 0.0;
      if (z == 0.0) return k == 1 ? rate : 0.0;
      return std::exp(log_norm + (k - 1) * std::log(z) - rate * z);
    };
    // The density ratio against (rate/2) e^{-rate z / 2} peaks at z = 2(k-1)/rate.
    double env_rate = rate;
    double env_bound = 1.0;
    if (k > 1) {
      env_rate = rate / 2.0;
      const double km1 = k - 1;
      env_bound = std::exp(std::log(2.0) + km1 * std::log(2.0 * km1) - km1 -
                           std::lgamma(static_cast<double>(k)));
    }
    std::string name = "erlang:k=" + std::to_string(k) + ",rate=" + detail::format_number(rate);
    if (shift != 0.0) name += ",c=" + detail::format_number(shift);
    return generic(pdf, shift, env_rate, env_bound, std::move(name));
  }

  const Kind& kind() const noexcept { return kind_; }

  double shift() const noexcept {
    return std::visit(detail::overloaded{
                          [](const Exponential&) { return 0.0; },
                          [](const ShiftedExponential& d) { return d.shift; },
                          [](const Deterministic& d) { return d.value; },
                          [](const GenericDensity& d) { return d.shift; },
                      },
                      kind_);
  }

  bool is_exponential_family() const noexcept {
    return std::holds_alternative<Exponential>(kind_) ||
           std::holds_alternative<ShiftedExponential>(kind_);
  }

  bool is_deterministic() const noexcept { return std::holds_alternative<Deterministic>(kind_); }

  // Density; a point mass has none and reports 0 everywhere.
  double pdf(double x) const {
    return std::visit(detail::overloaded{
                          [x](const Exponential& d) {
                            return x < 0.0 ? 0.0 : d.rate * std::exp(-d.rate * x);
                          },
                          [x](const ShiftedExponential& d) {
                            return x < d.shift ? 0.0 : d.rate * std::exp(-d.rate * (x - d.shift));
                          },
                          [](const Deterministic&) { return 0.0; },
                          [x](const GenericDensity& d) { return x < d.shift ? 0.0 : (*d.pdf)(x); },
                      },
                      kind_);
  }

  double cdf(double x) const {
    if (std::isinf(x) && x > 0) return 1.0;
    return std::clamp(partial_moments(x).mass, 0.0, 1.0);
  }

  // P(X > x) without the cancellation of 1 - cdf for the closed-form kinds.
  double survival(double x) const {
    if (std::isinf(x) && x > 0) return 0.0;
    return std::visit(detail::overloaded{
                          [x](const Exponential& d) {
                            return x <= 0.0 ? 1.0 : std::exp(-d.rate * x);
                          },
                          [x](const ShiftedExponential& d) {
                            return x <= d.shift ? 1.0 : std::exp(-d.rate * (x - d.shift));
                          },
                          [x](const Deterministic& d) { return x < d.value ? 1.0 : 0.0; },
                          [this, x](const GenericDensity& d) {
                            if (x <= d.shift) return 1.0;
                            const double upper = tail_limit(d);
                            if (x >= upper) return 0.0;
                            return std::clamp(
                                integrate([&d](double y) { return (*d.pdf)(y); }, x, upper), 0.0,
                                1.0);
                          },
                      },
                      kind_);
  }

  PartialMoments partial_moments(double upper) const {
    return std::visit(
        detail::overloaded{
            [upper](const Exponential& d) {
              return detail::shifted_exponential_partial(d.rate, 0.0, upper);
            },
            [upper](const ShiftedExponential& d) {
              return detail::shifted_exponential_partial(d.rate, d.shift, upper);
            },
            [upper](const Deterministic& d) {
              if (upper < d.value) return PartialMoments{};
              return PartialMoments{1.0, d.value, d.value * d.value};
            },
            [upper](const GenericDensity& d) {
              if (upper <= d.shift) return PartialMoments{};
              const double hi = std::min(upper, tail_limit(d));
              const auto& f = *d.pdf;
              return PartialMoments{
                  integrate([&f](double y) { return f(y); }, d.shift, hi),
                  integrate([&f](double y) { return y * f(y); }, d.shift, hi),
                  integrate([&f](double y) { return y * y * f(y); }, d.shift, hi),
              };
            },
        },
        kind_);
  }

  double mean() const {
    return std::visit(detail::overloaded{
                          [](const Exponential& d) { return 1.0 / d.rate; },
                          [](const ShiftedExponential& d) { return d.shift + 1.0 / d.rate; },
                          [](const Deterministic& d) { return d.value; },
                          [this](const GenericDensity&) { return mean_; },
                      },
                      kind_);
  }

  double second_moment() const {
    return std::visit(detail::overloaded{
                          [](const Exponential& d) { return 2.0 / (d.rate * d.rate); },
                          [](const ShiftedExponential& d) {
                            return d.shift * d.shift + 2.0 * d.shift / d.rate +
                                   2.0 / (d.rate * d.rate);
                          },
                          [](const Deterministic& d) { return d.value * d.value; },
                          [this](const GenericDensity&) { return second_moment_; },
                      },
                      kind_);
  }

  // One unconditional draw of X.
  template <typename Rng>
  double sample(Rng& rng) const {
    return std::visit(detail::overloaded{
                          [&rng](const Exponential& d) { return exponential_variate(rng, d.rate); },
                          [&rng](const ShiftedExponential& d) {
                            return d.shift + exponential_variate(rng, d.rate);
                          },
                          [](const Deterministic& d) { return d.value; },
                          [&rng](const GenericDensity& d) {
                            for (;;) {
                              const double z = exponential_variate(rng, d.envelope_rate);
                              const double x = d.shift + z;
                              const double envelope =
                                  d.envelope_bound * d.envelope_rate * std::exp(-d.envelope_rate * z);
                              if (uniform01(rng) * envelope <= (*d.pdf)(x)) return x;
                            }
                          },
                      },
                      kind_);
  }

  // Config token, e.g. "sexp:rate=1,c=0.5". Generic densities report their name.
  std::string token() const {
    using detail::format_number;
    return std::visit(
        detail::overloaded{
            [](const Exponential& d) { return "exp:rate=" + format_number(d.rate); },
            [](const ShiftedExponential& d) {
              return "sexp:rate=" + format_number(d.rate) + ",c=" + format_number(d.shift);
            },
            [](const Deterministic& d) { return "det:c=" + format_number(d.value); },
            [](const GenericDensity& d) { return d.name; },
        },
        kind_);
  }

 private:
  explicit ServiceDistribution(Kind kind) : kind_(std::move(kind)) {}

  static double tail_limit(const GenericDensity& d) {
    return d.shift + std::log(d.envelope_bound / kTailMass) / d.envelope_rate;
  }

  Kind kind_;
  double mean_ = 0.0;
  double second_moment_ = 0.0;
};

/// Parses `kind:key=value[,key=value]*`. Kinds: exp (rate), sexp (rate, c),
/// det (c), erlang (k, rate, optional c).
inline ServiceDistribution parse_distribution(std::string_view token) {
  const auto colon = token.find(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw ConfigError("distribution token '" + std::string(token) + "' is not kind:key=value");
  }
  const std::string kind(token.substr(0, colon));
  std::string_view rest = token.substr(colon + 1);
  if (rest.empty()) throw ConfigError("distribution token '" + std::string(token) + "' has no parameters");

  std::map<std::string, double> params;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view pair = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    if (comma != std::string_view::npos && rest.empty()) {
      throw ConfigError("trailing ',' in distribution token");
    }
    const auto eq = pair.find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 == pair.size()) {
      throw ConfigError("malformed parameter '" + std::string(pair) + "'");
    }
    const std::string key(pair.substr(0, eq));
    const std::string_view text = pair.substr(eq + 1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
      throw ConfigError("parameter '" + key + "' has non-numeric value '" + std::string(text) + "'");
    }
    if (!params.emplace(key, value).second) throw ConfigError("duplicate parameter '" + key + "'");
  }

  auto take = [&](const std::string& key) {
    auto it = params.find(key);
    if (it == params.end()) throw ConfigError(kind + " requires parameter '" + key + "'");
    const double v = it->second;
    params.erase(it);
    return v;
  };
  auto take_or = [&](const std::string& key, double fallback) {
    return params.count(key) ? take(key) : fallback;
  };
  auto finish = [&](ServiceDistribution d) {
    if (!params.empty()) {
      throw ConfigError("unknown parameter '" + params.begin()->first + "' for kind " + kind);
    }
    return d;
  };

  try {
    if (kind == "exp") return finish(ServiceDistribution::exponential(take("rate")));
    if (kind == "sexp") {
      const double rate = take("rate");
      return finish(ServiceDistribution::shifted_exponential(rate, take("c")));
    }
    if (kind == "det") return finish(ServiceDistribution::deterministic(take("c")));
    if (kind == "erlang") {
      const double k = take("k");
      if (k != std::floor(k) || k < 1 || k > 64) throw ConfigError("erlang k must be an integer in [1, 64]");
      const double rate = take("rate");
      return finish(ServiceDistribution::erlang(static_cast<int>(k), rate, take_or("c", 0.0)));
    }
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unknown distribution kind '" + kind + "'");
}

/// P(X <= gamma). Throws TruncationMassZero when the mass is at most
/// kMinTruncationMass.
inline double truncation_prob(const ServiceDistribution& dist, double gamma) {
  if (std::isnan(gamma) || gamma < dist.shift()) {
    throw DomainError("cutoff gamma must be >= c = " + detail::format_number(dist.shift()));
  }
  const double p = std::isinf(gamma) ? 1.0 : dist.cdf(gamma);
  if (p <= kMinTruncationMass) {
    throw TruncationMassZero("P(X <= " + detail::format_number(gamma) + ") = " +
                             detail::format_number(p) + " leaves nothing to deliver");
  }
  return p;
}

inline TruncatedAgeMoments truncated_moments(const ServiceDistribution& dist, double gamma) {
  truncation_prob(dist, gamma);
  const PartialMoments pm = dist.partial_moments(gamma);
  if (pm.mass <= kMinTruncationMass) {
    throw TruncationMassZero("truncated mass vanished at gamma = " + detail::format_number(gamma));
  }
  TruncatedAgeMoments m{};
  m.gamma = gamma;
  m.p = std::min(pm.mass, 1.0);
  m.q = std::isinf(gamma) ? 0.0 : dist.survival(gamma);
  if (!dist.is_exponential_family() && !dist.is_deterministic() && m.q > 0.5) {
    m.q = 1.0 - m.p;
  }
  m.ey = pm.first / pm.mass;
  m.ey2 = pm.second / pm.mass;
  return m;
}

}  // namespace aoi
