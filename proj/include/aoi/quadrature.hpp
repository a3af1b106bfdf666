#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "aoi/errors.hpp"

namespace aoi {

struct QuadratureTolerance {
  double absolute = 1e-10;
  double relative = 1e-9;
  unsigned max_depth = 25;
};

// Adaptive Gauss-Kronrod (7/15) over a finite interval. The embedded error
// estimate must satisfy err <= max(absolute, relative * L1) or the call
// throws QuadratureFailure.
template <typename F>
double integrate(F&& f, double lo, double hi, const QuadratureTolerance& tol = {}) {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw QuadratureFailure("integrate: invalid interval [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
  }
  if (lo == hi) return 0.0;
  using rule = boost::math::quadrature::gauss_kronrod<double, 15>;
  double error = 0.0;
  double l1 = 0.0;
  double value = rule::integrate(f, lo, hi, 0, 0.0, &error, &l1);
  if (error > std::max(tol.absolute, tol.relative * l1)) {
    // Boost stops on a relative criterion only; fold the absolute floor into it.
    const double relative = l1 > 0.0 ? std::max(tol.relative, tol.absolute / l1) : tol.relative;
    value = rule::integrate(f, lo, hi, tol.max_depth, relative, &error, &l1);
  }
  if (!std::isfinite(value) || error > std::max(tol.absolute, tol.relative * l1)) {
    throw QuadratureFailure("integrate: error estimate " + std::to_string(error) +
                            " exceeds tolerance on [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
  }
  return value;
}

}  // namespace aoi
