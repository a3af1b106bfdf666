#pragma once

#include <cmath>

namespace aoi {

struct ScalarMinimum {
  double x;
  double fx;
  int evaluations;
};

// Golden-section search for a minimum of f on [lo, hi]; stops once the
// bracket is narrower than `width`. The best point seen is returned,
// including the end points.
template <typename F>
ScalarMinimum golden_section_minimize(F&& f, double lo, double hi, double width,
                                      int max_iterations = 200) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  ScalarMinimum best{lo, f(lo), 1};
  auto consider = [&best](double x, double fx) {
    if (fx < best.fx) {
      best.x = x;
      best.fx = fx;
    }
  };
  consider(hi, f(hi));
  ++best.evaluations;

  double a = lo;
  double b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  best.evaluations += 2;
  consider(x1, f1);
  consider(x2, f2);
  for (int i = 0; i < max_iterations && b - a > width; ++i) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
      consider(x1, f1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
      consider(x2, f2);
    }
    ++best.evaluations;
  }
  return best;
}

}  // namespace aoi
