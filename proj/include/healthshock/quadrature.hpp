#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace healthshock {

/// Adaptive 15-point Gauss-Kronrod integral of f over [a, b].
///
/// The interval is mapped onto [0, 1] first: Boost compares its error estimate
/// in the reference coordinates against a tolerance in the caller's, so a
/// short interval would otherwise never meet the target and recurse to full
/// depth.
template <class F>
double integrate(F&& f, double a, double b) {
  if (a == b) return 0.0;
  const double width = b - a;
  auto unit = [&](double u) { return f(a + width * u) * width; };
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(unit, 0.0, 1.0, 20, 1e-13);
}

}  // namespace healthshock
