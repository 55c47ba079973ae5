#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "bkmf/core.hpp"

namespace bkmf {

// A scalar function of a complex variable together with its derivative; the
// derivative is what divided differences degenerate to on confluent nodes.
struct ScalarFunction {
  std::function<Complex(Complex)> f;
  std::function<Complex(Complex)> df;
  std::string name;

  Complex operator()(Complex z) const { return f(z); }

  // First divided difference f[a, b], switching to the derivative once the
  // nodes are closer than a relative 1e-8.
  Complex divided_difference(Complex a, Complex b) const {
    const double scale = 1.0 + std::max(std::abs(a), std::abs(b));
    if (std::abs(a - b) < 1e-8 * scale) return df(0.5 * (a + b));
    return (f(a) - f(b)) / (a - b);
  }

  static ScalarFunction exponential(double t = 1.0) {
    return {[t](Complex z) { return std::exp(t * z); },
            [t](Complex z) { return t * std::exp(t * z); },
            "exp(" + std::to_string(t) + "*z)"};
  }
  static ScalarFunction inverse() {
    return {[](Complex z) { return 1.0 / z; },
            [](Complex z) { return -1.0 / (z * z); }, "1/z"};
  }
  // Principal branch of z^{-1/2}.
  static ScalarFunction inverse_sqrt() {
    return {[](Complex z) { return 1.0 / std::sqrt(z); },
            [](Complex z) { return -0.5 / (z * std::sqrt(z)); }, "z^(-1/2)"};
  }
  // Shifted resolvent g(z) = 1 / (p - z) for a fixed point p.
  static ScalarFunction resolvent_at(Complex p) {
    return {[p](Complex z) { return 1.0 / (p - z); },
            [p](Complex z) { return 1.0 / ((p - z) * (p - z)); }, "1/(p-z)"};
  }
  // User-supplied function with a central-difference derivative fallback.
  static ScalarFunction custom(std::function<Complex(Complex)> f,
                               std::string name = "custom") {
    auto df = [f](Complex z) {
      const double h = 1e-6 * (1.0 + std::abs(z));
      return (f(z + h) - f(z - h)) / (2.0 * h);
    };
    return {std::move(f), std::move(df), std::move(name)};
  }
  static ScalarFunction custom(std::function<Complex(Complex)> f,
                               std::function<Complex(Complex)> df,
                               std::string name = "custom") {
    return {std::move(f), std::move(df), std::move(name)};
  }
};

}  // namespace bkmf
