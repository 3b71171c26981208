#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "rhom/units.hpp"

namespace rhom::quad {

/// Gauss-Legendre nodes and weights on [-1, 1].
template <std::size_t N>
struct GaussLegendre {
  std::array<double, N> node{};
  std::array<double, N> weight{};

  GaussLegendre() {
    for (std::size_t i = 0; i < (N + 1) / 2; ++i) {
      double x = std::cos(units::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(N) + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0;
        double p1 = x;
        for (std::size_t k = 2; k <= N; ++k) {
          const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
          p0 = p1;
          p1 = pk;
        }
        dp = static_cast<double>(N) * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      node[i] = -x;
      node[N - 1 - i] = x;
      weight[i] = weight[N - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }
};

inline const GaussLegendre<16>& gl16() {
  static const GaussLegendre<16> rule;
  return rule;
}

/// Composite 16-point Gauss-Legendre over [a, b] split into `panels`.
template <class F>
auto integrate(F&& f, double a, double b, std::size_t panels) {
  const auto& rule = gl16();
  const double h = (b - a) / static_cast<double>(panels);
  decltype(f(a)) sum{};
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = a + (static_cast<double>(p) + 0.5) * h;
    decltype(f(a)) panel{};
    for (std::size_t i = 0; i < 16; ++i) panel += rule.weight[i] * f(mid + 0.5 * h * rule.node[i]);
    sum += 0.5 * h * panel;
  }
  return sum;
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace rhom::quad
