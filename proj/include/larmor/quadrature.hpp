#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "larmor/error.hpp"

namespace larmor {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_n).
inline QuadratureRule gauss_legendre(int n) {
  require(n >= 1, "quadrature.order_positive", "Gauss-Legendre order must be >= 1");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // one more derivative evaluation at the converged node
    double p0 = 1.0, p1 = x;
    for (int j = 2; j <= n; ++j) {
      const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Composite rule: `panels` equal panels on [lo, hi], each with `base` mapped in.
inline QuadratureRule composite(const QuadratureRule& base, double lo, double hi, int panels) {
  require(panels >= 1, "quadrature.panels_positive", "need at least one panel");
  QuadratureRule out;
  const std::size_t p = base.nodes.size();
  out.nodes.reserve(p * panels);
  out.weights.reserve(p * panels);
  const double width = (hi - lo) / panels;
  for (int j = 0; j < panels; ++j) {
    const double a = lo + j * width;
    const double mid = a + 0.5 * width;
    for (std::size_t i = 0; i < p; ++i) {
      out.nodes.push_back(mid + 0.5 * width * base.nodes[i]);
      out.weights.push_back(0.5 * width * base.weights[i]);
    }
  }
  return out;
}

/// Trapezoid rule on a uniform grid.
inline double trapezoid(std::span<const double> f, double h) {
  if (f.size() < 2) return 0.0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
  return s * h;
}

/// Running integral F_j = int_0^{t_j} f dt on a uniform grid: trapezoid plus
/// the first Euler-Maclaurin end correction, -h^2/12 (f'(t_j) - f'(0)), with
/// f' from second-order finite differences. Fourth-order accurate for smooth f.
template <class T>
std::vector<T> cumulative_integral(std::span<const T> f, double h) {
  const std::size_t n = f.size();
  std::vector<T> out(n, T{});
  if (n < 3) {
    for (std::size_t i = 1; i < n; ++i) out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
    return out;
  }
  auto deriv = [&](std::size_t i) -> T {
    if (i == 0) return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    if (i == n - 1) return (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    return (f[i + 1] - f[i - 1]) / (2.0 * h);
  };
  const T d0 = deriv(0);
  T acc{};
  for (std::size_t i = 1; i < n; ++i) {
    acc += 0.5 * h * (f[i - 1] + f[i]);
    out[i] = acc - (h * h / 12.0) * (deriv(i) - d0);
  }
  return out;
}

}  // namespace larmor
