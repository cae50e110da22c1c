#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace cansys {

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {a};
  std::vector<double> g(n);
  const double h = (b - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = a + h * static_cast<double>(i);
  g.back() = b;
  return g;
}

// Spectral grid x_k = tan(theta_k) with theta_k the midpoints of a uniform
// partition of (-pi/2, pi/2).  Under x = tan(theta) the Poisson measure
// dP = dx / (pi (1 + x^2)) becomes the uniform measure d(theta)/pi, so every
// node carries weight 1/n and sum(weights) = 1 exactly.
struct PoissonGrid {
  std::vector<double> x;
  std::vector<double> theta;
  double dtheta = 0.0;

  std::size_t size() const { return x.size(); }

  // Weight of node k for integrals against dP(x).
  double poissonWeight() const { return dtheta / std::numbers::pi; }

  // Weight of node k for integrals against dx (midpoint rule in theta).
  double lebesgueWeight(std::size_t k) const {
    return (1.0 + x[k] * x[k]) * dtheta;
  }
};

inline PoissonGrid makePoissonGrid(std::size_t n) {
  if (n == 0) throw std::invalid_argument("PoissonGrid: n must be positive");
  PoissonGrid g;
  g.dtheta = std::numbers::pi / static_cast<double>(n);
  g.theta.resize(n);
  g.x.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    g.theta[k] = -0.5 * std::numbers::pi + (static_cast<double>(k) + 0.5) * g.dtheta;
    g.x[k] = std::tan(g.theta[k]);
  }
  return g;
}

// Composite Gauss-Legendre quadrature: `cells` uniform subintervals of [a, b]
// with a 4-point rule on each.
template <typename F>
double quadGL4(F&& f, double a, double b, std::size_t cells) {
  static const double nodes[4] = {-0.8611363115940526, -0.3399810435848563,
                                  0.3399810435848563, 0.8611363115940526};
  static const double weights[4] = {0.3478548451374538, 0.6521451548625461,
                                    0.6521451548625461, 0.3478548451374538};
  const double h = (b - a) / static_cast<double>(cells);
  double sum = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    const double mid = a + (static_cast<double>(c) + 0.5) * h;
    double cell = 0.0;
    for (int j = 0; j < 4; ++j) cell += weights[j] * f(mid + 0.5 * h * nodes[j]);
    sum += 0.5 * h * cell;
  }
  return sum;
}

}  // namespace cansys
