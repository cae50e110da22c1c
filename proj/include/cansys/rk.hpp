#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cansys/mat2.hpp"

namespace cansys {

// Thrown when an integration cannot continue (step-size underflow,
// positivity loss, vanishing denominators).  Carries the last time that was
// reached with the requested accuracy.
struct NumericError : std::runtime_error {
  double last_good_t;
  NumericError(const std::string& what, double t)
      : std::runtime_error(what), last_good_t(t) {}
};

struct StepControl {
  double tol = 1e-10;     // error-per-unit-step budget
  double h_init = 0.05;
  double h_max = 0.25;
  double h_min_rel = 1e-14;
};

namespace detail {

// Dormand-Prince 5(4) coefficients.
inline constexpr double dpC[7] = {0., 1. / 5, 3. / 10, 4. / 5, 8. / 9, 1., 1.};
inline constexpr double dpA[7][6] = {
    {},
    {1. / 5},
    {3. / 40, 9. / 40},
    {44. / 45, -56. / 15, 32. / 9},
    {19372. / 6561, -25360. / 2187, 64448. / 6561, -212. / 729},
    {9017. / 3168, -355. / 33, 46732. / 5247, 49. / 176, -5103. / 18656},
    {35. / 384, 0., 500. / 1113, 125. / 192, -2187. / 6784, 11. / 84}};
inline constexpr double dpB5[7] = {35. / 384,     0., 500. / 1113, 125. / 192,
                                   -2187. / 6784, 11. / 84,        0.};
inline constexpr double dpB4[7] = {5179. / 57600,    0.,           7571. / 16695,
                                   393. / 640,       -92097. / 339200,
                                   187. / 2100,      1. / 40};

}  // namespace detail

// Adaptive Dormand-Prince 5(4) driver for a linear non-autonomous system.
// State must support +, scalar *, and maxAbs().  Output states are produced
// exactly at the requested times (steps are clipped onto them), so results
// are deterministic for a fixed tolerance and grid.
//
// Error control is per unit step: a step of size h is accepted when the
// embedded estimate is below 0.5 * tol * h, which keeps the accumulated
// drift over [0, T] within T/2 * tol.
template <typename State, typename Rhs>
std::vector<State> integrateAt(Rhs&& rhs, State y0, std::span<const double> t_out,
                               const StepControl& ctl) {
  std::vector<State> out;
  out.reserve(t_out.size());
  if (t_out.empty()) return out;

  double t = t_out.front();
  State y = y0;
  out.push_back(y);

  double h = std::min(ctl.h_init, ctl.h_max);
  State k[7];

  for (std::size_t m = 1; m < t_out.size(); ++m) {
    const double t_target = t_out[m];
    if (!(t_target >= t))
      throw std::invalid_argument("integrateAt: output times must be nondecreasing");
    while (t < t_target) {
      bool clipped = false;
      double hs = std::min(h, ctl.h_max);
      if (t + hs >= t_target) {
        hs = t_target - t;
        clipped = true;
      }
      if (hs < ctl.h_min_rel * std::max(1.0, std::abs(t)))
        throw NumericError("integrateAt: step size underflow", t);

      k[0] = rhs(t, y);
      for (int s = 1; s < 7; ++s) {
        State acc = y;
        for (int j = 0; j < s; ++j)
          if (detail::dpA[s][j] != 0.0) acc += (hs * detail::dpA[s][j]) * k[j];
        k[s] = rhs(t + detail::dpC[s] * hs, acc);
      }
      State y5 = y;
      State err{};
      for (int s = 0; s < 7; ++s) {
        if (detail::dpB5[s] != 0.0) y5 += (hs * detail::dpB5[s]) * k[s];
        const double d = detail::dpB5[s] - detail::dpB4[s];
        if (d != 0.0) err += (hs * d) * k[s];
      }
      const double scale = std::max(1.0, std::max(maxAbs(y), maxAbs(y5)));
      const double e = maxAbs(err) / scale;
      const double budget = 0.5 * ctl.tol * hs;
      if (e <= budget || hs <= 4.0 * ctl.h_min_rel * std::max(1.0, std::abs(t))) {
        t += hs;
        y = y5;
        const double grow = (e > 0.0) ? 0.9 * std::pow(budget / e, 0.2) : 5.0;
        const double factor = std::clamp(grow, 0.2, 5.0);
        if (!clipped) h = std::min(hs * factor, ctl.h_max);
        else h = std::min(std::max(h, hs * factor), ctl.h_max);
      } else {
        h = hs * std::clamp(0.9 * std::pow(budget / e, 0.2), 0.1, 0.9);
      }
    }
    out.push_back(y);
  }
  return out;
}

template <typename State, typename Rhs>
State integrateTo(Rhs&& rhs, State y0, double t0, double t1, const StepControl& ctl) {
  const double grid[2] = {t0, t1};
  auto res = integrateAt(std::forward<Rhs>(rhs), std::move(y0),
                         std::span<const double>(grid, 2), ctl);
  return res.back();
}

// Small fixed-size real state for joint scalar ODEs.
template <std::size_t N>
struct RealState {
  std::array<double, N> v{};
  RealState& operator+=(const RealState& o) {
    for (std::size_t i = 0; i < N; ++i) v[i] += o.v[i];
    return *this;
  }
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
};

template <std::size_t N>
RealState<N> operator+(RealState<N> a, const RealState<N>& b) { return a += b; }

template <std::size_t N>
RealState<N> operator*(double s, RealState<N> a) {
  for (std::size_t i = 0; i < N; ++i) a.v[i] *= s;
  return a;
}

template <std::size_t N>
double maxAbs(const RealState<N>& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < N; ++i) m = std::max(m, std::abs(a.v[i]));
  return m;
}

}  // namespace cansys
