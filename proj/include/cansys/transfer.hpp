#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cansys/mat2.hpp"
#include "cansys/model.hpp"
#include "cansys/rk.hpp"

namespace cansys {

// Solution of the canonical system J dM/dt = z H M, M(0) = I, stored with
// columns M = (Theta, Phi), i.e. M = ((Theta+, Phi+), (Theta-, Phi-)).
struct TransferState {
  double t = 0.0;
  Complex z{};
  Mat2c M = Mat2c::identity();

  Complex thetaPlus() const { return M.a11; }
  Complex thetaMinus() const { return M.a21; }
  Complex phiPlus() const { return M.a12; }
  Complex phiMinus() const { return M.a22; }

  Complex det() const { return M.det(); }
};

namespace detail {

inline StepControl transferControl(Complex z, double tol) {
  StepControl ctl;
  ctl.tol = tol;
  ctl.h_init = 0.01;
  const double az = std::abs(z);
  ctl.h_max = std::min(0.25, (az > 0.4) ? 0.1 / az : 0.25);
  return ctl;
}

}  // namespace detail

// M' = z J^{-1} H(t) M with J^{-1} = ((0, 1), (-1, 0)) and M(0) = identity.
// The grid need not start at zero; integration always does.
inline std::vector<TransferState> evolve_canonical(const Hamiltonian& H, Complex z,
                                                   std::span<const double> t_grid,
                                                   double tol = 1e-10) {
  auto rhs = [&H, z](double t, const Mat2c& m) {
    const Mat2d hm = H(t);
    const Mat2c a{z * hm.a12, z * hm.a22, -z * hm.a11, -z * hm.a12};
    return a * m;
  };
  const StepControl ctl = detail::transferControl(z, tol);
  std::vector<TransferState> out;
  if (!t_grid.empty() && t_grid.front() != 0.0) {
    if (t_grid.front() < 0.0)
      throw std::invalid_argument("evolve_canonical: times must be nonnegative");
    std::vector<double> full(t_grid.size() + 1);
    full[0] = 0.0;
    std::copy(t_grid.begin(), t_grid.end(), full.begin() + 1);
    auto ms = integrateAt(rhs, Mat2c::identity(), std::span<const double>(full), ctl);
    out.resize(t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i) out[i] = {t_grid[i], z, ms[i + 1]};
    return out;
  }
  auto ms = integrateAt(rhs, Mat2c::identity(), t_grid, ctl);
  out.resize(ms.size());
  for (std::size_t i = 0; i < ms.size(); ++i) out[i] = {t_grid[i], z, ms[i]};
  return out;
}

inline TransferState evolve_canonical_to(const Hamiltonian& H, Complex z, double t,
                                         double tol = 1e-10) {
  const double grid[2] = {0.0, t};
  return evolve_canonical(H, z, std::span<const double>(grid, 2), tol).back();
}

// Generalized eigenvector of the Dirac operator: J Psi' + Q Psi = z Psi with
// Psi(0, z) = (1, 0)^T.
inline std::vector<Vec2c> evolve_dirac(const PotentialSpec& spec, Complex z,
                                       std::span<const double> t_grid,
                                       double tol = 1e-10) {
  auto rhs = [&spec, z](double t, const Vec2c& p) {
    const double a = spec.q1(t), b = spec.q2(t);
    // J^{-1} (z I - Q)
    const Mat2c m{Complex(-b), z + a, a - z, Complex(b)};
    return m * p;
  };
  const StepControl ctl = detail::transferControl(z, tol);
  if (!t_grid.empty() && t_grid.front() != 0.0) {
    if (t_grid.front() < 0.0)
      throw std::invalid_argument("evolve_dirac: times must be nonnegative");
    std::vector<double> full(t_grid.size() + 1);
    full[0] = 0.0;
    std::copy(t_grid.begin(), t_grid.end(), full.begin() + 1);
    auto ps = integrateAt(rhs, Vec2c{1.0, 0.0}, std::span<const double>(full), ctl);
    return {ps.begin() + 1, ps.end()};
  }
  return integrateAt(rhs, Vec2c{1.0, 0.0}, t_grid, ctl);
}

struct BatchRow {
  Complex z;
  std::vector<TransferState> states;     // states reached before any failure
  std::optional<std::string> error;
  double last_good_t = 0.0;
};

// Per-z evolution over a shared time grid; failures are recorded per row and
// partial results retained.
inline std::vector<BatchRow> batch_evolve(const Hamiltonian& H,
                                          std::span<const Complex> z_grid,
                                          std::span<const double> t_grid,
                                          double tol = 1e-10) {
  std::vector<BatchRow> rows(z_grid.size());
  for (std::size_t i = 0; i < z_grid.size(); ++i) {
    rows[i].z = z_grid[i];
    try {
      rows[i].states = evolve_canonical(H, z_grid[i], t_grid, tol);
      rows[i].last_good_t = t_grid.empty() ? 0.0 : t_grid.back();
    } catch (const NumericError& e) {
      rows[i].error = e.what();
      rows[i].last_good_t = e.last_good_t;
      // Retain the prefix of the grid that is still reachable.
      std::vector<double> prefix;
      for (double tj : t_grid)
        if (tj <= e.last_good_t) prefix.push_back(tj);
      if (!prefix.empty()) {
        try {
          rows[i].states = evolve_canonical(H, z_grid[i], prefix, tol);
        } catch (const NumericError&) {
        }
      }
    }
  }
  return rows;
}

}  // namespace cansys
