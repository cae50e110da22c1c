#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cansys/grids.hpp"
#include "cansys/mat2.hpp"
#include "cansys/model.hpp"
#include "cansys/transfer.hpp"

namespace cansys {

// Weyl function of a constant Hamiltonian ((c1, c), (c, c2)):
//   m = i sqrt(c1 c2 - c^2) / c1 + c / c1,
// independent of the spectral parameter.
inline Complex constant_weyl(const Mat2d& C) {
  if (!(C.a11 > 0.0))
    throw std::invalid_argument("constant_weyl: c1 must be positive");
  const double d = C.det();
  if (d < 0.0)
    throw std::invalid_argument("constant_weyl: determinant must be nonnegative");
  return Complex(C.a12 / C.a11, std::sqrt(d) / C.a11);
}

struct WeylEstimate {
  Complex z{};
  double r = 0.0;
  double depth = 0.0;
  Complex value{};
  double radius = 0.0;   // |estimate(omega=0) - estimate(omega=inf)|
  bool exact_tail = false;
};

struct WeylOptions {
  double tol = 1e-11;
  bool use_tail = true;   // close the disk through a known constant tail
  int max_retries = 4;
};

namespace detail {

inline Complex mobiusThroughTail(const TransferState& st, Complex m_tail) {
  const Complex den = st.thetaPlus() + m_tail * st.thetaMinus();
  if (std::abs(den) == 0.0)
    throw NumericError("weyl_function: vanishing denominator in tail closure", st.t);
  return (st.phiPlus() + m_tail * st.phiMinus()) / den;
}

}  // namespace detail

// Weyl function m_r(z) of the shifted Hamiltonian H_r.  When the Hamiltonian
// carries a known constant tail the disk is closed through the tail's exact
// Weyl function and the returned radius is zero; otherwise the estimate is
// the midpoint of the omega = 0 and omega = infinity evaluations at t = depth
// and the radius is their spread.
inline WeylEstimate weyl_function(const Hamiltonian& H, double r, Complex z,
                                  double depth, const WeylOptions& opts = {}) {
  if (!(z.imag() > 0.0))
    throw std::invalid_argument("weyl_function: Im z must be positive");
  WeylEstimate est;
  est.z = z;
  est.r = r;
  est.depth = depth;

  const Hamiltonian Hr = H.shifted(r);

  if (opts.use_tail && H.tail) {
    const double delta = std::max(0.0, H.tail->t_start - r);
    const Complex m_tail = constant_weyl(H.tail->value);
    if (delta == 0.0) {
      est.value = m_tail;
    } else {
      const TransferState st = evolve_canonical_to(Hr, z, delta, opts.tol);
      est.value = detail::mobiusThroughTail(st, m_tail);
    }
    est.radius = 0.0;
    est.exact_tail = true;
    if (!(est.value.imag() > 0.0))
      throw NumericError("weyl_function: estimate left the upper half-plane", r);
    return est;
  }

  if (!(depth > r)) throw std::invalid_argument("weyl_function: depth must exceed r");

  double d = depth - r;
  for (int attempt = 0;; ++attempt) {
    const TransferState st = evolve_canonical_to(Hr, z, d, opts.tol);
    const double scale = maxAbs(st.M);
    const bool deg0 = std::abs(st.thetaMinus()) < 1e-13 * scale;
    const bool degInf = std::abs(st.thetaPlus()) < 1e-13 * scale;
    if (!deg0 && !degInf) {
      const Complex m0 = st.phiMinus() / st.thetaMinus();
      const Complex mInf = st.phiPlus() / st.thetaPlus();
      est.value = 0.5 * (m0 + mInf);
      est.radius = std::abs(m0 - mInf);
      est.depth = r + d;
      break;
    }
    if (attempt >= opts.max_retries)
      throw NumericError(
          "weyl_function: denominator vanished at all retried depths "
          "(indivisible-interval artifact)", r + d);
    d = d * 1.05 + 0.1;  // perturbed depth
  }
  if (!(est.value.imag() > 0.0))
    throw NumericError("weyl_function: estimate left the upper half-plane", est.depth);
  return est;
}

inline double weylDefaultDepth(double r) { return r + 18.0; }

struct HerglotzPoint {
  double I = 1.0;  // Im m_r(i)
  double R = 0.0;  // Re m_r(i)
  double radius = 0.0;
};

inline HerglotzPoint herglotz_at_i(const Hamiltonian& H, double r, double depth,
                                   const WeylOptions& opts = {}) {
  const WeylEstimate est = weyl_function(H, r, Complex(0.0, 1.0), depth, opts);
  return {est.value.imag(), est.value.real(), est.radius};
}

inline HerglotzPoint herglotz_at_i(const Hamiltonian& H, double r) {
  return herglotz_at_i(H, r, weylDefaultDepth(r));
}

// ---------------------------------------------------------------------------
// Boundary values on the real line by Richardson extrapolation in eps.
// ---------------------------------------------------------------------------

// Neville evaluation at eps = 0 of the polynomial through (eps_k, v_k).
inline Complex nevilleAtZero(std::span<const double> eps, std::span<const Complex> v) {
  std::vector<Complex> p(v.begin(), v.end());
  const std::size_t n = p.size();
  for (std::size_t level = 1; level < n; ++level)
    for (std::size_t i = 0; i + level < n; ++i)
      p[i] = (eps[i + level] * p[i] - eps[i] * p[i + 1]) / (eps[i + level] - eps[i]);
  return p[0];
}

inline const std::vector<double>& defaultEpsSchedule() {
  static const std::vector<double> s{1e-2, 5e-3};
  return s;
}

struct BoundaryValue {
  Complex m{};
  bool flagged = false;
};

// m_r(x + i0) extrapolated from m_r(x + i eps_k).
inline BoundaryValue boundary_m(const Hamiltonian& H, double r, double x,
                                std::span<const double> eps_schedule,
                                double depth, const WeylOptions& opts = {}) {
  std::vector<Complex> vals;
  vals.reserve(eps_schedule.size());
  double scale = 0.0;
  for (double eps : eps_schedule) {
    try {
      const WeylEstimate est = weyl_function(H, r, Complex(x, eps), depth, opts);
      vals.push_back(est.value);
      scale = std::max(scale, std::abs(est.value));
    } catch (const NumericError&) {
      return {Complex(0.0, 0.0), true};
    }
  }
  const Complex full = nevilleAtZero(eps_schedule, vals);
  BoundaryValue out{full, false};
  if (!std::isfinite(full.real()) || !std::isfinite(full.imag())) {
    out.flagged = true;
    return out;
  }
  if (vals.size() >= 3) {
    const Complex pair = nevilleAtZero(eps_schedule.subspan(eps_schedule.size() - 2),
                                       std::span<const Complex>(vals).subspan(vals.size() - 2));
    if (std::abs(full - pair) > std::max(0.05, 0.05 * std::abs(full))) out.flagged = true;
  }
  if (full.imag() < -0.02 * std::max(1.0, scale)) out.flagged = true;
  return out;
}

// Boundary spectral density w_r on a Poisson grid with per-node flags.
struct HerglotzData {
  PoissonGrid grid;
  std::vector<double> w;
  std::vector<char> flag;
  double a = 0.0;  // Re m_r(i)
  double b = 0.0;  // linear coefficient; zero under the a.c. modeling here

  std::size_t size() const { return grid.size(); }
};

struct BoundaryDensityOptions {
  std::vector<double> eps_schedule = defaultEpsSchedule();
  double depth_margin = 18.0;
  WeylOptions weyl{};
};

inline HerglotzData boundary_density(const Hamiltonian& H, double r,
                                     const PoissonGrid& x_grid,
                                     const BoundaryDensityOptions& opts = {}) {
  for (std::size_t i = 1; i < opts.eps_schedule.size(); ++i)
    if (!(opts.eps_schedule[i] < opts.eps_schedule[i - 1]) || !(opts.eps_schedule[i] > 0))
      throw std::invalid_argument("boundary_density: eps schedule must be "
                                  "positive and decreasing");
  HerglotzData data;
  data.grid = x_grid;
  data.w.resize(x_grid.size());
  data.flag.assign(x_grid.size(), 0);
  const double depth = r + opts.depth_margin;
  for (std::size_t k = 0; k < x_grid.size(); ++k) {
    const BoundaryValue bv =
        boundary_m(H, r, x_grid.x[k], opts.eps_schedule, depth, opts.weyl);
    data.flag[k] = bv.flagged ? 1 : 0;
    data.w[k] = bv.flagged ? 0.0 : std::max(0.0, bv.m.imag());
  }
  const HerglotzPoint hp = herglotz_at_i(H, r, depth, opts.weyl);
  data.a = hp.R;
  data.b = 0.0;
  return data;
}

// ---------------------------------------------------------------------------
// Bernstein-Szego truncation.
// ---------------------------------------------------------------------------

struct BSTruncation {
  double r = 0.0;
  double I = 1.0;
  double R = 0.0;

  double c1() const { return 1.0 / I; }
  double c() const { return R / I; }
  double c2() const { return (I * I + R * R) / I; }

  Mat2d tailMatrix() const { return {c1(), c(), c(), c2()}; }
};

inline BSTruncation bs_truncate(const Hamiltonian& H, double r, double depth,
                                const WeylOptions& opts = {}) {
  const HerglotzPoint hp = herglotz_at_i(H, r, depth, opts);
  if (hp.I <= hp.radius)
    throw NumericError(
        "bs_truncate: Weyl uncertainty exceeds Im m_r(i); increase depth to about " +
            std::to_string(2.0 * depth),
        depth);
  return {r, hp.I, hp.R};
}

inline BSTruncation bs_truncate(const Hamiltonian& H, double r) {
  return bs_truncate(H, r, weylDefaultDepth(r));
}

// Hamiltonian frozen to the Bernstein-Szego constant block past r.
inline Hamiltonian truncated_hamiltonian(const Hamiltonian& H, const BSTruncation& bst) {
  return withConstantTail(H, bst.r, bst.tailMatrix());
}

// Explicit density of the truncated model,
//   w_hat_r(x) = I / |Theta+(r,x) + (i I + R) Theta-(r,x)|^2 = 1/|E~_r(x)|^2.
inline double bs_density(const TransferState& at_rx, double I, double R) {
  const Complex den = at_rx.thetaPlus() + Complex(R, I) * at_rx.thetaMinus();
  return I / std::norm(den);
}

inline double bs_density(const Hamiltonian& H, double r, double x,
                         const BSTruncation& bst, double tol = 1e-11) {
  const TransferState st = evolve_canonical_to(H, Complex(x, 0.0), r, tol);
  return bs_density(st, bst.I, bst.R);
}

inline double bs_density(const Hamiltonian& H, double r, double x) {
  return bs_density(H, r, x, bs_truncate(H, r));
}

}  // namespace cansys
