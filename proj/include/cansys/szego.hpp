#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cansys/grids.hpp"
#include "cansys/model.hpp"
#include "cansys/transfer.hpp"
#include "cansys/weyl.hpp"

namespace cansys {

inline constexpr double kDensityFloor = 1e-300;

// ---------------------------------------------------------------------------
// Block criteria.
// ---------------------------------------------------------------------------

enum class Verdict { convergent_at_horizon, divergent_trend, inapplicable };

inline std::string toString(Verdict v) {
  switch (v) {
    case Verdict::convergent_at_horizon: return "convergent-at-horizon";
    case Verdict::divergent_trend: return "divergent-trend";
    case Verdict::inapplicable: return "inapplicable";
  }
  return "?";
}

struct SzegoReport {
  std::vector<double> terms;
  std::vector<double> partial_sums;
  std::vector<double> eta;  // block grid (eta_n when a clock is involved)
  Verdict verdict = Verdict::convergent_at_horizon;
  std::string note;
};

struct CriterionOptions {
  double slope_threshold = 1e-3;  // mean term over the trailing half
  double horizon = 20.0;          // clock horizon for the Hamiltonian form
};

namespace detail {

inline Verdict verdictFromTerms(const std::vector<double>& terms, double slope_threshold) {
  if (terms.empty()) return Verdict::convergent_at_horizon;
  double tail = 0.0;
  const std::size_t half = terms.size() / 2;
  for (std::size_t i = half; i < terms.size(); ++i) tail += terms[i];
  const double slope = tail / static_cast<double>(terms.size() - half);
  return (slope > slope_threshold) ? Verdict::divergent_trend
                                   : Verdict::convergent_at_horizon;
}

inline std::size_t blockCells(double t_right) {
  // The integrands oscillate no faster than the potential itself; keep the
  // per-cell phase small even for sin(t^2)-type laws out to large times.
  return std::max<std::size_t>(256, static_cast<std::size_t>(8.0 * t_right));
}

inline void finishReport(SzegoReport& rep, double slope_threshold) {
  rep.partial_sums.resize(rep.terms.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < rep.terms.size(); ++i) {
    acc += rep.terms[i];
    rep.partial_sums[i] = acc;
  }
  rep.verdict = verdictFromTerms(rep.terms, slope_threshold);
}

}  // namespace detail

// Block criterion for off-diagonal potentials: with g_n(t) = exp(2 int_n^t q),
// the n-th term is  int_n^{n+2} g_n  *  int_n^{n+2} 1/g_n  -  4.
inline SzegoReport criterion_potential(const PotentialSpec& q, std::size_t n_blocks,
                                       const CriterionOptions& opts = {}) {
  if (q.kind != PotentialKind::off_diagonal && q.kind != PotentialKind::zero)
    throw std::invalid_argument("criterion_potential: off_diagonal potential required");
  SzegoReport rep;
  rep.terms.reserve(n_blocks);
  bool overflow = false;
  for (std::size_t n = 0; n < n_blocks; ++n) {
    const double a = static_cast<double>(n), b = a + 2.0;
    const double An = q.g(a);
    auto gpos = [&q, An](double t) { return std::exp(2.0 * (q.g(t) - An)); };
    auto gneg = [&q, An](double t) { return std::exp(-2.0 * (q.g(t) - An)); };
    const std::size_t cells = detail::blockCells(b);
    const double i1 = quadGL4(gpos, a, b, cells);
    const double i2 = quadGL4(gneg, a, b, cells);
    if (!std::isfinite(i1) || !std::isfinite(i2)) {
      overflow = true;
      rep.terms.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    rep.terms.push_back(i1 * i2 - 4.0);
    rep.eta.push_back(a);
  }
  detail::finishReport(rep, opts.slope_threshold);
  if (overflow) {
    rep.verdict = Verdict::divergent_trend;
    rep.note = "overflowing block integrals flagged";
  }
  return rep;
}

// Block criterion in Hamiltonian form on the eta grid; inapplicable when
// sqrt(det H) is integrable up to the horizon.
inline SzegoReport criterion_hamiltonian(const Hamiltonian& H, std::size_t n_blocks,
                                         const CriterionOptions& opts = {}) {
  SzegoReport rep;
  try {
    rep.eta = eta_grid(H, n_blocks + 1, opts.horizon);
  } catch (const ClockSaturated& e) {
    rep.verdict = Verdict::inapplicable;
    rep.note = e.what();
    return rep;
  }
  rep.terms.reserve(n_blocks);
  for (std::size_t n = 0; n < n_blocks; ++n) {
    const double a = rep.eta[n], b = rep.eta[n + 2];
    const std::size_t cells = detail::blockCells(b);
    const double i1 = quadGL4([&H](double s) { return H(s).a11; }, a, b, cells);
    const double i2 = quadGL4([&H](double s) { return H(s).a22; }, a, b, cells);
    rep.terms.push_back(i1 * i2 - 4.0);
  }
  detail::finishReport(rep, opts.slope_threshold);
  return rep;
}

// sum_n max_{n <= t <= n+1} (int_n^t q)^2, maxima by dense sampling of the
// primitive.
inline SzegoReport criterion_maximal(const PotentialSpec& q, std::size_t n_max,
                                     const CriterionOptions& opts = {}) {
  if (q.kind != PotentialKind::off_diagonal && q.kind != PotentialKind::zero)
    throw std::invalid_argument("criterion_maximal: off_diagonal potential required");
  SzegoReport rep;
  rep.terms.reserve(n_max);
  for (std::size_t n = 0; n < n_max; ++n) {
    const double a = static_cast<double>(n);
    const double An = q.g(a);
    const std::size_t samples = std::max<std::size_t>(1024, static_cast<std::size_t>(8.0 * (a + 1.0)));
    double best = 0.0;
    for (std::size_t k = 0; k <= samples; ++k) {
      const double t = a + static_cast<double>(k) / static_cast<double>(samples);
      const double d = q.g(t) - An;
      best = std::max(best, d * d);
    }
    rep.terms.push_back(best);
  }
  detail::finishReport(rep, opts.slope_threshold);
  return rep;
}

// ---------------------------------------------------------------------------
// Logarithmic integral and the Szego function.
// ---------------------------------------------------------------------------

struct LogIntegralStats {
  double clipped_weight = 0.0;
  std::size_t clipped_nodes = 0;
  std::size_t flagged_nodes = 0;
};

// J = integral of log w against dP, by the uniform-weight midpoint rule on
// the tan-substitution grid.  Flagged nodes are excluded; densities below
// the floor are clipped and the clipped mass reported.
inline double log_integral(const HerglotzData& data, LogIntegralStats* stats = nullptr) {
  const double wgt = data.grid.poissonWeight();
  double sum = 0.0;
  LogIntegralStats st;
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (data.flag[k]) {
      ++st.flagged_nodes;
      continue;
    }
    double w = data.w[k];
    if (w < kDensityFloor) {
      w = kDensityFloor;
      ++st.clipped_nodes;
      st.clipped_weight += wgt;
    }
    sum += wgt * std::log(w);
  }
  if (stats) *stats = st;
  return sum;
}

struct SzegoFunctionEval {
  Complex z{};
  Complex value{};
  std::size_t grid_nodes = 0;
};

// Outer function with modulus sqrt(w) on the line, positive at i:
//   D(z) = exp( (1/(pi i)) int log sqrt(w) [ 1/(x-z) - x/(x^2+1) ] dx ).
// Evaluated by the same midpoint rule as log_integral, so that
// D(i) = exp(J/2) holds up to rounding.
inline SzegoFunctionEval szego_function(const HerglotzData& data, Complex z) {
  if (!(z.imag() > 0.0))
    throw std::invalid_argument("szego_function: Im z must be positive");
  const double n = static_cast<double>(data.size());
  Complex acc = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (data.flag[k]) continue;
    const double x = data.grid.x[k];
    const double L = 0.5 * std::log(std::max(data.w[k], kDensityFloor));
    acc += L * ((1.0 + x * x) / (x - z) - x);
  }
  const Complex val = std::exp(acc / (Complex(0.0, 1.0) * n));
  return {z, val, data.size()};
}

// Boundary phase of the Szego function on the grid itself.  Under
// x = tan(theta) the line maps to the circle with uniform angle
// psi = 2 theta + pi, and the phase is the conjugate function of
// log sqrt(w), computed here by a direct DFT.
inline std::vector<double> szego_boundary_phase(const HerglotzData& data) {
  const std::size_t n = data.size();
  std::vector<double> L(n);
  for (std::size_t k = 0; k < n; ++k)
    L[k] = data.flag[k] ? 0.0
                        : 0.5 * std::log(std::max(data.w[k], kDensityFloor));
  std::vector<double> psi(n);
  for (std::size_t k = 0; k < n; ++k) psi[k] = 2.0 * data.grid.theta[k] + std::numbers::pi;

  std::vector<double> phase(n, 0.0);
  const std::size_t m_max = n / 2 - 1;
  for (std::size_t m = 1; m <= m_max; ++m) {
    Complex cm = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      cm += L[k] * std::exp(Complex(0.0, -static_cast<double>(m) * psi[k]));
    cm /= static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k)
      phase[k] += 2.0 * std::imag(cm * std::exp(Complex(0.0, static_cast<double>(m) * psi[k])));
  }
  return phase;
}

// Boundary values D(x_k) = sqrt(w_k) e^{i phase_k}.
inline std::vector<Complex> szego_boundary(const HerglotzData& data) {
  const auto phase = szego_boundary_phase(data);
  std::vector<Complex> d(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    const double mod = std::sqrt(std::max(data.w[k], kDensityFloor));
    d[k] = mod * std::exp(Complex(0.0, phase[k]));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Entropy profile.
// ---------------------------------------------------------------------------

struct EntropyRates {
  double dI = 0.0, dR = 0.0, dK = 0.0, dgamma = 0.0;
};

// Closed-form derivatives of (I, R, K, gamma); R' is never produced by
// numerical differentiation.
inline EntropyRates entropyRates(const Mat2d& Hr, double I, double R) {
  const double h1 = Hr.a11, h = Hr.a12, h2 = Hr.a22;
  EntropyRates out;
  out.dI = I * I * h1 - h2 + 2.0 * R * h - R * R * h1;
  out.dR = 2.0 * I * (R * h1 - h);
  out.dK = 2.0 * std::sqrt(std::max(0.0, h1 * h2 - h * h)) - I * h1 - h2 / I +
           (2.0 * R * h - R * R * h1) / I;
  out.dgamma = R * h1 - h;
  return out;
}

struct EntropyProfile {
  std::vector<double> r;
  std::vector<double> I, R, K, gamma;
  std::vector<double> dI, dR, dK, dgamma;
  double K0 = 0.0;          // bootstrap actually used
  double K0_density = 0.0;  // density-quadrature value, kept as a diagnostic
  double K0_gap = 0.0;      // K0_density - K0
  HerglotzData density0;  // full-model boundary density at r = 0

  double step() const { return (r.size() > 1) ? r[1] - r[0] : 1.0; }

  double interp(const std::vector<double>& y, const std::vector<double>& dy,
                double rr) const {
    if (rr <= r.front()) return y.front();
    if (rr >= r.back()) return y.back();
    const double h = step();
    const auto i = std::min<std::size_t>(static_cast<std::size_t>((rr - r.front()) / h),
                                         r.size() - 2);
    const double tau = (rr - r[i]) / h;
    const double t2 = tau * tau, t3 = t2 * tau;
    return y[i] * (2 * t3 - 3 * t2 + 1) + dy[i] * h * (t3 - 2 * t2 + tau) +
           y[i + 1] * (-2 * t3 + 3 * t2) + dy[i + 1] * h * (t3 - t2);
  }

  double Iat(double rr) const { return interp(I, dI, rr); }
  double Rat(double rr) const { return interp(R, dR, rr); }
  double Kat(double rr) const { return interp(K, dK, rr); }
  double gammaAt(double rr) const { return interp(gamma, dgamma, rr); }
};

struct EntropyOptions {
  double dr = 1.0 / 256.0;
  double tol = 1e-11;
  std::size_t x_nodes = 256;
  std::vector<double> eps_schedule = defaultEpsSchedule();
  double depth_margin = 18.0;
};

// Joint integration of (I, R, K, gamma) from the closed-form derivative
// identities, with (I(0), R(0)) from the Weyl disk at i.  K(0) is
// bootstrapped from the full boundary density; when the Hamiltonian has a
// known constant tail the truncated-model entropy at the tail start equals
// K(0) exactly and replaces the quadrature value (whose error is kept as a
// reported diagnostic).
inline EntropyProfile entropy_ode(const Hamiltonian& H, double r_max,
                                  const EntropyOptions& opts = {}) {
  EntropyProfile prof;
  const HerglotzPoint hp = herglotz_at_i(H, 0.0, opts.depth_margin);
  BoundaryDensityOptions bopts;
  bopts.eps_schedule = opts.eps_schedule;
  bopts.depth_margin = opts.depth_margin;
  prof.density0 = boundary_density(H, 0.0, makePoissonGrid(opts.x_nodes), bopts);
  const double J0 = log_integral(prof.density0);
  prof.K0_density = std::log(hp.I) - J0;
  prof.K0 = prof.K0_density;
  if (H.tail && H.det_one) {
    // K(0) = K_hat(t_s): the entropy at an exactly constant det-one tail is
    // zero, so the additivity identity closes the bootstrap without the
    // eps-extrapolated density.
    const double ts = H.tail->t_start;
    const HerglotzPoint hs = herglotz_at_i(H, ts, ts + opts.depth_margin);
    prof.K0 = std::log(hp.I) - truncated_log_integral(H, ts, hs.I, hs.R, opts.tol);
    prof.K0_gap = prof.K0_density - prof.K0;
  }

  const auto n = static_cast<std::size_t>(std::ceil(r_max / opts.dr));
  prof.r = linspace(0.0, r_max, n + 1);

  auto rhs = [&H](double t, const RealState<4>& s) {
    if (!(s[0] > 0.0))
      throw NumericError("entropy_ode: loss of positivity of I", t);
    const EntropyRates er = entropyRates(H(t), s[0], s[1]);
    RealState<4> d;
    d[0] = er.dI;
    d[1] = er.dR;
    d[2] = er.dK;
    d[3] = er.dgamma;
    return d;
  };
  RealState<4> y0;
  y0[0] = hp.I;
  y0[1] = hp.R;
  y0[2] = prof.K0;
  y0[3] = 0.0;
  StepControl ctl;
  ctl.tol = opts.tol;
  ctl.h_max = opts.dr;
  ctl.h_init = opts.dr;
  const auto states = integrateAt(rhs, y0, std::span<const double>(prof.r), ctl);

  const std::size_t m = states.size();
  prof.I.resize(m);
  prof.R.resize(m);
  prof.K.resize(m);
  prof.gamma.resize(m);
  prof.dI.resize(m);
  prof.dR.resize(m);
  prof.dK.resize(m);
  prof.dgamma.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    prof.I[i] = states[i][0];
    prof.R[i] = states[i][1];
    prof.K[i] = states[i][2];
    prof.gamma[i] = states[i][3];
    const EntropyRates er = entropyRates(H(prof.r[i]), prof.I[i], prof.R[i]);
    prof.dI[i] = er.dI;
    prof.dR[i] = er.dR;
    prof.dK[i] = er.dK;
    prof.dgamma[i] = er.dgamma;
  }
  return prof;
}

// ---------------------------------------------------------------------------
// Entropy by the additivity route.
// ---------------------------------------------------------------------------

struct EntropyDirectContext {
  double K0 = 0.0;
  double I0 = 1.0;
  PoissonGrid grid;
  double depth_margin = 18.0;
  double tol = 1e-11;
};

inline EntropyDirectContext makeEntropyDirectContext(
    const Hamiltonian& H, std::size_t x_nodes = 256,
    const std::vector<double>& eps_schedule = defaultEpsSchedule(),
    double depth_margin = 18.0) {
  EntropyDirectContext ctx;
  ctx.grid = makePoissonGrid(x_nodes);
  ctx.depth_margin = depth_margin;
  const HerglotzPoint hp = herglotz_at_i(H, 0.0, depth_margin);
  BoundaryDensityOptions bopts;
  bopts.eps_schedule = eps_schedule;
  bopts.depth_margin = depth_margin;
  const HerglotzData dens = boundary_density(H, 0.0, ctx.grid, bopts);
  ctx.I0 = hp.I;
  ctx.K0 = std::log(hp.I) - log_integral(dens);
  return ctx;
}

// log |E~_r(i)| from a transfer evaluation at z = i.
inline double logAbsTildeEAtI(const TransferState& at_ri, double I, double R) {
  const Complex e =
      (at_ri.thetaPlus() + Complex(R, I) * at_ri.thetaMinus()) / std::sqrt(I);
  return std::log(std::abs(e));
}

// J_{H-hat_r}(0) through the Poisson representation of the outer function
// with modulus 1/sqrt(w-hat_r) = |E~_r| on the line:
//   J_hat(0) = 2r - 2 log |E~_r(i)|.
// The density 1/|E~_r|^2 oscillates without decay at spectral infinity, so a
// grid quadrature of its logarithm aliases; this closed form is exact.
inline double truncated_log_integral(const Hamiltonian& H, double r, double I,
                                     double R, double tol = 1e-11) {
  const TransferState st = evolve_canonical_to(H, Complex(0.0, 1.0), r, tol);
  return 2.0 * r - 2.0 * logAbsTildeEAtI(st, I, R);
}

// Entropy of the truncated model at its base point,
//   K_hat(r) = log I_hat(0) - J_hat(0).
inline double truncated_entropy_at_zero(const Hamiltonian& H, double r,
                                        const EntropyDirectContext& ctx) {
  const BSTruncation bst = bs_truncate(H, r, r + ctx.depth_margin);
  const Hamiltonian trunc = truncated_hamiltonian(H, bst);
  const HerglotzPoint hat = herglotz_at_i(trunc, 0.0, ctx.depth_margin);
  return std::log(hat.I) - truncated_log_integral(H, r, bst.I, bst.R, ctx.tol);
}

// K(r) = K(0) - K_hat_r(0).
inline double entropy_direct(const Hamiltonian& H, double r,
                             const EntropyDirectContext& ctx) {
  return ctx.K0 - truncated_entropy_at_zero(H, r, ctx);
}

// Batched variant sharing one transfer sweep at z = i.
inline std::vector<double> entropy_direct_profile(const Hamiltonian& H,
                                                  std::span<const double> r_grid,
                                                  const EntropyDirectContext& ctx) {
  std::vector<double> out(r_grid.size(), 0.0);
  if (r_grid.empty()) return out;

  std::vector<double> t_grid(r_grid.begin(), r_grid.end());
  const auto states = evolve_canonical(H, Complex(0.0, 1.0), t_grid, ctx.tol);
  for (std::size_t j = 0; j < r_grid.size(); ++j) {
    const BSTruncation bst = bs_truncate(H, r_grid[j], r_grid[j] + ctx.depth_margin);
    const Hamiltonian trunc = truncated_hamiltonian(H, bst);
    const double logIhat = std::log(herglotz_at_i(trunc, 0.0, ctx.depth_margin).I);
    const double J =
        2.0 * r_grid[j] - 2.0 * logAbsTildeEAtI(states[j], bst.I, bst.R);
    out[j] = ctx.K0 - (logIhat - J);
  }
  return out;
}

}  // namespace cansys
