#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "cansys/grids.hpp"
#include "cansys/krein.hpp"
#include "cansys/model.hpp"
#include "cansys/szego.hpp"

namespace cansys {

// ---------------------------------------------------------------------------
// Wave packets X = (f, 0)^T or (0, f)^T with smooth f supported in (0, a).
// ---------------------------------------------------------------------------

struct WavePacket {
  enum class Channel { first, second };

  std::function<double(double)> f;
  Channel channel = Channel::first;
  double a = 1.0;
  std::size_t cells = 2048;  // sampling cells over [0, a] (even)

  double operator()(double t) const {
    return (t <= 0.0 || t >= a) ? 0.0 : f(t);
  }

  // f(0) = f(a) = 0 and bounded sampled second differences.
  void validate() const {
    if (!(a > 0.0)) throw std::invalid_argument("WavePacket: a must be positive");
    if (std::abs((*this)(1e-12)) > 1e-6 || std::abs((*this)(a - 1e-12)) > 1e-6)
      throw std::invalid_argument("WavePacket: f must vanish at 0 and a");
    const double h = a / 256.0;
    for (std::size_t k = 1; k + 1 < 256; ++k) {
      const double d2 = (*this)((k + 1) * h) - 2.0 * (*this)(k * h) + (*this)((k - 1) * h);
      if (!(std::abs(d2) < 100.0 * h * h * (1.0 / (h * h))))  // finite check
        throw std::invalid_argument("WavePacket: second differences unbounded");
    }
  }

  static WavePacket sine(double a, Channel ch = Channel::first) {
    WavePacket p;
    p.a = a;
    p.channel = ch;
    p.f = [a](double t) { return std::sin(std::numbers::pi * t / a); };
    return p;
  }

  static WavePacket bump(double a, Channel ch = Channel::first) {
    WavePacket p;
    p.a = a;
    p.channel = ch;
    p.f = [a](double t) {
      const double u = 2.0 * t / a - 1.0;
      if (std::abs(u) >= 1.0) return 0.0;
      return std::exp(1.0 - 1.0 / (1.0 - u * u));
    };
    return p;
  }
};

// ---------------------------------------------------------------------------
// Product (Filon-type) quadrature of sampled G against e^{-i x u}.
// ---------------------------------------------------------------------------

namespace detail {

struct FilonWeights {
  Complex w0, w1, w2;  // per-panel weights for samples at 0, h, 2h
};

inline FilonWeights filonPanelWeights(double h, double x) {
  const double phi = x * h;
  Complex M0, M1, M2;
  if (std::abs(phi) < 0.1) {
    // series moments M_k = sum_j (-ix)^j (2h)^{k+j+1} / (j! (k+j+1))
    for (int k = 0; k < 3; ++k) {
      Complex acc = 0.0;
      Complex pow(1.0, 0.0);
      double fact = 1.0;
      for (int j = 0; j < 14; ++j) {
        acc += pow * std::pow(2.0 * h, k + j + 1) / (fact * static_cast<double>(k + j + 1));
        pow *= Complex(0.0, -x);
        fact *= static_cast<double>(j + 1);
      }
      (k == 0 ? M0 : (k == 1 ? M1 : M2)) = acc;
    }
  } else {
    const Complex ix(0.0, x);
    const Complex E = std::exp(Complex(0.0, -2.0 * phi));
    M0 = (1.0 - E) / ix;
    M1 = (M0 - 2.0 * h * E) / ix;
    M2 = (2.0 * M1 - 4.0 * h * h * E) / ix;
  }
  FilonWeights w;
  w.w0 = (M2 - 3.0 * h * M1 + 2.0 * h * h * M0) / (2.0 * h * h);
  w.w1 = (2.0 * h * M1 - M2) / (h * h);
  w.w2 = (M2 - h * M1) / (2.0 * h * h);
  return w;
}

}  // namespace detail

// Integral of the piecewise-quadratic interpolant of the samples G_j at
// u0 + j h (an even number of cells) against e^{-i x u}.
inline Complex filon_integral(std::span<const Complex> G, double u0, double h, double x) {
  if (G.size() < 3 || G.size() % 2 == 0)
    throw std::invalid_argument("filon_integral: need an even number of cells");
  const detail::FilonWeights w = detail::filonPanelWeights(h, x);
  Complex sum = 0.0;
  for (std::size_t p = 0; p + 2 < G.size(); p += 2) {
    const double up = u0 + h * static_cast<double>(p);
    sum += std::exp(Complex(0.0, -x * up)) *
           (w.w0 * G[p] + w.w1 * G[p + 1] + w.w2 * G[p + 2]);
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Free transform and free evolution.
// ---------------------------------------------------------------------------

// F0 X for X = (f, 0)^T:  (1/sqrt(pi)) int f(t) cos(xt) dt;
// for X = (0, f)^T:      -(1/sqrt(pi)) int f(t) sin(xt) dt.
inline std::vector<Complex> free_transform(const WavePacket& packet,
                                           std::span<const double> x_grid) {
  const std::size_t n = packet.cells - (packet.cells % 2);
  const double h = packet.a / static_cast<double>(n);
  std::vector<Complex> samples(n + 1);
  for (std::size_t j = 0; j <= n; ++j) samples[j] = packet(h * static_cast<double>(j));

  std::vector<Complex> out(x_grid.size());
  const double c = 1.0 / std::sqrt(std::numbers::pi);
  for (std::size_t k = 0; k < x_grid.size(); ++k) {
    const Complex ic = filon_integral(samples, 0.0, h, x_grid[k]);
    out[k] = (packet.channel == WavePacket::Channel::first)
                 ? Complex(c * ic.real(), 0.0)
                 : Complex(c * ic.imag(), 0.0);
  }
  return out;
}

// e^{-it D0} X sampled on s_grid (valid once the packet has cleared the
// origin, t > a):
//   channel one: (f(|s-t|), i f(|s-t|)) / 2
//   channel two: -(i/2) sgn(s-t) (f(|s-t|), i f(|s-t|))
inline std::vector<Vec2c> free_evolution(const WavePacket& packet, double t,
                                         std::span<const double> s_grid) {
  if (!(t > packet.a))
    throw std::invalid_argument("free_evolution: requires t > a");
  std::vector<Vec2c> out(s_grid.size());
  for (std::size_t k = 0; k < s_grid.size(); ++k) {
    const double u = s_grid[k] - t;
    const double v = packet(std::abs(u));
    if (packet.channel == WavePacket::Channel::first) {
      out[k] = {Complex(0.5 * v, 0.0), Complex(0.0, 0.5 * v)};
    } else {
      const double sg = (u > 0.0) ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
      out[k] = {Complex(0.0, -0.5 * sg * v), Complex(0.5 * sg * v, 0.0)};
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Modified rotation.
// ---------------------------------------------------------------------------

struct PhaseResult {
  std::vector<double> r;
  std::vector<double> phi;
  std::vector<Mat2d> N;  // N(r) = J N0(r) J^T G(r)^T Sigma_gamma(r)
};

// Angle phi(r) making Sigma_phi N(r) symmetric positive definite, with a
// continuous (unwrapped) representative along r.
inline PhaseResult modified_phase(const GaugePath& N0, const EntropyProfile& prof,
                                  std::span<const double> r_grid) {
  PhaseResult out;
  out.r.assign(r_grid.begin(), r_grid.end());
  out.phi.resize(r_grid.size());
  out.N.resize(r_grid.size());
  double prev = 0.0;
  for (std::size_t j = 0; j < r_grid.size(); ++j) {
    const double r = r_grid[j];
    const Mat2d G = tildeG(prof.Iat(r), prof.Rat(r));
    const Mat2d N = kJ * N0(r) * kJ.transpose() * G.transpose() *
                    rotationSigma(prof.gammaAt(r));
    out.N[j] = N;
    double phi = std::atan2(N.a21 - N.a12, N.a11 + N.a22);
    if (j > 0) {
      const double turns = std::round((prev - phi) / (2.0 * std::numbers::pi));
      phi += 2.0 * std::numbers::pi * turns;
    }
    out.phi[j] = phi;
    prev = phi;
  }
  return out;
}

// trace(G J H J^T G^T) - 2, the positive integrand controlling the modified
// normalizer.
inline double normalizer_gap(const Hamiltonian& H, const EntropyProfile& prof, double r) {
  const Mat2d G = tildeG(prof.Iat(r), prof.Rat(r));
  const Mat2d M = G * kJ * H(r) * kJ.transpose() * G.transpose();
  return M.trace() - 2.0;
}

// ---------------------------------------------------------------------------
// Wave-operator approximant and the error curve.
// ---------------------------------------------------------------------------

// A_t(x) = (1/(2 sqrt(pi))) int_{-a}^{a} c(u) f(|u|) e^{-i x u} P~*_{2(t+u)}(x) du
// with c = 1 on the first channel and c(u) = -i sgn(u) on the second.
inline std::vector<Complex> wave_approximant(const KreinTable& table,
                                             const WavePacket& packet, double t) {
  if (!(t > packet.a))
    throw std::invalid_argument("wave_approximant: requires t > a");
  const double h = table.step();
  const auto half = static_cast<std::size_t>(std::llround(packet.a / h));
  if (std::abs(half * h - packet.a) > 1e-9)
    throw std::invalid_argument("wave_approximant: packet radius must align with the table step");
  if (half % 2 != 0)
    throw std::invalid_argument("wave_approximant: need an even cell count per side");
  const std::size_t i0 = table.indexOf(t);  // throws when off the table
  if (i0 < half || i0 + half >= table.s.size())
    throw std::out_of_range("wave_approximant: (s, x) rectangle exceeds the Krein table");

  const bool second = packet.channel == WavePacket::Channel::second;
  std::vector<Complex> out(table.nx());
  std::vector<Complex> G(2 * half + 1);
  const double c = 1.0 / (2.0 * std::sqrt(std::numbers::pi));
  for (std::size_t ix = 0; ix < table.nx(); ++ix) {
    const double x = table.xg.x[ix];
    for (std::size_t j = 0; j <= 2 * half; ++j) {
      const double u = (static_cast<double>(j) - static_cast<double>(half)) * h;
      Complex chan(1.0, 0.0);
      if (second) chan = Complex(0.0, -(u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0)));
      G[j] = chan * packet(std::abs(u)) * table.pstar(i0 - half + j, ix);
    }
    // split at u = 0 where f(|u|) has a corner
    const auto left = std::span<const Complex>(G).subspan(0, half + 1);
    const auto right = std::span<const Complex>(G).subspan(half);
    out[ix] = c * (filon_integral(left, -packet.a, h, x) +
                   filon_integral(right, 0.0, h, x));
  }
  return out;
}

struct ScatterReport {
  std::vector<double> t;
  std::vector<double> error;
  std::string target_id;
};

// Weighted L2 error between the approximant and the stationary target
// D^{-1} F0 X.  The difference is formed after multiplying through by
// sqrt(w), where |D^{-1}| sqrt(w) = 1 exactly, so gapped models with tiny
// densities stay finite.
inline ScatterReport scatter_error(const KreinTable& table, const WavePacket& packet,
                                   std::span<const double> t_grid,
                                   const HerglotzData& w_full) {
  if (w_full.size() != table.nx())
    throw std::invalid_argument("scatter_error: density grid must match the table grid");
  ScatterReport rep;
  rep.t.assign(t_grid.begin(), t_grid.end());
  rep.error.resize(t_grid.size());
  rep.target_id = "szego-target";

  const auto f0 = free_transform(packet, table.xg.x);
  const auto phase = szego_boundary_phase(w_full);

  for (std::size_t m = 0; m < t_grid.size(); ++m) {
    const auto approx = wave_approximant(table, packet, t_grid[m]);
    double acc = 0.0;
    for (std::size_t k = 0; k < table.nx(); ++k) {
      if (w_full.flag[k]) continue;
      const double sw = std::sqrt(std::max(w_full.w[k], 0.0));
      const Complex target = std::exp(Complex(0.0, -phase[k])) * f0[k];
      acc += w_full.grid.lebesgueWeight(k) * std::norm(approx[k] * sw - target);
    }
    rep.error[m] = std::sqrt(acc);
  }
  return rep;
}

}  // namespace cansys
