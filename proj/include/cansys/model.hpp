#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cansys/grids.hpp"
#include "cansys/mat2.hpp"
#include "cansys/rk.hpp"

namespace cansys {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Scalar laws: the closed-form descriptors a potential component can take.
// ---------------------------------------------------------------------------

class ScalarLaw {
 public:
  enum class Form { zero, constant, bump, sin_square, exp_decay, table };

  ScalarLaw() = default;

  static ScalarLaw makeZero() { return ScalarLaw(); }

  static ScalarLaw makeConstant(double c) {
    ScalarLaw l;
    l.form_ = (c == 0.0) ? Form::zero : Form::constant;
    l.amplitude_ = c;
    return l;
  }

  // amplitude * exp(1 - 1/(1 - u^2)) on |u| < 1, u = (t - center)/halfwidth.
  // Smooth, supported on (center - halfwidth, center + halfwidth), peak at
  // the center equal to the amplitude.
  static ScalarLaw makeBump(double amplitude, double center, double halfwidth) {
    if (!(halfwidth > 0)) throw std::invalid_argument("bump: halfwidth must be > 0");
    ScalarLaw l;
    l.form_ = Form::bump;
    l.amplitude_ = amplitude;
    l.center_ = center;
    l.halfwidth_ = halfwidth;
    l.buildBumpTable();
    return l;
  }

  // amplitude * sin(t^2)
  static ScalarLaw makeSinSquare(double amplitude) {
    ScalarLaw l;
    l.form_ = Form::sin_square;
    l.amplitude_ = amplitude;
    l.buildSinSquareTable();
    return l;
  }

  // amplitude * exp(-rate * t)
  static ScalarLaw makeExpDecay(double amplitude, double rate) {
    if (!(rate > 0)) throw std::invalid_argument("exp_decay: rate must be > 0");
    ScalarLaw l;
    l.form_ = Form::exp_decay;
    l.amplitude_ = amplitude;
    l.rate_ = rate;
    return l;
  }

  // Piecewise-constant samples: value v[k] on [t[k], t[k+1]), zero outside.
  static ScalarLaw makeTable(std::vector<double> t, std::vector<double> v) {
    if (t.size() != v.size() || t.size() < 2)
      throw std::invalid_argument("table law: need matching t/v arrays of size >= 2");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!std::isfinite(t[i]) || !std::isfinite(v[i]))
        throw std::invalid_argument("rejected input: non-finite tabulated data");
      if (i > 0 && !(t[i] > t[i - 1]))
        throw std::invalid_argument("rejected input: tabulated times must increase");
    }
    if (t.front() < 0.0)
      throw std::invalid_argument("rejected input: tabulated times must be >= 0");
    ScalarLaw l;
    l.form_ = Form::table;
    l.tab_t_ = std::make_shared<const std::vector<double>>(std::move(t));
    l.tab_v_ = std::make_shared<const std::vector<double>>(std::move(v));
    l.buildTableCumulative();
    return l;
  }

  Form form() const { return form_; }
  double amplitude() const { return amplitude_; }
  double center() const { return center_; }
  double halfwidth() const { return halfwidth_; }
  double rate() const { return rate_; }

  double operator()(double t) const {
    switch (form_) {
      case Form::zero: return 0.0;
      case Form::constant: return amplitude_;
      case Form::bump: {
        const double u = (t - center_) / halfwidth_;
        if (std::abs(u) >= 1.0) return 0.0;
        return amplitude_ * std::exp(1.0 - 1.0 / (1.0 - u * u));
      }
      case Form::sin_square: return amplitude_ * std::sin(t * t);
      case Form::exp_decay: return amplitude_ * std::exp(-rate_ * t);
      case Form::table: {
        const auto& ts = *tab_t_;
        if (t < ts.front() || t >= ts.back()) return 0.0;
        const auto it = std::upper_bound(ts.begin(), ts.end(), t);
        return (*tab_v_)[static_cast<std::size_t>(it - ts.begin()) - 1];
      }
    }
    return 0.0;
  }

  // Antiderivative from 0: integral of the law over [0, t].
  double antiderivative(double t) const {
    switch (form_) {
      case Form::zero: return 0.0;
      case Form::constant: return amplitude_ * t;
      case Form::exp_decay: return amplitude_ * (1.0 - std::exp(-rate_ * t)) / rate_;
      case Form::bump: return bumpAntiderivative(t);
      case Form::sin_square: return amplitude_ * fresnelSinIntegral(t);
      case Form::table: return tableAntiderivative(t);
    }
    return 0.0;
  }

  // End of the support when the law is compactly supported.
  std::optional<double> supportEnd() const {
    switch (form_) {
      case Form::zero: return 0.0;
      case Form::bump: return center_ + halfwidth_;
      case Form::table: return tab_t_->back();
      default: return std::nullopt;
    }
  }

  bool tableCellAligned() const { return form_ == Form::table; }
  const std::vector<double>& tableTimes() const { return *tab_t_; }
  const std::vector<double>& tableValues() const { return *tab_v_; }

  Json toJson() const {
    switch (form_) {
      case Form::zero: return Json{{"form", "zero"}};
      case Form::constant: return Json{{"form", "constant"}, {"value", amplitude_}};
      case Form::bump:
        return Json{{"form", "bump"}, {"amplitude", amplitude_},
                    {"center", center_}, {"halfwidth", halfwidth_}};
      case Form::sin_square:
        return Json{{"form", "sin_square"}, {"amplitude", amplitude_}};
      case Form::exp_decay:
        return Json{{"form", "exp_decay"}, {"amplitude", amplitude_}, {"rate", rate_}};
      case Form::table:
        return Json{{"form", "table"}, {"t", *tab_t_}, {"v", *tab_v_}};
    }
    return {};
  }

  static ScalarLaw fromJson(const Json& j) {
    const std::string form = j.value("form", "zero");
    if (form == "zero") return makeZero();
    if (form == "constant") return makeConstant(j.at("value").get<double>());
    if (form == "bump")
      return makeBump(j.at("amplitude").get<double>(), j.at("center").get<double>(),
                      j.at("halfwidth").get<double>());
    if (form == "sin_square") return makeSinSquare(j.at("amplitude").get<double>());
    if (form == "exp_decay")
      return makeExpDecay(j.at("amplitude").get<double>(), j.at("rate").get<double>());
    if (form == "table")
      return makeTable(j.at("t").get<std::vector<double>>(),
                       j.at("v").get<std::vector<double>>());
    throw std::invalid_argument("unknown scalar law form: " + form);
  }

 private:
  Form form_ = Form::zero;
  double amplitude_ = 0.0, center_ = 0.0, halfwidth_ = 0.0, rate_ = 0.0;
  std::shared_ptr<const std::vector<double>> tab_t_, tab_v_;
  std::shared_ptr<const std::vector<double>> cum_;  // cumulative integrals
  double cum_h_ = 0.0, cum_t0_ = 0.0;

  void buildBumpTable() {
    const std::size_t cells = 8192;
    const double a = center_ - halfwidth_, b = center_ + halfwidth_;
    cum_t0_ = a;
    cum_h_ = (b - a) / static_cast<double>(cells);
    auto cum = std::make_shared<std::vector<double>>(cells + 1, 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
      const double t0 = a + cum_h_ * static_cast<double>(i);
      acc += cum_h_ / 6.0 *
             ((*this)(t0) + 4.0 * (*this)(t0 + 0.5 * cum_h_) + (*this)(t0 + cum_h_));
      (*cum)[i + 1] = acc;
    }
    cum_ = std::move(cum);
  }

  double bumpAntiderivative(double t) const {
    const double a = center_ - halfwidth_;
    if (t <= std::max(a, 0.0)) return 0.0;
    double lead = 0.0;
    // Support may start below zero; the antiderivative is taken from 0.
    if (a < 0.0) lead = -hermiteLookup(0.0);
    if (t >= center_ + halfwidth_) return cum_->back() + lead;
    return hermiteLookup(t) + lead;
  }

  void buildSinSquareTable() {
    const std::size_t cells = 32768;
    cum_t0_ = 0.0;
    cum_h_ = 6.0 / static_cast<double>(cells);
    auto cum = std::make_shared<std::vector<double>>(cells + 1, 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
      const double t0 = cum_h_ * static_cast<double>(i);
      auto f = [](double s) { return std::sin(s * s); };
      acc += cum_h_ / 6.0 * (f(t0) + 4.0 * f(t0 + 0.5 * cum_h_) + f(t0 + cum_h_));
      (*cum)[i + 1] = acc;
    }
    cum_ = std::move(cum);
  }

  // integral of sin(s^2) over [0, t]; table below t = 6, asymptotic tail above.
  double fresnelSinIntegral(double t) const {
    const double sign = (t < 0.0) ? -1.0 : 1.0;  // odd function
    const double u = std::abs(t);
    if (u <= 6.0) return sign * hermiteLookupSin(u);
    const double total = std::sqrt(std::numbers::pi / 8.0);
    const double c = std::cos(u * u), s = std::sin(u * u);
    const double u2 = u * u;
    const double tail = c / (2.0 * u) * (1.0 - 1.5 / (u2 * u2)) +
                        s / (4.0 * u2 * u) * (1.0 - 15.0 / (4.0 * u2 * u2));
    return sign * (total - tail);
  }

  double hermiteLookupSin(double t) const {
    return hermiteInterp(t, [](double s) { return std::sin(s * s); });
  }

  double hermiteLookup(double t) const {
    return hermiteInterp(t, [this](double s) {
      const double u = (s - center_) / halfwidth_;
      if (std::abs(u) >= 1.0) return 0.0;
      return amplitude_ * std::exp(1.0 - 1.0 / (1.0 - u * u));
    });
  }

  template <typename F>
  double hermiteInterp(double t, F&& deriv) const {
    const auto& cum = *cum_;
    const double pos = (t - cum_t0_) / cum_h_;
    const auto i = static_cast<std::size_t>(
        std::clamp(pos, 0.0, static_cast<double>(cum.size() - 2)));
    const double tau = (t - (cum_t0_ + cum_h_ * static_cast<double>(i))) / cum_h_;
    const double y0 = cum[i], y1 = cum[i + 1];
    const double d0 = deriv(cum_t0_ + cum_h_ * static_cast<double>(i)) * cum_h_;
    const double d1 = deriv(cum_t0_ + cum_h_ * static_cast<double>(i + 1)) * cum_h_;
    const double t2 = tau * tau, t3 = t2 * tau;
    return y0 * (2 * t3 - 3 * t2 + 1) + d0 * (t3 - 2 * t2 + tau) +
           y1 * (-2 * t3 + 3 * t2) + d1 * (t3 - t2);
  }

  void buildTableCumulative() {
    const auto& ts = *tab_t_;
    const auto& vs = *tab_v_;
    auto cum = std::make_shared<std::vector<double>>(ts.size(), 0.0);
    for (std::size_t i = 1; i < ts.size(); ++i)
      (*cum)[i] = (*cum)[i - 1] + vs[i - 1] * (ts[i] - ts[i - 1]);
    cum_ = std::move(cum);
  }

  double tableAntiderivative(double t) const {
    const auto& ts = *tab_t_;
    if (t <= ts.front()) return 0.0;
    if (t >= ts.back()) return cum_->back();
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const auto i = static_cast<std::size_t>(it - ts.begin()) - 1;
    return (*cum_)[i] + (*tab_v_)[i] * (t - ts[i]);
  }
};

// ---------------------------------------------------------------------------
// Potentials Q(t) = ((q1, q2), (q2, -q1)).
// ---------------------------------------------------------------------------

enum class PotentialKind { zero, off_diagonal, diagonal, general, tabulated };

inline std::string toString(PotentialKind k) {
  switch (k) {
    case PotentialKind::zero: return "zero";
    case PotentialKind::off_diagonal: return "off_diagonal";
    case PotentialKind::diagonal: return "diagonal";
    case PotentialKind::general: return "general";
    case PotentialKind::tabulated: return "tabulated";
  }
  return "?";
}

struct PotentialSpec {
  PotentialKind kind = PotentialKind::zero;
  ScalarLaw q;         // off_diagonal: q2 = q;  diagonal: q1 = q
  ScalarLaw law_q1, law_q2;  // general / tabulated components

  double q1(double t) const {
    switch (kind) {
      case PotentialKind::zero:
      case PotentialKind::off_diagonal: return 0.0;
      case PotentialKind::diagonal: return q(t);
      default: return law_q1(t);
    }
  }

  double q2(double t) const {
    switch (kind) {
      case PotentialKind::zero:
      case PotentialKind::diagonal: return 0.0;
      case PotentialKind::off_diagonal: return q(t);
      default: return law_q2(t);
    }
  }

  Mat2d Q(double t) const {
    const double a = q1(t), b = q2(t);
    return {a, b, b, -a};
  }

  // g(t) = integral of q over [0, t] for the single-law kinds.
  double g(double t) const {
    if (kind == PotentialKind::off_diagonal || kind == PotentialKind::diagonal)
      return q.antiderivative(t);
    if (kind == PotentialKind::zero) return 0.0;
    throw std::logic_error("g(t) is defined for single-law potential kinds only");
  }

  std::optional<double> supportEnd() const {
    switch (kind) {
      case PotentialKind::zero: return 0.0;
      case PotentialKind::off_diagonal:
      case PotentialKind::diagonal: return q.supportEnd();
      default: {
        const auto e1 = law_q1.supportEnd(), e2 = law_q2.supportEnd();
        if (e1 && e2) return std::max(*e1, *e2);
        return std::nullopt;
      }
    }
  }

  static PotentialSpec makeZero() { return {}; }

  static PotentialSpec makeOffDiagonal(ScalarLaw law) {
    PotentialSpec p;
    p.kind = PotentialKind::off_diagonal;
    p.q = std::move(law);
    return p;
  }

  static PotentialSpec makeDiagonal(ScalarLaw law) {
    PotentialSpec p;
    p.kind = PotentialKind::diagonal;
    p.q = std::move(law);
    return p;
  }

  static PotentialSpec makeGeneral(ScalarLaw l1, ScalarLaw l2) {
    PotentialSpec p;
    p.kind = PotentialKind::general;
    p.law_q1 = std::move(l1);
    p.law_q2 = std::move(l2);
    return p;
  }

  static PotentialSpec makeTabulated(std::vector<double> t, std::vector<double> v1,
                                     std::vector<double> v2) {
    PotentialSpec p;
    p.kind = PotentialKind::tabulated;
    p.law_q1 = ScalarLaw::makeTable(t, std::move(v1));
    p.law_q2 = ScalarLaw::makeTable(std::move(t), std::move(v2));
    return p;
  }

  Json toJson() const {
    switch (kind) {
      case PotentialKind::zero: return Json{{"kind", "zero"}};
      case PotentialKind::off_diagonal:
        return Json{{"kind", "off_diagonal"}, {"params", q.toJson()}};
      case PotentialKind::diagonal:
        return Json{{"kind", "diagonal"}, {"params", q.toJson()}};
      case PotentialKind::general:
        return Json{{"kind", "general"},
                    {"params", Json{{"q1", law_q1.toJson()}, {"q2", law_q2.toJson()}}}};
      case PotentialKind::tabulated:
        return Json{{"kind", "tabulated"}, {"t", law_q1.tableTimes()},
                    {"q1", law_q1.tableValues()}, {"q2", law_q2.tableValues()}};
    }
    return {};
  }

  static PotentialSpec fromJson(const Json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "zero") return makeZero();
    if (kind == "off_diagonal") return makeOffDiagonal(ScalarLaw::fromJson(j.at("params")));
    if (kind == "diagonal") return makeDiagonal(ScalarLaw::fromJson(j.at("params")));
    if (kind == "general")
      return makeGeneral(ScalarLaw::fromJson(j.at("params").at("q1")),
                         ScalarLaw::fromJson(j.at("params").at("q2")));
    if (kind == "tabulated")
      return makeTabulated(j.at("t").get<std::vector<double>>(),
                           j.at("q1").get<std::vector<double>>(),
                           j.at("q2").get<std::vector<double>>());
    throw std::invalid_argument("unknown potential kind: " + kind);
  }
};

// ---------------------------------------------------------------------------
// Hamiltonians H(t) = ((h1, h), (h, h2)) and the gauge path N0.
// ---------------------------------------------------------------------------

struct ConstantTail {
  double t_start = 0.0;
  Mat2d value = Mat2d::identity();
};

struct Hamiltonian {
  std::function<Mat2d(double)> sample;
  bool diagonal = false;
  bool det_one = false;
  enum class Provenance { from_potential, direct } provenance = Provenance::direct;
  std::optional<ConstantTail> tail;

  Mat2d operator()(double t) const { return sample(t); }
  double h1(double t) const { return sample(t).a11; }
  double h(double t) const { return sample(t).a12; }
  double h2(double t) const { return sample(t).a22; }

  static Hamiltonian free() {
    Hamiltonian H;
    H.sample = [](double) { return Mat2d::identity(); };
    H.diagonal = true;
    H.det_one = true;
    H.tail = ConstantTail{0.0, Mat2d::identity()};
    return H;
  }

  static Hamiltonian constant(Mat2d C) {
    if (std::abs(C.a12 - C.a21) > 1e-12 * std::max(1.0, maxAbs(C)))
      throw std::invalid_argument("constant Hamiltonian must be symmetric");
    C.a12 = C.a21 = 0.5 * (C.a12 + C.a21);
    if (!(C.trace() > 0.0) || C.det() < 0.0)
      throw std::invalid_argument("constant Hamiltonian must have positive trace "
                                  "and nonnegative determinant");
    Hamiltonian H;
    H.sample = [C](double) { return C; };
    H.diagonal = (C.a12 == 0.0);
    H.det_one = std::abs(C.det() - 1.0) < 1e-12;
    H.tail = ConstantTail{0.0, C};
    return H;
  }

  // Shifted Hamiltonian H_r : t -> H(t + r).
  Hamiltonian shifted(double r) const {
    Hamiltonian out = *this;
    auto base = sample;
    out.sample = [base, r](double t) { return base(t + r); };
    if (tail) out.tail = ConstantTail{std::max(0.0, tail->t_start - r), tail->value};
    return out;
  }

  // Dual Hamiltonian H^d = J* H J: diagonal entries swap, off-diagonal flips sign.
  Hamiltonian dual() const {
    Hamiltonian out = *this;
    auto base = sample;
    out.sample = [base](double t) {
      const Mat2d m = base(t);
      return Mat2d{m.a22, -m.a12, -m.a21, m.a11};
    };
    out.provenance = Provenance::direct;
    if (tail) {
      const Mat2d m = tail->value;
      out.tail = ConstantTail{tail->t_start, Mat2d{m.a22, -m.a12, -m.a21, m.a11}};
    }
    return out;
  }
};

// Replace H by the given constant matrix from time r onwards.  The sampler
// is left-continuous at the junction so integrations ending exactly at r see
// consistent values; the single point has no effect on any integral.
inline Hamiltonian withConstantTail(const Hamiltonian& H, double r, const Mat2d& C) {
  Hamiltonian out;
  auto base = H.sample;
  out.sample = [base, r, C](double t) { return (t <= r) ? base(t) : C; };
  out.diagonal = H.diagonal && (C.a12 == 0.0);
  out.det_one = H.det_one && std::abs(C.det() - 1.0) < 1e-12;
  out.provenance = Hamiltonian::Provenance::direct;
  out.tail = ConstantTail{r, C};
  return out;
}

struct GaugePath {
  std::function<Mat2d(double)> sample;           // N0(t)
  std::optional<std::function<double(double)>> g;  // closed-form g when available

  Mat2d operator()(double t) const { return sample(t); }
};

struct BuiltModel {
  Hamiltonian H;
  GaugePath N0;
};

namespace detail {

// Gauge ODE N0' = B(t) N0 with B = ((-q2, q1), (q1, q2)); equivalent to
// J N0' + Q N0 = 0 under J = ((0,-1),(1,0)).
inline Mat2d gaugeRhsMatrix(const PotentialSpec& p, double t) {
  const double a = p.q1(t), b = p.q2(t);
  return {-b, a, a, b};
}

struct GaugeTable {
  std::vector<double> t;
  std::vector<Mat2d> n0;
  std::vector<Mat2d> deriv;
  double h = 0.0;

  Mat2d eval(double tt) const {
    if (tt <= t.front()) return n0.front();
    if (tt >= t.back()) return n0.back();
    const double pos = (tt - t.front()) / h;
    const auto i = static_cast<std::size_t>(
        std::clamp(pos, 0.0, static_cast<double>(t.size() - 2)));
    const double tau = (tt - t[i]) / h;
    const double t2 = tau * tau, t3 = t2 * tau;
    const double c0 = 2 * t3 - 3 * t2 + 1, c1 = t3 - 2 * t2 + tau;
    const double c2 = -2 * t3 + 3 * t2, c3 = t3 - t2;
    Mat2d out = c0 * n0[i] + (h * c1) * deriv[i] + c2 * n0[i + 1] + (h * c3) * deriv[i + 1];
    return out;
  }
};

inline GaugeTable buildGaugeTable(const PotentialSpec& p, double t_end) {
  GaugeTable tab;
  const std::size_t cells = std::max<std::size_t>(512, static_cast<std::size_t>(t_end * 1024));
  tab.t = linspace(0.0, t_end, cells + 1);
  tab.h = t_end / static_cast<double>(cells);
  auto rhs = [&p](double t, const Mat2d& n) { return gaugeRhsMatrix(p, t) * n; };
  StepControl ctl;
  ctl.tol = 1e-12;
  ctl.h_max = tab.h;
  ctl.h_init = tab.h;
  tab.n0 = integrateAt(rhs, Mat2d::identity(), std::span<const double>(tab.t), ctl);
  tab.deriv.resize(tab.n0.size());
  for (std::size_t i = 0; i < tab.n0.size(); ++i)
    tab.deriv[i] = gaugeRhsMatrix(p, tab.t[i]) * tab.n0[i];
  return tab;
}

// Exact gauge propagation across piecewise-constant potential cells:
// exp(tau B) = cosh(tau rho) I + sinh(tau rho)/rho B with rho^2 = q1^2 + q2^2.
inline Mat2d cellExponential(double q1v, double q2v, double tau) {
  const double rho = std::hypot(q1v, q2v);
  const Mat2d B{-q2v, q1v, q1v, q2v};
  if (rho * tau == 0.0) return Mat2d::identity() + tau * B;
  const double ch = std::cosh(tau * rho), sh = std::sinh(tau * rho) / rho;
  return Mat2d{ch, 0.0, 0.0, ch} + sh * B;
}

}  // namespace detail

// Dirac-to-canonical reduction: N0 solves J N0' + Q N0 = 0, N0(0) = I, and
// H = N0^T N0 has unit determinant.  Off-diagonal and diagonal potentials
// use the closed forms; general and tabulated kinds integrate the gauge ODE.
inline BuiltModel build_hamiltonian(const PotentialSpec& spec, double build_horizon = 64.0) {
  BuiltModel out;
  out.H.det_one = true;
  out.H.provenance = Hamiltonian::Provenance::from_potential;

  switch (spec.kind) {
    case PotentialKind::zero: {
      out.N0.sample = [](double) { return Mat2d::identity(); };
      out.N0.g = [](double) { return 0.0; };
      out.H.sample = [](double) { return Mat2d::identity(); };
      out.H.diagonal = true;
      out.H.tail = ConstantTail{0.0, Mat2d::identity()};
      break;
    }
    case PotentialKind::off_diagonal: {
      auto law = spec.q;
      auto g = [law](double t) { return law.antiderivative(t); };
      out.N0.g = g;
      out.N0.sample = [g](double t) {
        const double e = std::exp(g(t));
        return Mat2d{1.0 / e, 0.0, 0.0, e};
      };
      out.H.sample = [g](double t) {
        const double e = std::exp(2.0 * g(t));
        return Mat2d{1.0 / e, 0.0, 0.0, e};
      };
      out.H.diagonal = true;
      break;
    }
    case PotentialKind::diagonal: {
      auto law = spec.q;
      auto g = [law](double t) { return law.antiderivative(t); };
      out.N0.g = g;
      out.N0.sample = [g](double t) {
        const double v = g(t);
        return Mat2d{std::cosh(v), std::sinh(v), std::sinh(v), std::cosh(v)};
      };
      out.H.sample = [g](double t) {
        const double v = 2.0 * g(t);
        return Mat2d{std::cosh(v), std::sinh(v), std::sinh(v), std::cosh(v)};
      };
      out.H.diagonal = false;
      break;
    }
    case PotentialKind::tabulated: {
      // Exact per-cell exponentials at the table nodes, closed form inside cells.
      const auto& ts = spec.law_q1.tableTimes();
      const auto& v1 = spec.law_q1.tableValues();
      const auto& v2 = spec.law_q2.tableValues();
      auto nodes = std::make_shared<std::vector<Mat2d>>();
      nodes->push_back(Mat2d::identity());
      for (std::size_t i = 0; i + 1 < ts.size(); ++i)
        nodes->push_back(detail::cellExponential(v1[i], v2[i], ts[i + 1] - ts[i]) *
                         nodes->back());
      auto tsc = std::make_shared<std::vector<double>>(ts);
      auto v1c = std::make_shared<std::vector<double>>(v1);
      auto v2c = std::make_shared<std::vector<double>>(v2);
      auto sampler = [nodes, tsc, v1c, v2c](double t) -> Mat2d {
        const auto& tv = *tsc;
        if (t <= tv.front()) return Mat2d::identity();
        if (t >= tv.back()) return nodes->back();
        const auto it = std::upper_bound(tv.begin(), tv.end(), t);
        const auto i = static_cast<std::size_t>(it - tv.begin()) - 1;
        return detail::cellExponential((*v1c)[i], (*v2c)[i], t - tv[i]) * (*nodes)[i];
      };
      out.N0.sample = sampler;
      out.H.sample = [sampler](double t) {
        const Mat2d n = sampler(t);
        return n.transpose() * n;
      };
      out.H.diagonal = false;
      break;
    }
    case PotentialKind::general: {
      const auto support = spec.supportEnd();
      const double t_end = support ? std::max(*support, 1e-6) : build_horizon;
      auto tab = std::make_shared<detail::GaugeTable>(detail::buildGaugeTable(spec, t_end));
      const bool compact = support.has_value();
      auto sampler = [tab, compact, t_end](double t) -> Mat2d {
        if (t > t_end && !compact)
          throw std::out_of_range("gauge path requested beyond build horizon");
        return tab->eval(t);
      };
      out.N0.sample = sampler;
      out.H.sample = [sampler](double t) {
        const Mat2d n = sampler(t);
        return n.transpose() * n;
      };
      out.H.diagonal = false;
      break;
    }
  }

  if (const auto support = spec.supportEnd(); support && !out.H.tail) {
    const double s = std::max(*support, 0.0);
    out.H.tail = ConstantTail{s, out.H.sample(s)};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Clock and eta grid.
// ---------------------------------------------------------------------------

// xi_H(t) = integral of sqrt(det H) over [0, t]; equal to t for det-one
// Hamiltonians.
inline double clock(const Hamiltonian& H, double t) {
  if (t < 0.0) throw std::invalid_argument("clock: t must be >= 0");
  if (H.det_one) return t;
  const auto cells = std::max<std::size_t>(64, static_cast<std::size_t>(t * 64.0));
  return quadGL4([&H](double s) { return std::sqrt(std::max(0.0, H(s).det())); },
                 0.0, t, cells);
}

struct ClockSaturated : NumericError {
  using NumericError::NumericError;
};

// Times eta_n with xi(eta_n) = n for n = 0..n_max.  Fails when the clock
// saturates below n_max inside the working horizon.
inline std::vector<double> eta_grid(const Hamiltonian& H, std::size_t n_max,
                                    double horizon = 20.0) {
  std::vector<double> eta;
  eta.reserve(n_max + 1);
  eta.push_back(0.0);
  if (H.det_one) {
    for (std::size_t n = 1; n <= n_max; ++n)
      eta.push_back(static_cast<double>(n));
    return eta;
  }
  auto dens = [&H](double s) { return std::sqrt(std::max(0.0, H(s).det())); };
  const double cell = 1.0 / 64.0;
  double t = 0.0, xi = 0.0;
  std::size_t n = 1;
  while (n <= n_max && t < horizon) {
    const double step = std::min(cell, horizon - t);
    const double inc = quadGL4(dens, t, t + step, 1);
    while (n <= n_max && xi + inc >= static_cast<double>(n)) {
      // Bisect inside the cell for xi(t + dt) = n.
      double lo = 0.0, hi = step;
      const double target = static_cast<double>(n) - xi;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (quadGL4(dens, t, t + mid, 1) < target ? lo : hi) = mid;
      }
      eta.push_back(t + 0.5 * (lo + hi));
      ++n;
    }
    xi += inc;
    t += step;
  }
  if (n <= n_max)
    throw ClockSaturated(
        "criterion inapplicable: sqrt(det H) integrable up to horizon", t);
  return eta;
}

}  // namespace cansys
