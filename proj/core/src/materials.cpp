#include "qnmag/materials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qnmag {

namespace {

constexpr double kPi = std::numbers::pi;

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw MaterialError(std::string(name) + " must be strictly positive");
  }
}

}  // namespace

void ArctanParams::validate() const {
  require_positive(mu0, "mu0");
  require_positive(A, "A");
  require_positive(Js, "Js");
}

HysteresisParams HysteresisParams::defaults() {
  HysteresisParams p;
  p.cells = {{0.4, 0.0}, {0.3, 20.0}, {0.2, 60.0}, {0.1, 120.0}};
  return p;
}

void HysteresisParams::validate() const {
  require_positive(mu0, "mu0");
  require_positive(A, "A");
  require_positive(Js, "Js");
  if (cells.empty()) throw MaterialError("hysteresis model needs at least one cell");
  for (const auto& c : cells) {
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) {
      throw MaterialError("hysteresis cell weight must be >= 0");
    }
    if (!(c.chi >= 0.0) || !std::isfinite(c.chi)) {
      throw MaterialError("hysteresis cell chi must be >= 0");
    }
  }
}

double HysteresisParams::total_weight() const {
  double s = 0.0;
  for (const auto& c : cells) s += c.weight;
  return s;
}

double HysteresisParams::slope_bound() const {
  return mu0 + total_weight() * 2.0 * Js / (kPi * A);
}

// --- anhysteretic law --------------------------------------------------------

namespace anhysteretic {

double coenergy(Vec2 h, double A, double Js) {
  const double r = norm(h);
  if (r < kSmallField) return Js / (kPi * A) * r * r;
  const double t = r / A;
  return 2.0 * Js / kPi * (r * std::atan(t) - 0.5 * A * std::log1p(t * t));
}

Vec2 polarization(Vec2 h, double A, double Js) {
  const double r = norm(h);
  if (r < kSmallField) return (2.0 * Js / (kPi * A)) * h;
  return (2.0 * Js / kPi * std::atan(r / A) / r) * h;
}

Mat2 jacobian(Vec2 h, double A, double Js) {
  const double r = norm(h);
  const double c = 2.0 * Js / kPi;
  if (r < kSmallField) return Mat2::identity(c / A);
  const Vec2 n = (1.0 / r) * h;
  const Mat2 radial = Mat2::outer(n, n);
  const Mat2 tangential = Mat2::identity() - radial;
  const double t = r / A;
  return c * (std::atan(t) / r * tangential + 1.0 / (A * (1.0 + t * t)) * radial);
}

double internal_energy(Vec2 J, double A, double Js) {
  const double s = norm(J);
  return -2.0 * A * Js / kPi * std::log(std::cos(0.5 * kPi * s / Js));
}

Vec2 internal_energy_gradient(Vec2 J, double A, double Js) {
  const double s = norm(J);
  if (s == 0.0) return {};
  return (A * std::tan(0.5 * kPi * s / Js) / s) * J;
}

}  // namespace anhysteretic

// --- inner maximization ------------------------------------------------------
//
// By duality, sup_J <h,J> - U(J) - chi|J - Jp| = min_{|z| <= chi} U*(h - z) + <z, Jp>,
// with maximizer J = dU*(h - z). Either the minimizer z lies inside the disc
// (then J = Jp, "sticking") or on its boundary z = chi e(theta), where it solves
// a smooth one-dimensional problem in the angle theta.

namespace {

struct DualSample {
  double value = 0.0;
  double d1 = 0.0;  // d/dtheta
  double d2 = 0.0;  // d^2/dtheta^2
  Vec2 e;
  Vec2 J;
};

DualSample dual_on_circle(double theta, double chi, Vec2 h, Vec2 pinned, double A, double Js) {
  DualSample s;
  s.e = {std::cos(theta), std::sin(theta)};
  const Vec2 t{-s.e.y, s.e.x};
  const Vec2 x = h - chi * s.e;
  s.J = anhysteretic::polarization(x, A, Js);
  s.value = anhysteretic::coenergy(x, A, Js) + chi * dot(s.e, pinned);
  s.d1 = chi * dot(t, pinned - s.J);
  s.d2 = chi * dot(s.e, s.J - pinned) + chi * chi * dot(t, anhysteretic::jacobian(x, A, Js) * t);
  return s;
}

constexpr int kInnerMaxIterations = 200;
constexpr double kInnerRelTol = 1e-12;
// Multiplier sign test slack, relative to Js. At the stick/slip boundary the
// multiplier is zero and roundoff can flip its sign.
constexpr double kSlipRelTol = 1e-9;

// Safeguarded Newton descent on the angle. Returns false if the tolerance
// was not met.
bool minimize_angle(double& theta, double chi, Vec2 h, Vec2 pinned, double A, double Js,
                    int& iterations, DualSample& out) {
  const double tol = kInnerRelTol * chi * Js;
  DualSample s = dual_on_circle(theta, chi, h, pinned, A, Js);
  for (int it = 0; it < kInnerMaxIterations; ++it) {
    ++iterations;
    if (std::abs(s.d1) <= tol) {
      out = s;
      return true;
    }
    double step = s.d2 > 0.0 ? -s.d1 / s.d2 : (s.d1 > 0.0 ? -0.5 : 0.5);
    step = std::clamp(step, -0.5, 0.5);
    DualSample trial = dual_on_circle(theta + step, chi, h, pinned, A, Js);
    // Near the minimum the value change drowns in roundoff when |h| is
    // large; a halved derivative is then the better acceptance signal.
    const auto accept = [&](const DualSample& t) {
      return t.value <= s.value + 1e-4 * step * s.d1 ||
             (s.d2 > 0.0 && std::abs(t.d1) <= 0.5 * std::abs(s.d1));
    };
    int halvings = 0;
    while (!accept(trial) && halvings < 60) {
      step *= 0.5;
      trial = dual_on_circle(theta + step, chi, h, pinned, A, Js);
      ++halvings;
    }
    if (halvings == 60 || std::abs(step) < 4.0 * std::numeric_limits<double>::epsilon()) {
      // Roundoff floor: accept if close to the tolerance.
      out = std::abs(trial.d1) < std::abs(s.d1) ? trial : s;
      return std::abs(out.d1) <= 1e3 * tol;
    }
    theta += step;
    s = trial;
  }
  out = s;
  return std::abs(s.d1) <= tol;
}

}  // namespace

InnerSolution inner_maximize(const HysteresisParams& params, double chi, Vec2 h, Vec2 pinned) {
  const double A = params.A;
  const double Js = params.Js;
  InnerSolution sol;
  if (!(chi >= 0.0)) throw MaterialError("chi must be >= 0");
  if (chi == 0.0) {
    sol.J = anhysteretic::polarization(h, A, Js);
    sol.value = anhysteretic::coenergy(h, A, Js);
    return sol;
  }
  if (!(norm(pinned) < Js)) throw MaterialError("pinned polarization must satisfy |J_p| < Js");

  const Vec2 z0 = h - anhysteretic::internal_energy_gradient(pinned, A, Js);
  if (norm(z0) <= chi) {
    sol.J = pinned;
    sol.value = dot(h, pinned) - anhysteretic::internal_energy(pinned, A, Js);
    sol.sticking = true;
    return sol;
  }

  // For a quadratic U the optimal z points along z0; start there.
  double theta = std::atan2(z0.y, z0.x);
  DualSample best;
  bool ok = minimize_angle(theta, chi, h, pinned, A, Js, sol.iterations, best);
  // A stationary point on the circle is the constrained minimum iff the
  // multiplier is positive, i.e. J - Jp points along e.
  const double slip_tol = kSlipRelTol * Js;
  if (!ok || dot(best.e, best.J - pinned) < -slip_tol) {
    constexpr int kSamples = 64;
    double best_theta = 0.0;
    double best_value = std::numeric_limits<double>::infinity();
    for (int k = 0; k < kSamples; ++k) {
      const double t = 2.0 * kPi * k / kSamples;
      const double v = dual_on_circle(t, chi, h, pinned, A, Js).value;
      if (v < best_value) {
        best_value = v;
        best_theta = t;
      }
    }
    theta = best_theta;
    ok = minimize_angle(theta, chi, h, pinned, A, Js, sol.iterations, best);
  }

  const Vec2 slip = best.J - pinned;
  const double slip_len = norm(slip);
  sol.residual = slip_len > 0.0 ? chi * norm(best.e - (1.0 / slip_len) * slip) : chi;
  if (!ok || dot(best.e, slip) < -slip_tol) {
    throw InnerSolveError("inner hysteresis maximization did not converge", sol.residual);
  }
  sol.J = best.J;
  sol.value = best.value;
  return sol;
}

// --- material model ----------------------------------------------------------

MaterialModel MaterialModel::linear(double mu0) {
  require_positive(mu0, "mu0");
  return MaterialModel(LinearParams{mu0});
}

MaterialModel MaterialModel::arctan(const ArctanParams& p) {
  p.validate();
  return MaterialModel(p);
}

MaterialModel MaterialModel::hysteresis(const HysteresisParams& p) {
  p.validate();
  return MaterialModel(p);
}

MaterialKind MaterialModel::kind() const {
  switch (params_.index()) {
    case 0:
      return MaterialKind::Linear;
    case 1:
      return MaterialKind::Arctan;
    default:
      return MaterialKind::Hysteresis;
  }
}

double MaterialModel::mu0() const {
  return std::visit([](const auto& p) { return p.mu0; }, params_);
}

double MaterialModel::lipschitz() const {
  switch (kind()) {
    case MaterialKind::Linear:
      return mu0();
    case MaterialKind::Arctan:
      return std::get<ArctanParams>(params_).slope_bound();
    case MaterialKind::Hysteresis:
      return std::get<HysteresisParams>(params_).slope_bound();
  }
  return mu0();
}

std::size_t MaterialModel::num_cells() const {
  if (const auto* p = std::get_if<HysteresisParams>(&params_)) return p->cells.size();
  return 0;
}

const ArctanParams& MaterialModel::arctan_params() const {
  if (const auto* p = std::get_if<ArctanParams>(&params_)) return *p;
  throw MaterialError("material is not an arctan law");
}

const HysteresisParams& MaterialModel::hysteresis_params() const {
  if (const auto* p = std::get_if<HysteresisParams>(&params_)) return *p;
  throw MaterialError("material is not a hysteresis model");
}

void MaterialModel::check_pinned(std::span<const Vec2> pinned) const {
  if (pinned.size() != num_cells()) {
    throw MaterialError("expected " + std::to_string(num_cells()) +
                        " pinned polarizations, got " + std::to_string(pinned.size()));
  }
}

MaterialResponse MaterialModel::evaluate(Vec2 h, std::span<const Vec2> pinned) const {
  check_pinned(pinned);
  const double m0 = mu0();
  MaterialResponse r;
  r.coenergy = 0.5 * m0 * dot(h, h);
  r.flux = m0 * h;
  if (const auto* p = std::get_if<ArctanParams>(&params_)) {
    r.coenergy += anhysteretic::coenergy(h, p->A, p->Js);
    r.flux += anhysteretic::polarization(h, p->A, p->Js);
  } else if (const auto* p = std::get_if<HysteresisParams>(&params_)) {
    for (std::size_t k = 0; k < p->cells.size(); ++k) {
      const auto& cell = p->cells[k];
      const InnerSolution s = inner_maximize(*p, cell.chi, h, pinned[k]);
      r.coenergy += cell.weight * s.value;
      r.flux += cell.weight * s.J;
    }
  }
  return r;
}

Mat2 MaterialModel::jacobian(Vec2 h) const {
  switch (kind()) {
    case MaterialKind::Linear:
      return Mat2::identity(mu0());
    case MaterialKind::Arctan: {
      const auto& p = std::get<ArctanParams>(params_);
      return Mat2::identity(p.mu0) + anhysteretic::jacobian(h, p.A, p.Js);
    }
    case MaterialKind::Hysteresis:
      break;
  }
  throw CapabilityError(
      "hysteresis co-energy is not twice differentiable; no Jacobian available");
}

void update_state(const HysteresisParams& params, Vec2 h, HysteresisState& state,
                  std::size_t point) {
  auto pinned = state.at(point);
  const double cap = (1.0 - 1e-9) * params.Js;
  for (std::size_t k = 0; k < params.cells.size(); ++k) {
    Vec2 J = inner_maximize(params, params.cells[k].chi, h, pinned[k]).J;
    const double s = norm(J);
    if (s > cap) J = (cap / s) * J;
    pinned[k] = J;
  }
}

}  // namespace qnmag
