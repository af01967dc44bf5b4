#include "qnmag/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>

namespace qnmag {

// --- local permeability updates ----------------------------------------------

namespace {

bool degenerate_pair(Vec2 d, Vec2 y) {
  const double nd = norm(d);
  if (nd == 0.0) return true;
  return std::abs(dot(y, d)) <= 1e-14 * norm(y) * nd;
}

}  // namespace

Mat2 qn_update_bfgs(const Mat2& H, Vec2 d, Vec2 y) {
  if (degenerate_pair(d, y)) return H;
  const Vec2 Hd = H * d;
  const double dHd = dot(d, Hd);
  if (!(dHd > 0.0)) return H;
  const Vec2 HTd = H.transposed() * d;
  // Correction first, so that y = Hd returns H bit for bit.
  const Mat2 corr = (1.0 / dot(y, d)) * Mat2::outer(y, y) - (1.0 / dHd) * Mat2::outer(Hd, HTd);
  return H + corr;
}

Mat2 qn_update_dfp(const Mat2& H, Vec2 d, Vec2 y) {
  if (degenerate_pair(d, y)) return H;
  const double yd = dot(y, d);
  const Vec2 r = y - H * d;
  return H + (1.0 / yd) * (Mat2::outer(r, y) + Mat2::outer(y, r)) -
         (dot(r, d) / (yd * yd)) * Mat2::outer(y, y);
}

Mat2 symmetrize(const Mat2& m) {
  const double off = 0.5 * (m.xy + m.yx);
  return {m.xx, off, off, m.yy};
}

Projection project_spd(const Mat2& m, double mu1, double mu2) {
  const SymEigen2 e = eigen_sym(m);
  if (e.lo >= mu1 && e.hi <= mu2) return {m, false};
  // Rebuilding the tensor perturbs its eigenvalues by about eps * mu2, so the
  // clamp targets are pulled inward until the stored tensor passes the check.
  if (mu1 == mu2) return {Mat2::identity(mu1), true};
  const double mid = 0.5 * (mu1 + mu2);
  double margin = 0.0;
  Mat2 t;
  for (int k = 0; k < 40; ++k) {
    const double a = std::min(mu1 + margin, mid);
    const double b = std::max(mu2 - margin, mid);
    const double lo = std::clamp(e.lo, a, b);
    const double hi = std::clamp(e.hi, a, b);
    t = symmetrize(lo * Mat2::outer(e.v_lo, e.v_lo) + hi * Mat2::outer(e.v_hi, e.v_hi));
    const SymEigen2 check = eigen_sym(t);
    if (check.lo >= mu1 && check.hi <= mu2) break;
    margin = margin == 0.0 ? 4.0 * std::numeric_limits<double>::epsilon() * mu2 : 2.0 * margin;
  }
  return {t, true};
}

// --- configuration -----------------------------------------------------------

PermeabilityStrategy PermeabilityStrategy::fixed_point(const Mat2& mu_bar) {
  return {StrategyKind::FixedPoint, QnRule::Bfgs, mu_bar};
}

PermeabilityStrategy PermeabilityStrategy::newton() {
  return {StrategyKind::Newton, QnRule::Bfgs, Mat2::identity(kMu0)};
}

PermeabilityStrategy PermeabilityStrategy::quasi_newton(QnRule rule, const Mat2& mu_bar) {
  return {StrategyKind::QuasiNewton, rule, mu_bar};
}

std::string_view strategy_name(const PermeabilityStrategy& s) {
  switch (s.kind) {
    case StrategyKind::FixedPoint:
      return "fixpoint";
    case StrategyKind::Newton:
      return "newton";
    case StrategyKind::QuasiNewton:
      return s.rule == QnRule::Bfgs ? "bfgs" : "dfp";
  }
  return "?";
}

std::optional<PermeabilityStrategy> parse_strategy(std::string_view name) {
  if (name == "newton") return PermeabilityStrategy::newton();
  if (name == "fixpoint") return PermeabilityStrategy::fixed_point();
  if (name == "bfgs") return PermeabilityStrategy::quasi_newton(QnRule::Bfgs);
  if (name == "dfp") return PermeabilityStrategy::quasi_newton(QnRule::Dfp);
  return std::nullopt;
}

std::string_view status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged:
      return "converged";
    case SolveStatus::MaxIterations:
      return "max_iterations";
    case SolveStatus::LineSearchFailed:
      return "line_search_failed";
    case SolveStatus::LinearSolveFailed:
      return "linear_solve_failed";
  }
  return "?";
}

// --- building blocks ---------------------------------------------------------

Direction compute_direction(const Discretization& disc, const PermeabilityField& mu,
                            std::span<const double> F, const CgConfig& cg,
                            std::span<const double> guess) {
  const SparseSpdMatrix A = assemble_stiffness(disc, mu);
  CgResult sol = solve_cg(A, F, cg, guess);
  Direction dir;
  dir.cg = sol.report;
  dir.du = std::move(sol.x);
  dir.curvature = dot(dir.du, matvec(A, dir.du));
  return dir;
}

StepResult armijo_step(const std::function<double(double)>& energy_at, double f_u, double slope,
                       const ArmijoRule& rule) {
  StepResult res;
  double tau = rule.tau_max;
  for (int m = 0; m <= rule.m_max; ++m, tau *= rule.rho) {
    const double f = energy_at(tau);
    ++res.trials;
    if (f <= f_u + tau * rule.sigma * slope) {
      res.tau = tau;
      res.energy = f;
      return res;
    }
  }
  throw LineSearchError("Armijo backtracking found no admissible step after " +
                        std::to_string(rule.m_max + 1) + " trials");
}

// --- iteration ---------------------------------------------------------------

namespace {

void validate(const SolverConfig& c, const MaterialModel& iron, double mu1, double mu2) {
  if (!(c.tol_rel > 0.0)) throw ConfigError("tol_rel must be positive");
  if (c.max_outer == 0) throw ConfigError("max_outer must be at least 1");
  if (!(mu1 > 0.0) || !(mu2 >= mu1)) throw ConfigError("spectral bounds need mu2 >= mu1 > 0");
  if (c.strategy.kind == StrategyKind::Newton && !iron.has_jacobian()) {
    throw ConfigError(
        "Newton's method needs the second derivative of the co-energy, which the hysteresis "
        "model does not have");
  }
  if (c.strategy.kind != StrategyKind::Newton) {
    const Mat2& m = c.strategy.mu_bar;
    if (m.xy != m.yx) throw ConfigError("mu_bar must be symmetric");
    const SymEigen2 e = eigen_sym(m);
    if (e.lo < mu1 || e.hi > mu2) throw ConfigError("mu_bar violates the spectral bounds");
  }
  if (const auto* a = std::get_if<ArmijoRule>(&c.step)) {
    if (!(a->tau_max > 0.0) || !(a->sigma > 0.0 && a->sigma < 1.0) ||
        !(a->rho > 0.0 && a->rho < 1.0) || a->m_max < 0) {
      throw ConfigError("Armijo rule needs tau_max > 0 and 0 < sigma, rho < 1");
    }
  } else if (!(std::get<ConstantStep>(c.step).tau > 0.0)) {
    throw ConfigError("constant step size must be positive");
  }
  c.cg.validate();
}

void spectrum(const PermeabilityField& mu, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const Mat2& m : mu.tensors) {
    const SymEigen2 e = eigen_sym(m);
    lo = std::min(lo, e.lo);
    hi = std::max(hi, e.hi);
  }
}

}  // namespace

NonlinearResult solve_nonlinear(const FieldProblem& problem, std::span<const double> u0,
                                const SolverConfig& config) {
  const Discretization& disc = problem.disc();
  const MaterialModel& iron = problem.iron();
  const double mu1 = config.mu1.value_or(iron.monotonicity());
  const double mu2 = config.mu2.value_or(iron.lipschitz());
  validate(config, iron, mu1, mu2);
  if (u0.size() != disc.num_dofs()) throw FemError("initial guess has the wrong length");

  const PermeabilityStrategy& strategy = config.strategy;
  const std::size_t ne = disc.num_elements();
  const Mat2 mu_air = Mat2::identity(iron.mu0());

  NonlinearResult out;
  IterationReport& rep = out.report;
  rep.mu1 = mu1;
  rep.mu2 = mu2;

  DofVector& u = out.u;
  u.assign(u0.begin(), u0.end());
  FieldSnapshot snap = evaluate_fields(problem, u);
  DofVector F = assemble_residual(disc, snap.b);
  rep.initial_energy = snap.energy;
  const double tol = config.tol_rel * std::abs(snap.energy);
  const double F0 = norm2(F);

  PermeabilityField mu;
  mu.tensors.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    if (!problem.is_nonlinear(e)) {
      mu.tensors[e] = mu_air;
    } else if (strategy.kind == StrategyKind::Newton) {
      mu.tensors[e] = problem.jacobian(e, snap.h[e]);
    } else {
      mu.tensors[e] = strategy.mu_bar;
    }
  }

  if (config.keep_iterates) rep.iterates.push_back(u);
  std::size_t pending_truncations = 0;
  double pending_defect = 0.0;
  DofVector trial_u(u.size());
  FieldSnapshot trial;
  // Successive directions are close, so the previous one seeds CG.
  DofVector prev_du;

  rep.status = SolveStatus::MaxIterations;
  rep.iterations = config.max_outer;
  for (std::size_t n = 0; n < config.max_outer; ++n) {
    IterationRecord rec;
    rec.n = n;
    rec.energy = snap.energy;
    rec.next_energy = snap.energy;
    rec.residual_norm = norm2(F);
    rec.truncations = pending_truncations;
    rec.tangent_defect = pending_defect;
    spectrum(mu, rec.mu_eig_min, rec.mu_eig_max);
    rep.total_truncations += pending_truncations;

    if (rec.residual_norm == 0.0 || rec.residual_norm <= 1e-14 * F0) {
      rep.records.push_back(rec);
      rep.status = SolveStatus::Converged;
      rep.iterations = n;
      break;
    }

    const Direction dir = compute_direction(disc, mu, F, config.cg, prev_du);
    prev_du = dir.du;
    rec.curvature = dir.curvature;
    rec.cg_iterations = dir.cg.iterations;
    rec.cg_residual = dir.cg.relative_residual;
    if (!dir.cg.converged) {
      rep.records.push_back(rec);
      rep.status = SolveStatus::LinearSolveFailed;
      rep.iterations = n;
      rep.message = "conjugate gradients stopped at relative residual " +
                    std::to_string(dir.cg.relative_residual);
      break;
    }

    const double slope = -dot(F, dir.du);
    const auto energy_at = [&](double tau) {
      for (std::size_t i = 0; i < u.size(); ++i) trial_u[i] = u[i] + tau * dir.du[i];
      trial = evaluate_fields(problem, trial_u);
      return trial.energy;
    };

    if (const auto* armijo = std::get_if<ArmijoRule>(&config.step)) {
      try {
        const StepResult step = armijo_step(energy_at, snap.energy, slope, *armijo);
        rec.tau = step.tau;
        rec.ls_trials = step.trials;
      } catch (const LineSearchError& err) {
        rec.ls_trials = armijo->m_max + 1;
        rep.records.push_back(rec);
        rep.iterations = n;
        // Only roundoff can defeat the sufficient-decrease test; if no step
        // could change the energy by more than the tolerance, stop here.
        if (armijo->tau_max * std::abs(slope) <= tol) {
          rep.status = SolveStatus::Converged;
        } else {
          rep.status = SolveStatus::LineSearchFailed;
          rep.message = err.what();
        }
        break;
      }
    } else {
      rec.tau = std::get<ConstantStep>(config.step).tau;
      energy_at(rec.tau);
      rec.ls_trials = 1;
    }
    rec.next_energy = trial.energy;
    const bool done = std::abs(trial.energy - snap.energy) <= tol;

    // Tensors for the next iteration.
    pending_truncations = 0;
    pending_defect = 0.0;
    if (strategy.kind == StrategyKind::QuasiNewton) {
      for (std::size_t e = 0; e < ne; ++e) {
        if (!problem.is_nonlinear(e)) continue;
        const Vec2 d = trial.h[e] - snap.h[e];
        const Vec2 y = trial.b[e] - snap.b[e];
        if (norm(d) < 1e-10 * (1.0 + norm(trial.h[e])) ||
            std::abs(dot(y, d)) < 1e-14 * norm(y) * norm(d)) {
          continue;
        }
        Mat2 H = strategy.rule == QnRule::Bfgs ? qn_update_bfgs(mu.tensors[e], d, y)
                                               : qn_update_dfp(mu.tensors[e], d, y);
        pending_defect = std::max(pending_defect, norm(H * d - y) / norm(y));
        H = symmetrize(H);
        if (config.modification == Modification::Projection) {
          const Projection p = project_spd(H, mu1, mu2);
          H = p.tensor;
          pending_truncations += p.clamped ? 1 : 0;
        } else {
          const SymEigen2 eig = eigen_sym(H);
          if (eig.lo < mu1 || eig.hi > mu2) {
            H = strategy.mu_bar;
            ++pending_truncations;
          }
        }
        mu.tensors[e] = H;
      }
    } else if (strategy.kind == StrategyKind::Newton) {
      for (std::size_t e = 0; e < ne; ++e) {
        if (problem.is_nonlinear(e)) mu.tensors[e] = problem.jacobian(e, trial.h[e]);
      }
    }

    u.swap(trial_u);
    std::swap(snap, trial);
    F = assemble_residual(disc, snap.b);
    rep.records.push_back(rec);
    if (config.keep_iterates) rep.iterates.push_back(u);
    if (done) {
      rep.status = SolveStatus::Converged;
      rep.iterations = n;
      break;
    }
  }
  rep.converged = rep.status == SolveStatus::Converged;
  rep.final_energy = snap.energy;
  return out;
}

void write_report_csv(const IterationReport& report, std::ostream& out) {
  out << "n,f,residual_norm,tau,ls_trials,truncations\n";
  out << std::setprecision(17);
  for (const auto& r : report.records) {
    out << r.n << ',' << r.energy << ',' << r.residual_norm << ',' << r.tau << ',' << r.ls_trials
        << ',' << r.truncations << '\n';
  }
}

void write_report_csv(const IterationReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_report_csv(report, out);
}

}  // namespace qnmag
