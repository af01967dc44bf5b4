#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "qnmag/nonlinear.hpp"
#include "support.hpp"

using namespace qnmag;
namespace qt = qnmag::testing;

namespace {

constexpr double kJ0 = 1e5;

Mat2 random_spd(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(0.2, 5.0);
  std::uniform_real_distribution<double> a(0.0, 3.14159);
  const double t = a(rng);
  const Vec2 v{std::cos(t), std::sin(t)};
  const Vec2 w{-v.y, v.x};
  return d(rng) * Mat2::outer(v, v) + d(rng) * Mat2::outer(w, w);
}

Vec2 random_vec(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  return {d(rng), d(rng)};
}

struct Tiny {
  GeometryDescriptor geometry = qt::tiny_geometry();
  Discretization disc{refine_uniform(generate_benchmark_mesh(geometry))};
  SourceField source = build_source_field(disc, geometry, kJ0);
  DofVector zero = DofVector(disc.num_dofs(), 0.0);
};

SolverConfig config_for(const PermeabilityStrategy& s) {
  SolverConfig c;
  c.strategy = s;
  c.max_outer = 5000;
  return c;
}

const PermeabilityStrategy kAll[] = {
    PermeabilityStrategy::newton(), PermeabilityStrategy::fixed_point(),
    PermeabilityStrategy::quasi_newton(QnRule::Bfgs), PermeabilityStrategy::quasi_newton(QnRule::Dfp)};

}  // namespace

TEST(QnUpdate, HandComputed) {
  const Mat2 H = Mat2::identity();
  EXPECT_EQ(qn_update_bfgs(H, {1.0, 0.0}, {2.0, 0.0}), Mat2::diag(2.0, 1.0));
  EXPECT_EQ(qn_update_dfp(H, {1.0, 0.0}, {2.0, 0.0}), Mat2::diag(2.0, 1.0));
}

TEST(QnUpdate, ConsistentPairIsExactNoOp) {
  EXPECT_EQ(qn_update_bfgs(Mat2::identity(), {1.0, 0.0}, {1.0, 0.0}), Mat2::identity());
  std::mt19937_64 rng(44);
  for (int k = 0; k < 1000; ++k) {
    const Mat2 H = random_spd(rng);
    const Vec2 d = random_vec(rng);
    EXPECT_EQ(qn_update_bfgs(H, d, H * d), H);
    EXPECT_EQ(qn_update_dfp(H, d, H * d), H);
  }
}

TEST(QnUpdate, SecantConditionAndSymmetry) {
  std::mt19937_64 rng(41);
  for (int k = 0; k < 1000; ++k) {
    const Mat2 H = random_spd(rng);
    const Vec2 d = random_vec(rng);
    // y from an SPD "true" tensor guarantees y.d > 0
    const Vec2 y = random_spd(rng) * d;
    for (const Mat2 up : {qn_update_bfgs(H, d, y), qn_update_dfp(H, d, y)}) {
      EXPECT_LE(norm(up * d - y), 1e-12 * norm(y));
      EXPECT_NEAR(up.xy, up.yx, 1e-12 * frobenius(up));
      const SymEigen2 e = eigen_sym(up);
      EXPECT_GT(e.lo, 0.0);
    }
  }
}

TEST(QnUpdate, DegeneratePairsLeaveTensor) {
  const Mat2 H{2.0, 0.3, 0.3, 1.0};
  EXPECT_EQ(qn_update_bfgs(H, {0.0, 0.0}, {1.0, 1.0}), H);
  EXPECT_EQ(qn_update_dfp(H, {0.0, 0.0}, {1.0, 1.0}), H);
  EXPECT_EQ(qn_update_bfgs(H, {1.0, 0.0}, {0.0, 1.0}), H);
  EXPECT_EQ(qn_update_dfp(H, {1.0, 0.0}, {0.0, 1.0}), H);
}

TEST(Projection, InsideIsUntouched) {
  const Mat2 m{2.0, 0.1, 0.1, 3.0};
  const Projection p = project_spd(m, 1.0, 4.0);
  EXPECT_FALSE(p.clamped);
  EXPECT_EQ(p.tensor, m);
}

TEST(Projection, ClampsSpectrum) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> ev(-5.0, 10.0);
  std::uniform_real_distribution<double> ang(0.0, 3.14159);
  for (int k = 0; k < 1000; ++k) {
    const double t = ang(rng);
    const Vec2 v{std::cos(t), std::sin(t)};
    const Vec2 w{-v.y, v.x};
    const double l1 = ev(rng);
    const double l2 = ev(rng);
    const Mat2 m = l1 * Mat2::outer(v, v) + l2 * Mat2::outer(w, w);
    const Projection p = project_spd(m, 1.0, 4.0);
    const SymEigen2 e = eigen_sym(p.tensor);
    EXPECT_GE(e.lo, 1.0 - 1e-12);
    EXPECT_LE(e.hi, 4.0 + 1e-12);
    EXPECT_EQ(p.tensor.xy, p.tensor.yx);
    // Eigenvectors are kept: the clamped tensor is the same rotation of the clamped spectrum.
    const Mat2 expect = std::clamp(l1, 1.0, 4.0) * Mat2::outer(v, v) +
                        std::clamp(l2, 1.0, 4.0) * Mat2::outer(w, w);
    EXPECT_LE(frobenius(p.tensor - expect), 1e-12 * frobenius(expect));
    const Projection again = project_spd(p.tensor, 1.0 - 1e-12, 4.0 + 1e-12);
    EXPECT_FALSE(again.clamped);
  }
}

TEST(Projection, StoredTensorPassesExactBoundsAtHighContrast) {
  const double mu1 = kMu0;
  const double mu2 = ArctanParams{}.slope_bound();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ang(0.0, 3.14159);
  std::uniform_real_distribution<double> logev(-7.0, -1.0);
  for (int k = 0; k < 20000; ++k) {
    const double t = ang(rng);
    const Vec2 v{std::cos(t), std::sin(t)};
    const Vec2 w{-v.y, v.x};
    const Mat2 m = std::pow(10.0, logev(rng)) * Mat2::outer(v, v) +
                   std::pow(10.0, logev(rng)) * Mat2::outer(w, w);
    const SymEigen2 e = eigen_sym(project_spd(m, mu1, mu2).tensor);
    ASSERT_GE(e.lo, mu1) << k;
    ASSERT_LE(e.hi, mu2) << k;
  }
}

TEST(Armijo, BacktracksToFirstAdmissibleStep) {
  // f(x) = x^2 at x = 1 along du = -2: tau = 1 overshoots, tau = 1/2 is exact.
  const auto f = [](double tau) { return (1.0 - 2.0 * tau) * (1.0 - 2.0 * tau); };
  const StepResult r = armijo_step(f, 1.0, -4.0, ArmijoRule{});
  EXPECT_EQ(r.tau, 0.5);
  EXPECT_EQ(r.trials, 2);
  EXPECT_EQ(r.energy, 0.0);
}

TEST(Armijo, FailsAfterMaxTrials) {
  ArmijoRule rule;
  rule.m_max = 5;
  int calls = 0;
  const auto up = [&](double) {
    ++calls;
    return 2.0;
  };
  EXPECT_THROW(armijo_step(up, 1.0, -1.0, rule), LineSearchError);
  EXPECT_EQ(calls, 6);
}

TEST(Direction, IsDescent) {
  Tiny t;
  const MaterialModel arctan = MaterialModel::arctan();
  const FieldProblem p(t.disc, arctan, t.source);
  std::mt19937_64 rng(43);
  const auto u = qt::random_vector(t.disc.num_dofs(), 10.0, rng);
  const DofVector F = residual(p, u);
  const auto h = field_intensity(p, u);
  PermeabilityField mu;
  for (std::size_t e = 0; e < h.size(); ++e) mu.tensors.push_back(p.jacobian(e, h[e]));
  CgConfig cg;
  cg.rtol = 1e-12;
  const Direction d = compute_direction(t.disc, mu, F, cg);
  ASSERT_TRUE(d.cg.converged);
  EXPECT_GT(d.curvature, 0.0);
  EXPECT_NEAR(dot(F, d.du), d.curvature, 1e-9 * d.curvature);
  const double eps = 1e-6;
  DofVector moved = u;
  for (std::size_t i = 0; i < u.size(); ++i) moved[i] += eps * d.du[i];
  EXPECT_LT(energy(p, moved), energy(p, u));
  // A seed equal to the answer needs no iterations.
  EXPECT_EQ(compute_direction(t.disc, mu, F, cg, d.du).cg.iterations, 0u);
}

TEST(SolveNonlinear, LinearMaterialTakesFullSteps) {
  Tiny t;
  const MaterialModel lin = MaterialModel::linear();
  const FieldProblem p(t.disc, lin, t.source);
  const SparseSpdMatrix a = assemble_stiffness(
      t.disc, PermeabilityField::uniform(t.disc.num_elements(), Mat2::identity(kMu0)));
  CgConfig cg;
  cg.rtol = 1e-13;
  const CgResult exact = solve_cg(a, residual(p, t.zero), cg);
  for (const auto& s : kAll) {
    SolverConfig c = config_for(s);
    c.cg = cg;
    const NonlinearResult r = solve_nonlinear(p, t.zero, c);
    ASSERT_TRUE(r.report.converged) << strategy_name(s);
    EXPECT_LE(r.report.iterations, 1u) << strategy_name(s);
    for (const auto& rec : r.report.records) {
      if (rec.ls_trials > 0) EXPECT_EQ(rec.tau, 1.0) << strategy_name(s);
    }
    for (std::size_t i = 0; i < r.u.size(); ++i) EXPECT_NEAR(r.u[i], exact.x[i], 1e-9 * std::abs(exact.x[i]) + 1e-12);
  }
}

TEST(SolveNonlinear, AllMethodsAgreeOnArctan) {
  Tiny t;
  const MaterialModel arctan = MaterialModel::arctan();
  const FieldProblem p(t.disc, arctan, t.source);
  std::vector<double> energies;
  for (const auto& s : kAll) {
    SolverConfig c = config_for(s);
    // The fixed-point contraction factor is close to 1; it cannot reach a tight tolerance.
    const bool fixpoint = s.kind == StrategyKind::FixedPoint;
    c.tol_rel = fixpoint ? 1e-8 : 1e-12;
    const NonlinearResult r = solve_nonlinear(p, t.zero, c);
    ASSERT_TRUE(r.report.converged) << strategy_name(s) << ": " << r.report.message;
    if (!fixpoint) energies.push_back(r.report.final_energy);
    else EXPECT_LT(std::abs(r.report.final_energy - 0.16894) / 0.16894, 1e-4);
    // Energy never increases.
    for (const auto& rec : r.report.records) EXPECT_LE(rec.next_energy, rec.energy);
    EXPECT_LT(r.report.final_energy, r.report.initial_energy);
  }
  for (double e : energies) EXPECT_NEAR(e, energies[0], 1e-8 * std::abs(energies[0]));
}

TEST(SolveNonlinear, StopIndexConvention) {
  Tiny t;
  const MaterialModel arctan = MaterialModel::arctan();
  const FieldProblem p(t.disc, arctan, t.source);
  for (const auto& s : kAll) {
    const SolverConfig c = config_for(s);
    const NonlinearResult r = solve_nonlinear(p, t.zero, c);
    ASSERT_TRUE(r.report.converged);
    const double tol = c.tol_rel * std::abs(r.report.initial_energy);
    const auto& recs = r.report.records;
    ASSERT_EQ(recs.size(), r.report.iterations + 1);
    EXPECT_LE(std::abs(recs.back().next_energy - recs.back().energy), tol);
    for (std::size_t n = 0; n + 1 < recs.size(); ++n) {
      EXPECT_GT(std::abs(recs[n].next_energy - recs[n].energy), tol);
      EXPECT_EQ(recs[n].next_energy, recs[n + 1].energy);
    }
  }
}

TEST(SolveNonlinear, NewtonConvergesQuadratically) {
  Tiny t;
  const MaterialModel arctan = MaterialModel::arctan();
  const FieldProblem p(t.disc, arctan, t.source);
  SolverConfig c = config_for(PermeabilityStrategy::newton());
  c.tol_rel = 1e-14;
  c.cg.rtol = 1e-13;
  const NonlinearResult r = solve_nonlinear(p, t.zero, c);
  ASSERT_TRUE(r.report.converged);
  const auto& recs = r.report.records;
  // Full steps at the end, with each contraction ratio at most the previous one.
  ASSERT_GE(recs.size(), 4u);
  const std::size_t last = recs.size() - 1;
  const auto ratio = [&](std::size_t n) { return recs[n].residual_norm / recs[n - 1].residual_norm; };
  EXPECT_EQ(recs[last - 1].tau, 1.0);
  EXPECT_LT(ratio(last), 1e-2);
  EXPECT_LT(ratio(last), ratio(last - 1));
  EXPECT_LT(ratio(last - 1), ratio(last - 2));
  const bool superlinear = ratio(last) < 10.0 * ratio(last - 1) * ratio(last - 1);
  EXPECT_TRUE(superlinear);
}

TEST(SolveNonlinear, QuasiNewtonTensorsStayInBounds) {
  Tiny t;
  const MaterialModel arctan = MaterialModel::arctan();
  const FieldProblem p(t.disc, arctan, t.source);
  for (auto rule : {QnRule::Bfgs, QnRule::Dfp}) {
    for (auto mod : {Modification::Projection, Modification::Reset}) {
      SolverConfig c = config_for(PermeabilityStrategy::quasi_newton(rule));
      c.modification = mod;
      c.max_outer = 300;
      const NonlinearResult r = solve_nonlinear(p, t.zero, c);
      // Resetting to mu_bar discards curvature, so only projection is expected to converge fast.
      if (mod == Modification::Projection) EXPECT_TRUE(r.report.converged);
      for (const auto& rec : r.report.records) {
        EXPECT_GE(rec.mu_eig_min, r.report.mu1 * (1.0 - 1e-12));
        EXPECT_LE(rec.mu_eig_max, r.report.mu2 * (1.0 + 1e-12));
        EXPECT_LE(rec.tangent_defect, 1e-8);
      }
    }
  }
}

TEST(SolveNonlinear, HysteresisMethods) {
  Tiny t;
  const HysteresisParams hp = HysteresisParams::defaults();
  const MaterialModel hyst = MaterialModel::hysteresis(hp);
  HysteresisState state(t.disc.num_elements(), hp.cells.size());
  const FieldProblem p(t.disc, hyst, t.source, &state);
  EXPECT_THROW(solve_nonlinear(p, t.zero, config_for(PermeabilityStrategy::newton())), ConfigError);
  std::vector<double> energies;
  for (const auto& s : std::vector{kAll[1], kAll[2], kAll[3]}) {
    SolverConfig c = config_for(s);
    c.tol_rel = 1e-11;
    const NonlinearResult r = solve_nonlinear(p, t.zero, c);
    ASSERT_TRUE(r.report.converged) << strategy_name(s) << ": " << r.report.message;
    energies.push_back(r.report.final_energy);
  }
  for (double e : energies) EXPECT_NEAR(e, energies[0], 1e-7 * std::abs(energies[0]));
}

TEST(SolveNonlinear, ConstantStepFixpoint) {
  Tiny t;
  const MaterialModel arctan = MaterialModel::arctan();
  const FieldProblem p(t.disc, arctan, t.source);
  // With mu_bar = L the unit step never overshoots.
  SolverConfig c = config_for(PermeabilityStrategy::fixed_point(Mat2::identity(arctan.lipschitz())));
  c.step = ConstantStep{1.0};
  c.max_outer = 50;
  const NonlinearResult r = solve_nonlinear(p, t.zero, c);
  EXPECT_EQ(r.report.records.size(), 50u);
  for (const auto& rec : r.report.records) {
    EXPECT_LT(rec.next_energy, rec.energy);
    EXPECT_EQ(rec.tau, 1.0);
    EXPECT_EQ(rec.ls_trials, 1);
  }
}

TEST(SolveNonlinear, Deterministic) {
  Tiny t;
  const MaterialModel arctan = MaterialModel::arctan();
  const FieldProblem p(t.disc, arctan, t.source);
  SolverConfig c = config_for(PermeabilityStrategy::quasi_newton(QnRule::Bfgs));
  c.keep_iterates = true;
  const NonlinearResult a = solve_nonlinear(p, t.zero, c);
  const NonlinearResult b = solve_nonlinear(p, t.zero, c);
  EXPECT_EQ(a.u, b.u);
  EXPECT_EQ(a.report.iterations, b.report.iterations);
  EXPECT_EQ(a.report.iterates.size(), a.report.records.size() + 1);
  std::ostringstream sa;
  std::ostringstream sb;
  write_report_csv(a.report, sa);
  write_report_csv(b.report, sb);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(sa.str().substr(0, sa.str().find('\n')), "n,f,residual_norm,tau,ls_trials,truncations");
}

TEST(SolveNonlinear, MaxIterationsReported) {
  Tiny t;
  const MaterialModel arctan = MaterialModel::arctan();
  const FieldProblem p(t.disc, arctan, t.source);
  SolverConfig c = config_for(PermeabilityStrategy::fixed_point());
  c.max_outer = 2;
  const NonlinearResult r = solve_nonlinear(p, t.zero, c);
  EXPECT_FALSE(r.report.converged);
  EXPECT_EQ(r.report.status, SolveStatus::MaxIterations);
  EXPECT_EQ(r.report.records.size(), 2u);
}

TEST(SolveNonlinear, RejectsBadConfig) {
  Tiny t;
  const MaterialModel arctan = MaterialModel::arctan();
  const FieldProblem p(t.disc, arctan, t.source);
  SolverConfig c = config_for(PermeabilityStrategy::fixed_point());
  c.tol_rel = 0.0;
  EXPECT_THROW(solve_nonlinear(p, t.zero, c), ConfigError);
  c = config_for(PermeabilityStrategy::fixed_point(Mat2::identity(0.5 * kMu0)));
  EXPECT_THROW(solve_nonlinear(p, t.zero, c), ConfigError);
  c = config_for(PermeabilityStrategy::fixed_point());
  c.mu1 = 2.0;
  c.mu2 = 1.0;
  EXPECT_THROW(solve_nonlinear(p, t.zero, c), ConfigError);
  c = config_for(PermeabilityStrategy::fixed_point());
  c.step = ArmijoRule{1.0, 1.5, 0.5, 10};
  EXPECT_THROW(solve_nonlinear(p, t.zero, c), ConfigError);
  c = config_for(PermeabilityStrategy::fixed_point());
  EXPECT_THROW(solve_nonlinear(p, std::vector<double>(2), c), FemError);
}

TEST(Strategy, NamesRoundTrip) {
  for (const auto& s : kAll) {
    const auto parsed = parse_strategy(strategy_name(s));
    ASSERT_TRUE(parsed);
    EXPECT_EQ(strategy_name(*parsed), strategy_name(s));
  }
  EXPECT_FALSE(parse_strategy("sr1"));
  EXPECT_EQ(status_name(SolveStatus::Converged), "converged");
}
