#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qnmag/errors.hpp"
#include "qnmag/fem.hpp"
#include "qnmag/linsolve.hpp"
#include "qnmag/tensor2.hpp"

namespace qnmag {

// --- local permeability updates ----------------------------------------------

/// BFGS: H + y y^T / (y^T d) - H d d^T H^T / (d^T H d).
/// Returns H unchanged for d = 0, |y^T d| <= 1e-14 |y||d| or d^T H d <= 0.
Mat2 qn_update_bfgs(const Mat2& H, Vec2 d, Vec2 y);

/// DFP: H + ((y - Hd) y^T + y (y - Hd)^T) / (y^T d) - ((y - Hd)^T d) / (y^T d)^2 y y^T.
/// Same degenerate-input guard as BFGS.
Mat2 qn_update_dfp(const Mat2& H, Vec2 d, Vec2 y);

Mat2 symmetrize(const Mat2& m);

struct Projection {
  Mat2 tensor;
  bool clamped = false;
};

/// Clamps the eigenvalues of a symmetric tensor into [mu1, mu2]. A tensor
/// whose spectrum already lies inside is returned bit-for-bit.
Projection project_spd(const Mat2& m, double mu1, double mu2);

// --- configuration -----------------------------------------------------------

enum class QnRule { Bfgs, Dfp };

enum class StrategyKind { FixedPoint, Newton, QuasiNewton };

struct PermeabilityStrategy {
  StrategyKind kind = StrategyKind::FixedPoint;
  QnRule rule = QnRule::Bfgs;
  /// Fixed-point tensor and QN initial tensor on iron elements.
  Mat2 mu_bar = Mat2::identity(kMu0);

  static PermeabilityStrategy fixed_point(const Mat2& mu_bar = Mat2::identity(kMu0));
  static PermeabilityStrategy newton();
  static PermeabilityStrategy quasi_newton(QnRule rule, const Mat2& mu_bar = Mat2::identity(kMu0));
};

/// "newton", "fixpoint", "bfgs", "dfp"
std::string_view strategy_name(const PermeabilityStrategy& s);
std::optional<PermeabilityStrategy> parse_strategy(std::string_view name);

/// How QN tensors violating the spectral bounds are repaired.
enum class Modification {
  Projection,  ///< clamp eigenvalues into [mu1, mu2]
  Reset,       ///< fall back to mu_bar
};

struct ArmijoRule {
  double tau_max = 1.0;
  double sigma = 0.1;
  double rho = 0.5;
  int m_max = 60;
};

struct ConstantStep {
  double tau = 1.0;
};

using StepRule = std::variant<ArmijoRule, ConstantStep>;

struct SolverConfig {
  PermeabilityStrategy strategy;
  StepRule step = ArmijoRule{};
  double tol_rel = 1e-8;
  std::size_t max_outer = 500;
  /// Spectral bounds; default to the material's gamma and L.
  std::optional<double> mu1;
  std::optional<double> mu2;
  Modification modification = Modification::Projection;
  CgConfig cg;
  /// Keep every iterate u^n in the report.
  bool keep_iterates = false;
};

// --- building blocks ---------------------------------------------------------

struct Direction {
  DofVector du;
  CgReport cg;
  double curvature = 0.0;  ///< du^T A du
};

/// Solves A du = F with A assembled from `mu`. Since F = -grad f, du is a
/// descent direction: <F, du> = du^T A du > 0. `guess` seeds CG.
Direction compute_direction(const Discretization& disc, const PermeabilityField& mu,
                            std::span<const double> F, const CgConfig& cg,
                            std::span<const double> guess = {});

class LineSearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepResult {
  double tau = 0.0;
  int trials = 0;  ///< energy evaluations
  double energy = 0.0;
};

/// Largest tau = tau_max rho^m, m = 0..m_max, with
/// f(u + tau du) <= f(u) + tau sigma <grad f(u), du>.
/// `energy_at(tau)` evaluates f(u + tau du); `slope` is <grad f(u), du> < 0.
StepResult armijo_step(const std::function<double(double)>& energy_at, double f_u, double slope,
                       const ArmijoRule& rule);

// --- iteration ---------------------------------------------------------------

enum class SolveStatus { Converged, MaxIterations, LineSearchFailed, LinearSolveFailed };

std::string_view status_name(SolveStatus s);

struct IterationRecord {
  std::size_t n = 0;
  double energy = 0.0;         ///< f(u^n)
  double residual_norm = 0.0;  ///< ||F(u^n)||_2
  double tau = 0.0;
  int ls_trials = 0;
  std::size_t truncations = 0;  ///< tensors repaired when forming mu^n
  double next_energy = 0.0;     ///< f(u^{n+1}); equals energy if no step was taken
  double curvature = 0.0;       ///< du^T A^n du
  std::size_t cg_iterations = 0;
  double cg_residual = 0.0;
  double mu_eig_min = 0.0;  ///< spectrum of mu^n over all elements
  double mu_eig_max = 0.0;
  double tangent_defect = 0.0;  ///< max relative |H+ d - y| of QN updates forming mu^n
};

struct IterationReport {
  std::vector<IterationRecord> records;
  SolveStatus status = SolveStatus::MaxIterations;
  bool converged = false;
  /// Index n of the step whose energy change met the tolerance.
  std::size_t iterations = 0;
  std::size_t total_truncations = 0;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  std::string message;
  std::vector<DofVector> iterates;
};

struct NonlinearResult {
  DofVector u;
  IterationReport report;
};

/// Iterates u <- u + tau du with A(mu^n) du = F(u) until
/// |f(u^{n+1}) - f(u^n)| <= tol_rel |f(u^0)|.
NonlinearResult solve_nonlinear(const FieldProblem& problem, std::span<const double> u0,
                                const SolverConfig& config);

/// n,f,residual_norm,tau,ls_trials,truncations
void write_report_csv(const IterationReport& report, std::ostream& out);
void write_report_csv(const IterationReport& report, const std::filesystem::path& path);

}  // namespace qnmag
