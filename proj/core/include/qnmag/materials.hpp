#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "qnmag/tensor2.hpp"

namespace qnmag {

/// Vacuum permeability [H/m].
inline constexpr double kMu0 = 4.0e-7 * std::numbers::pi;

class MaterialError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested a second derivative from a law that has none.
class CapabilityError : public MaterialError {
 public:
  using MaterialError::MaterialError;
};

/// Inner maximization did not reach its tolerance.
class InnerSolveError : public MaterialError {
 public:
  InnerSolveError(const std::string& what, double residual)
      : MaterialError(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

struct ArctanParams {
  double mu0 = kMu0;
  double A = 90.302;   ///< A/m
  double Js = 1.5733;  ///< T

  void validate() const;
  /// Upper slope bound mu0 + 2 Js / (pi A).
  double slope_bound() const { return mu0 + 2.0 * Js / (std::numbers::pi * A); }
};

struct HysteresisCell {
  double weight = 1.0;  ///< dimensionless, >= 0
  double chi = 0.0;     ///< pinning strength [A/m], >= 0
};

struct HysteresisParams {
  double mu0 = kMu0;
  double A = 90.302;
  double Js = 1.5733;
  std::vector<HysteresisCell> cells;

  /// Four cells: one reversible plus three pinned ones.
  static HysteresisParams defaults();

  void validate() const;
  double total_weight() const;
  double slope_bound() const;
};

/// Pinned polarizations J_{k,p}, one row of `num_cells` vectors per quadrature point.
class HysteresisState {
 public:
  HysteresisState() = default;
  HysteresisState(std::size_t num_points, std::size_t num_cells)
      : num_points_(num_points), num_cells_(num_cells), pinned_(num_points * num_cells) {}

  std::size_t num_points() const { return num_points_; }
  std::size_t num_cells() const { return num_cells_; }
  std::span<Vec2> at(std::size_t point) {
    return {pinned_.data() + point * num_cells_, num_cells_};
  }
  std::span<const Vec2> at(std::size_t point) const {
    return {pinned_.data() + point * num_cells_, num_cells_};
  }

  friend bool operator==(const HysteresisState&, const HysteresisState&) = default;

 private:
  std::size_t num_points_ = 0;
  std::size_t num_cells_ = 0;
  std::vector<Vec2> pinned_;
};

// Anhysteretic arctan law pieces shared by the Arctan and Hysteresis models.
namespace anhysteretic {

/// Removable-singularity threshold for |h| [A/m].
inline constexpr double kSmallField = 1e-10;

/// U*(h) = 2Js/pi (|h| atan(|h|/A) - A/2 log(1 + |h|^2/A^2)); U*(0) = 0.
double coenergy(Vec2 h, double A, double Js);
/// J(h) = dU*/dh = 2Js/pi atan(|h|/A) h/|h|.
Vec2 polarization(Vec2 h, double A, double Js);
/// d^2 U*/dh^2.
Mat2 jacobian(Vec2 h, double A, double Js);
/// U(J) = -2 A Js/pi log(cos(pi |J| / (2 Js))).
double internal_energy(Vec2 J, double A, double Js);
/// dU/dJ = A tan(pi |J| / (2 Js)) J/|J|.
Vec2 internal_energy_gradient(Vec2 J, double A, double Js);

}  // namespace anhysteretic

struct InnerSolution {
  Vec2 J;
  double value = 0.0;     ///< maximal objective <h,J> - U(J) - chi |J - J_p|
  bool sticking = false;  ///< J == J_p
  int iterations = 0;
  double residual = 0.0;  ///< stationarity residual [A/m]
};

/// Maximizes <h,J> - U(J) - chi |J - J_p| over |J| < Js.
InnerSolution inner_maximize(const HysteresisParams& params, double chi, Vec2 h, Vec2 pinned);

enum class MaterialKind { Linear, Arctan, Hysteresis };

struct MaterialResponse {
  double coenergy = 0.0;  ///< w*(h) [J/m^3]
  Vec2 flux;              ///< b(h) [T]
};

struct LinearParams {
  double mu0 = kMu0;
};

/// Pointwise constitutive law. Hysteresis evaluations take the pinned
/// polarizations of the quadrature point; other laws take none.
class MaterialModel {
 public:
  static MaterialModel linear(double mu0 = kMu0);
  static MaterialModel arctan(const ArctanParams& p = {});
  static MaterialModel hysteresis(const HysteresisParams& p);

  MaterialKind kind() const;
  bool has_jacobian() const { return kind() != MaterialKind::Hysteresis; }
  double mu0() const;
  /// Strong monotonicity constant (gamma).
  double monotonicity() const { return mu0(); }
  /// Lipschitz constant (L) of the flux.
  double lipschitz() const;
  /// Cells expected in the pinned-polarization span (0 unless hysteresis).
  std::size_t num_cells() const;

  const ArctanParams& arctan_params() const;
  const HysteresisParams& hysteresis_params() const;

  MaterialResponse evaluate(Vec2 h, std::span<const Vec2> pinned = {}) const;
  double coenergy(Vec2 h, std::span<const Vec2> pinned = {}) const {
    return evaluate(h, pinned).coenergy;
  }
  Vec2 flux(Vec2 h, std::span<const Vec2> pinned = {}) const { return evaluate(h, pinned).flux; }
  /// d^2 w*/dh^2; throws CapabilityError for hysteresis.
  Mat2 jacobian(Vec2 h) const;

 private:
  explicit MaterialModel(std::variant<LinearParams, ArctanParams, HysteresisParams> p)
      : params_(std::move(p)) {}
  void check_pinned(std::span<const Vec2> pinned) const;

  std::variant<LinearParams, ArctanParams, HysteresisParams> params_;
};

/// Replaces the pinned polarizations of `point` with the maximizers at `h`.
void update_state(const HysteresisParams& params, Vec2 h, HysteresisState& state,
                  std::size_t point);

}  // namespace qnmag
