#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "qnmag/linsolve.hpp"
#include "qnmag/materials.hpp"
#include "qnmag/mesh.hpp"
#include "qnmag/tensor2.hpp"

namespace qnmag {

class FemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Coefficients u_i of the non-gauge vertices.
using DofVector = std::vector<double>;

/// Barycenter samples of the source field h_s [A/m], one per element.
struct SourceField {
  std::vector<Vec2> samples;
};

/// Symmetric 2x2 permeability tensor per element [H/m].
struct PermeabilityField {
  std::vector<Mat2> tensors;

  static PermeabilityField uniform(std::size_t num_elements, const Mat2& mu) {
    return {std::vector<Mat2>(num_elements, mu)};
  }
};

inline constexpr std::ptrdiff_t kGaugeDof = -1;

/// P1 discretization of a mesh: element geometry, vertex-to-dof map with
/// the gauge vertex eliminated, and the fixed stiffness sparsity pattern.
class Discretization {
 public:
  explicit Discretization(Mesh mesh);

  const Mesh& mesh() const { return mesh_; }
  std::size_t num_dofs() const { return num_dofs_; }
  std::size_t num_elements() const { return geometry_.size(); }
  const ElementGeometry& geometry(std::size_t e) const { return geometry_[e]; }
  Region region(std::size_t e) const { return mesh_.elements()[e].region; }
  /// Dof of each local vertex, kGaugeDof for the gauge vertex.
  const std::array<std::ptrdiff_t, 3>& dofs(std::size_t e) const { return dofs_[e]; }
  std::ptrdiff_t vertex_dof(std::size_t vertex) const;
  double total_area() const { return total_area_; }

  /// Gradient of the finite-element function with coefficients `u` on element e.
  Vec2 gradient(std::size_t e, std::span<const double> u) const;

  std::span<const std::size_t> row_ptr() const { return row_ptr_; }
  std::span<const std::size_t> cols() const { return cols_; }
  /// Position in the CSR value array of local entry (i, j) of element e, or -1.
  std::ptrdiff_t scatter(std::size_t e, int i, int j) const { return scatter_[9 * e + 3 * i + j]; }

 private:
  Mesh mesh_;
  std::vector<ElementGeometry> geometry_;
  std::vector<std::array<std::ptrdiff_t, 3>> dofs_;
  std::size_t num_dofs_ = 0;
  double total_area_ = 0.0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> cols_;
  std::vector<std::ptrdiff_t> scatter_;
};

/// The nonlinear field problem: iron follows `iron`, air and coils are
/// linear with the same mu0. Hysteresis states are indexed by element.
class FieldProblem {
 public:
  FieldProblem(const Discretization& disc, const MaterialModel& iron, const SourceField& source,
               const HysteresisState* state = nullptr);

  const Discretization& disc() const { return *disc_; }
  const MaterialModel& iron() const { return *iron_; }
  const SourceField& source() const { return *source_; }
  const HysteresisState* state() const { return state_; }
  bool is_nonlinear(std::size_t e) const { return disc_->region(e) == Region::Iron; }

  MaterialResponse evaluate(std::size_t e, Vec2 h) const;
  /// Exact Jacobian on iron, mu0 I elsewhere.
  Mat2 jacobian(std::size_t e, Vec2 h) const;

 private:
  const Discretization* disc_;
  const MaterialModel* iron_;
  const SourceField* source_;
  const HysteresisState* state_;
};

/// Pointwise fields of an iterate at every barycenter.
struct FieldSnapshot {
  std::vector<Vec2> h;
  std::vector<Vec2> b;
  double energy = 0.0;
};

/// sum_T |T| a(x_T) . b(x_T)
double quad_inner(const Discretization& disc, std::span<const Vec2> a, std::span<const Vec2> b);

/// h_s = (0, H) with H(x, y) the integral of j_z from the left edge of the
/// air box to x; j_z = +j on the positive coil, -j on the negative coil.
SourceField build_source_field(const Discretization& disc, const GeometryDescriptor& geometry,
                               double j_amplitude);

/// h_T = h_s(x_T) - grad psi_h on every element.
std::vector<Vec2> field_intensity(const FieldProblem& problem, std::span<const double> u);

FieldSnapshot evaluate_fields(const FieldProblem& problem, std::span<const double> u);

/// F_i = <b(h), grad N_i>_h assembled from per-element flux samples.
DofVector assemble_residual(const Discretization& disc, std::span<const Vec2> flux);

/// F(u) = -grad f(u).
DofVector residual(const FieldProblem& problem, std::span<const double> u);

/// f(u) = sum_T |T| w*(h_T).
double energy(const FieldProblem& problem, std::span<const double> u);

/// A_ij = <mu grad N_j, grad N_i>_h over the non-gauge dofs.
SparseSpdMatrix assemble_stiffness(const Discretization& disc, const PermeabilityField& mu);

/// ||grad psi_h||_h
double grad_norm(const Discretization& disc, std::span<const double> u);

/// Pins every iron element's polarizations to the maximizers at its current h.
void update_hysteresis_state(const FieldProblem& problem, std::span<const double> u,
                             HysteresisState& state);

/// CSV with one row per element:
/// element_id,bary_x,bary_y,region,hx,hy,bx,by,|b|
void export_fields(const FieldProblem& problem, std::span<const double> u,
                   const std::filesystem::path& path);

}  // namespace qnmag
