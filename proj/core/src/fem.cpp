#include "qnmag/fem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace qnmag {

namespace {

// Neumaier-compensated running sum; keeps energy differences meaningful
// well below the stopping tolerance.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace

// --- discretization ----------------------------------------------------------

Discretization::Discretization(Mesh mesh) : mesh_(std::move(mesh)) {
  if (mesh_.num_elements() == 0) throw FemError("mesh has no elements");
  const std::size_t gauge = mesh_.gauge_node();
  num_dofs_ = mesh_.num_dofs();

  geometry_.reserve(mesh_.num_elements());
  dofs_.reserve(mesh_.num_elements());
  for (std::size_t e = 0; e < mesh_.num_elements(); ++e) {
    geometry_.push_back(element_geometry(mesh_, e));
    total_area_ += geometry_.back().area;
    std::array<std::ptrdiff_t, 3> d{};
    for (int k = 0; k < 3; ++k) {
      const std::size_t v = mesh_.elements()[e].v[k];
      d[k] = v == gauge ? kGaugeDof
                        : static_cast<std::ptrdiff_t>(v < gauge ? v : v - 1);
    }
    dofs_.push_back(d);
  }

  // Pattern pass: neighbours of each dof, sorted.
  std::vector<std::vector<std::size_t>> adj(num_dofs_);
  for (const auto& d : dofs_) {
    for (int i = 0; i < 3; ++i) {
      if (d[i] == kGaugeDof) continue;
      for (int j = 0; j < 3; ++j) {
        if (d[j] == kGaugeDof) continue;
        adj[static_cast<std::size_t>(d[i])].push_back(static_cast<std::size_t>(d[j]));
      }
    }
  }
  row_ptr_.assign(num_dofs_ + 1, 0);
  for (std::size_t r = 0; r < num_dofs_; ++r) {
    auto& a = adj[r];
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    row_ptr_[r + 1] = row_ptr_[r] + a.size();
  }
  cols_.reserve(row_ptr_.back());
  for (const auto& a : adj) cols_.insert(cols_.end(), a.begin(), a.end());

  scatter_.assign(9 * dofs_.size(), -1);
  for (std::size_t e = 0; e < dofs_.size(); ++e) {
    const auto& d = dofs_[e];
    for (int i = 0; i < 3; ++i) {
      if (d[i] == kGaugeDof) continue;
      const auto row = static_cast<std::size_t>(d[i]);
      const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[row]);
      const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[row + 1]);
      for (int j = 0; j < 3; ++j) {
        if (d[j] == kGaugeDof) continue;
        const auto it = std::lower_bound(first, last, static_cast<std::size_t>(d[j]));
        scatter_[9 * e + 3 * i + j] = it - cols_.begin();
      }
    }
  }
}

std::ptrdiff_t Discretization::vertex_dof(std::size_t vertex) const {
  const std::size_t gauge = mesh_.gauge_node();
  if (vertex == gauge) return kGaugeDof;
  return static_cast<std::ptrdiff_t>(vertex < gauge ? vertex : vertex - 1);
}

Vec2 Discretization::gradient(std::size_t e, std::span<const double> u) const {
  Vec2 g;
  const auto& d = dofs_[e];
  const auto& geo = geometry_[e];
  for (int k = 0; k < 3; ++k) {
    if (d[k] == kGaugeDof) continue;
    g += u[static_cast<std::size_t>(d[k])] * geo.grad[k];
  }
  return g;
}

// --- field problem -----------------------------------------------------------

FieldProblem::FieldProblem(const Discretization& disc, const MaterialModel& iron,
                           const SourceField& source, const HysteresisState* state)
    : disc_(&disc), iron_(&iron), source_(&source), state_(state) {
  if (source.samples.size() != disc.num_elements()) {
    throw FemError("source field has " + std::to_string(source.samples.size()) +
                   " samples, mesh has " + std::to_string(disc.num_elements()) + " elements");
  }
  const bool hysteretic = iron.kind() == MaterialKind::Hysteresis;
  if (hysteretic != (state != nullptr)) {
    throw FemError(hysteretic ? "hysteresis material needs a pinned-polarization state"
                              : "pinned-polarization state given for a memoryless material");
  }
  if (state && (state->num_points() != disc.num_elements() ||
                state->num_cells() != iron.num_cells())) {
    throw FemError("hysteresis state does not match the mesh or the material");
  }
}

MaterialResponse FieldProblem::evaluate(std::size_t e, Vec2 h) const {
  if (!is_nonlinear(e)) {
    const double mu0 = iron_->mu0();
    return {0.5 * mu0 * dot(h, h), mu0 * h};
  }
  if (state_) return iron_->evaluate(h, state_->at(e));
  return iron_->evaluate(h);
}

Mat2 FieldProblem::jacobian(std::size_t e, Vec2 h) const {
  if (!is_nonlinear(e)) return Mat2::identity(iron_->mu0());
  return iron_->jacobian(h);
}

// --- operators ---------------------------------------------------------------

double quad_inner(const Discretization& disc, std::span<const Vec2> a, std::span<const Vec2> b) {
  if (a.size() != disc.num_elements() || b.size() != disc.num_elements()) {
    throw FemError("quad_inner: field length does not match the element count");
  }
  CompensatedSum s;
  for (std::size_t e = 0; e < a.size(); ++e) s.add(disc.geometry(e).area * dot(a[e], b[e]));
  return s.value();
}

SourceField build_source_field(const Discretization& disc, const GeometryDescriptor& geometry,
                               double j_amplitude) {
  SourceField src;
  src.samples.resize(disc.num_elements());
  if (j_amplitude == 0.0) return src;
  const double xmin = geometry.air_box.x0;
  // Signed length of [xmin, x] inside the coil, at height y.
  const auto contribution = [&](const std::optional<Rect>& coil, double x, double y) {
    if (!coil || y < coil->y0 || y > coil->y1) return 0.0;
    const double lo = std::max(xmin, coil->x0);
    const double hi = std::min(x, coil->x1);
    return std::max(0.0, hi - lo);
  };
  for (std::size_t e = 0; e < disc.num_elements(); ++e) {
    const Vec2 c = disc.geometry(e).barycenter;
    const double H = j_amplitude * (contribution(geometry.coil_plus, c.x, c.y) -
                                    contribution(geometry.coil_minus, c.x, c.y));
    src.samples[e] = {0.0, H};
  }
  return src;
}

std::vector<Vec2> field_intensity(const FieldProblem& problem, std::span<const double> u) {
  const auto& disc = problem.disc();
  if (u.size() != disc.num_dofs()) throw FemError("dof vector has the wrong length");
  std::vector<Vec2> h(disc.num_elements());
  for (std::size_t e = 0; e < h.size(); ++e) {
    h[e] = problem.source().samples[e] - disc.gradient(e, u);
  }
  return h;
}

FieldSnapshot evaluate_fields(const FieldProblem& problem, std::span<const double> u) {
  FieldSnapshot snap;
  snap.h = field_intensity(problem, u);
  snap.b.resize(snap.h.size());
  CompensatedSum w;
  for (std::size_t e = 0; e < snap.h.size(); ++e) {
    const MaterialResponse r = problem.evaluate(e, snap.h[e]);
    snap.b[e] = r.flux;
    w.add(problem.disc().geometry(e).area * r.coenergy);
  }
  snap.energy = w.value();
  return snap;
}

DofVector assemble_residual(const Discretization& disc, std::span<const Vec2> flux) {
  if (flux.size() != disc.num_elements()) throw FemError("flux samples do not match the mesh");
  DofVector F(disc.num_dofs(), 0.0);
  for (std::size_t e = 0; e < flux.size(); ++e) {
    const auto& geo = disc.geometry(e);
    const auto& d = disc.dofs(e);
    for (int k = 0; k < 3; ++k) {
      if (d[k] == kGaugeDof) continue;
      F[static_cast<std::size_t>(d[k])] += geo.area * dot(flux[e], geo.grad[k]);
    }
  }
  return F;
}

DofVector residual(const FieldProblem& problem, std::span<const double> u) {
  return assemble_residual(problem.disc(), evaluate_fields(problem, u).b);
}

double energy(const FieldProblem& problem, std::span<const double> u) {
  return evaluate_fields(problem, u).energy;
}

SparseSpdMatrix assemble_stiffness(const Discretization& disc, const PermeabilityField& mu) {
  if (mu.tensors.size() != disc.num_elements()) {
    throw FemError("permeability field does not match the mesh");
  }
  std::vector<double> values(disc.cols().size(), 0.0);
  for (std::size_t e = 0; e < disc.num_elements(); ++e) {
    const Mat2& m = mu.tensors[e];
    const double scale = std::max({std::abs(m.xx), std::abs(m.xy), std::abs(m.yx), std::abs(m.yy)});
    if (std::abs(m.xy - m.yx) > 1e-12 * scale) {
      throw FemError("permeability tensor of element " + std::to_string(e) + " is not symmetric");
    }
    const auto& geo = disc.geometry(e);
    for (int i = 0; i < 3; ++i) {
      const Vec2 mg = m * geo.grad[i];
      for (int j = 0; j < 3; ++j) {
        const std::ptrdiff_t pos = disc.scatter(e, j, i);
        if (pos < 0) continue;
        values[static_cast<std::size_t>(pos)] += geo.area * dot(mg, geo.grad[j]);
      }
    }
  }
  return SparseSpdMatrix(disc.num_dofs(), {disc.row_ptr().begin(), disc.row_ptr().end()},
                         {disc.cols().begin(), disc.cols().end()}, std::move(values));
}

double grad_norm(const Discretization& disc, std::span<const double> u) {
  if (u.size() != disc.num_dofs()) throw FemError("dof vector has the wrong length");
  CompensatedSum s;
  for (std::size_t e = 0; e < disc.num_elements(); ++e) {
    const Vec2 g = disc.gradient(e, u);
    s.add(disc.geometry(e).area * dot(g, g));
  }
  return std::sqrt(std::max(0.0, s.value()));
}

void update_hysteresis_state(const FieldProblem& problem, std::span<const double> u,
                             HysteresisState& state) {
  const auto& params = problem.iron().hysteresis_params();
  const std::vector<Vec2> h = field_intensity(problem, u);
  for (std::size_t e = 0; e < h.size(); ++e) {
    if (problem.is_nonlinear(e)) update_state(params, h[e], state, e);
  }
}

void export_fields(const FieldProblem& problem, std::span<const double> u,
                   const std::filesystem::path& path) {
  const FieldSnapshot snap = evaluate_fields(problem, u);
  std::ofstream out(path);
  if (!out) throw FemError("cannot open " + path.string() + " for writing");
  out << "element_id,bary_x,bary_y,region,hx,hy,bx,by,|b|\n";
  out << std::setprecision(17);
  const auto& disc = problem.disc();
  for (std::size_t e = 0; e < disc.num_elements(); ++e) {
    const Vec2 c = disc.geometry(e).barycenter;
    const Vec2 h = snap.h[e];
    const Vec2 b = snap.b[e];
    out << e << ',' << c.x << ',' << c.y << ',' << region_name(disc.region(e)) << ',' << h.x << ','
        << h.y << ',' << b.x << ',' << b.y << ',' << norm(b) << '\n';
  }
  if (!out) throw FemError("write to " + path.string() + " failed");
}

}  // namespace qnmag
