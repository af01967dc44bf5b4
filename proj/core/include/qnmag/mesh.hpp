#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qnmag/tensor2.hpp"

namespace qnmag {

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by load_mesh; `line()` is the 1-based line of the offending record.
class MeshParseError : public MeshError {
 public:
  MeshParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

enum class Region : std::uint8_t { Air, CoilPlus, CoilMinus, Iron };

std::string_view region_name(Region r);
std::optional<Region> parse_region(std::string_view name);

struct Vertex {
  double x = 0.0;
  double y = 0.0;
};

struct Element {
  std::array<std::size_t, 3> v{};
  Region region = Region::Air;
};

/// Axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool contains(double x, double y, double tol = 0.0) const {
    return x >= x0 - tol && x <= x1 + tol && y >= y0 - tol && y <= y1 + tol;
  }
};

/// Simplified transformer cross-section: a rectangular iron frame with a
/// window, two coil sides carrying opposite currents, all inside an air box.
/// Absent rectangles are simply not meshed as separate regions.
struct GeometryDescriptor {
  Rect air_box{0.0, 0.0, 1.0, 1.0};
  std::optional<Rect> core_outer;
  std::optional<Rect> core_window;
  std::optional<Rect> coil_plus;
  std::optional<Rect> coil_minus;
  double element_size = 1.0;

  /// Default benchmark cross-section, sized for roughly 1.5k unknowns.
  static GeometryDescriptor benchmark();

  /// Throws MeshError describing the first violated constraint.
  void validate() const;

  Region region_at(double x, double y) const;
  double region_area(Region r) const;
  /// Mid-height of the left iron limb. Requires a core.
  Vec2 probe_point() const;
};

struct ElementGeometry {
  double area = 0.0;
  Vec2 barycenter;
  std::array<Vec2, 3> grad{};  ///< gradients of the three nodal basis functions
};

class Mesh {
 public:
  Mesh() = default;
  /// Takes ownership of the arrays, validates, and picks the gauge vertex.
  Mesh(std::vector<Vertex> vertices, std::vector<Element> elements);

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Element>& elements() const { return elements_; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_elements() const { return elements_.size(); }
  std::size_t gauge_node() const { return gauge_; }
  /// Number of unknowns once the gauge vertex is eliminated.
  std::size_t num_dofs() const { return vertices_.empty() ? 0 : vertices_.size() - 1; }

  Vec2 point(std::size_t vertex) const { return {vertices_[vertex].x, vertices_[vertex].y}; }

  friend bool operator==(const Mesh& a, const Mesh& b);

 private:
  std::vector<Vertex> vertices_;
  std::vector<Element> elements_;
  std::size_t gauge_ = 0;
};

/// Structured, region-aligned triangulation of the descriptor.
Mesh generate_benchmark_mesh(const GeometryDescriptor& desc);

/// Red refinement: every triangle splits into four congruent children.
Mesh refine_uniform(const Mesh& mesh);

ElementGeometry element_geometry(const Mesh& mesh, std::size_t element);

/// Index of the element of `region` whose barycenter is closest to `p`.
std::size_t nearest_element(const Mesh& mesh, Vec2 p, Region region);

void save_mesh(const Mesh& mesh, const std::filesystem::path& path);
Mesh load_mesh(const std::filesystem::path& path);

void write_mesh(const Mesh& mesh, std::ostream& out);
Mesh read_mesh(std::istream& in);

}  // namespace qnmag
