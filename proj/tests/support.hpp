#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "qnmag/fem.hpp"
#include "qnmag/mesh.hpp"

namespace qnmag::testing {

/// 40 triangles: iron frame, coil sides in and left of the window.
inline GeometryDescriptor tiny_geometry() {
  GeometryDescriptor g;
  g.air_box = {0.0, 0.0, 0.05, 0.04};
  g.core_outer = Rect{0.01, 0.0, 0.04, 0.04};
  g.core_window = Rect{0.02, 0.01, 0.03, 0.03};
  g.coil_plus = Rect{0.02, 0.01, 0.03, 0.03};
  g.coil_minus = Rect{0.0, 0.01, 0.01, 0.03};
  g.element_size = 0.01;
  return g;
}

inline GeometryDescriptor unit_square(double h) {
  GeometryDescriptor g;
  g.air_box = {0.0, 0.0, 1.0, 1.0};
  g.element_size = h;
  return g;
}

/// 10 triangles on a 5x1 strip: iron in the middle, coils at the ends.
inline Mesh strip_mesh() {
  Mesh base = generate_benchmark_mesh([] {
    GeometryDescriptor g;
    g.air_box = {0.0, 0.0, 0.05, 0.01};
    g.element_size = 0.01;
    return g;
  }());
  std::vector<Element> elements = base.elements();
  const Region tags[5] = {Region::CoilMinus, Region::Iron, Region::Iron, Region::Air,
                          Region::CoilPlus};
  for (std::size_t e = 0; e < elements.size(); ++e) {
    const ElementGeometry geo = element_geometry(base, e);
    elements[e].region = tags[static_cast<int>(geo.barycenter.x / 0.01)];
  }
  return Mesh(base.vertices(), elements);
}

inline std::vector<double> random_vector(std::size_t n, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-scale, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace qnmag::testing
