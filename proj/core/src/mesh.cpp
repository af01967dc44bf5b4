#include "qnmag/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace qnmag {

MeshParseError::MeshParseError(std::size_t line, const std::string& what)
    : MeshError("line " + std::to_string(line) + ": " + what), line_(line) {}

std::string_view region_name(Region r) {
  switch (r) {
    case Region::Air:
      return "Air";
    case Region::CoilPlus:
      return "CoilPlus";
    case Region::CoilMinus:
      return "CoilMinus";
    case Region::Iron:
      return "Iron";
  }
  return "?";
}

std::optional<Region> parse_region(std::string_view name) {
  for (Region r : {Region::Air, Region::CoilPlus, Region::CoilMinus, Region::Iron}) {
    if (region_name(r) == name) return r;
  }
  return std::nullopt;
}

// --- geometry descriptor -----------------------------------------------------

GeometryDescriptor GeometryDescriptor::benchmark() {
  GeometryDescriptor d;
  d.air_box = {0.0, 0.0, 0.40, 0.30};
  d.core_outer = Rect{0.10, 0.05, 0.30, 0.25};
  d.core_window = Rect{0.14, 0.09, 0.26, 0.21};
  d.coil_plus = Rect{0.145, 0.10, 0.175, 0.20};
  d.coil_minus = Rect{0.065, 0.10, 0.095, 0.20};
  d.element_size = 0.0105;
  return d;
}

namespace {

bool strictly_inside(const Rect& inner, const Rect& outer) {
  return inner.x0 > outer.x0 && inner.x1 < outer.x1 && inner.y0 > outer.y0 &&
         inner.y1 < outer.y1;
}

bool within(const Rect& inner, const Rect& outer) {
  return inner.x0 >= outer.x0 && inner.x1 <= outer.x1 && inner.y0 >= outer.y0 &&
         inner.y1 <= outer.y1;
}

bool interiors_overlap(const Rect& a, const Rect& b) {
  return a.x0 < b.x1 && b.x0 < a.x1 && a.y0 < b.y1 && b.y0 < a.y1;
}

void require_nondegenerate(const Rect& r, const char* name) {
  if (!(std::isfinite(r.x0) && std::isfinite(r.x1) && std::isfinite(r.y0) &&
        std::isfinite(r.y1))) {
    throw MeshError(std::string(name) + " has non-finite coordinates");
  }
  if (!(r.width() > 0.0) || !(r.height() > 0.0)) {
    throw MeshError(std::string(name) + " is degenerate (zero width or height)");
  }
}

}  // namespace

void GeometryDescriptor::validate() const {
  if (!(element_size > 0.0) || !std::isfinite(element_size)) {
    throw MeshError("element size must be positive");
  }
  require_nondegenerate(air_box, "air box");
  if (core_outer.has_value() != core_window.has_value()) {
    throw MeshError("core needs both an outer rectangle and a window");
  }
  if (core_outer) {
    require_nondegenerate(*core_outer, "core outer rectangle");
    require_nondegenerate(*core_window, "core window");
    if (!within(*core_outer, air_box)) throw MeshError("core is not inside the air box");
    if (!strictly_inside(*core_window, *core_outer)) {
      throw MeshError("core window is not strictly inside the core");
    }
  }
  const auto check_coil = [&](const std::optional<Rect>& coil, const char* name) {
    if (!coil) return;
    require_nondegenerate(*coil, name);
    if (!within(*coil, air_box)) throw MeshError(std::string(name) + " is not inside the air box");
    if (core_outer && interiors_overlap(*coil, *core_outer) && !within(*coil, *core_window)) {
      throw MeshError(std::string(name) + " overlaps the iron");
    }
  };
  check_coil(coil_plus, "positive coil");
  check_coil(coil_minus, "negative coil");
  if (coil_plus && coil_minus && interiors_overlap(*coil_plus, *coil_minus)) {
    throw MeshError("coils overlap");
  }
}

Region GeometryDescriptor::region_at(double x, double y) const {
  if (coil_plus && coil_plus->contains(x, y)) return Region::CoilPlus;
  if (coil_minus && coil_minus->contains(x, y)) return Region::CoilMinus;
  if (core_outer && core_outer->contains(x, y)) {
    const Rect& w = *core_window;
    const bool in_window = x > w.x0 && x < w.x1 && y > w.y0 && y < w.y1;
    if (!in_window) return Region::Iron;
  }
  return Region::Air;
}

double GeometryDescriptor::region_area(Region r) const {
  const double coil_p = coil_plus ? coil_plus->area() : 0.0;
  const double coil_m = coil_minus ? coil_minus->area() : 0.0;
  const double iron = core_outer ? core_outer->area() - core_window->area() : 0.0;
  switch (r) {
    case Region::CoilPlus:
      return coil_p;
    case Region::CoilMinus:
      return coil_m;
    case Region::Iron:
      return iron;
    case Region::Air:
      return air_box.area() - coil_p - coil_m - iron;
  }
  return 0.0;
}

Vec2 GeometryDescriptor::probe_point() const {
  if (!core_outer) throw MeshError("probe point needs an iron core");
  return {0.5 * (core_outer->x0 + core_window->x0), 0.5 * (core_outer->y0 + core_outer->y1)};
}

// --- mesh --------------------------------------------------------------------

namespace {

double signed_area(const Vertex& a, const Vertex& b, const Vertex& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

std::uint64_t edge_key(std::size_t a, std::size_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

std::size_t pick_gauge(const std::vector<Vertex>& vertices) {
  if (vertices.empty()) return 0;
  double xmin = std::numeric_limits<double>::infinity();
  double ymin = xmin;
  for (const auto& v : vertices) {
    xmin = std::min(xmin, v.x);
    ymin = std::min(ymin, v.y);
  }
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const double d = std::hypot(vertices[i].x - xmin, vertices[i].y - ymin);
    const auto& b = vertices[best];
    if (d < best_d || (d == best_d && (vertices[i].x < b.x ||
                                       (vertices[i].x == b.x && vertices[i].y < b.y)))) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

}  // namespace

Mesh::Mesh(std::vector<Vertex> vertices, std::vector<Element> elements)
    : vertices_(std::move(vertices)), elements_(std::move(elements)) {
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (!std::isfinite(vertices_[i].x) || !std::isfinite(vertices_[i].y)) {
      throw MeshError("vertex " + std::to_string(i) + " has non-finite coordinates");
    }
  }
  std::unordered_map<std::uint64_t, int> edge_use;
  edge_use.reserve(3 * elements_.size());
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const auto& el = elements_[e];
    for (std::size_t id : el.v) {
      if (id >= vertices_.size()) {
        throw MeshError("element " + std::to_string(e) + " references missing vertex " +
                        std::to_string(id));
      }
    }
    if (el.v[0] == el.v[1] || el.v[1] == el.v[2] || el.v[0] == el.v[2]) {
      throw MeshError("element " + std::to_string(e) + " repeats a vertex");
    }
    if (!(signed_area(vertices_[el.v[0]], vertices_[el.v[1]], vertices_[el.v[2]]) > 0.0)) {
      throw MeshError("element " + std::to_string(e) + " is not counter-clockwise with positive area");
    }
    for (int k = 0; k < 3; ++k) {
      if (++edge_use[edge_key(el.v[k], el.v[(k + 1) % 3])] > 2) {
        throw MeshError("non-conforming mesh: edge shared by more than two elements");
      }
    }
  }
  gauge_ = pick_gauge(vertices_);
}

bool operator==(const Mesh& a, const Mesh& b) {
  if (a.vertices_.size() != b.vertices_.size() || a.elements_.size() != b.elements_.size() ||
      a.gauge_ != b.gauge_) {
    return false;
  }
  for (std::size_t i = 0; i < a.vertices_.size(); ++i) {
    if (a.vertices_[i].x != b.vertices_[i].x || a.vertices_[i].y != b.vertices_[i].y) return false;
  }
  for (std::size_t i = 0; i < a.elements_.size(); ++i) {
    if (a.elements_[i].v != b.elements_[i].v || a.elements_[i].region != b.elements_[i].region) {
      return false;
    }
  }
  return true;
}

Mesh generate_benchmark_mesh(const GeometryDescriptor& desc) {
  desc.validate();

  std::vector<double> xs{desc.air_box.x0, desc.air_box.x1};
  std::vector<double> ys{desc.air_box.y0, desc.air_box.y1};
  const auto add_rect = [&](const std::optional<Rect>& r) {
    if (!r) return;
    xs.insert(xs.end(), {r->x0, r->x1});
    ys.insert(ys.end(), {r->y0, r->y1});
  };
  add_rect(desc.core_outer);
  add_rect(desc.core_window);
  add_rect(desc.coil_plus);
  add_rect(desc.coil_minus);

  // Subdivide each interval between consecutive breakpoints uniformly.
  const auto subdivide = [&](std::vector<double> breaks) {
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    std::vector<double> pts{breaks.front()};
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      const double a = breaks[i];
      const double b = breaks[i + 1];
      const auto n = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil((b - a) / desc.element_size - 1e-9)));
      for (std::size_t k = 1; k < n; ++k) pts.push_back(a + (b - a) * static_cast<double>(k) / static_cast<double>(n));
      pts.push_back(b);
    }
    return pts;
  };
  const std::vector<double> gx = subdivide(xs);
  const std::vector<double> gy = subdivide(ys);
  const std::size_t nx = gx.size();
  const std::size_t ny = gy.size();

  std::vector<Vertex> vertices;
  vertices.reserve(nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) vertices.push_back({gx[i], gy[j]});
  }

  std::vector<Element> elements;
  elements.reserve(2 * (nx - 1) * (ny - 1));
  for (std::size_t j = 0; j + 1 < ny; ++j) {
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      const std::size_t p00 = j * nx + i;
      const std::size_t p10 = p00 + 1;
      const std::size_t p01 = p00 + nx;
      const std::size_t p11 = p01 + 1;
      const Region r = desc.region_at(0.5 * (gx[i] + gx[i + 1]), 0.5 * (gy[j] + gy[j + 1]));
      elements.push_back({{p00, p10, p11}, r});
      elements.push_back({{p00, p11, p01}, r});
    }
  }
  return Mesh(std::move(vertices), std::move(elements));
}

Mesh refine_uniform(const Mesh& mesh) {
  std::vector<Vertex> vertices = mesh.vertices();
  std::unordered_map<std::uint64_t, std::size_t> midpoint;
  midpoint.reserve(2 * mesh.num_elements());
  const auto mid = [&](std::size_t a, std::size_t b) {
    const auto [it, inserted] = midpoint.try_emplace(edge_key(a, b), vertices.size());
    if (inserted) {
      const Vertex& va = mesh.vertices()[a];
      const Vertex& vb = mesh.vertices()[b];
      vertices.push_back({0.5 * (va.x + vb.x), 0.5 * (va.y + vb.y)});
    }
    return it->second;
  };

  std::vector<Element> elements;
  elements.reserve(4 * mesh.num_elements());
  for (const Element& el : mesh.elements()) {
    const auto [a, b, c] = el.v;
    const std::size_t ab = mid(a, b);
    const std::size_t bc = mid(b, c);
    const std::size_t ca = mid(c, a);
    elements.push_back({{a, ab, ca}, el.region});
    elements.push_back({{ab, b, bc}, el.region});
    elements.push_back({{ca, bc, c}, el.region});
    elements.push_back({{ab, bc, ca}, el.region});
  }
  return Mesh(std::move(vertices), std::move(elements));
}

ElementGeometry element_geometry(const Mesh& mesh, std::size_t element) {
  if (element >= mesh.num_elements()) {
    throw MeshError("element id " + std::to_string(element) + " out of range");
  }
  const auto& el = mesh.elements()[element];
  const Vec2 p0 = mesh.point(el.v[0]);
  const Vec2 p1 = mesh.point(el.v[1]);
  const Vec2 p2 = mesh.point(el.v[2]);
  const Vec2 e1 = p1 - p0;
  const Vec2 e2 = p2 - p0;
  const double det = cross(e1, e2);
  if (det == 0.0 || !std::isfinite(det)) {
    throw MeshError("element " + std::to_string(element) + " has zero area");
  }

  ElementGeometry g;
  g.area = 0.5 * std::abs(det);
  g.barycenter = (1.0 / 3.0) * (p0 + p1 + p2);
  // Rows of the inverse edge matrix.
  g.grad[1] = {e2.y / det, -e2.x / det};
  g.grad[2] = {-e1.y / det, e1.x / det};
  g.grad[0] = -(g.grad[1] + g.grad[2]);
  return g;
}

std::size_t nearest_element(const Mesh& mesh, Vec2 p, Region region) {
  std::size_t best = mesh.num_elements();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    if (mesh.elements()[e].region != region) continue;
    const auto& v = mesh.elements()[e].v;
    const Vec2 c = (1.0 / 3.0) * (mesh.point(v[0]) + mesh.point(v[1]) + mesh.point(v[2]));
    const double d = norm(c - p);
    if (d < best_d) {
      best_d = d;
      best = e;
    }
  }
  if (best == mesh.num_elements()) {
    throw MeshError("no element with region " + std::string(region_name(region)));
  }
  return best;
}

// --- text format -------------------------------------------------------------

void write_mesh(const Mesh& mesh, std::ostream& out) {
  out << "# qnmag mesh: nv ne, vertices (x y), elements (v0 v1 v2 region)\n";
  out << mesh.num_vertices() << ' ' << mesh.num_elements() << '\n';
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices()) out << v.x << ' ' << v.y << '\n';
  for (const auto& el : mesh.elements()) {
    out << el.v[0] << ' ' << el.v[1] << ' ' << el.v[2] << ' ' << region_name(el.region) << '\n';
  }
}

Mesh read_mesh(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  // Next non-blank, non-comment line.
  const auto next = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return true;
    }
    return false;
  };
  const auto expect_end = [&](std::istringstream& s) {
    std::string rest;
    if (s >> rest) throw MeshParseError(lineno, "unexpected trailing token '" + rest + "'");
  };

  if (!next()) throw MeshParseError(lineno, "missing header 'nv ne'");
  std::size_t nv = 0;
  std::size_t ne = 0;
  {
    std::istringstream s(line);
    if (!(s >> nv >> ne)) throw MeshParseError(lineno, "malformed header, expected 'nv ne'");
    expect_end(s);
  }

  std::vector<Vertex> vertices(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    if (!next()) throw MeshParseError(lineno, "unexpected end of file in vertex list");
    std::istringstream s(line);
    if (!(s >> vertices[i].x >> vertices[i].y)) {
      throw MeshParseError(lineno, "malformed vertex, expected 'x y'");
    }
    expect_end(s);
  }

  std::vector<Element> elements(ne);
  for (std::size_t i = 0; i < ne; ++i) {
    if (!next()) throw MeshParseError(lineno, "unexpected end of file in element list");
    std::istringstream s(line);
    long long ids[3];
    std::string tag;
    if (!(s >> ids[0] >> ids[1] >> ids[2] >> tag)) {
      throw MeshParseError(lineno, "malformed element, expected 'v0 v1 v2 region'");
    }
    expect_end(s);
    for (int k = 0; k < 3; ++k) {
      if (ids[k] < 0 || static_cast<std::size_t>(ids[k]) >= nv) {
        throw MeshParseError(lineno, "vertex id " + std::to_string(ids[k]) + " out of range");
      }
      elements[i].v[k] = static_cast<std::size_t>(ids[k]);
    }
    const auto region = parse_region(tag);
    if (!region) throw MeshParseError(lineno, "unknown region '" + tag + "'");
    elements[i].region = *region;
  }
  if (next()) throw MeshParseError(lineno, "trailing data after element list");

  try {
    return Mesh(std::move(vertices), std::move(elements));
  } catch (const MeshParseError&) {
    throw;
  } catch (const MeshError& e) {
    throw MeshParseError(lineno, e.what());
  }
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot open " + path.string() + " for writing");
  write_mesh(mesh, out);
  if (!out) throw MeshError("write to " + path.string() + " failed");
}

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open " + path.string());
  return read_mesh(in);
}

}  // namespace qnmag
