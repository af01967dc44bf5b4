#include "qnmag/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

namespace qnmag {

std::string_view material_name(MaterialChoice m) {
  switch (m) {
    case MaterialChoice::Linear:
      return "linear";
    case MaterialChoice::Arctan:
      return "arctan";
    case MaterialChoice::Hysteresis:
      return "hysteresis";
  }
  return "?";
}

std::optional<MaterialChoice> parse_material(std::string_view name) {
  if (name == "linear") return MaterialChoice::Linear;
  if (name == "arctan") return MaterialChoice::Arctan;
  if (name == "hysteresis") return MaterialChoice::Hysteresis;
  return std::nullopt;
}

// --- configuration -----------------------------------------------------------

void RunConfig::validate() const {
  try {
    geometry.validate();
  } catch (const MeshError& e) {
    throw ConfigError(std::string("geometry: ") + e.what());
  }
  if (levels.empty()) throw ConfigError("at least one refinement level is required");
  if (methods.empty()) throw ConfigError("at least one method is required");
  for (const auto& m : methods) {
    if (!parse_strategy(m)) throw ConfigError("unknown method '" + m + "'");
  }
  if (!std::isfinite(j0)) throw ConfigError("j0 must be finite");
  if (cycle.steps == 0 && cycle.waveform.empty()) throw ConfigError("cycle needs at least one step");
  if (cycle.levels.empty()) throw ConfigError("cycle needs at least one level");
  try {
    material_model();
  } catch (const MaterialError& e) {
    throw ConfigError(std::string("material: ") + e.what());
  }
  strategies();
}

MaterialModel RunConfig::material_model() const {
  switch (material) {
    case MaterialChoice::Linear:
      return MaterialModel::linear(arctan.mu0);
    case MaterialChoice::Arctan:
      arctan.validate();
      return MaterialModel::arctan(arctan);
    case MaterialChoice::Hysteresis:
      hysteresis.validate();
      return MaterialModel::hysteresis(hysteresis);
  }
  throw ConfigError("unknown material");
}

std::vector<PermeabilityStrategy> RunConfig::strategies() const {
  std::vector<PermeabilityStrategy> out;
  for (const auto& m : methods) {
    const auto s = parse_strategy(m);
    if (!s) throw ConfigError("unknown method '" + m + "'");
    if (s->kind == StrategyKind::Newton && material == MaterialChoice::Hysteresis) {
      if (methods_explicit) {
        throw ConfigError(
            "newton cannot be used with the hysteresis material: its co-energy is not twice "
            "differentiable, so there is no Jacobian to build the Newton tensor from");
      }
      continue;
    }
    out.push_back(*s);
  }
  if (out.empty()) throw ConfigError("no method left to run");
  return out;
}

SolverConfig RunConfig::solver_config(const PermeabilityStrategy& s) const {
  SolverConfig c;
  c.strategy = s;
  c.step = armijo;
  c.tol_rel = tol_rel;
  c.max_outer = max_outer;
  c.mu1 = mu1;
  c.mu2 = mu2;
  c.modification = modification;
  c.cg = cg;
  return c;
}

// --- INI parsing -------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto p = s.find(',');
    const auto item = trim(s.substr(0, p));
    if (!item.empty()) out.push_back(item);
    if (p == std::string_view::npos) break;
    s.remove_prefix(p + 1);
  }
  return out;
}

class LineError {
 public:
  explicit LineError(std::size_t line) : line_(line) {}
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("line " + std::to_string(line_) + ": " + what);
  }

 private:
  std::size_t line_;
};

double to_double(std::string_view s, const LineError& where) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v)) {
    where.fail("expected a number, got '" + std::string(s) + "'");
  }
  return v;
}

std::size_t to_size(std::string_view s, const LineError& where) {
  std::size_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    where.fail("expected a non-negative integer, got '" + std::string(s) + "'");
  }
  return v;
}

std::vector<double> to_doubles(std::string_view s, std::size_t count, const LineError& where) {
  const auto items = split_list(s);
  if (items.size() != count) {
    where.fail("expected " + std::to_string(count) + " comma-separated numbers");
  }
  std::vector<double> out;
  for (auto item : items) out.push_back(to_double(item, where));
  return out;
}

std::optional<Rect> to_rect(std::string_view s, const LineError& where) {
  if (s == "none") return std::nullopt;
  const auto v = to_doubles(s, 4, where);
  return Rect{v[0], v[1], v[2], v[3]};
}

// `{w = 0.3, chi = 20}` or the bare pair `0.3, 20`.
HysteresisCell checked_cell(double w, double chi, const LineError& where) {
  if (!(w >= 0.0) || !std::isfinite(w)) where.fail("cell weight must be finite and >= 0");
  if (!(chi >= 0.0) || !std::isfinite(chi)) where.fail("cell chi must be finite and >= 0");
  return {w, chi};
}

HysteresisCell to_cell(std::string_view s, const LineError& where) {
  if (s.front() != '{') {
    const auto v = to_doubles(s, 2, where);
    return checked_cell(v[0], v[1], where);
  }
  if (s.back() != '}') where.fail("unterminated cell '{'");
  std::optional<double> w;
  std::optional<double> chi;
  for (auto item : split_list(s.substr(1, s.size() - 2))) {
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) where.fail("cell entries are key = value");
    const auto k = trim(item.substr(0, eq));
    const double v = to_double(trim(item.substr(eq + 1)), where);
    if (k == "w") {
      w = v;
    } else if (k == "chi") {
      chi = v;
    } else {
      where.fail("unknown cell key '" + std::string(k) + "'");
    }
  }
  if (!w || !chi) where.fail("cell needs both w and chi");
  return checked_cell(*w, *chi, where);
}

std::vector<std::size_t> to_sizes(std::string_view s, const LineError& where) {
  std::vector<std::size_t> out;
  for (auto item : split_list(s)) out.push_back(to_size(item, where));
  if (out.empty()) where.fail("empty list");
  return out;
}

}  // namespace

RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir) {
  RunConfig c;
  std::string section;
  std::string raw;
  std::size_t line_no = 0;
  bool cells_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const LineError where(line_no);
    std::string_view line = raw;
    if (const auto p = line.find_first_of("#;"); p != std::string_view::npos) {
      line = line.substr(0, p);
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') where.fail("unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "geometry" && section != "material" && section != "solver" &&
          section != "cycle") {
        where.fail("unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) where.fail("expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (section.empty()) where.fail("key '" + key + "' outside any section");
    if (value.empty()) where.fail("key '" + key + "' has no value");

    const auto unknown = [&] { where.fail("unknown key '" + key + "' in [" + section + "]"); };

    if (section == "geometry") {
      auto& g = c.geometry;
      if (key == "air_box") {
        const auto r = to_rect(value, where);
        if (!r) where.fail("air_box cannot be none");
        g.air_box = *r;
      } else if (key == "core_outer") {
        g.core_outer = to_rect(value, where);
      } else if (key == "core_window") {
        g.core_window = to_rect(value, where);
      } else if (key == "coil_plus") {
        g.coil_plus = to_rect(value, where);
      } else if (key == "coil_minus") {
        g.coil_minus = to_rect(value, where);
      } else if (key == "element_size") {
        g.element_size = to_double(value, where);
      } else {
        unknown();
      }
    } else if (section == "material") {
      if (key == "model") {
        const auto m = parse_material(value);
        if (!m) where.fail("unknown material '" + std::string(value) + "'");
        c.material = *m;
      } else if (key == "A") {
        c.arctan.A = c.hysteresis.A = to_double(value, where);
      } else if (key == "Js") {
        c.arctan.Js = c.hysteresis.Js = to_double(value, where);
      } else if (key == "mu0") {
        c.arctan.mu0 = c.hysteresis.mu0 = to_double(value, where);
      } else if (key == "cell") {
        // The first cell line replaces the default cell list.
        if (!cells_seen) c.hysteresis.cells.clear();
        cells_seen = true;
        c.hysteresis.cells.push_back(to_cell(value, where));
      } else {
        unknown();
      }
    } else if (section == "solver") {
      if (key == "methods") {
        c.methods.clear();
        for (auto m : split_list(value)) c.methods.emplace_back(m);
        c.methods_explicit = true;
      } else if (key == "levels") {
        c.levels = to_sizes(value, where);
      } else if (key == "j0") {
        c.j0 = to_double(value, where);
      } else if (key == "tol_rel") {
        c.tol_rel = to_double(value, where);
      } else if (key == "max_outer") {
        c.max_outer = to_size(value, where);
      } else if (key == "tau_max") {
        c.armijo.tau_max = to_double(value, where);
      } else if (key == "sigma") {
        c.armijo.sigma = to_double(value, where);
      } else if (key == "rho") {
        c.armijo.rho = to_double(value, where);
      } else if (key == "m_max") {
        c.armijo.m_max = static_cast<int>(to_size(value, where));
      } else if (key == "mu1") {
        c.mu1 = to_double(value, where);
      } else if (key == "mu2") {
        c.mu2 = to_double(value, where);
      } else if (key == "modification") {
        if (value == "projection") {
          c.modification = Modification::Projection;
        } else if (value == "reset") {
          c.modification = Modification::Reset;
        } else {
          where.fail("modification must be projection or reset");
        }
      } else if (key == "cg_rtol") {
        c.cg.rtol = to_double(value, where);
      } else if (key == "cg_maxit") {
        c.cg.maxit = to_size(value, where);
      } else {
        unknown();
      }
    } else {
      if (key == "steps") {
        c.cycle.steps = to_size(value, where);
      } else if (key == "waveform") {
        const std::filesystem::path p(std::string{value});
        c.cycle.waveform = load_waveform(p.is_absolute() ? p : base_dir / p);
      } else if (key == "levels") {
        c.cycle.levels = to_sizes(value, where);
      } else {
        unknown();
      }
    }
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return parse_run_config(in, path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// --- waveform ----------------------------------------------------------------

double waveform(std::size_t i, std::size_t steps, double j0) {
  if (steps == 0 || i >= steps) throw ConfigError("waveform index out of range");
  // Exact quarter points keep the peaks and zeros free of roundoff.
  if (4 * i % steps == 0) {
    switch (4 * i / steps) {
      case 0:
      case 2:
        return 0.0;
      case 1:
        return j0;
      case 3:
        return -j0;
    }
  }
  return j0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(steps));
}

std::vector<double> cycle_waveform(const RunConfig& config) {
  if (!config.cycle.waveform.empty()) return config.cycle.waveform;
  std::vector<double> out(config.cycle.steps);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = waveform(i, out.size(), config.j0);
  return out;
}

std::vector<double> read_waveform(std::istream& in) {
  std::vector<double> out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const LineError where(line_no);
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (std::isalpha(static_cast<unsigned char>(line.front()))) continue;  // header
    const auto items = split_list(line);
    if (items.size() != 2) where.fail("expected i,j_s");
    if (to_size(items[0], where) != out.size()) where.fail("step indices must run 0, 1, 2, ...");
    out.push_back(to_double(items[1], where));
  }
  if (out.empty()) throw ConfigError("waveform has no samples");
  return out;
}

std::vector<double> load_waveform(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open waveform file " + path.string());
  try {
    return read_waveform(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_waveform(std::span<const double> values, std::ostream& out) {
  out << "i,j_s\n";
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto r = std::to_chars(buf, buf + sizeof buf, values[i]);
    out << i << ',' << std::string_view(buf, static_cast<std::size_t>(r.ptr - buf)) << '\n';
  }
}

// --- tables ------------------------------------------------------------------

const BenchCell& BenchTable::cell(std::size_t row, std::string_view method) const {
  const auto it = std::find(methods.begin(), methods.end(), method);
  if (it == methods.end()) throw std::out_of_range("no column " + std::string(method));
  return cells.at(row)[static_cast<std::size_t>(it - methods.begin())];
}

bool BenchTable::all_ok() const {
  for (const auto& row : cells) {
    for (const auto& c : row) {
      if (!c.value) return false;
    }
  }
  return true;
}

namespace {

std::string format_value(const BenchCell& c, bool integral) {
  if (!c.value) return "fail";
  std::ostringstream s;
  s << std::fixed << std::setprecision(integral ? 0 : 1) << *c.value;
  return s.str();
}

}  // namespace

void BenchTable::write_text(std::ostream& out) const {
  if (!title.empty()) out << title << '\n';
  std::vector<std::size_t> width{4};
  for (const auto& m : methods) width.push_back(std::max<std::size_t>(m.size(), 4));
  for (std::size_t r = 0; r < cells.size(); ++r) {
    width[0] = std::max(width[0], std::to_string(dofs[r]).size());
    for (std::size_t k = 0; k < methods.size(); ++k) {
      width[k + 1] = std::max(width[k + 1], format_value(cells[r][k], integral).size());
    }
  }
  out << std::setw(static_cast<int>(width[0])) << "dofs";
  for (std::size_t k = 0; k < methods.size(); ++k) {
    out << "  " << std::setw(static_cast<int>(width[k + 1])) << methods[k];
  }
  out << '\n';
  for (std::size_t r = 0; r < cells.size(); ++r) {
    out << std::setw(static_cast<int>(width[0])) << dofs[r];
    for (std::size_t k = 0; k < methods.size(); ++k) {
      out << "  " << std::setw(static_cast<int>(width[k + 1])) << format_value(cells[r][k], integral);
    }
    out << '\n';
  }
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t k = 0; k < methods.size(); ++k) {
      if (!cells[r][k].value) {
        out << "# " << methods[k] << " at " << dofs[r] << " dofs: " << cells[r][k].error << '\n';
      }
    }
  }
}

void BenchTable::write_csv(std::ostream& out) const {
  out << "dofs";
  for (const auto& m : methods) out << ',' << m;
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t r = 0; r < cells.size(); ++r) {
    out << dofs[r];
    for (const auto& c : cells[r]) {
      out << ',';
      if (c.value) {
        out << *c.value;
      } else {
        out << "fail";
      }
    }
    out << '\n';
  }
}

void write_tables(const BenchTable& table, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream txt(dir / "table.txt");
  std::ofstream csv(dir / "table.csv");
  if (!txt || !csv) throw std::runtime_error("cannot write tables into " + dir.string());
  table.write_text(txt);
  table.write_csv(csv);
}

// --- runs --------------------------------------------------------------------

namespace {

// Meshes for the requested levels, refining incrementally.
std::map<std::size_t, Mesh> build_meshes(const GeometryDescriptor& g,
                                         const std::vector<std::size_t>& levels) {
  std::vector<std::size_t> sorted = levels;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::map<std::size_t, Mesh> out;
  Mesh m = generate_benchmark_mesh(g);
  std::size_t current = 0;
  for (std::size_t level : sorted) {
    while (current < level) {
      m = refine_uniform(m);
      ++current;
    }
    out.emplace(level, m);
  }
  return out;
}

std::string file_stem(std::string_view prefix, std::string_view method, std::size_t level) {
  return std::string(prefix) + "_" + std::string(method) + "_" + std::to_string(level) + ".csv";
}

BenchTable empty_table(std::string title, const std::vector<PermeabilityStrategy>& strategies) {
  BenchTable t;
  t.title = std::move(title);
  for (const auto& s : strategies) t.methods.emplace_back(strategy_name(s));
  return t;
}

std::vector<std::size_t> sorted_levels(std::vector<std::size_t> levels) {
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  return levels;
}

std::size_t probe_element(const Mesh& mesh, const GeometryDescriptor& g) {
  if (g.core_outer) return nearest_element(mesh, g.probe_point(), Region::Iron);
  const Rect& a = g.air_box;
  return nearest_element(mesh, {0.5 * (a.x0 + a.x1), 0.5 * (a.y0 + a.y1)}, Region::Air);
}

}  // namespace

SingleRun run_single(const RunConfig& config, const std::optional<std::filesystem::path>& out_dir) {
  config.validate();
  const auto strategies = config.strategies();
  const MaterialModel material = config.material_model();
  const auto levels = sorted_levels(config.levels);
  const auto meshes = build_meshes(config.geometry, levels);
  if (out_dir) std::filesystem::create_directories(*out_dir);

  SingleRun run;
  run.table = empty_table("Iteration numbers, single load step (" +
                              std::string(material_name(config.material)) + ")",
                          strategies);
  for (std::size_t level : levels) {
    const Discretization disc(meshes.at(level));
    const SourceField source = build_source_field(disc, config.geometry, config.j0);
    run.table.dofs.push_back(disc.num_dofs());
    auto& row = run.table.cells.emplace_back();
    for (const auto& s : strategies) {
      SolveRecord rec;
      rec.level = level;
      rec.dofs = disc.num_dofs();
      rec.method = std::string(strategy_name(s));
      BenchCell cell;
      try {
        HysteresisState state(disc.num_elements(), material.num_cells());
        const FieldProblem problem(disc, material, source,
                                   material.kind() == MaterialKind::Hysteresis ? &state : nullptr);
        NonlinearResult r =
            solve_nonlinear(problem, DofVector(disc.num_dofs(), 0.0), config.solver_config(s));
        rec.report = std::move(r.report);
        if (rec.report.converged) {
          cell.value = static_cast<double>(rec.report.iterations);
        } else {
          rec.error = std::string(status_name(rec.report.status));
          if (!rec.report.message.empty()) rec.error += ": " + rec.report.message;
        }
        if (out_dir) {
          write_report_csv(rec.report, *out_dir / file_stem("iters", rec.method, level));
          export_fields(problem, r.u, *out_dir / file_stem("fields", rec.method, level));
        }
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
      cell.error = rec.error;
      row.push_back(cell);
      run.solves.push_back(std::move(rec));
    }
  }
  return run;
}

double CycleTrace::average_iterations() const {
  if (steps.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : steps) sum += static_cast<double>(s.iterations);
  return sum / static_cast<double>(steps.size());
}

double CycleTrace::loop_area() const {
  const std::size_t n = steps.size();
  if (n < 2) return 0.0;
  double area = 0.0;
  double comp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const CycleStep& a = steps[i];
    const CycleStep& b = steps[(i + 1) % n];
    const double term = dot(0.5 * (a.h + b.h), b.b - a.b);
    const double t = area + term;
    comp += std::abs(area) >= std::abs(term) ? (area - t) + term : (term - t) + area;
    area = t;
  }
  return area + comp;
}

CycleRun run_cycle(const RunConfig& config, const std::optional<std::filesystem::path>& out_dir) {
  config.validate();
  const auto strategies = config.strategies();
  const MaterialModel material = config.material_model();
  const auto levels = sorted_levels(config.cycle.levels);
  const auto meshes = build_meshes(config.geometry, levels);
  const std::vector<double> js = cycle_waveform(config);
  const bool hysteretic = material.kind() == MaterialKind::Hysteresis;
  if (out_dir) std::filesystem::create_directories(*out_dir);

  CycleRun run;
  run.table = empty_table("Average iteration numbers, " + std::to_string(js.size()) +
                              "-step load cycle (" + std::string(material_name(config.material)) +
                              ")",
                          strategies);
  run.table.integral = false;
  for (std::size_t level : levels) {
    const Discretization disc(meshes.at(level));
    const std::size_t probe = probe_element(disc.mesh(), config.geometry);
    run.table.dofs.push_back(disc.num_dofs());
    auto& row = run.table.cells.emplace_back();
    for (const auto& s : strategies) {
      CycleRecord rec;
      rec.level = level;
      rec.dofs = disc.num_dofs();
      rec.method = std::string(strategy_name(s));
      rec.probe_element = probe;
      HysteresisState state(disc.num_elements(), material.num_cells());
      DofVector u(disc.num_dofs(), 0.0);
      const SolverConfig sc = config.solver_config(s);
      for (std::size_t i = 0; i < js.size(); ++i) {
        try {
          const SourceField source = build_source_field(disc, config.geometry, js[i]);
          const FieldProblem problem(disc, material, source, hysteretic ? &state : nullptr);
          NonlinearResult r = solve_nonlinear(problem, u, sc);
          if (!r.report.converged) {
            rec.trace.error = "step " + std::to_string(i) + ": " +
                              std::string(status_name(r.report.status));
            if (!r.report.message.empty()) rec.trace.error += ": " + r.report.message;
            rec.reports.push_back(std::move(r.report));
            break;
          }
          u = std::move(r.u);
          CycleStep step;
          step.i = i;
          step.j = js[i];
          step.iterations = r.report.iterations;
          const auto h = field_intensity(problem, u);
          step.h = h[probe];
          step.b = problem.evaluate(probe, h[probe]).flux;
          rec.trace.steps.push_back(step);
          rec.reports.push_back(std::move(r.report));
          if (hysteretic) update_hysteresis_state(problem, u, state);
        } catch (const ConfigError&) {
          throw;
        } catch (const std::exception& e) {
          rec.trace.error = "step " + std::to_string(i) + ": " + e.what();
          break;
        }
      }
      BenchCell cell;
      if (rec.trace.complete()) {
        cell.value = rec.trace.average_iterations();
      } else {
        cell.error = rec.trace.error;
      }
      row.push_back(cell);
      if (out_dir) export_trace(rec.trace, *out_dir / file_stem("trace", rec.method, level));
      run.cycles.push_back(std::move(rec));
    }
  }
  return run;
}

void export_trace(const CycleTrace& trace, std::ostream& out) {
  out << "i,j_s,iters,hx,hy,bx,by\n";
  out << std::setprecision(17);
  for (const auto& s : trace.steps) {
    out << s.i << ',' << s.j << ',' << s.iterations << ',' << s.h.x << ',' << s.h.y << ','
        << s.b.x << ',' << s.b.y << '\n';
  }
}

void export_trace(const CycleTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  export_trace(trace, out);
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

}  // namespace qnmag
