#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qnmag/errors.hpp"
#include "qnmag/fem.hpp"
#include "qnmag/materials.hpp"
#include "qnmag/mesh.hpp"
#include "qnmag/nonlinear.hpp"

namespace qnmag {

enum class MaterialChoice { Linear, Arctan, Hysteresis };

std::string_view material_name(MaterialChoice m);
std::optional<MaterialChoice> parse_material(std::string_view name);

struct CycleSettings {
  std::size_t steps = 100;
  /// Explicit j_s samples; overrides the sine when non-empty.
  std::vector<double> waveform;
  std::vector<std::size_t> levels{0};
};

/// Everything a benchmark run needs. Defaults reproduce the stock benchmark.
struct RunConfig {
  GeometryDescriptor geometry = GeometryDescriptor::benchmark();
  std::vector<std::size_t> levels{0, 1, 2};
  MaterialChoice material = MaterialChoice::Arctan;
  ArctanParams arctan;
  HysteresisParams hysteresis = HysteresisParams::defaults();
  std::vector<std::string> methods{"newton", "fixpoint", "bfgs", "dfp"};
  /// Methods were named by the user rather than defaulted.
  bool methods_explicit = false;
  ArmijoRule armijo;
  double tol_rel = 1e-8;
  std::size_t max_outer = 5000;
  std::optional<double> mu1;
  std::optional<double> mu2;
  Modification modification = Modification::Projection;
  CgConfig cg;
  double j0 = 1e5;  ///< A/m^2
  CycleSettings cycle;

  /// Throws ConfigError on the first inconsistency.
  void validate() const;
  MaterialModel material_model() const;
  /// The strategies to run. Newton is dropped for hysteresis unless it was
  /// asked for explicitly, in which case this throws ConfigError.
  std::vector<PermeabilityStrategy> strategies() const;
  SolverConfig solver_config(const PermeabilityStrategy& s) const;
};

/// INI-style text: [geometry], [material], [solver], [cycle] sections of
/// `key = value` lines. Relative paths resolve against `base_dir`.
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// --- waveform ----------------------------------------------------------------

/// j0 sin(2 pi i / steps).
double waveform(std::size_t i, std::size_t steps, double j0);
/// The cycle's j_s samples: the explicit waveform if given, else the sine.
std::vector<double> cycle_waveform(const RunConfig& config);

/// CSV `i,j_s`. Values are written in shortest round-trip form.
std::vector<double> read_waveform(std::istream& in);
std::vector<double> load_waveform(const std::filesystem::path& path);
void write_waveform(std::span<const double> values, std::ostream& out);

// --- tables ------------------------------------------------------------------

struct BenchCell {
  std::optional<double> value;
  std::string error;
};

/// Rows are refinement levels (dof counts increasing), columns are methods.
struct BenchTable {
  std::string title;
  std::vector<std::string> methods;
  std::vector<std::size_t> dofs;
  std::vector<std::vector<BenchCell>> cells;  ///< [row][method]
  bool integral = true;                       ///< print values without decimals

  const BenchCell& cell(std::size_t row, std::string_view method) const;
  bool all_ok() const;
  void write_text(std::ostream& out) const;
  /// dofs,<method>,...; failed cells are written as `fail`.
  void write_csv(std::ostream& out) const;
};

// --- single load step --------------------------------------------------------

struct SolveRecord {
  std::size_t level = 0;
  std::size_t dofs = 0;
  std::string method;
  IterationReport report;
  std::string error;  ///< empty on success

  bool ok() const { return error.empty(); }
};

struct SingleRun {
  BenchTable table;
  std::vector<SolveRecord> solves;
};

/// Solves every level x strategy from psi = 0 at j0. Failures are recorded
/// per cell. With `out_dir`, writes iters_* and fields_* CSVs there.
SingleRun run_single(const RunConfig& config,
                     const std::optional<std::filesystem::path>& out_dir = std::nullopt);

// --- load cycle --------------------------------------------------------------

struct CycleStep {
  std::size_t i = 0;
  double j = 0.0;
  std::size_t iterations = 0;
  Vec2 h;  ///< at the probe element
  Vec2 b;
};

struct CycleTrace {
  std::vector<CycleStep> steps;
  std::string error;  ///< set when a step failed; `steps` holds the ones before it

  bool complete() const { return error.empty(); }
  double average_iterations() const;
  /// Closed-path integral of h . db over the probe trace (trapezoidal).
  /// Positive when the loop dissipates.
  double loop_area() const;
};

struct CycleRecord {
  std::size_t level = 0;
  std::size_t dofs = 0;
  std::string method;
  std::size_t probe_element = 0;
  CycleTrace trace;
  std::vector<IterationReport> reports;  ///< one per solved step
};

struct CycleRun {
  BenchTable table;  ///< average iterations
  std::vector<CycleRecord> cycles;
};

/// Runs the load cycle on cycle.levels, warm-starting each step from the
/// previous one and pinning hysteresis states in between.
CycleRun run_cycle(const RunConfig& config,
                   const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// i,j_s,iters,hx,hy,bx,by
void export_trace(const CycleTrace& trace, std::ostream& out);
void export_trace(const CycleTrace& trace, const std::filesystem::path& path);

/// Writes table.txt and table.csv into `dir`.
void write_tables(const BenchTable& table, const std::filesystem::path& dir);

}  // namespace qnmag
