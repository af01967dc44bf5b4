// qnmag command-line front end: mesh, solve, cycle.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "qnmag/bench.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitSolver = 2;

std::vector<std::string> split_methods(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& item : raw) {
    std::size_t start = 0;
    while (start <= item.size()) {
      const auto comma = item.find(',', start);
      const auto part = item.substr(start, comma == std::string::npos ? comma : comma - start);
      if (!part.empty()) out.push_back(part);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

int run_mesh(const fs::path& config_path, std::size_t refine, const fs::path& out) {
  const qnmag::RunConfig config = qnmag::load_run_config(config_path);
  qnmag::Mesh mesh = qnmag::generate_benchmark_mesh(config.geometry);
  for (std::size_t k = 0; k < refine; ++k) mesh = qnmag::refine_uniform(mesh);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  qnmag::save_mesh(mesh, out);
  std::cout << "wrote " << out.string() << ": " << mesh.num_vertices() << " vertices, "
            << mesh.num_elements() << " elements, " << mesh.num_dofs() << " dofs\n";
  return kExitOk;
}

int run_solve(const fs::path& config_path, const std::vector<std::string>& methods,
              std::size_t levels, const fs::path& out) {
  qnmag::RunConfig config = qnmag::load_run_config(config_path);
  if (!methods.empty()) {
    config.methods = methods;
    config.methods_explicit = true;
  }
  if (levels > 0) {
    config.levels.clear();
    for (std::size_t l = 0; l < levels; ++l) config.levels.push_back(l);
  }
  config.validate();
  const qnmag::SingleRun run = qnmag::run_single(config, out);
  qnmag::write_tables(run.table, out);
  run.table.write_text(std::cout);
  return run.table.all_ok() ? kExitOk : kExitSolver;
}

int run_cycle(const fs::path& config_path, std::size_t steps, const fs::path& waveform_path,
              const fs::path& out) {
  qnmag::RunConfig config = qnmag::load_run_config(config_path);
  if (steps > 0) {
    config.cycle.steps = steps;
    config.cycle.waveform.clear();
  }
  if (!waveform_path.empty()) config.cycle.waveform = qnmag::load_waveform(waveform_path);
  config.validate();
  const qnmag::CycleRun run = qnmag::run_cycle(config, out);
  qnmag::write_tables(run.table, out);
  run.table.write_text(std::cout);
  for (const auto& c : run.cycles) {
    std::cout << c.method << " level " << c.level << ": probe loop area " << c.trace.loop_area()
              << " J/m^3\n";
  }
  return run.table.all_ok() ? kExitOk : kExitSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear magnetostatics benchmark: fixed-point, Newton and local quasi-Newton"};
  app.require_subcommand(1);

  fs::path config_path;
  fs::path out_dir = "out";

  auto* mesh_cmd = app.add_subcommand("mesh", "Generate and refine the benchmark mesh");
  fs::path mesh_out;
  std::size_t refine = 0;
  mesh_cmd->add_option("--config", config_path, "Run configuration file")->required();
  mesh_cmd->add_option("--refine", refine, "Uniform refinement steps")->required();
  mesh_cmd->add_option("--out", mesh_out, "Output mesh file")->required();

  auto* solve_cmd = app.add_subcommand("solve", "Single load step from psi = 0 on every level");
  std::vector<std::string> methods;
  std::size_t levels = 0;
  solve_cmd->add_option("--config", config_path, "Run configuration file")->required();
  solve_cmd->add_option("--method", methods, "newton, fixpoint, bfgs, dfp (repeat or comma list)");
  solve_cmd->add_option("--levels", levels, "Use refinement levels 0..K-1")
      ->check(CLI::PositiveNumber);
  solve_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();

  auto* cycle_cmd = app.add_subcommand("cycle", "Warm-started load cycle with probe traces");
  std::size_t steps = 0;
  fs::path waveform_path;
  cycle_cmd->add_option("--config", config_path, "Run configuration file")->required();
  cycle_cmd->add_option("--steps", steps, "Sine cycle length")->check(CLI::PositiveNumber);
  cycle_cmd->add_option("--waveform", waveform_path, "CSV waveform (i,j_s)")
      ->check(CLI::ExistingFile);
  cycle_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*mesh_cmd) return run_mesh(config_path, refine, mesh_out);
    if (*solve_cmd) return run_solve(config_path, split_methods(methods), levels, out_dir);
    return run_cycle(config_path, steps, waveform_path, out_dir);
  } catch (const qnmag::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
