// SPDX-License-Identifier: Apache-2.0
// hodgefem: run adaptive experiments, invariant suites and mesh inspection.

#include "hodgefem/config.hpp"
#include "hodgefem/diagnostics.hpp"
#include "hodgefem/mesh_io.hpp"
#include "hodgefem/report.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace hodgefem;

namespace {

constexpr int kExitConverged = 0;
constexpr int kExitNotConverged = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

std::ofstream open_output(const fs::path &path) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write " + path.string());
  os.imbue(std::locale::classic());
  return os;
}

int cmd_run(const std::string &config_path) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const InputError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  RunReport report;
  try {
    RunOptions options;
    options.timing = cfg.timing;
    options.on_step = [](const StepRecord &s) {
      std::cerr << "step " << s.step << "  ntri " << s.ntri << "  eta " << s.eta << "  marked " << s.marked << '\n';
    };
    report = run_adaptive(make_problem(cfg.problem), cfg.algorithm, cfg.params, options);
  } catch (const SolverError &e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const DimensionError &e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  }

  fs::create_directories(cfg.output_dir);
  {
    auto os = open_output(cfg.output_dir / "report.csv");
    write_report_csv(os, report);
  }
  {
    auto os = open_output(cfg.output_dir / "report.json");
    os << report_json(report).dump(2) << '\n';
  }
  {
    auto os = open_output(cfg.output_dir / "mesh_final.txt");
    write_mesh(os, *report.final_mesh);
  }
  if (cfg.emit_svg) {
    auto os = open_output(cfg.output_dir / "rates.svg");
    write_rates_svg(os, report);
  }
  for (const auto &w : report.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << report.problem << ' ' << algorithm_name(report.algorithm) << ": " << report.steps.size() << " steps, stop "
            << stop_reason_name(report.stop) << ", eta " << report.steps.back().eta << '\n';
  return report.converged ? kExitConverged : kExitNotConverged;
}

int cmd_diagnose(const std::string &config_path) {
  DiagnoseOptions options;
  if (!config_path.empty()) {
    try {
      options.seed = load_config(config_path).seed;
    } catch (const InputError &e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitConfig;
    }
  }
  const auto results = run_diagnostics(options);
  print_table(std::cout, results);
  return all_passed(results) ? 0 : 1;
}

int cmd_mesh_dump(const std::string &path) {
  std::ifstream is(path);
  if (!is) {
    std::cerr << "cannot open " << path << '\n';
    return kExitConfig;
  }
  try {
    const Mesh mesh = read_mesh(is);
    const MeshMetrics m = mesh_metrics(mesh);
    std::cout << "vertices " << mesh.num_vertices() << "\nedges " << mesh.num_edges() << "\ntriangles "
              << mesh.num_triangles() << "\nboundary_edges " << mesh.num_boundary_edges() << "\nboundary_loops "
              << boundary_loops(mesh) << "\nmin_angle_deg " << m.min_angle * 180.0 / std::numbers::pi << "\nmax_h "
              << m.max_h << "\nmax_valence " << max_vertex_valence(mesh) << '\n';
  } catch (const Error &e) {
    std::cerr << "mesh error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Mixed Hodge Laplacian finite elements with adaptive refinement"};
  app.require_subcommand(1);
  std::string run_config, diagnose_config, mesh_file;
  auto *run = app.add_subcommand("run", "run an adaptive or uniform experiment");
  run->add_option("config", run_config, "key = value configuration file")->required();
  auto *diagnose = app.add_subcommand("diagnose", "run the invariant suites");
  diagnose->add_option("config", diagnose_config, "optional configuration (seed)");
  auto *dump = app.add_subcommand("mesh-dump", "print metrics of a mesh file");
  dump->add_option("mesh", mesh_file, "mesh file")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitConfig;
  }
  try {
    if (*run) return cmd_run(run_config);
    if (*diagnose) return cmd_diagnose(diagnose_config);
    return cmd_mesh_dump(mesh_file);
  } catch (const SolverError &e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNotConverged;
  }
}
