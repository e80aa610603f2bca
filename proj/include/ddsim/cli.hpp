#pragma once

// Command-line front end: solve, sweep, lbic, bounds, dump-mesh.
// Exit codes: 0 success, 1 configuration or validation error, 2 solver
// failure, 3 hard bound violation.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ddsim/bounds.hpp"
#include "ddsim/config.hpp"
#include "ddsim/device.hpp"
#include "ddsim/io.hpp"
#include "ddsim/scenarios.hpp"

namespace ddsim {

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_solver = 2, exit_bounds = 3 };

struct CliOptions {
  std::string config_path;
  std::optional<std::string> out;
  std::vector<std::string> overrides;
  std::optional<int> threads;
  std::optional<std::string> param;
  std::optional<std::string> values;
  std::optional<std::string> line;
  bool grid = false;
  bool dump_mesh = false;
};

namespace detail {

inline RunConfig resolve_config(const CliOptions& o) {
  RunConfig cfg = load_config(o.config_path);
  for (const auto& s : o.overrides) apply_override(cfg, s);
  if (o.out) cfg.output.directory = *o.out;
  if (o.threads) cfg.lbic.threads = *o.threads;
  if (o.param) cfg.sweep.parameter = *o.param;
  if (o.values) cfg.sweep.values = *o.values;
  if (o.grid) cfg.lbic.grid = true;
  if (o.line) {
    const auto eq = o.line->find('=');
    const std::string axis = eq == std::string::npos ? "y" : trim(o.line->substr(0, eq));
    if (axis != "y") throw ConfigError("--line expects y=<value>");
    cfg.lbic.line_y = to_number(trim(eq == std::string::npos ? *o.line : o.line->substr(eq + 1)), "--line");
    cfg.lbic.grid = false;
  }
  return cfg;
}

// Builds and validates the scenario; writes diagnostics to err.
inline std::optional<DeviceScenario> checked_scenario(const ScenarioParameters& p, std::ostream& err) {
  DeviceScenario s = build_scenario(p);
  const auto report = validate_assumptions(s);
  err << report.summary();
  if (!report.ok()) return std::nullopt;
  return s;
}

inline std::filesystem::path output_dir(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.output.directory);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << text;
}

inline std::string ladder_text(const std::string& name, const std::vector<double>& values,
                               const std::vector<SolveReport>& reports) {
  std::ostringstream os;
  os << "# " << name << " ladder:";
  for (double v : values) os << ' ' << format_number(v);
  os << '\n';
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    os << "#   " << format_number(values[i]) << ": " << to_string(r.status) << ", " << r.iterations()
       << " iterations, residual " << format_number(r.initial_residual) << " -> " << format_number(r.final_residual)
       << '\n';
  }
  return os.str();
}

inline std::string verdict_text(const BoundReport& rep) {
  std::ostringstream os;
  for (const auto& v : rep.verdicts) {
    os << "#   " << (v.passed ? "ok  " : (v.hard ? "FAIL" : "warn")) << ' ' << v.quantity
       << ": worst " << format_number(v.worst) << ", limit " << format_number(v.limit) << ", margin "
       << format_number(v.margin) << ", node " << v.cell << '\n';
  }
  return os.str();
}

inline std::string commented(const std::string& text) {
  std::ostringstream os;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) os << "#   " << line << '\n';
  return os.str();
}

inline int cmd_solve(const RunConfig& cfg, bool dump, std::ostream& out, std::ostream& err) {
  const auto scenario = checked_scenario(cfg.scenario, err);
  if (!scenario) return exit_config;
  const auto dir = output_dir(cfg);
  if (dump) {
    std::ostringstream m;
    write_mesh(m, *scenario->mesh);
    write_file(dir / "mesh.txt", m.str());
  }
  const SolveRun run = solve_scenario(cfg.scenario, cfg.solver, cfg.ladders);
  std::ostringstream man;
  man << serialize_config(cfg) << '\n';
  man << "# status: " << (run.converged ? "converged" : "failed") << '\n';
  if (!run.message.empty()) man << "# message: " << run.message << '\n';
  man << "# equilibrium Poisson iterations: " << run.equilibrium_iterations << '\n';
  man << ladder_text("voltage", run.voltage_values, run.voltage_reports);
  man << ladder_text("generation", run.generation_values, run.generation_reports);
  if (!run.converged) {
    write_file(dir / "manifest.txt", man.str());
    err << "solver failure: " << run.message << '\n';
    return exit_solver;
  }
  const DiscreteSystem& sys = *run.system;
  for (const auto& c : sys.scenario().contacts) {
    const auto cur = current_report(sys, run.state, c.boundary);
    man << "# current " << c.boundary << ": boundary-flux-sum " << format_number(cur.boundary_flux)
        << ", volume-test-function " << format_number(cur.volume_test) << ", bound " << format_number(cur.bound)
        << '\n';
  }
  const auto cert = bound_certificate(sys, cfg.bounds);
  const auto verdicts = verify_solution_bounds(sys, run.state, cert);
  man << "# bound certificate:\n" << commented(describe(cert));
  man << "# bound verdicts:\n" << verdict_text(verdicts);
  if (cfg.output.profile) {
    std::ostringstream p;
    write_profile(p, sys, run.state);
    write_file(dir / "profile.csv", p.str());
  }
  write_file(dir / "manifest.txt", man.str());
  out << "converged; outputs in " << dir.string() << '\n';
  for (const auto& v : verdicts.verdicts) {
    if (!v.passed) err << (v.hard ? "hard bound violated: " : "warning: certificate bound missed: ") << v.quantity << '\n';
  }
  return verdicts.hard_ok() ? exit_ok : exit_bounds;
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!checked_scenario(cfg.scenario, err)) return exit_config;
  const auto values = parse_values(cfg.sweep.values);
  {
    auto probe = cfg.scenario;
    set_sweep_parameter(probe, cfg.sweep.parameter, values.front());
  }
  const auto rows = parameter_sweep(cfg.scenario, cfg.sweep.parameter, values, cfg.solver, cfg.ladders, cfg.bounds);
  const auto dir = output_dir(cfg);
  std::ostringstream man;
  man << serialize_config(cfg) << '\n';
  int code = exit_ok;
  for (const auto& r : rows) {
    man << "# " << cfg.sweep.parameter << " = " << format_number(r.value) << ": "
        << (r.converged ? "converged" : "failed") << ", " << r.iterations << " iterations";
    if (!r.message.empty()) man << ", " << r.message;
    man << '\n';
    if (!r.converged) {
      code = exit_solver;
    } else if (!r.bounds_hard_ok && code == exit_ok) {
      code = exit_bounds;
    }
  }
  if (cfg.output.sweep) {
    std::ostringstream s;
    write_sweep(s, cfg.sweep.parameter, rows);
    write_file(dir / "sweep.csv", s.str());
  }
  write_file(dir / "manifest.txt", man.str());
  out << rows.size() << " sweep points; outputs in " << dir.string() << '\n';
  if (code != exit_ok) err << "sweep had failing points\n";
  return code;
}

inline int cmd_lbic(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto scenario = checked_scenario(cfg.scenario, err);
  if (!scenario) return exit_config;
  const auto positions =
      cfg.lbic.grid ? lbic_grid_positions(*scenario->mesh) : lbic_line_positions(*scenario->mesh, cfg.lbic.line_y);
  const auto signal = lbic_scan(positions, cfg.scenario, cfg.solver, cfg.ladders, cfg.lbic.threads);
  const auto dir = output_dir(cfg);
  std::ostringstream man;
  man << serialize_config(cfg) << '\n';
  man << "# positions: " << signal.points.size() << '\n';
  const auto failed = signal.failures();
  man << "# failed positions: " << failed.size() << '\n';
  for (auto i : failed) {
    const auto& p = signal.points[i];
    man << "#   (" << format_number(p.x) << ", " << format_number(p.y) << "): " << p.message << '\n';
  }
  if (cfg.output.lbic) {
    std::ostringstream s;
    write_lbic(s, signal);
    write_file(dir / "lbic.csv", s.str());
  }
  write_file(dir / "manifest.txt", man.str());
  out << signal.points.size() << " beam positions; outputs in " << dir.string() << '\n';
  if (!failed.empty()) {
    err << failed.size() << " beam positions failed\n";
    return exit_solver;
  }
  return exit_ok;
}

inline int cmd_bounds(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto scenario = checked_scenario(cfg.scenario, err);
  if (!scenario) return exit_config;
  const DiscreteSystem sys(*scenario);
  out << describe(bound_certificate(sys, cfg.bounds));
  return exit_ok;
}

inline int cmd_dump_mesh(const RunConfig& cfg, std::ostream& out) {
  const DeviceScenario s = build_scenario(cfg.scenario);
  const auto dir = output_dir(cfg);
  std::ostringstream m;
  write_mesh(m, *s.mesh);
  write_file(dir / "mesh.txt", m.str());
  out << s.mesh->cells.size() << " nodes written to " << (dir / "mesh.txt").string() << '\n';
  return exit_ok;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Stationary drift-diffusion simulator"};
  app.require_subcommand(1);
  CliOptions o;
  auto common = [&o](CLI::App* sub) {
    sub->add_option("config", o.config_path, "Run configuration file")->required();
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--set", o.overrides, "Override section.key=value (repeatable)");
  };
  auto* solve = app.add_subcommand("solve", "Solve one scenario");
  common(solve);
  solve->add_flag("--dump-mesh", o.dump_mesh, "Also write mesh.txt");
  auto* sweep = app.add_subcommand("sweep", "Parameter sweep");
  common(sweep);
  sweep->add_option("--param", o.param, "G0, V, lambda or C");
  sweep->add_option("--values", o.values, "a:b:N, a:b:logN or a comma list");
  auto* lbic = app.add_subcommand("lbic", "LBIC beam scan");
  common(lbic);
  lbic->add_option("--threads", o.threads, "Worker threads");
  lbic->add_option("--line", o.line, "Scan line, y=<value>");
  lbic->add_flag("--grid", o.grid, "Scan every mesh node");
  auto* bounds = app.add_subcommand("bounds", "Print the a-priori bound certificate");
  common(bounds);
  auto* dump = app.add_subcommand("dump-mesh", "Write mesh.txt");
  common(dump);
  for (auto* sub : {solve, sweep, bounds, dump}) sub->add_option("--threads", o.threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }
  try {
    const RunConfig cfg = detail::resolve_config(o);
    if (solve->parsed()) return detail::cmd_solve(cfg, o.dump_mesh, out, err);
    if (sweep->parsed()) return detail::cmd_sweep(cfg, out, err);
    if (lbic->parsed()) return detail::cmd_lbic(cfg, out, err);
    if (bounds->parsed()) return detail::cmd_bounds(cfg, out, err);
    return detail::cmd_dump_mesh(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << '\n';
  } catch (const MeshError& e) {
    err << "config error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_solver;
  }
  return exit_config;
}

}  // namespace ddsim
