/*******************************************************************************
* Copyright 2026 The tilq Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*******************************************************************************/

// tilq: solve | verify | simulate | example
//
// Exit status: 0 success, 1 verification failure, 2 bad input, 3 solver failure.

#include <tilq/equilibrium.hpp>
#include <tilq/fbsde_sim.hpp>
#include <tilq/io.hpp>
#include <tilq/parallel.hpp>
#include <tilq/riccati.hpp>
#include <tilq/scenarios.hpp>
#include <tilq/verify.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace tilq;

namespace {

enum Exit { kOk = 0, kFailed = 1, kBadInput = 2, kSolverFailed = 3 };

struct Clock {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); }
};

std::vector<std::string> g_argv;

void ensure_dir(const std::string& dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

void write_manifest(const std::string& dir, io::RunManifest m, const Clock& clock)
{
  m.argv = g_argv;
  m.output_dir = dir;
  m.wall_clock_seconds = clock.seconds();
  io::write_file(join(dir, "manifest.json"), io::dump(m.to_json()));
}

bool is_builtin(const std::string& name)
{
  for (const auto& b : builtin_names()) {
    if (b == name) return true;
  }
  return false;
}

/// Scenario file, or the name of a built-in scenario.
NamedScenario resolve_scenario(const std::string& target, std::size_t grid_steps)
{
  if (!fs::exists(target) && is_builtin(target)) return builtin_scenario(target, grid_steps > 0 ? grid_steps : 1000);
  return io::load_scenario(target, grid_steps);
}

Strategy constant_theta(const ProblemSpec& spec, double v) { return Strategy(spec.grid, spec.dims.k, spec.dims.n, v); }

// ---- solve ------------------------------------------------------------------------

struct SolveArgs {
  std::string scenario;
  std::size_t grid_steps = 0;
  std::string theta0;
  std::string theta_file;
  std::string out = "tilq_out";
  bool waive = false;
  double fp_tol = 1e-10;
  double contraction = 0.5;
};

void write_fields(const std::string& dir, const Strategy& theta, const RiccatiFields& f)
{
  io::write_file(join(dir, "theta.csv"), io::field_csv("theta", theta));
  io::write_file(join(dir, "p1_diag.csv"), io::field_csv("p1", f.p1_diag));
  io::write_file(join(dir, "p2.csv"), io::field_csv("p2", f.p2));
  io::write_file(join(dir, "p3_diag.csv"), io::field_csv("p3", f.p3_diag));
}

int cmd_solve(const SolveArgs& a)
{
  Clock clock;
  NamedScenario sc;
  try {
    sc = resolve_scenario(a.scenario, a.grid_steps);
    if (!a.theta0.empty()) sc.theta0 = io::parse_theta0(a.theta0);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }
  const auto& spec = sc.spec;
  ensure_dir(a.out);
  io::RunManifest manifest;
  manifest.command = "solve";
  manifest.scenario_path = a.scenario;
  manifest.overrides = io::Json{{"grid_steps", spec.grid.steps()}, {"theta0", sc.theta0}};

  if (!a.theta_file.empty()) {
    // evaluate a supplied strategy; any dimension
    Strategy theta;
    try {
      theta = io::read_field_csv(a.theta_file, spec.grid, spec.dims.k, spec.dims.n, "theta");
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kBadInput;
    }
    const auto fields = solve_riccati(spec, theta);
    const auto cons = check_constraints(spec, fields.p1_diag, fields.p3_diag, fields.p2, ConstraintTolerances{});
    const auto res = characterization_residual(spec, theta, fields);
    write_fields(a.out, theta, fields);
    io::Json summary{{"scenario", sc.name},
                     {"mode", "evaluate"},
                     {"grid_steps", spec.grid.steps()},
                     {"horizon", spec.grid.horizon()},
                     {"characterization_residual", res.sup_norm()},
                     {"constraints", io::constraints_json(cons)}};
    io::write_file(join(a.out, "summary.json"), io::dump(summary));
    io::write_file(join(a.out, "scenario.json"), io::dump(io::scenario_to_json(sc)));
    manifest.overrides["theta_file"] = a.theta_file;
    write_manifest(a.out, manifest, clock);
    std::cout << "evaluated supplied strategy; characterization residual " << io::format_double(res.sup_norm()) << "\n";
    return kOk;
  }

  SolverConfig cfg;
  cfg.fp_tolerance = a.fp_tol;
  cfg.contraction_target = a.contraction;
  if (a.waive) {
    cfg.enforce_assumption = false;
  } else if (spec.dims.one_dim()) {
    const auto pos = check_one_dim_positivity(spec, cfg.delta_floor);
    if (!pos.pass) {
      std::cerr << "warning: positivity assumption fails (";
      for (std::size_t i = 0; i < pos.notes.size(); ++i) std::cerr << (i ? "; " : "") << pos.notes[i];
      std::cerr << "); solving anyway, results carry no existence guarantee\n";
      cfg.enforce_assumption = false;
    }
  }
  EquilibriumSolution sol;
  try {
    sol = solve_equilibrium(spec, constant_theta(spec, sc.theta0), cfg);
  } catch (const SolverError& e) {
    std::cerr << "solver failure [" << SolverError::name(e.kind()) << "]: " << e.what() << "\n";
    return kSolverFailed;
  }
  write_fields(a.out, sol.theta_star, sol.riccati);
  io::write_file(join(a.out, "diagnostics.csv"), io::diagnostics_csv(sol));
  io::write_file(join(a.out, "summary.json"), io::dump(io::summary_json(sc, sol, cfg)));
  io::write_file(join(a.out, "scenario.json"), io::dump(io::scenario_to_json(sc)));
  write_manifest(a.out, manifest, clock);
  std::cout << "solved " << sc.name << ": " << sol.windows.size() << " windows, residual "
            << io::format_double(sol.fixed_point_residual) << ", constraints "
            << (sol.constraints.all_pass() ? "pass" : "FAIL") << "\n";
  if (!sol.constraints.range_pass()) {
    std::cout << "range inclusion fails at " << sol.constraints.range_failures << " nodes\n";
  }
  return kOk;
}

// ---- verify -----------------------------------------------------------------------

struct VerifyArgs {
  std::string target;
  std::string suite;
  std::size_t grid_steps = 0;
  std::string out;
  std::size_t paths = 100000;
  std::uint64_t seed = SimConfig{}.seed;
  std::size_t sub_steps = 1;
  bool skip_spike = false;
};

/// Scenario plus strategy from a solution directory written by `solve`.
struct SolutionDir {
  NamedScenario scenario;
  Strategy theta;
};

SolutionDir load_solution_dir(const std::string& dir)
{
  SolutionDir out;
  out.scenario = io::load_scenario(join(dir, "scenario.json"));
  const auto& spec = out.scenario.spec;
  out.theta = io::read_field_csv(join(dir, "theta.csv"), spec.grid, spec.dims.k, spec.dims.n, "theta");
  return out;
}

int cmd_verify(const VerifyArgs& a)
{
  Clock clock;
  SuiteReport rep;
  std::string out_dir = a.out;
  const bool is_dir = fs::is_directory(a.target);
  if (out_dir.empty()) out_dir = is_dir ? a.target : ".";
  try {
    if (a.suite == "example25") {
      std::size_t steps = a.grid_steps;
      Kernel Q = Kernel::constant(1.0);
      if (a.target != "example25" && a.target != "builtin") {
        const auto sc = is_dir ? io::load_scenario(join(a.target, "scenario.json"), a.grid_steps)
                               : resolve_scenario(a.target, a.grid_steps);
        if (!sc.spec.dims.one_dim()) throw io::InputError("example25 suite needs a scalar scenario");
        Q = sc.spec.weights.Q;
        if (steps == 0) steps = sc.spec.grid.steps();
      }
      rep = suite_example_2_5(steps > 0 ? steps : 1000, Q);
    } else if (a.suite == "classical") {
      const auto sc = is_dir ? io::load_scenario(join(a.target, "scenario.json"), a.grid_steps)
                             : resolve_scenario(a.target, a.grid_steps);
      try {
        rep = suite_classical_reduction(sc.spec);
      } catch (const std::invalid_argument& e) {
        throw io::InputError(e.what());
      }
    } else if (a.suite == "equilibrium") {
      SimConfig sim;
      sim.paths = a.paths;
      sim.seed = a.seed;
      sim.sub_steps = a.sub_steps;
      EquilibriumSuiteOptions opt;
      opt.spike = !a.skip_spike;
      SolverConfig cfg;
      cfg.enforce_assumption = false;
      if (is_dir) {
        const auto sd = load_solution_dir(a.target);
        const auto& spec = sd.scenario.spec;
        if (!spec.dims.one_dim()) throw io::InputError("equilibrium suite needs a scalar scenario");
        const auto sol = assemble_solution(spec, sd.theta, constant_theta(spec, sd.scenario.theta0), cfg);
        rep = suite_equilibrium(spec, sol, sim, opt);
      } else {
        const auto sc = resolve_scenario(a.target, a.grid_steps);
        if (!sc.spec.dims.one_dim()) throw io::InputError("equilibrium suite needs a scalar scenario");
        const auto sol = solve_equilibrium(sc.spec, constant_theta(sc.spec, sc.theta0), cfg);
        rep = suite_equilibrium(sc.spec, sol, sim, opt);
      }
    } else {
      throw io::InputError("unknown suite '" + a.suite + "' (example25, classical, equilibrium)");
    }
  } catch (const io::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const SolverError& e) {
    std::cerr << "solver failure [" << SolverError::name(e.kind()) << "]: " << e.what() << "\n";
    return kSolverFailed;
  }
  for (const auto& c : rep.checks) {
    std::cout << (c.pass ? "[pass] " : "[FAIL] ") << c.name << " value=" << io::format_double(c.value)
              << " bound=" << io::format_double(c.bound) << "\n";
  }
  std::cout << "suite " << rep.suite << ": " << (rep.pass() ? "PASS" : "FAIL") << "\n";
  ensure_dir(out_dir);
  io::write_file(join(out_dir, "verify_" + rep.suite + ".json"), io::dump(io::suite_json(rep)));
  return rep.pass() ? kOk : kFailed;
}

// ---- simulate ---------------------------------------------------------------------

struct SimulateArgs {
  std::string dir;
  std::size_t paths = 100000;
  std::uint64_t seed = SimConfig{}.seed;
  double t = 0.0;
  std::string spike_v = "1";
  std::size_t sub_steps = 0;
  std::size_t dump_paths = 0;
  std::string out;
};

Vector parse_vector(const std::string& text, Index k)
{
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (cell.empty() || used != cell.size() || !std::isfinite(v)) throw io::InputError("--spike-v: bad entry '" + cell + "'");
    vals.push_back(v);
  }
  if (static_cast<Index>(vals.size()) != k) {
    throw io::InputError("--spike-v needs " + std::to_string(k) + " comma-separated entries");
  }
  return Eigen::Map<Vector>(vals.data(), k);
}

int cmd_simulate(const SimulateArgs& a)
{
  Clock clock;
  SolutionDir sd;
  Vector v;
  std::string out_dir = a.out.empty() ? join(a.dir, "simulate") : a.out;
  try {
    if (!fs::is_directory(a.dir)) throw io::InputError("'" + a.dir + "' is not a solution directory");
    sd = load_solution_dir(a.dir);
    v = parse_vector(a.spike_v, sd.scenario.spec.dims.k);
    if (a.paths < 2) throw io::InputError("--paths must be at least 2");
    if (a.t < 0.0 || a.t >= sd.scenario.spec.grid.horizon()) throw io::InputError("--t must lie in [0, T)");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }
  const auto& spec = sd.scenario.spec;
  SpikeSpec spike;
  spike.v = v;
  spike.scales = {1.0, -1.0, 2.0, -2.0};
  SimConfig cfg;
  cfg.paths = a.paths;
  cfg.seed = a.seed;
  cfg.t_start = spec.grid.nearest_node(a.t);
  cfg.sub_steps = sub_steps_for(spec.grid, spike.epsilons, a.sub_steps);
  const auto fields = solve_riccati(spec, sd.theta);
  SpikeReport rep;
  try {
    rep = spike_test(spec, sd.theta, fields.p2, fields, cfg, spike);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }
  ensure_dir(out_dir);
  io::write_file(join(out_dir, "spike_report.csv"), io::spike_csv(rep));
  io::Json cost = io::spike_json(rep);
  cost["sub_steps"] = cfg.sub_steps;
  cost["seed"] = cfg.seed;
  io::write_file(join(out_dir, "cost.json"), io::dump(cost));
  if (a.dump_paths > 0) {
    SimConfig dump = cfg;
    dump.paths = std::min<std::size_t>(a.dump_paths, 100);
    io::write_file(join(out_dir, "paths.csv"), io::paths_csv(simulate_closed_loop(spec, sd.theta, fields.p2, dump)));
  }
  io::RunManifest manifest;
  manifest.command = "simulate";
  manifest.scenario_path = join(a.dir, "scenario.json");
  manifest.seed = cfg.seed;
  manifest.overrides = io::Json{{"paths", cfg.paths},         {"t", a.t},
                                {"t_node", cfg.t_start},      {"spike_v", a.spike_v},
                                {"sub_steps", cfg.sub_steps}, {"dump_paths", std::min<std::size_t>(a.dump_paths, 100)}};
  write_manifest(out_dir, manifest, clock);
  std::cout << "spike test at t = " << io::format_double(rep.t) << ": "
            << (rep.liminf_pass ? "liminf check pass" : "liminf check FAIL") << "\n";
  return rep.liminf_pass ? kOk : kFailed;
}

// ---- example ----------------------------------------------------------------------

int cmd_example(const std::string& name, std::size_t grid_steps, const std::string& out, bool list)
{
  if (list || name.empty()) {
    for (const auto& n : builtin_names()) std::cout << n << "\n";
    return kOk;
  }
  if (!is_builtin(name)) {
    std::cerr << "error: unknown example '" << name << "'\n";
    return kBadInput;
  }
  const auto text = io::dump(io::scenario_to_json(builtin_scenario(name, grid_steps > 0 ? grid_steps : 1000)));
  if (out.empty()) {
    std::cout << text;
  } else {
    io::write_file(out, text);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
  g_argv.assign(argv, argv + argc);
  CLI::App app{"tilq: equilibrium strategies for time-inconsistent forward-backward LQ problems"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker cap, 0 = all cores")->check(CLI::NonNegativeNumber);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "solve for the equilibrium strategy");
  solve->add_option("scenario", sa.scenario, "scenario JSON or built-in name")->required();
  solve->add_option("--grid-steps", sa.grid_steps, "override the grid size");
  solve->add_option("--theta0", sa.theta0, "const:<v>");
  solve->add_option("--out", sa.out, "output directory");
  solve->add_option("--theta", sa.theta_file, "evaluate this theta.csv instead of solving");
  solve->add_option("--fp-tol", sa.fp_tol, "fixed-point tolerance");
  solve->add_option("--contraction-target", sa.contraction, "window halving threshold");
  solve->add_flag("--waive-assumption", sa.waive, "solve even if the positivity floor fails");
  solve->add_option("--threads", threads, "worker cap, 0 = all cores");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "run a verification suite");
  verify->add_option("target", va.target, "scenario JSON, solution directory or built-in name")->required();
  verify->add_option("--suite", va.suite, "example25 | classical | equilibrium")->required();
  verify->add_option("--grid-steps", va.grid_steps, "override the grid size");
  verify->add_option("--out", va.out, "directory for the report JSON");
  verify->add_option("--paths", va.paths, "Monte-Carlo paths for spike tests");
  verify->add_option("--seed", va.seed, "RNG seed");
  verify->add_option("--sub-steps", va.sub_steps, "simulation steps per grid step");
  verify->add_flag("--skip-spike", va.skip_spike, "skip Monte-Carlo spike tests");
  verify->add_option("--threads", threads, "worker cap, 0 = all cores");

  SimulateArgs ma;
  auto* simulate = app.add_subcommand("simulate", "spike-variation Monte-Carlo on a solution directory");
  simulate->add_option("dir", ma.dir, "directory written by solve")->required();
  simulate->add_option("--paths", ma.paths, "Monte-Carlo paths");
  simulate->add_option("--seed", ma.seed, "RNG seed");
  simulate->add_option("--t", ma.t, "spike time (snapped to the grid)");
  simulate->add_option("--spike-v", ma.spike_v, "direction, comma-separated for k > 1");
  simulate->add_option("--sub-steps", ma.sub_steps, "simulation steps per grid step (0 = automatic)");
  simulate->add_option("--dump-paths", ma.dump_paths, "write up to 100 closed-loop paths");
  simulate->add_option("--out", ma.out, "output directory (default <dir>/simulate)");
  simulate->add_option("--threads", threads, "worker cap, 0 = all cores");

  std::string ex_name, ex_out;
  std::size_t ex_steps = 0;
  bool ex_list = false;
  auto* example = app.add_subcommand("example", "print a built-in scenario");
  example->add_option("name", ex_name, "built-in scenario name");
  example->add_option("--grid-steps", ex_steps, "grid size");
  example->add_option("--out", ex_out, "write to file instead of stdout");
  example->add_flag("--list", ex_list, "list built-in names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadInput;
  }
  set_thread_cap(threads);
  try {
    if (*solve) return cmd_solve(sa);
    if (*verify) return cmd_verify(va);
    if (*simulate) return cmd_simulate(ma);
    if (*example) return cmd_example(ex_name, ex_steps, ex_out, ex_list);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }
  return kBadInput;
}
