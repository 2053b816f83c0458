// secgame: solve, sweep and check the retailer cybersecurity-investment game.

#include "secgame/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

namespace {

using namespace secgame;

enum ExitCode : int {
  kOk = 0,
  kNotConverged = 2,
  kInvalid = 3,
  kVerificationFailed = 4,
};

constexpr double kGradcheckThreshold = 1e-5;

struct CommonOptions {
  std::string scenario;
  std::string variant{"multiplier"};
  double tol{0};       // 0 keeps the scenario's tolerance
  long max_iter{0};    // 0 keeps the scenario's cap
};

Scenario resolve(const CommonOptions& opts) {
  Scenario s = load_scenario(opts.scenario);
  if (opts.variant == "literal" || opts.variant == "literal-eq13") {
    s.model = s.model.with_loss_gradient_multiplier(false);
  } else if (opts.variant != "multiplier") {
    throw ValidationError("--variant", "expected 'multiplier' or 'literal'");
  }
  if (opts.tol > 0) s.solver.tol = opts.tol;
  if (opts.max_iter > 0) s.solver.max_iter = opts.max_iter;
  return s;
}

void add_variant_option(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--variant", opts.variant,
                  "Security-gradient variant: 'multiplier' (loss term scaled by the attack multiplier) or "
                  "'literal' (unscaled)")
      ->check(CLI::IsMember({"multiplier", "literal", "literal-eq13"}));
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

void print_equilibrium(std::ostream& os, const Scenario& scenario, const SolverReport& report) {
  const ViProblem problem(scenario.model);
  const DecisionVector dv(problem.layout(), report.solution);
  const Vector<double> eu = utilities(scenario.model, report.solution);
  os << "scenario " << scenario.name << ": " << to_string(report.termination) << " after " << report.iterations
     << " iterations, residual " << sci(report.final_residual) << "\n";
  os << "retailer";
  for (Index y = 0; y < problem.layout().markets; ++y) os << "       Q_x" << y + 1;
  os << "          u        lambda           E(U)\n";
  for (Index r = 0; r < problem.layout().retailers; ++r) {
    os << "  " << r + 1 << "     ";
    for (Index y = 0; y < problem.layout().markets; ++y) {
      const std::string q = fixed(dv.quantities()(r, y), 6);
      os << std::string(q.size() < 11 ? 11 - q.size() : 1, ' ') << q;
    }
    os << "   " << fixed(dv.security()(r), 6) << "   " << sci(dv.multipliers()(r)) << "   " << fixed(eu(r), 4)
       << "\n";
  }
  os << "u_bar " << fixed(dv.security().mean(), 6) << "\n";
  const KktSummary kkt = kkt_summary(problem, report.solution);
  os << "max lambda*|G| " << sci(kkt.max_complementarity) << ", max G " << sci(kkt.max_budget_gap) << "\n";
}

int run_solve(const CommonOptions& opts, bool dump, const std::string& csv, const std::string& trace,
              bool best_response) {
  Scenario scenario = resolve(opts);
  if (dump) {
    std::cout << scenario_to_json(scenario).dump(2) << "\n";
    return kOk;
  }
  SolverConfig config = scenario.solver;
  config.record_trace = !trace.empty();
  const ViProblem problem(scenario.model);
  const SolverReport report = best_response ? best_response_solve(problem, config, scenario.initial)
                                            : solve(problem, config, scenario.initial);
  print_equilibrium(std::cout, scenario, report);
  if (published_reference(scenario.name)) std::cout << "\n" << reconciliation_report(scenario, report);
  if (!csv.empty()) {
    std::ofstream out(csv, std::ios::binary);
    write_solution_csv(out, scenario.model, report);
  }
  if (!trace.empty()) {
    std::ofstream out(trace, std::ios::binary);
    write_trace_csv(out, report);
  }
  return report.converged ? kOk : kNotConverged;
}

unsigned thread_cap() {
  if (const char* env = std::getenv("SECGAME_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct SweepOptions {
  std::string name;
  std::string base{"exp1"};
  std::string param;
  double from{0};
  double to{0};
  long steps{0};
  std::string out;
  std::string coupling;
  bool cold{false};
};

int run_sweep_cmd(const SweepOptions& opts, CLI::App* cmd) {
  SweepSpec spec = [&] {
    if (!opts.name.empty()) {
      auto builtin = builtin_sweep(opts.name);
      if (!builtin) throw ValidationError("sweep", "unknown builtin sweep '" + opts.name + "'");
      return *std::move(builtin);
    }
    if (opts.param.empty()) throw ValidationError("--param", "give a builtin sweep name or --param");
    return SweepSpec{load_scenario(opts.base), opts.param, 0, 0, 0, ShareCoupling::None};
  }();
  if (cmd->count("--param")) spec.parameter = opts.param;
  if (cmd->count("--from")) spec.from = opts.from;
  if (cmd->count("--to")) spec.to = opts.to;
  if (cmd->count("--steps")) spec.steps = opts.steps;
  if (!opts.coupling.empty()) {
    spec.coupling = opts.coupling == "complement" ? ShareCoupling::Complement : ShareCoupling::None;
  } else if (opts.name.empty() && !spec.parameter.empty() && spec.parameter[0] == 't' &&
             spec.base.model.retailer_count() == 2) {
    spec.coupling = ShareCoupling::Complement;
  }
  spec.warm_start = !opts.cold;
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError("sweep", e.what());
  }

  const SweepResult result = run_sweep(spec, thread_cap());
  std::ostream* summary = &std::cout;
  if (opts.out.empty()) {
    write_sweep_csv(std::cout, result);
    summary = &std::cerr;
  } else {
    std::ofstream out(opts.out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + opts.out + "'");
    write_sweep_csv(out, result);
  }

  long failed = 0;
  for (const auto& row : result.rows) failed += row.converged ? 0 : 1;
  *summary << "sweep " << spec.parameter << " over [" << format_number(spec.from) << ", " << format_number(spec.to)
           << "], " << result.rows.size() << " rows, " << failed << " not converged\n";
  for (Index a = 0; a < result.retailers; ++a) {
    for (Index b = a + 1; b < result.retailers; ++b) {
      const auto sa = result.security_series(a);
      const auto sb = result.security_series(b);
      const auto crossing = find_crossing(result, sa, sb);
      if (crossing)
        *summary << "crossing u" << a + 1 << "=u" << b + 1 << " at " << spec.parameter << "=" << fixed(*crossing, 4)
                 << "\n";
      else
        *summary << "no crossing of u" << a + 1 << " and u" << b + 1 << " over the sweep\n";
    }
  }
  return failed == 0 ? kOk : kNotConverged;
}

int run_verify(const CommonOptions& opts, int grid) {
  const Scenario scenario = resolve(opts);
  const ViProblem problem(scenario.model);
  const SolverReport report = solve(problem, scenario.solver, scenario.initial);
  print_equilibrium(std::cout, scenario, report);
  const EquilibriumVerification v = verify_equilibrium(scenario.model, report.solution, grid);
  for (std::size_t r = 0; r < v.retailers.size(); ++r)
    std::cout << "retailer " << r + 1 << ": best-response improvement " << sci(v.retailers[r].improvement) << "\n";
  std::cout << "max improvement " << sci(v.max_improvement) << " (tolerance " << sci(v.tolerance) << "): "
            << (v.certified ? "PASS" : "FAIL") << "\n";
  if (!report.converged) return kNotConverged;
  return v.certified ? kOk : kVerificationFailed;
}

int run_gradcheck(const CommonOptions& opts, long points, double step, std::uint64_t seed) {
  const Scenario scenario = resolve(opts);
  const ViProblem problem(scenario.model);
  std::mt19937_64 rng(seed);
  double worst = 0;
  std::string worst_label = "-";
  for (long k = 0; k < points; ++k) {
    const Vector<double> x = random_interior_point(problem, rng, 2 * step + 1e-3);
    const GradientCheck c = fd_check(problem, x, step);
    if (c.max_relative_error > worst || k == 0) {
      worst = c.max_relative_error;
      worst_label = c.worst_label;
    }
  }
  const bool pass = worst <= kGradcheckThreshold;
  std::cout << "gradcheck " << scenario.name << " (" << points << " points, step " << sci(step)
            << "): max relative error " << sci(worst) << " at " << worst_label << ": " << (pass ? "PASS" : "FAIL")
            << "\n";
  return pass ? kOk : kVerificationFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilibrium solver for the retailer cybersecurity-investment game"};
  app.require_subcommand(1);

  CommonOptions solve_opts;
  bool dump = false;
  bool best_response = false;
  std::string csv;
  std::string trace;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a scenario and print the equilibrium");
  solve_cmd->add_option("scenario", solve_opts.scenario, "Builtin name (exp1, exp5) or scenario file")->required();
  solve_cmd->add_flag("--dump", dump, "Print the resolved scenario document and exit");
  solve_cmd->add_option("--csv", csv, "Write the solution row as CSV");
  solve_cmd->add_option("--trace", trace, "Write per-iteration residual, beta and r as CSV");
  solve_cmd->add_option("--tol", solve_opts.tol, "Override the natural-residual tolerance");
  solve_cmd->add_option("--max-iter", solve_opts.max_iter, "Override the iteration cap")
      ->check(CLI::PositiveNumber);
  solve_cmd->add_flag("--best-response", best_response, "Use the Gauss-Seidel best-response driver");
  add_variant_option(solve_cmd, solve_opts);

  SweepOptions sweep_opts;
  auto* sweep_cmd = app.add_subcommand("sweep", "Solve over a grid of one parameter and write CSV");
  sweep_cmd->add_option("name", sweep_opts.name, "Builtin sweep (exp2, exp3, exp4)");
  sweep_cmd->add_option("--base", sweep_opts.base, "Base scenario for custom sweeps");
  sweep_cmd->add_option("--param", sweep_opts.param, "Retailer parameter path, e.g. B1, D1, t1, c2, mu1");
  sweep_cmd->add_option("--from", sweep_opts.from, "First grid value");
  sweep_cmd->add_option("--to", sweep_opts.to, "Last grid value");
  sweep_cmd->add_option("--steps", sweep_opts.steps, "Number of grid points");
  sweep_cmd->add_option("--out", sweep_opts.out, "CSV output file (default: standard output)");
  sweep_cmd->add_option("--coupling", sweep_opts.coupling, "Share coupling for t sweeps")
      ->check(CLI::IsMember({"none", "complement"}));
  sweep_cmd->add_flag("--cold", sweep_opts.cold, "Solve every row from the base start (rows run in parallel)");

  CommonOptions verify_opts;
  int grid = 50;
  auto* verify_cmd = app.add_subcommand("verify", "Solve, then brute-force check every retailer's best response");
  verify_cmd->add_option("scenario", verify_opts.scenario, "Builtin name or scenario file")->required();
  verify_cmd->add_option("--grid", grid, "Grid cells per axis")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--tol", verify_opts.tol, "Override the natural-residual tolerance");
  add_variant_option(verify_cmd, verify_opts);

  CommonOptions grad_opts;
  long points = 100;
  double step = 1e-5;
  std::uint64_t seed = 1;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare the operator with finite differences");
  grad_cmd->add_option("scenario", grad_opts.scenario, "Builtin name or scenario file")->required();
  grad_cmd->add_option("--points", points, "Random interior points")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--step", step, "Central-difference step")->check(CLI::Range(1e-7, 1e-4));
  grad_cmd->add_option("--seed", seed, "Sampling seed");
  add_variant_option(grad_cmd, grad_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  try {
    if (*solve_cmd) return run_solve(solve_opts, dump, csv, trace, best_response);
    if (*sweep_cmd) return run_sweep_cmd(sweep_opts, sweep_cmd);
    if (*verify_cmd) return run_verify(verify_opts, grid);
    if (*grad_cmd) return run_gradcheck(grad_opts, points, step, seed);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNotConverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
  return kInvalid;
}
