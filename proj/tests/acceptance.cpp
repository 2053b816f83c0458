// Acceptance suite: one [PASS]/[FAIL] line per criterion.
// Usage: acceptance [criterion]   (runs all ten when no number is given)

#include "secgame/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace secgame;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass{true};
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
    if (!ok) {
      pass = false;
      detail += " [x]";
    }
  }
};

std::string fmt(const char* format, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, format, a);
  return buf;
}

std::string fmt(const char* format, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, format, a, b);
  return buf;
}

// Budget, complementarity, residual and Nash checks shared by criteria 2 and 6.
void solution_invariants(Outcome& out, const Scenario& s, const SolverReport& r) {
  const ViProblem problem(s.model);
  const double residual = natural_residual(problem, r.solution);
  const KktSummary kkt = kkt_summary(problem, r.solution);
  const auto v = verify_equilibrium(s.model, r.solution, 50);
  out.require(r.converged && residual <= 1e-7, fmt("residual %.2e <= 1e-7", residual));
  out.require(kkt.max_complementarity <= 1e-6, fmt("max lambda|G| %.2e <= 1e-6", kkt.max_complementarity));
  out.require(kkt.max_budget_gap <= 1e-8, fmt("max G %.3f <= 1e-8", kkt.max_budget_gap));
  out.require(v.max_improvement <= 1e-3, fmt("grid-50 improvement %.2e <= 1e-3", v.max_improvement));
}

Outcome criterion1() {
  Outcome out;
  const Scenario s = experiment1();
  const ViProblem problem(s.model);
  const auto start = Clock::now();
  const SolverReport r = solve(problem, s.solver, s.initial);
  const double elapsed = seconds_since(start);
  const DecisionVector dv(problem.layout(), r.solution);
  const double u1 = dv.security()(0), u2 = dv.security()(1);
  out.require(r.converged, "converged");
  out.require(std::abs(u1 - 0.96) <= 0.02, fmt("u1 = %.4f in 0.96 +- 0.02", u1));
  out.require(std::abs(u2 - 0.95) <= 0.02, fmt("u2 = %.4f in 0.95 +- 0.02", u2));
  out.require(elapsed < 10.0, fmt("runtime %.3f s < 10 s", elapsed));

  // Scalar first-order condition with lambda = 0, written out independently.
  const auto& m = s.model;
  const double m_count = static_cast<double>(m.retailer_count());
  const double ubar = dv.security().mean();
  double worst = 0.0;
  for (Index x = 0; x < m.retailer_count(); ++x) {
    const double ux = dv.security()(x);
    double spill = 0.0;
    for (Index k = 0; k < m.market_count(); ++k)
      spill += m.market(k).security_sensitivity / m_count * dv.quantities()(x, k);
    const double lhs = 1.0 / (1.0 - ux);
    const double rhs = m.retailer(x).base_loss * m.retailer(x).attack_multiplier *
                           ((1.0 - ubar) + (1.0 - ux) / m_count) +
                       spill;
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  // The oracle drops lambda, which is right only while every budget is slack.
  const double gap = kkt_summary(problem, r.solution).max_budget_gap;
  out.require(gap < 0.0, fmt("budgets slack (max G = %.3f), max lambda = %.1e", gap, dv.multipliers().maxCoeff()));
  out.require(worst <= 1e-6, fmt("scalar FOC gap %.2e <= 1e-6", worst));
  return out;
}

Outcome criterion2() {
  Outcome out;
  const Scenario s = experiment1();
  const SolverReport r = solve(ViProblem(s.model), s.solver, s.initial);
  solution_invariants(out, s, r);
  const std::string report = reconciliation_report(s, r);
  std::fputs(report.c_str(), stdout);
  out.require(report.find("10.94") != std::string::npos && report.find("published point") != std::string::npos,
              "report lists published and computed values");
  return out;
}

Outcome criterion3() {
  Outcome out;
  const auto start = Clock::now();
  const SweepResult r = run_sweep(experiment3_sweep());
  const double elapsed = seconds_since(start);
  const auto u1 = r.security_series(0);
  const auto u2 = r.security_series(1);
  bool all_converged = true;
  for (const auto& row : r.rows) all_converged = all_converged && row.converged;
  out.require(r.rows.size() == 81 && all_converged, "81 converged rows");
  out.require(std::abs(u1.front() - 0.951) <= 0.01, fmt("u1(D1=120) = %.4f in 0.951 +- 0.01", u1.front()));
  out.require(std::abs(u1.back() - 0.962) <= 0.01, fmt("u1(D1=200) = %.4f in 0.962 +- 0.01", u1.back()));
  const auto crossing = find_crossing(r, u1, u2);
  if (crossing) {
    out.require(std::abs(*crossing - 137.0) <= 5.0, fmt("crossing at D1 = %.2f in 137 +- 5", *crossing));
  } else {
    out.require(false, fmt("no u1 = u2 crossing on [120, 200] (u1 - u2 from %.4f to %.4f)",
                           u1.front() - u2.front(), u1.back() - u2.back()));
  }
  out.require(elapsed < 60.0, fmt("runtime %.2f s < 60 s", elapsed));
  return out;
}

Outcome criterion4() {
  Outcome out;
  const SweepResult r = run_sweep(experiment2_sweep());
  const auto u1 = r.security_series(0);
  const auto u2 = r.security_series(1);
  bool all_converged = true, up = true, down = true;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    all_converged = all_converged && r.rows[i].converged;
    if (i > 0) {
      up = up && u1[i] >= u1[i - 1] - 1e-4;
      down = down && u2[i] <= u2[i - 1] + 1e-4;
    }
  }
  out.require(r.rows.size() == 31 && all_converged, "31 converged rows");
  out.require(up, "u1 nondecreasing");
  out.require(down, "u2 nonincreasing");
  const auto crossing = find_crossing(r, u1, u2);
  out.require(crossing && std::abs(*crossing - 3.06) <= 0.15,
              crossing ? fmt("crossing at B1 = %.4f in 3.06 +- 0.15", *crossing) : std::string("no crossing"));

  int binding = 0;
  double worst = 0.0;
  for (const auto& row : r.rows) {
    if (std::abs(budget_gap(row.security(0), row.value)) > 1e-6) continue;
    ++binding;
    worst = std::max(worst, std::abs(row.security(0) - (1.0 - std::exp(-row.value))));
  }
  out.require(binding > 0 && worst <= 0.01,
              fmt("%.0f binding rows, max |u1 - (1 - exp(-B1))| = %.2e <= 0.01", binding, worst));
  return out;
}

Outcome criterion5() {
  Outcome out;
  const SweepResult r = run_sweep(experiment4_sweep());
  const auto u1 = r.security_series(0);
  const auto u2 = r.security_series(1);
  bool all_converged = true, up = true, down = true;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    all_converged = all_converged && r.rows[i].converged;
    if (i > 0) {
      up = up && u1[i] > u1[i - 1];
      down = down && u2[i] <= u2[i - 1];
    }
  }
  out.require(r.rows.size() == 18 && all_converged, "18 converged rows");
  out.require(up, fmt("u1 strictly increasing (%.4f -> %.4f)", u1.front(), u1.back()));
  out.require(down, fmt("u2 nonincreasing (%.4f -> %.4f)", u2.front(), u2.back()));
  return out;
}

Outcome criterion6() {
  Outcome out;
  const Scenario s = experiment5();
  const SolverReport r = solve(ViProblem(s.model), s.solver, s.initial);
  solution_invariants(out, s, r);
  const DecisionVector dv(DecisionLayout{3, 2}, r.solution);
  std::printf("  exp5 security levels: %.4f %.4f %.4f (reference 0.55 0.58 0.59, not required)\n", dv.security()(0),
              dv.security()(1), dv.security()(2));
  return out;
}

double worst_fd(const ModelSpec& model, unsigned seed, std::string* label) {
  const ViProblem problem(model);
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Vector<double> x = random_interior_point(problem, rng, 2 * 1e-5 + 1e-3);
    const GradientCheck c = fd_check(problem, x, 1e-5);
    if (c.max_relative_error > worst) {
      worst = c.max_relative_error;
      if (label) *label = c.worst_label;
    }
  }
  return worst;
}

Outcome criterion7() {
  Outcome out;
  const double e1 = worst_fd(experiment1().model, 1, nullptr);
  const double e5 = worst_fd(experiment5().model, 1, nullptr);
  std::string label;
  const double literal = worst_fd(experiment1().model.with_loss_gradient_multiplier(false), 1, &label);
  out.require(e1 < 1e-6, fmt("exp1 max rel err %.2e < 1e-6", e1));
  out.require(e5 < 1e-6, fmt("exp5 max rel err %.2e < 1e-6", e5));
  out.require(literal > 1e-6 && label.rfind("u_", 0) == 0,
              fmt("unscaled-loss variant fails: %.2e", literal) + " at " + label);
  return out;
}

Outcome criterion8() {
  Outcome out;
  const auto planted = make_planted_affine_vi<double>(10);
  const Vector<double> start = Vector<double>::Zero(10);
  const SolverReport r = solve(planted.problem, SolverConfig{}, start);
  const double error = (r.solution - planted.solution).cwiseAbs().maxCoeff();
  out.require(r.converged && error <= 1e-6, fmt("max error %.2e <= 1e-6", error));
  out.require(r.iterations < 5000, fmt("%.0f iterations < 5000", static_cast<double>(r.iterations)));

  double previous = (start - planted.solution).norm();
  double worst_rise = 0.0;
  for (long k = 1; k <= r.iterations; ++k) {
    SolverConfig limited;
    limited.max_iter = k;
    const double dist = (solve(planted.problem, limited, start).solution - planted.solution).norm();
    worst_rise = std::max(worst_rise, dist - previous);
    previous = dist;
  }
  out.require(worst_rise <= 1e-10, fmt("largest distance increase %.2e <= 1e-10", worst_rise));
  return out;
}

Outcome criterion9() {
  Outcome out;
  const Scenario s = experiment1();
  const ViProblem problem(s.model);
  const SolverReport joint = solve(problem, s.solver, s.initial);
  const SolverReport br = best_response_solve(problem, s.solver, s.initial);
  const Index primal = problem.layout().multiplier(0);
  const double gap = (joint.solution.head(primal) - br.solution.head(primal)).cwiseAbs().maxCoeff();
  out.require(joint.converged && br.converged, "both converged");
  out.require(gap <= 1e-4, fmt("max |(Q,u) difference| %.2e <= 1e-4", gap));
  return out;
}

Outcome criterion10() {
  Outcome out;
  auto solution_csv = [](const Scenario& s) {
    SolverConfig config = s.solver;
    config.record_trace = true;
    const SolverReport r = solve(ViProblem(s.model), config, s.initial);
    std::ostringstream os;
    write_solution_csv(os, s.model, r);
    write_trace_csv(os, r);
    return os.str();
  };
  out.require(solution_csv(experiment1()) == solution_csv(experiment1()), "exp1 solution and trace");
  out.require(solution_csv(experiment5()) == solution_csv(experiment5()), "exp5 solution and trace");

  for (const char* name : {"exp2", "exp3", "exp4"}) {
    SweepSpec spec = *builtin_sweep(name);
    auto csv = [&](unsigned threads) {
      std::ostringstream os;
      write_sweep_csv(os, run_sweep(spec, threads));
      return os.str();
    };
    const std::string first = csv(1);
    out.require(first == csv(1), std::string(name) + " warm sweep");
    spec.warm_start = false;
    const std::string cold = csv(1);
    out.require(cold == csv(4), std::string(name) + " cold sweep, 1 vs 4 threads");
  }
  return out;
}

const std::vector<std::pair<const char*, std::function<Outcome()>>> kCriteria = {
    {"experiment 1 security levels", criterion1},
    {"experiment 1 equilibrium certificate", criterion2},
    {"attack-loss sweep", criterion3},
    {"budget sweep", criterion4},
    {"market-share sweep", criterion5},
    {"experiment 5 equilibrium", criterion6},
    {"operator matches finite differences", criterion7},
    {"planted affine VI", criterion8},
    {"best response agrees with joint solve", criterion9},
    {"byte-identical CSV output", criterion10},
};

bool run(std::size_t index) {
  Outcome out;
  try {
    out = kCriteria[index].second();
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = std::string("exception: ") + e.what();
  }
  std::printf("[%s] criterion %zu: %s: %s\n", out.pass ? "PASS" : "FAIL", index + 1, kCriteria[index].first,
              out.detail.c_str());
  std::fflush(stdout);
  return out.pass;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 2) {
    std::fprintf(stderr, "usage: %s [criterion 1-%zu]\n", argv[0], kCriteria.size());
    return 2;
  }
  if (argc == 2) {
    const long n = std::strtol(argv[1], nullptr, 10);
    if (n < 1 || n > static_cast<long>(kCriteria.size())) {
      std::fprintf(stderr, "no criterion '%s'\n", argv[1]);
      return 2;
    }
    return run(static_cast<std::size_t>(n - 1)) ? 0 : 1;
  }
  int failures = 0;
  for (std::size_t i = 0; i < kCriteria.size(); ++i) failures += run(i) ? 0 : 1;
  std::printf("%zu/%zu criteria passed\n", kCriteria.size() - static_cast<std::size_t>(failures), kCriteria.size());
  return failures == 0 ? 0 : 1;
}
