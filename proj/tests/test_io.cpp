#include "secgame/io.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

using namespace secgame;
using nlohmann::json;

namespace {

json exp1_doc() { return json::parse(scenario_to_json(experiment1()).dump()); }

std::string error_path(const json& doc) {
  try {
    (void)scenario_from_json(doc);
  } catch (const ValidationError& e) {
    return e.path();
  }
  return "<no error>";
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("scenario round trip is exact") {
    for (const Scenario& s : {experiment1(), experiment5()}) {
      const std::string text = scenario_to_json(s).dump(2);
      const Scenario back = scenario_from_json(json::parse(text));
      CHECK(back.name == s.name);
      CHECK(back.model == s.model);
      CHECK(back.initial == s.initial);
      CHECK(back.solver.tol == s.solver.tol);
      CHECK(back.solver.max_iter == s.solver.max_iter);
      CHECK(scenario_to_json(back).dump(2) == text);
    }
  }

  TEST_CASE("document layout") {
    const auto doc = scenario_to_json(experiment1());
    CHECK(doc["model"]["m"] == 2);
    CHECK(doc["model"]["retailers"][0]["B"].get<double>() == doctest::Approx(5.28));
    CHECK(doc["model"]["markets"][1]["kappa"] == 250.0);
    CHECK(doc["initial"]["Q"][1][0] == 1.0);
    CHECK(doc["solver"]["max_iter"] == 200000);
  }

  TEST_CASE("optional sections default") {
    json doc = exp1_doc();
    doc.erase("initial");
    doc.erase("solver");
    const Scenario s = scenario_from_json(doc);
    CHECK(s.initial == experiment1().initial);
    CHECK(s.solver.rho == 1.9);
  }

  TEST_CASE("validation errors name the offending key") {
    json doc = exp1_doc();
    doc["model"].erase("markets");
    CHECK(error_path(doc) == "model.markets");

    doc = exp1_doc();
    doc["model"]["retailers"][1]["colour"] = 1;
    CHECK(error_path(doc) == "model.retailers[1].colour");

    doc = exp1_doc();
    doc["model"]["markets"][0]["alpha"] = "steep";
    CHECK(error_path(doc) == "model.markets[0].alpha");

    doc = exp1_doc();
    doc["model"]["m"] = 3;
    CHECK(error_path(doc) == "model.retailers");

    doc = exp1_doc();
    doc["model"]["retailers"][0]["B"] = -1.0;
    CHECK(error_path(doc).rfind("model.retailers[0]", 0) == 0);

    doc = exp1_doc();
    doc["initial"]["u"][0] = 1.5;
    CHECK(error_path(doc) == "initial");

    doc = exp1_doc();
    doc["solver"]["rho"] = 2.5;
    CHECK(error_path(doc) == "solver");

    doc = exp1_doc();
    doc["extra"] = true;
    CHECK(error_path(doc) == "extra");
  }

  TEST_CASE("loading") {
    CHECK(load_scenario("exp1").name == "exp1");
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), std::runtime_error);
  }

  TEST_CASE("numbers read back exactly") {
    for (double v : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, 0.9642400512345678}) {
      const std::string s = format_number(v);
      CHECK(std::stod(s) == v);
    }
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(-3) == "-3");
  }

  TEST_CASE("csv layout and determinism") {
    SweepSpec spec = experiment2_sweep();
    spec.steps = 3;
    std::ostringstream a, b;
    write_sweep_csv(a, run_sweep(spec));
    write_sweep_csv(b, run_sweep(spec));
    CHECK(a.str() == b.str());
    const std::string header = a.str().substr(0, a.str().find('\n'));
    CHECK(header ==
          "param,u_1,u_2,Q_1_1,Q_1_2,Q_2_1,Q_2_2,lambda_1,lambda_2,EU_1,EU_2,residual,iters,converged");
    CHECK(a.str().find("\n2,") != std::string::npos);
    CHECK(a.str().back() == '\n');
  }

  TEST_CASE("solution and trace csv") {
    const Scenario s = experiment1();
    SolverConfig config = s.solver;
    config.record_trace = true;
    const SolverReport r = solve(ViProblem(s.model), config, s.initial);
    std::ostringstream sol, trace;
    write_solution_csv(sol, s.model, r);
    write_trace_csv(trace, r);
    const std::string sol_text = sol.str(), trace_text = trace.str();
    CHECK(sol_text.rfind("u_1,u_2,", 0) == 0);
    CHECK(std::count(sol_text.begin(), sol_text.end(), '\n') == 2);
    CHECK(sol_text.find(",1\n") == sol_text.size() - 3);
    CHECK(trace_text.rfind("iteration,residual,beta,r\n", 0) == 0);
    CHECK(std::count(trace_text.begin(), trace_text.end(), '\n') == static_cast<long>(r.trace.size()) + 1);
  }
}
