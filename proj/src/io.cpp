#include "secgame/io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace secgame {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json scenario_to_json(const Scenario& scenario) {
  const auto& model = scenario.model;
  ordered_json retailers = ordered_json::array();
  for (const auto& r : model.retailers()) {
    ordered_json costs = ordered_json::array();
    for (const auto& c : r.costs) costs.push_back({{"a", c.quad}, {"b", c.lin}, {"s", c.scale}});
    retailers.push_back({{"c", r.handling_cost},
                         {"B", r.budget},
                         {"D", r.base_loss},
                         {"t", r.market_share},
                         {"mu", r.attack_multiplier},
                         {"costs", costs}});
  }
  ordered_json markets = ordered_json::array();
  for (const auto& mk : model.markets())
    markets.push_back({{"alpha", mk.slope}, {"gamma", mk.security_sensitivity}, {"kappa", mk.intercept}});

  const ViProblem problem(model);
  const DecisionVector start(problem.layout(), scenario.initial);
  ordered_json q = ordered_json::array();
  for (Index r = 0; r < model.retailer_count(); ++r) {
    ordered_json row = ordered_json::array();
    for (Index y = 0; y < model.market_count(); ++y) row.push_back(start.quantities()(r, y));
    q.push_back(row);
  }
  ordered_json u = ordered_json::array();
  ordered_json lambda = ordered_json::array();
  for (Index r = 0; r < model.retailer_count(); ++r) {
    u.push_back(start.security()(r));
    lambda.push_back(start.multipliers()(r));
  }

  const auto& s = scenario.solver;
  ordered_json doc;
  doc["name"] = scenario.name;
  doc["model"] = {{"m", model.retailer_count()},
                  {"n", model.market_count()},
                  {"q_upper", model.q_upper()},
                  {"loss_gradient_includes_multiplier", model.loss_gradient_includes_multiplier()},
                  {"retailers", retailers},
                  {"markets", markets}};
  doc["initial"] = {{"Q", q}, {"u", u}, {"lambda", lambda}};
  doc["solver"] = {{"beta0", s.beta0}, {"nu", s.nu},   {"mu", s.mu},
                   {"rho", s.rho},     {"tol", s.tol}, {"max_iter", s.max_iter}};
  return doc;
}

namespace {

class Reader {
 public:
  static void require_object(const json& node, const std::string& path, std::set<std::string> allowed) {
    if (!node.is_object()) throw ValidationError(path, "expected an object");
    for (const auto& [key, value] : node.items()) {
      if (!allowed.count(key)) throw ValidationError(join(path, key), "unknown key");
    }
  }

  static const json& member(const json& node, const std::string& path, const std::string& key) {
    const auto it = node.find(key);
    if (it == node.end()) throw ValidationError(join(path, key), "missing required key");
    return *it;
  }

  static double number(const json& node, const std::string& path) {
    if (!node.is_number()) throw ValidationError(path, "expected a number");
    return node.get<double>();
  }

  static double number(const json& parent, const std::string& path, const std::string& key) {
    return number(member(parent, path, key), join(path, key));
  }

  static long integer(const json& parent, const std::string& path, const std::string& key) {
    const json& node = member(parent, path, key);
    if (!node.is_number_integer()) throw ValidationError(join(path, key), "expected an integer");
    return node.get<long>();
  }

  static const json& array(const json& parent, const std::string& path, const std::string& key,
                           std::size_t expected) {
    const json& node = member(parent, path, key);
    if (!node.is_array()) throw ValidationError(join(path, key), "expected an array");
    if (node.size() != expected)
      throw ValidationError(join(path, key), "expected " + std::to_string(expected) + " entries, found " +
                                                 std::to_string(node.size()));
    return node;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  static std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }
};

ModelSpec read_model(const json& node) {
  const std::string path = "model";
  Reader::require_object(node, path,
                         {"m", "n", "q_upper", "loss_gradient_includes_multiplier", "retailers", "markets"});
  const long m = Reader::integer(node, path, "m");
  const long n = Reader::integer(node, path, "n");
  if (m < 1) throw ValidationError("model.m", "need at least one retailer");
  if (n < 1) throw ValidationError("model.n", "need at least one market");

  const double q_upper = node.contains("q_upper") ? Reader::number(node, path, "q_upper") : 100.0;
  bool with_multiplier = true;
  if (node.contains("loss_gradient_includes_multiplier")) {
    const json& flag = node["loss_gradient_includes_multiplier"];
    if (!flag.is_boolean()) throw ValidationError("model.loss_gradient_includes_multiplier", "expected a boolean");
    with_multiplier = flag.get<bool>();
  }

  const json& markets_node = Reader::array(node, path, "markets", static_cast<std::size_t>(n));
  std::vector<Market<double>> markets;
  for (std::size_t y = 0; y < markets_node.size(); ++y) {
    const std::string mp = Reader::at("model.markets", y);
    const json& mk = markets_node[y];
    Reader::require_object(mk, mp, {"alpha", "gamma", "kappa"});
    markets.push_back({Reader::number(mk, mp, "alpha"), Reader::number(mk, mp, "gamma"),
                       Reader::number(mk, mp, "kappa")});
  }

  const json& retailers_node = Reader::array(node, path, "retailers", static_cast<std::size_t>(m));
  std::vector<Retailer<double>> retailers;
  for (std::size_t x = 0; x < retailers_node.size(); ++x) {
    const std::string rp = Reader::at("model.retailers", x);
    const json& rn = retailers_node[x];
    Reader::require_object(rn, rp, {"c", "B", "D", "t", "mu", "costs"});
    Retailer<double> r;
    r.handling_cost = Reader::number(rn, rp, "c");
    r.budget = Reader::number(rn, rp, "B");
    r.base_loss = Reader::number(rn, rp, "D");
    r.market_share = Reader::number(rn, rp, "t");
    r.attack_multiplier = Reader::number(rn, rp, "mu");
    const json& costs = Reader::array(rn, rp, "costs", static_cast<std::size_t>(n));
    for (std::size_t y = 0; y < costs.size(); ++y) {
      const std::string cp = Reader::at(rp + ".costs", y);
      Reader::require_object(costs[y], cp, {"a", "b", "s"});
      r.costs.push_back({Reader::number(costs[y], cp, "a"), Reader::number(costs[y], cp, "b"),
                         Reader::number(costs[y], cp, "s")});
    }
    retailers.push_back(std::move(r));
  }

  try {
    return ModelSpec(std::move(retailers), std::move(markets), q_upper, with_multiplier);
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    const auto colon = what.find(':');
    throw ValidationError(what.substr(0, colon), colon == std::string::npos ? what : what.substr(colon + 2));
  }
}

Vector<double> read_initial(const json& node, const ViProblem& problem) {
  const std::string path = "initial";
  Reader::require_object(node, path, {"Q", "u", "lambda"});
  const auto& layout = problem.layout();
  Vector<double> x = problem.default_start();
  if (node.contains("Q")) {
    const json& rows = Reader::array(node, path, "Q", static_cast<std::size_t>(layout.retailers));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::string rp = Reader::at("initial.Q", r);
      if (!rows[r].is_array() || rows[r].size() != static_cast<std::size_t>(layout.markets))
        throw ValidationError(rp, "expected " + std::to_string(layout.markets) + " entries");
      for (std::size_t y = 0; y < rows[r].size(); ++y)
        x(layout.quantity(static_cast<Index>(r), static_cast<Index>(y))) =
            Reader::number(rows[r][y], Reader::at(rp, y));
    }
  }
  auto read_vector = [&](const char* key, auto offset) {
    if (!node.contains(key)) return;
    const json& values = Reader::array(node, path, key, static_cast<std::size_t>(layout.retailers));
    for (std::size_t r = 0; r < values.size(); ++r)
      x(offset(static_cast<Index>(r))) = Reader::number(values[r], Reader::at(Reader::join(path, key), r));
  };
  read_vector("u", [&](Index r) { return layout.security(r); });
  read_vector("lambda", [&](Index r) { return layout.multiplier(r); });
  if (!is_feasible(problem, x)) throw ValidationError(path, "initial point lies outside the feasible box");
  return x;
}

SolverConfig read_solver(const json& node) {
  const std::string path = "solver";
  Reader::require_object(node, path, {"beta0", "nu", "mu", "rho", "tol", "max_iter"});
  SolverConfig config;
  if (node.contains("beta0")) config.beta0 = Reader::number(node, path, "beta0");
  if (node.contains("nu")) config.nu = Reader::number(node, path, "nu");
  if (node.contains("mu")) config.mu = Reader::number(node, path, "mu");
  if (node.contains("rho")) config.rho = Reader::number(node, path, "rho");
  if (node.contains("tol")) config.tol = Reader::number(node, path, "tol");
  if (node.contains("max_iter")) config.max_iter = Reader::integer(node, path, "max_iter");
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(path, e.what());
  }
  return config;
}

}  // namespace

Scenario scenario_from_json(const json& doc) {
  Reader::require_object(doc, "", {"name", "model", "initial", "solver"});
  std::string name = "custom";
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw ValidationError("name", "expected a string");
    name = doc["name"].get<std::string>();
  }
  ModelSpec model = read_model(Reader::member(doc, "", "model"));
  const ViProblem problem(model);
  Vector<double> initial = doc.contains("initial") ? read_initial(doc["initial"], problem) : problem.default_start();
  SolverConfig solver = doc.contains("solver") ? read_solver(doc["solver"]) : SolverConfig{};
  return Scenario{std::move(name), std::move(model), std::move(initial), solver};
}

Scenario read_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("<document>", e.what());
  }
  return scenario_from_json(doc);
}

Scenario load_scenario(const std::string& name_or_path) {
  if (auto builtin = builtin_scenario(name_or_path)) return *std::move(builtin);
  return read_scenario_file(name_or_path);
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf, ptr);
}

namespace {

void write_header_tail(std::ostream& os, Index m, Index n) {
  for (Index r = 1; r <= m; ++r) os << "u_" << r << ',';
  for (Index r = 1; r <= m; ++r)
    for (Index y = 1; y <= n; ++y) os << "Q_" << r << '_' << y << ',';
  for (Index r = 1; r <= m; ++r) os << "lambda_" << r << ',';
  for (Index r = 1; r <= m; ++r) os << "EU_" << r << ',';
  os << "residual,iters,converged\n";
}

void write_row_tail(std::ostream& os, const Vector<double>& u, const Matrix<double>& q, const Vector<double>& lambda,
                    const Vector<double>& eu, double residual, long iterations, bool converged) {
  for (Index r = 0; r < u.size(); ++r) os << format_number(u(r)) << ',';
  for (Index r = 0; r < q.rows(); ++r)
    for (Index y = 0; y < q.cols(); ++y) os << format_number(q(r, y)) << ',';
  for (Index r = 0; r < lambda.size(); ++r) os << format_number(lambda(r)) << ',';
  for (Index r = 0; r < eu.size(); ++r) os << format_number(eu(r)) << ',';
  os << format_number(residual) << ',' << iterations << ',' << (converged ? 1 : 0) << '\n';
}

}  // namespace

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  os << "param,";
  write_header_tail(os, result.retailers, result.markets);
  for (const auto& row : result.rows) {
    os << format_number(row.value) << ',';
    write_row_tail(os, row.security, row.quantities, row.multipliers, row.utilities, row.residual, row.iterations,
                   row.converged);
  }
}

void write_solution_csv(std::ostream& os, const ModelSpec& model, const SolverReport& report) {
  const ViProblem problem(model);
  const DecisionVector dv(problem.layout(), report.solution);
  write_header_tail(os, model.retailer_count(), model.market_count());
  write_row_tail(os, dv.security(), dv.quantities(), dv.multipliers(), utilities(model, report.solution),
                 report.final_residual, report.iterations, report.converged);
}

void write_trace_csv(std::ostream& os, const SolverReport& report) {
  os << "iteration,residual,beta,r\n";
  for (const auto& row : report.trace)
    os << row.iteration << ',' << format_number(row.residual) << ',' << format_number(row.beta) << ','
       << format_number(row.ratio) << '\n';
}

}  // namespace secgame
