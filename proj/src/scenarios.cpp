#include "secgame/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace secgame {

ModelSpec share_scaled_model(std::span<const double> shares, bool loss_gradient_includes_multiplier) {
  std::vector<Retailer<double>> retailers;
  for (const double t : shares) {
    const double scale = 1.0 + t;
    Retailer<double> r;
    r.handling_cost = 10.0 * scale;
    r.budget = 3.0 * scale;
    r.base_loss = 100.0 * scale;
    r.market_share = t;
    r.attack_multiplier = scale;
    r.costs = {{1.0, 2.0, scale}, {0.5, 2.0, scale}};
    retailers.push_back(std::move(r));
  }
  std::vector<Market<double>> markets = {{-2.0, 0.2, 120.0}, {-1.0, 0.4, 250.0}};
  return ModelSpec(std::move(retailers), std::move(markets), 100.0, loss_gradient_includes_multiplier);
}

namespace {

Scenario make_scenario(std::string name, ModelSpec model) {
  const ViProblem problem(model);
  Vector<double> start = problem.default_start();
  return Scenario{std::move(name), std::move(model), std::move(start), SolverConfig{}};
}

}  // namespace

Scenario experiment1() {
  const double shares[] = {0.76, 0.24};
  return make_scenario("exp1", share_scaled_model(shares));
}

Scenario experiment5() {
  const double shares[] = {0.71, 0.20, 0.09};
  return make_scenario("exp5", share_scaled_model(shares));
}

std::optional<Scenario> builtin_scenario(std::string_view name) {
  if (name == "exp1") return experiment1();
  if (name == "exp5") return experiment5();
  return std::nullopt;
}

void SweepSpec::validate() const {
  if (!(from < to)) throw std::invalid_argument("sweep: need from < to");
  if (steps < 2) throw std::invalid_argument("sweep: need at least 2 steps");
  // Resolves the path and checks the endpoints produce valid models.
  (void)apply_parameter(base.model, parameter, from, coupling);
  (void)apply_parameter(base.model, parameter, to, coupling);
}

double SweepSpec::value_at(long i) const {
  if (i == steps - 1) return to;
  return from + (to - from) * static_cast<double>(i) / static_cast<double>(steps - 1);
}

namespace {

SweepSpec exp1_sweep(std::string parameter, double from, double to, long steps, ShareCoupling coupling) {
  return SweepSpec{experiment1(), std::move(parameter), from, to, steps, coupling};
}

}  // namespace

SweepSpec experiment2_sweep() { return exp1_sweep("B1", 2.0, 3.5, 31, ShareCoupling::None); }
SweepSpec experiment3_sweep() { return exp1_sweep("D1", 120.0, 200.0, 81, ShareCoupling::None); }
SweepSpec experiment4_sweep() { return exp1_sweep("t1", 0.55, 0.89, 18, ShareCoupling::Complement); }

std::optional<SweepSpec> builtin_sweep(std::string_view name) {
  if (name == "exp2") return experiment2_sweep();
  if (name == "exp3") return experiment3_sweep();
  if (name == "exp4") return experiment4_sweep();
  return std::nullopt;
}

namespace {

struct ParameterPath {
  std::string field;
  Index retailer{0};
};

ParameterPath parse_path(std::string_view path, Index retailers) {
  const auto digit = std::find_if(path.begin(), path.end(), [](char c) { return c >= '0' && c <= '9'; });
  ParameterPath p;
  p.field = std::string(path.begin(), digit);
  long index = 0;
  const char* first = path.data() + (digit - path.begin());
  const char* last = path.data() + path.size();
  const auto [ptr, ec] = std::from_chars(first, last, index);
  if (p.field.empty() || ec != std::errc() || ptr != last)
    throw std::invalid_argument("unknown parameter path '" + std::string(path) + "'");
  static const char* const known[] = {"c", "B", "D", "t", "mu"};
  if (std::find(std::begin(known), std::end(known), p.field) == std::end(known))
    throw std::invalid_argument("unknown parameter path '" + std::string(path) + "'");
  if (index < 1 || index > retailers)
    throw std::invalid_argument("parameter path '" + std::string(path) + "' names a missing retailer");
  p.retailer = index - 1;
  return p;
}

Retailer<double> with_share(Retailer<double> r, double share) {
  const double factor = (1.0 + share) / (1.0 + r.market_share);
  r.handling_cost *= factor;
  r.budget *= factor;
  r.base_loss *= factor;
  r.attack_multiplier *= factor;
  for (auto& c : r.costs) c.scale *= factor;
  r.market_share = share;
  return r;
}

}  // namespace

ModelSpec apply_parameter(const ModelSpec& model, std::string_view path, double value, ShareCoupling coupling) {
  const ParameterPath p = parse_path(path, model.retailer_count());
  Retailer<double> r = model.retailer(p.retailer);
  if (p.field == "c") {
    r.handling_cost = value;
  } else if (p.field == "B") {
    r.budget = value;
  } else if (p.field == "D") {
    r.base_loss = value;
  } else if (p.field == "mu") {
    r.attack_multiplier = value;
  } else {
    if (!(value >= 0.0 && value <= 1.0)) throw std::invalid_argument("market share must lie in [0, 1]");
    r = with_share(std::move(r), value);
    if (coupling == ShareCoupling::Complement) {
      if (model.retailer_count() != 2)
        throw std::invalid_argument("complement share coupling needs exactly two retailers");
      const Index other = 1 - p.retailer;
      return model.with_retailer(p.retailer, std::move(r))
          .with_retailer(other, with_share(model.retailer(other), 1.0 - value));
    }
  }
  return model.with_retailer(p.retailer, std::move(r));
}

Vector<double> utilities(const ModelSpec& model, const Vector<double>& point) {
  const DecisionLayout layout{model.retailer_count(), model.market_count()};
  const Eigen::Map<const Matrix<double>> q(point.data(), layout.retailers, layout.markets);
  const Vector<double> u = point.segment(layout.security(0), layout.retailers);
  Vector<double> out(layout.retailers);
  for (Index r = 0; r < layout.retailers; ++r) out(r) = expected_utility(model, r, q, u);
  return out;
}

std::vector<double> SweepResult::values() const {
  std::vector<double> v;
  v.reserve(rows.size());
  for (const auto& row : rows) v.push_back(row.value);
  return v;
}

std::vector<double> SweepResult::security_series(Index retailer) const {
  std::vector<double> v;
  v.reserve(rows.size());
  for (const auto& row : rows) v.push_back(row.security(retailer));
  return v;
}

namespace {

SweepRow solve_row(const SweepSpec& spec, double value, const Vector<double>& start, Vector<double>* solution) {
  const ModelSpec model = apply_parameter(spec.base.model, spec.parameter, value, spec.coupling);
  const ViProblem problem(model);
  const SolverReport report = solve(problem, spec.base.solver, project(problem, start));
  const DecisionVector dv(problem.layout(), report.solution);

  SweepRow row;
  row.value = value;
  row.security = dv.security();
  row.quantities = dv.quantities();
  row.multipliers = dv.multipliers();
  row.utilities = utilities(model, report.solution);
  row.residual = natural_residual(problem, report.solution);
  row.iterations = report.iterations;
  row.converged = report.converged && row.residual <= spec.base.solver.tol;
  if (solution) *solution = report.solution;
  return row;
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec, unsigned threads) {
  spec.validate();
  SweepResult result;
  result.parameter = spec.parameter;
  result.retailers = spec.base.model.retailer_count();
  result.markets = spec.base.model.market_count();
  result.rows.resize(static_cast<std::size_t>(spec.steps));

  if (spec.warm_start) {
    Vector<double> start = spec.base.initial;
    for (long i = 0; i < spec.steps; ++i) {
      Vector<double> solution;
      auto& row = result.rows[static_cast<std::size_t>(i)];
      row = solve_row(spec, spec.value_at(i), start, &solution);
      // A failed row does not seed the next one.
      start = row.converged ? solution : spec.base.initial;
    }
    return result;
  }

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(spec.steps)));
  std::atomic<long> next{0};
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](unsigned w) {
    try {
      for (long i = next++; i < spec.steps; i = next++)
        result.rows[static_cast<std::size_t>(i)] = solve_row(spec, spec.value_at(i), spec.base.initial, nullptr);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return result;
}

std::optional<double> find_crossing(const SweepResult& result, std::span<const double> series_a,
                                    std::span<const double> series_b) {
  if (series_a.size() != series_b.size() || series_a.size() != result.rows.size())
    throw std::invalid_argument("find_crossing: series length mismatch");
  // Last converged row with a nonzero difference, and whether an exact tie
  // was seen since.
  std::optional<std::size_t> anchor;
  std::optional<std::size_t> tie;
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    if (!result.rows[i].converged || !std::isfinite(series_a[i]) || !std::isfinite(series_b[i])) continue;
    const double diff = series_a[i] - series_b[i];
    if (diff == 0.0) {
      if (!tie) tie = i;
      continue;
    }
    if (anchor) {
      const double before = series_a[*anchor] - series_b[*anchor];
      if ((before < 0.0) != (diff < 0.0)) {
        if (tie) return result.rows[*tie].value;
        const double x0 = result.rows[*anchor].value;
        const double x1 = result.rows[i].value;
        return x0 + (x1 - x0) * before / (before - diff);
      }
    }
    anchor = i;
    tie.reset();
  }
  return std::nullopt;
}

std::optional<ReferenceValues> published_reference(std::string_view scenario_name) {
  if (scenario_name == "exp1") return ReferenceValues{{10.94, 30.25, 11.78, 31.73}, {0.96, 0.95}, 0.955};
  if (scenario_name == "exp5") return ReferenceValues{{}, {0.55, 0.58, 0.59}, 0.573};
  return std::nullopt;
}

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string scientific(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

void append_kkt_block(std::ostringstream& os, const ViProblem& problem, const Vector<double>& point) {
  const Vector<double> f = evaluate(problem, point);
  const Vector<double> step = point - project(problem, point - f);
  for (Index i = 0; i < problem.dimension(); ++i) {
    os << "    " << component_label(problem.layout(), i) << ": F = " << scientific(f(i))
       << ", natural residual = " << scientific(std::abs(step(i))) << "\n";
  }
}

}  // namespace

std::string reconciliation_report(const Scenario& scenario, const SolverReport& report) {
  const auto reference = published_reference(scenario.name);
  const ViProblem problem(scenario.model);
  const DecisionLayout& layout = problem.layout();
  const DecisionVector computed(layout, report.solution);
  std::ostringstream os;
  os << "Reconciliation for " << scenario.name << "\n";
  if (!reference) {
    os << "  no published reference values\n";
    return os.str();
  }

  os << "  component      published      computed\n";
  const bool has_q = !reference->quantities.empty();
  for (Index r = 0; r < layout.retailers; ++r) {
    for (Index y = 0; y < layout.markets; ++y) {
      os << "  " << component_label(layout, layout.quantity(r, y)) << "          "
         << (has_q ? fixed(reference->quantities[static_cast<std::size_t>(layout.quantity(r, y))], 2) : "    -")
         << "      " << fixed(computed.quantities()(r, y), 4) << "\n";
    }
  }
  for (Index r = 0; r < layout.retailers; ++r) {
    os << "  u_" << r + 1 << "            " << fixed(reference->security[static_cast<std::size_t>(r)], 3)
       << "      " << fixed(computed.security()(r), 6) << "\n";
  }
  if (reference->mean_security)
    os << "  u_bar          " << fixed(*reference->mean_security, 3) << "      "
       << fixed(computed.security().mean(), 6) << "\n";

  os << "  computed equilibrium: residual " << scientific(report.final_residual) << "\n";
  append_kkt_block(os, problem, report.solution);

  if (has_q) {
    Vector<double> published = Vector<double>::Zero(layout.size());
    for (Index i = 0; i < layout.retailers * layout.markets; ++i)
      published(i) = reference->quantities[static_cast<std::size_t>(i)];
    for (Index r = 0; r < layout.retailers; ++r)
      published(layout.security(r)) = reference->security[static_cast<std::size_t>(r)];
    os << "  published point (lambda = 0): residual "
       << scientific(natural_residual(problem, published)) << "\n";
    append_kkt_block(os, problem, published);
    os << "  note: the published quantities do not satisfy the stationarity conditions of this model\n";
  } else {
    os << "  note: the published security levels are reference values only; they are not a solution of this model\n";
  }
  return os.str();
}

}  // namespace secgame
