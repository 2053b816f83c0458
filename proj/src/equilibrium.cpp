#include "secgame/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace secgame {

RetailerBlockVi::RetailerBlockVi(const ViProblem& game, Index retailer, Vector<double> frozen)
    : game_(&game), full_(std::move(frozen)) {
  const auto& layout = game.layout();
  if (retailer < 0 || retailer >= layout.retailers) throw std::out_of_range("retailer index out of range");
  if (full_.size() != game.dimension()) throw std::invalid_argument("RetailerBlockVi: dimension mismatch");
  const Index n = layout.markets;
  indices_.resize(n + 2);
  for (Index y = 0; y < n; ++y) indices_(y) = layout.quantity(retailer, y);
  indices_(n) = layout.security(retailer);
  indices_(n + 1) = layout.multiplier(retailer);
  lower_.resize(n + 2);
  upper_.resize(n + 2);
  for (Index i = 0; i < n + 2; ++i) {
    lower_(i) = game.lower()(indices_(i));
    upper_(i) = game.upper()(indices_(i));
  }
  full_f_.resize(game.dimension());
}

void RetailerBlockVi::evaluate(const Vector<double>& block, Vector<double>& out) const {
  scatter(block, full_);
  game_->evaluate(full_, full_f_);
  out = extract(full_f_);
}

Vector<double> RetailerBlockVi::extract(const Vector<double>& full) const {
  Vector<double> block(indices_.size());
  for (Index i = 0; i < indices_.size(); ++i) block(i) = full(indices_(i));
  return block;
}

void RetailerBlockVi::scatter(const Vector<double>& block, Vector<double>& full) const {
  for (Index i = 0; i < indices_.size(); ++i) full(indices_(i)) = block(i);
}

SolverReport best_response_solve(const ViProblem& problem, const SolverConfig& config, const Vector<double>& start,
                                 const BestResponseOptions& options) {
  config.validate();
  if (!is_feasible(problem, start)) throw std::invalid_argument("best_response_solve: start is outside the box");

  SolverReport report;
  Vector<double> x = start;
  const Index m = problem.layout().retailers;
  double best_residual = std::numeric_limits<double>::infinity();
  long since_best = 0;
  long sweeps = 0;

  double residual = natural_residual(problem, x);
  if (residual <= config.tol) {
    report.solution = x;
    report.final_residual = residual;
    report.converged = true;
    report.termination = Termination::Converged;
    return report;
  }

  while (true) {
    if (sweeps >= options.max_sweeps) {
      report.termination = Termination::IterationLimit;
      break;
    }
    double change = 0.0;
    for (Index r = 0; r < m; ++r) {
      RetailerBlockVi block(problem, r, x);
      const Vector<double> before = block.extract(x);
      SolverConfig inner = config;
      inner.record_trace = false;
      const SolverReport sub = solve(block, inner, before);
      report.beta_retries += sub.beta_retries;
      change = std::max(change, (sub.solution - before).cwiseAbs().maxCoeff());
      block.scatter(sub.solution, x);
    }
    ++sweeps;
    residual = natural_residual(problem, x);
    if (config.record_trace) report.trace.push_back({sweeps, residual, 0.0, change});
    if (residual <= config.tol) {
      report.termination = Termination::Converged;
      break;
    }
    if (residual < best_residual) {
      best_residual = residual;
      since_best = 0;
    } else if (++since_best >= options.stall_window) {
      report.termination = Termination::Stalled;
      break;
    }
  }

  report.solution = std::move(x);
  report.iterations = sweeps;
  report.final_residual = residual;
  report.converged = report.termination == Termination::Converged;
  return report;
}

SolverReport best_response_solve(const ViProblem& problem, const SolverConfig& config) {
  return best_response_solve(problem, config, problem.default_start());
}

namespace {

// Utility of retailer x after replacing its own (Q_x., u_x) by `candidate`
// (n quantities followed by the level).
class OwnBlockUtility {
 public:
  OwnBlockUtility(const ModelSpec& model, Index retailer, const Vector<double>& point)
      : model_(model), retailer_(retailer) {
    const DecisionLayout layout{model.retailer_count(), model.market_count()};
    q_ = Eigen::Map<const Matrix<double>>(point.data(), layout.retailers, layout.markets);
    u_ = point.segment(layout.security(0), layout.retailers);
  }

  double operator()(const Vector<double>& candidate) {
    const Index n = model_.market_count();
    q_.row(retailer_) = candidate.head(n).transpose();
    u_(retailer_) = candidate(n);
    return expected_utility(model_, retailer_, q_, u_);
  }

  Vector<double> current() const {
    Vector<double> c(model_.market_count() + 1);
    c.head(model_.market_count()) = q_.row(retailer_).transpose();
    c(model_.market_count()) = u_(retailer_);
    return c;
  }

 private:
  const ModelSpec& model_;
  Index retailer_;
  Matrix<double> q_;
  Vector<double> u_;
};

// Visits every point of a tensor grid with `cells` intervals per axis.
template <typename Visit>
void for_each_grid_point(const Vector<double>& lo, const Vector<double>& hi, int cells, Visit&& visit) {
  const Index dims = lo.size();
  std::vector<int> idx(static_cast<std::size_t>(dims), 0);
  Vector<double> p(dims);
  while (true) {
    for (Index d = 0; d < dims; ++d) {
      const double t = static_cast<double>(idx[static_cast<std::size_t>(d)]) / cells;
      p(d) = hi(d) > lo(d) ? lo(d) + t * (hi(d) - lo(d)) : lo(d);
    }
    visit(p);
    Index d = 0;
    for (; d < dims; ++d) {
      auto& i = idx[static_cast<std::size_t>(d)];
      if (++i <= cells) break;
      i = 0;
    }
    if (d == dims) return;
  }
}

}  // namespace

EquilibriumVerification verify_equilibrium(const ModelSpec& model, const Vector<double>& point, int grid_density,
                                           const VerifyOptions& options) {
  if (grid_density < 1) throw std::invalid_argument("verify_equilibrium: grid density must be >= 1");
  const DecisionLayout layout{model.retailer_count(), model.market_count()};
  if (point.size() != layout.size()) throw std::invalid_argument("verify_equilibrium: dimension mismatch");

  EquilibriumVerification out;
  out.tolerance = options.tolerance;
  const Index n = layout.markets;
  for (Index r = 0; r < layout.retailers; ++r) {
    OwnBlockUtility utility(model, r, point);
    const Vector<double> own = utility.current();
    RetailerImprovement result;
    result.current_utility = utility(own);

    Vector<double> domain_lo = Vector<double>::Zero(n + 1);
    Vector<double> domain_hi(n + 1);
    domain_hi.head(n).setConstant(model.q_upper());
    domain_hi(n) = std::min(kSecurityCap, -std::expm1(-model.retailer(r).budget));

    Vector<double> best = own;
    double best_value = result.current_utility;
    auto consider = [&](const Vector<double>& p) {
      const double v = utility(p);
      if (v > best_value) {
        best_value = v;
        best = p;
      }
    };
    for_each_grid_point(domain_lo, domain_hi, grid_density, consider);

    Vector<double> half = (domain_hi - domain_lo) / grid_density;
    for (int level = 0; level < options.refine_levels; ++level) {
      const Vector<double> center = best;
      const Vector<double> lo = (center - half).cwiseMax(domain_lo);
      const Vector<double> hi = (center + half).cwiseMin(domain_hi);
      for_each_grid_point(lo, hi, options.refine_density, consider);
      half *= 2.0 / options.refine_density;
    }

    result.best_utility = best_value;
    result.improvement = std::max(0.0, best_value - result.current_utility);
    result.best_quantities = best.head(n);
    result.best_security = best(n);
    out.max_improvement = std::max(out.max_improvement, result.improvement);
    out.retailers.push_back(std::move(result));
  }
  out.certified = out.max_improvement <= out.tolerance;
  return out;
}

KktSummary kkt_summary(const ViProblem& problem, const Vector<double>& point) {
  const auto& layout = problem.layout();
  KktSummary s;
  s.max_budget_gap = -std::numeric_limits<double>::infinity();
  for (Index r = 0; r < layout.retailers; ++r) {
    const double gap = budget_gap(point(layout.security(r)), problem.model().retailer(r).budget);
    s.max_complementarity = std::max(s.max_complementarity, point(layout.multiplier(r)) * std::abs(gap));
    s.max_budget_gap = std::max(s.max_budget_gap, gap);
  }
  return s;
}

}  // namespace secgame
