#ifndef SECGAME_EQUILIBRIUM_HPP
#define SECGAME_EQUILIBRIUM_HPP

#include "secgame/pc_solver.hpp"

#include <vector>

namespace secgame {

/// Retailer x's own (Q_x., u_x, lambda_x) block of the game VI with every
/// rival component frozen at the values in `frozen`.
class RetailerBlockVi {
 public:
  using Scalar = double;

  RetailerBlockVi(const ViProblem& game, Index retailer, Vector<double> frozen);

  Index dimension() const { return indices_.size(); }
  const Vector<double>& lower() const { return lower_; }
  const Vector<double>& upper() const { return upper_; }
  void evaluate(const Vector<double>& block, Vector<double>& out) const;

  Vector<double> extract(const Vector<double>& full) const;
  void scatter(const Vector<double>& block, Vector<double>& full) const;

 private:
  const ViProblem* game_;
  Eigen::Matrix<Index, Eigen::Dynamic, 1> indices_;
  Vector<double> lower_;
  Vector<double> upper_;
  mutable Vector<double> full_;
  mutable Vector<double> full_f_;
};

struct BestResponseOptions {
  long max_sweeps{1000};
  long stall_window{50};  // sweeps without a new residual minimum before giving up
};

/// Gauss-Seidel best response: each retailer's block is solved to `tol`
/// by the projection-contraction method with rivals frozen, repeating until
/// the full natural residual after a sweep is within `tol` (at which point a
/// further sweep would leave every block where it is, up to `tol`).
/// `iterations` counts sweeps; `beta_retries` accumulates over every block
/// solve. With `record_trace` each sweep logs its residual and, in the
/// ratio slot, the largest component change.
SolverReport best_response_solve(const ViProblem& problem, const SolverConfig& config, const Vector<double>& start,
                                 const BestResponseOptions& options = {});

SolverReport best_response_solve(const ViProblem& problem, const SolverConfig& config);

struct RetailerImprovement {
  double current_utility{0};
  double best_utility{0};
  double improvement{0};  // max(0, best - current)
  Vector<double> best_quantities;
  double best_security{0};
};

struct EquilibriumVerification {
  std::vector<RetailerImprovement> retailers;
  double max_improvement{0};
  double tolerance{1e-3};
  bool certified{false};
};

struct VerifyOptions {
  double tolerance{1e-3};
  int refine_levels{40};
  int refine_density{8};
};

/// Brute-force Nash check. For each retailer, searches its own block on a
/// grid of `grid_density` cells per axis over Q in [0, q_upper]^n and
/// u in [0, min(cap, 1 - exp(-B))], with rivals held at `point`, then zooms
/// around the best cell. Reports the largest expected-utility gain found.
EquilibriumVerification verify_equilibrium(const ModelSpec& model, const Vector<double>& point, int grid_density,
                                           const VerifyOptions& options = {});

/// Complementarity and budget diagnostics at a solution.
struct KktSummary {
  double max_complementarity{0};  // max lambda_x |G_x|
  double max_budget_gap{0};       // max G_x (feasible when <= 0)
};

KktSummary kkt_summary(const ViProblem& problem, const Vector<double>& point);

}  // namespace secgame

#endif  // SECGAME_EQUILIBRIUM_HPP
