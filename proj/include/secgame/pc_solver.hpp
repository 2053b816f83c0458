#ifndef SECGAME_PC_SOLVER_HPP
#define SECGAME_PC_SOLVER_HPP

#include "secgame/vi.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace secgame {

struct SolverConfig {
  double beta0{1.0};   // initial prediction step
  double nu{0.9};      // accept the prediction when r <= nu
  double mu{0.3};      // enlarge the step when r <= mu
  double rho{1.9};     // relaxation of the correction step
  double tol{1e-7};    // natural-residual threshold
  long max_iter{200000};
  bool record_trace{false};

  void validate() const {
    if (!(beta0 > 0.0) || !std::isfinite(beta0)) throw std::invalid_argument("solver.beta0: must be positive");
    if (!(mu > 0.0 && mu < nu && nu < 1.0)) throw std::invalid_argument("solver: need 0 < mu < nu < 1");
    if (!(rho > 0.0 && rho < 2.0)) throw std::invalid_argument("solver.rho: must lie in (0, 2)");
    if (!(tol > 0.0)) throw std::invalid_argument("solver.tol: must be positive");
    if (max_iter < 0) throw std::invalid_argument("solver.max_iter: must be nonnegative");
  }

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

enum class Termination {
  Converged,
  IterationLimit,
  DegenerateDirection,
  Stalled,
};

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::IterationLimit: return "iteration limit";
    case Termination::DegenerateDirection: return "degenerate correction direction";
    case Termination::Stalled: return "stalled";
  }
  return "unknown";
}

struct TraceRow {
  long iteration{0};
  double residual{0};
  double beta{0};
  double ratio{0};
};

template <typename Scalar>
struct BasicSolverReport {
  Vector<Scalar> solution;
  long iterations{0};
  Scalar final_residual{0};
  bool converged{false};
  Termination termination{Termination::IterationLimit};
  long beta_retries{0};  // predictions redone after shrinking the step
  std::vector<TraceRow> trace;
};

using SolverReport = BasicSolverReport<double>;

/// Raised when F produces NaN or Inf.
class NumericError : public std::runtime_error {
 public:
  NumericError(long iteration, const std::string& what)
      : std::runtime_error(what + " at iteration " + std::to_string(iteration)), iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

/// Raised by correct() when the favorable direction vanishes.
class DegenerateDirection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
struct Prediction {
  Vector<Scalar> point;     // P[x - beta F(x)]
  Vector<Scalar> operator_value;  // F at the predicted point
  Scalar ratio{0};          // beta ||F(x) - F(pred)|| / ||x - pred||
  bool at_solution{false};  // pred == x
};

/// Projected prediction step with a precomputed F(x).
template <BoxVariationalInequality P>
Prediction<typename P::Scalar> predict(const P& problem, const Vector<typename P::Scalar>& x,
                                       const Vector<typename P::Scalar>& fx, typename P::Scalar beta) {
  using Scalar = typename P::Scalar;
  Prediction<Scalar> out;
  out.point = project(problem, x - beta * fx);
  const Scalar move = (x - out.point).norm();
  if (move == Scalar(0)) {
    out.operator_value = fx;
    out.at_solution = true;
    return out;
  }
  out.operator_value = evaluate(problem, out.point);
  out.ratio = beta * (fx - out.operator_value).norm() / move;
  return out;
}

template <BoxVariationalInequality P>
Prediction<typename P::Scalar> predict(const P& problem, const Vector<typename P::Scalar>& x,
                                       typename P::Scalar beta) {
  return predict(problem, x, evaluate(problem, x), beta);
}

/// Relaxed correction along d = (x - pred) - beta (F(x) - F(pred)).
template <typename Scalar>
Vector<Scalar> correct(const Vector<Scalar>& x, const Vector<Scalar>& predicted, Scalar beta,
                       const Vector<Scalar>& fx, const Vector<Scalar>& f_predicted, Scalar relax) {
  const Vector<Scalar> gap = x - predicted;
  const Vector<Scalar> direction = gap - beta * (fx - f_predicted);
  const Scalar norm2 = direction.squaredNorm();
  if (norm2 == Scalar(0)) throw DegenerateDirection("correction direction vanished");
  const Scalar step = gap.dot(direction) / norm2;
  return x - relax * step * direction;
}

namespace detail {

template <typename Scalar>
void require_finite(const Vector<Scalar>& v, long iteration) {
  if (!v.allFinite()) throw NumericError(iteration, "operator returned a non-finite value");
}

}  // namespace detail

/// Self-adaptive projection-contraction method.
///
/// Each iteration predicts x~ = P[x - beta F(x)] and measures
/// r = beta ||F(x) - F(x~)|| / ||x - x~||. While r > nu the step shrinks to
/// (2/3) beta min(1, 1/r) and the prediction is redone against the same
/// F(x). Once accepted, x moves by the relaxed correction and is projected
/// back onto the box; beta grows by 1.5 when r <= mu. Stops when the natural
/// residual drops to tol or after max_iter corrections.
template <BoxVariationalInequality P>
BasicSolverReport<typename P::Scalar> solve(const P& problem, const SolverConfig& config,
                                            const Vector<typename P::Scalar>& start) {
  using Scalar = typename P::Scalar;
  config.validate();
  if (!is_feasible(problem, start)) throw std::invalid_argument("solve: starting point is outside the box");

  BasicSolverReport<Scalar> report;
  Vector<Scalar> x = start;
  Vector<Scalar> fx = evaluate(problem, x);
  detail::require_finite(fx, 0);
  Scalar residual = natural_residual(problem, x, fx);
  Scalar beta = static_cast<Scalar>(config.beta0);
  long k = 0;

  auto finish = [&](Termination why) {
    report.solution = std::move(x);
    report.iterations = k;
    report.final_residual = residual;
    report.termination = why;
    report.converged = why == Termination::Converged;
    return report;
  };

  while (true) {
    if (residual <= static_cast<Scalar>(config.tol)) return finish(Termination::Converged);
    if (k >= config.max_iter) return finish(Termination::IterationLimit);

    Prediction<Scalar> pred = predict(problem, x, fx, beta);
    detail::require_finite(pred.operator_value, k);
    while (!pred.at_solution && pred.ratio > static_cast<Scalar>(config.nu)) {
      beta = Scalar(2) / Scalar(3) * beta * std::min(Scalar(1), Scalar(1) / pred.ratio);
      ++report.beta_retries;
      pred = predict(problem, x, fx, beta);
      detail::require_finite(pred.operator_value, k);
    }
    if (pred.at_solution) {
      residual = Scalar(0);
      return finish(Termination::Converged);
    }

    Vector<Scalar> next;
    try {
      next = correct(x, pred.point, beta, fx, pred.operator_value, static_cast<Scalar>(config.rho));
    } catch (const DegenerateDirection&) {
      // The prediction itself may already be the answer.
      const Scalar pred_residual = natural_residual(problem, pred.point, pred.operator_value);
      if (pred_residual <= static_cast<Scalar>(config.tol)) {
        x = pred.point;
        residual = pred_residual;
        ++k;
        return finish(Termination::Converged);
      }
      return finish(Termination::DegenerateDirection);
    }
    const Scalar accepted_ratio = pred.ratio;
    const Scalar accepted_beta = beta;
    if (accepted_ratio <= static_cast<Scalar>(config.mu)) beta *= Scalar(1.5);

    x = project(problem, next);
    fx = evaluate(problem, x);
    ++k;
    detail::require_finite(fx, k);
    residual = natural_residual(problem, x, fx);
    if (config.record_trace)
      report.trace.push_back({k, static_cast<double>(residual), static_cast<double>(accepted_beta),
                              static_cast<double>(accepted_ratio)});
  }
}

}  // namespace secgame

#endif  // SECGAME_PC_SOLVER_HPP
