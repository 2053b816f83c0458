#ifndef SECGAME_VI_HPP
#define SECGAME_VI_HPP

#include "secgame/model.hpp"

#include <algorithm>
#include <concepts>
#include <limits>
#include <random>
#include <string>

namespace secgame {

/// Largest admissible security level. Keeps -ln(1 - u) finite; the budget
/// itself is enforced through the multipliers.
inline constexpr double kSecurityCap = 0.999999;

/// Offsets into the flat decision vector (Q row-major, then u, then lambda).
struct DecisionLayout {
  Index retailers{0};
  Index markets{0};

  Index size() const { return retailers * markets + 2 * retailers; }
  Index quantity(Index x, Index y) const { return x * markets + y; }
  Index security(Index x) const { return retailers * markets + x; }
  Index multiplier(Index x) const { return retailers * markets + retailers + x; }
};

/// Stacked (Q, u, lambda) over a flat vector.
template <typename Scalar>
class BasicDecisionVector {
 public:
  using QuantityMap = Eigen::Map<const Matrix<Scalar>>;

  BasicDecisionVector(DecisionLayout layout, Vector<Scalar> data) : layout_(layout), data_(std::move(data)) {
    if (data_.size() != layout_.size()) throw std::invalid_argument("decision vector has wrong dimension");
  }

  template <typename DQ, typename DU, typename DL>
  static BasicDecisionVector stack(const Eigen::MatrixBase<DQ>& Q, const Eigen::MatrixBase<DU>& u,
                                   const Eigen::MatrixBase<DL>& lambda) {
    const DecisionLayout layout{Q.rows(), Q.cols()};
    if (u.size() != layout.retailers || lambda.size() != layout.retailers)
      throw std::invalid_argument("stack: u and lambda must have one entry per retailer");
    Vector<Scalar> data(layout.size());
    for (Index x = 0; x < layout.retailers; ++x) {
      for (Index y = 0; y < layout.markets; ++y) data(layout.quantity(x, y)) = Q(x, y);
      data(layout.security(x)) = u(x);
      data(layout.multiplier(x)) = lambda(x);
    }
    return BasicDecisionVector(layout, std::move(data));
  }

  const DecisionLayout& layout() const { return layout_; }
  const Vector<Scalar>& flat() const { return data_; }

  QuantityMap quantities() const { return QuantityMap(data_.data(), layout_.retailers, layout_.markets); }
  auto security() const { return data_.segment(layout_.security(0), layout_.retailers); }
  auto multipliers() const { return data_.segment(layout_.multiplier(0), layout_.retailers); }

 private:
  DecisionLayout layout_;
  Vector<Scalar> data_;
};

using DecisionVector = BasicDecisionVector<double>;

/// A variational inequality over a box: find x in [lower, upper] with
/// F(x)^T (y - x) >= 0 for every y in the box.
template <typename P>
concept BoxVariationalInequality = requires(const P& p, const Vector<typename P::Scalar>& x,
                                            Vector<typename P::Scalar>& out) {
  typename P::Scalar;
  { p.dimension() } -> std::convertible_to<Index>;
  { p.lower() } -> std::convertible_to<const Vector<typename P::Scalar>&>;
  { p.upper() } -> std::convertible_to<const Vector<typename P::Scalar>&>;
  p.evaluate(x, out);
};

template <BoxVariationalInequality P, typename Derived>
Vector<typename P::Scalar> project(const P& problem, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != problem.dimension()) throw std::invalid_argument("project: dimension mismatch");
  return x.cwiseMax(problem.lower()).cwiseMin(problem.upper());
}

template <BoxVariationalInequality P>
Vector<typename P::Scalar> evaluate(const P& problem, const Vector<typename P::Scalar>& x) {
  Vector<typename P::Scalar> out(problem.dimension());
  problem.evaluate(x, out);
  return out;
}

/// || x - P(x - F(x)) ||_inf given a precomputed F(x).
template <BoxVariationalInequality P>
typename P::Scalar natural_residual(const P& problem, const Vector<typename P::Scalar>& x,
                                    const Vector<typename P::Scalar>& fx) {
  if (problem.dimension() == 0) return typename P::Scalar(0);
  return (x - project(problem, x - fx)).cwiseAbs().maxCoeff();
}

template <BoxVariationalInequality P>
typename P::Scalar natural_residual(const P& problem, const Vector<typename P::Scalar>& x) {
  return natural_residual(problem, x, evaluate(problem, x));
}

template <BoxVariationalInequality P>
bool is_feasible(const P& problem, const Vector<typename P::Scalar>& x) {
  return x.size() == problem.dimension() && (x.array() >= problem.lower().array()).all() &&
         (x.array() <= problem.upper().array()).all();
}

/// F(x) = A x + b over a box. Used as a verifiable test instance.
template <typename ScalarT>
class AffineVi {
 public:
  using Scalar = ScalarT;

  AffineVi(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a, Vector<Scalar> b, Vector<Scalar> lower,
           Vector<Scalar> upper)
      : a_(std::move(a)), b_(std::move(b)), lower_(std::move(lower)), upper_(std::move(upper)) {
    if (a_.rows() != a_.cols() || a_.rows() != b_.size() || lower_.size() != b_.size() ||
        upper_.size() != b_.size())
      throw std::invalid_argument("AffineVi: inconsistent dimensions");
    if ((lower_.array() > upper_.array()).any()) throw std::invalid_argument("AffineVi: lower > upper");
  }

  Index dimension() const { return b_.size(); }
  const Vector<Scalar>& lower() const { return lower_; }
  const Vector<Scalar>& upper() const { return upper_; }
  const auto& matrix() const { return a_; }
  const Vector<Scalar>& offset() const { return b_; }

  void evaluate(const Vector<Scalar>& x, Vector<Scalar>& out) const { out.noalias() = a_ * x + b_; }

 private:
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a_;
  Vector<Scalar> b_;
  Vector<Scalar> lower_;
  Vector<Scalar> upper_;
};

/// Affine VI with a planted solution.
template <typename Scalar>
struct PlantedAffineVi {
  AffineVi<Scalar> problem;
  Vector<Scalar> solution;
};

/// Builds a `dim`-dimensional monotone affine VI on [0, 10]^dim whose
/// solution is known in closed form: a symmetric positive definite matrix
/// and an offset chosen so the KKT conditions hold at a planted point with
/// some components at each bound and the rest interior.
template <typename Scalar = double>
PlantedAffineVi<Scalar> make_planted_affine_vi(Index dim = 10, std::uint64_t seed = 20240611) {
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<Scalar> unit(Scalar(-1), Scalar(1));
  Dense g(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < dim; ++j) g(i, j) = unit(gen);
  Dense a = g.transpose() * g / static_cast<Scalar>(dim) + Dense::Identity(dim, dim);

  const Scalar hi(10);
  Vector<Scalar> solution(dim);
  Vector<Scalar> slack = Vector<Scalar>::Zero(dim);
  std::uniform_real_distribution<Scalar> interior(Scalar(1), Scalar(9));
  std::uniform_real_distribution<Scalar> margin(Scalar(0.5), Scalar(2));
  for (Index i = 0; i < dim; ++i) {
    switch (i % 3) {
      case 0:
        solution(i) = Scalar(0);
        slack(i) = margin(gen);
        break;
      case 1:
        solution(i) = interior(gen);
        break;
      default:
        solution(i) = hi;
        slack(i) = -margin(gen);
        break;
    }
  }
  Vector<Scalar> b = slack - a * solution;
  return {AffineVi<Scalar>(std::move(a), std::move(b), Vector<Scalar>::Zero(dim), Vector<Scalar>::Constant(dim, hi)),
          std::move(solution)};
}

/// The equilibrium problem of the retailer game: operator F(Q, u, lambda)
/// over the box Q in [0, q_upper], u in [0, cap], lambda in [0, inf).
///
/// Per retailer x and market y:
///   F_Q(x,y)  = c_x + c'_xy(Q_xy) - rho_y - alpha_y Q_xy
///   F_u(x)    = 1/(1-u_x) - D_x M_x [(1 - u_bar) + (1 - u_x)/m]
///               - sum_k (gamma_k/m) Q_xk + lambda_x/(1-u_x)
///   F_lam(x)  = B_x + ln(1 - u_x)
/// with M_x = mu_x when the model's loss gradient includes the multiplier,
/// else 1. F_lam is the negated budget gap so multipliers grow while the
/// budget is violated.
template <typename ScalarT>
class BasicViProblem {
 public:
  using Scalar = ScalarT;
  using Model = BasicModelSpec<Scalar>;

  explicit BasicViProblem(Model model)
      : model_(std::move(model)), layout_{model_.retailer_count(), model_.market_count()} {
    lower_ = Vector<Scalar>::Zero(layout_.size());
    upper_.resize(layout_.size());
    for (Index x = 0; x < layout_.retailers; ++x) {
      for (Index y = 0; y < layout_.markets; ++y) upper_(layout_.quantity(x, y)) = model_.q_upper();
      upper_(layout_.security(x)) = Scalar(kSecurityCap);
      upper_(layout_.multiplier(x)) = std::numeric_limits<Scalar>::infinity();
    }
  }

  const Model& model() const { return model_; }
  const DecisionLayout& layout() const { return layout_; }
  Index dimension() const { return layout_.size(); }
  const Vector<Scalar>& lower() const { return lower_; }
  const Vector<Scalar>& upper() const { return upper_; }

  /// Starting point used by the experiments: every Q = 1, u = 0, lambda = 0.
  Vector<Scalar> default_start() const {
    Vector<Scalar> x = Vector<Scalar>::Zero(layout_.size());
    x.head(layout_.retailers * layout_.markets).setConstant(std::min(Scalar(1), model_.q_upper()));
    return x;
  }

  void evaluate(const Vector<Scalar>& x, Vector<Scalar>& out) const {
    if (x.size() != dimension()) throw std::invalid_argument("evaluate: dimension mismatch");
    out.resize(dimension());
    const Index m = layout_.retailers;
    const Index n = layout_.markets;
    const Eigen::Map<const Matrix<Scalar>> q(x.data(), m, n);
    const auto u = x.segment(layout_.security(0), m);
    for (Index x_i = 0; x_i < m; ++x_i)
      if (!(u(x_i) < Scalar(1))) throw std::domain_error("evaluate: security level reached 1");

    const Scalar m_s = static_cast<Scalar>(m);
    const Scalar u_bar = u.mean();
    Vector<Scalar> prices(n);
    for (Index y = 0; y < n; ++y) {
      const auto& mk = model_.market(y);
      prices(y) = mk.slope * q.col(y).sum() + mk.security_sensitivity * u_bar + mk.intercept;
    }

    for (Index r = 0; r < m; ++r) {
      const auto& ret = model_.retailer(r);
      Scalar spillover(0);
      for (Index y = 0; y < n; ++y) {
        const Scalar qxy = q(r, y);
        out(layout_.quantity(r, y)) = ret.handling_cost + ret.costs[static_cast<std::size_t>(y)].marginal(qxy) -
                                      prices(y) - model_.market(y).slope * qxy;
        spillover += model_.market(y).security_sensitivity / m_s * qxy;
      }
      const Scalar ur = u(r);
      const Scalar slack = Scalar(1) - ur;
      const Scalar lam = x(layout_.multiplier(r));
      out(layout_.security(r)) = Scalar(1) / slack -
                                 ret.base_loss * model_.loss_gradient_multiplier(r) *
                                     ((Scalar(1) - u_bar) + slack / m_s) -
                                 spillover + lam / slack;
      out(layout_.multiplier(r)) = ret.budget + std::log1p(-ur);
    }
  }

 private:
  Model model_;
  DecisionLayout layout_;
  Vector<Scalar> lower_;
  Vector<Scalar> upper_;
};

using ViProblem = BasicViProblem<double>;

/// Negated expected utility plus the budget penalty lambda_x * G_x: the
/// function whose gradient in retailer x's own (Q, u) block is F.
template <typename Scalar>
Scalar retailer_lagrangian(const BasicViProblem<Scalar>& problem, Index x, const Vector<Scalar>& point) {
  const auto& layout = problem.layout();
  const Eigen::Map<const Matrix<Scalar>> q(point.data(), layout.retailers, layout.markets);
  const auto u = point.segment(layout.security(0), layout.retailers);
  const auto& r = problem.model().retailer(x);
  return -expected_utility(problem.model(), x, q, u) + point(layout.multiplier(x)) * budget_gap(u(x), r.budget);
}

/// Outcome of comparing F against central differences.
struct GradientCheck {
  double max_relative_error{0};
  Index worst_component{-1};
  std::string worst_label;
  Vector<double> relative_errors;  // one per Q and u component; lambda rows are zero
};

inline std::string component_label(const DecisionLayout& layout, Index i) {
  if (i < layout.retailers * layout.markets)
    return "Q_" + std::to_string(i / layout.markets + 1) + "_" + std::to_string(i % layout.markets + 1);
  if (i < layout.multiplier(0)) return "u_" + std::to_string(i - layout.security(0) + 1);
  return "lambda_" + std::to_string(i - layout.multiplier(0) + 1);
}

/// Compares the Q and u components of F with central differences of each
/// retailer's Lagrangian in its own block, rivals frozen. The relative error
/// of a component is |F - fd| / max(1, |fd|).
template <typename Scalar>
GradientCheck fd_check(const BasicViProblem<Scalar>& problem, const Vector<Scalar>& point, Scalar step) {
  if (!(step >= Scalar(1e-7) && step <= Scalar(1e-4)))
    throw std::invalid_argument("fd_check: step must lie in [1e-7, 1e-4]");
  if (point.size() != problem.dimension()) throw std::invalid_argument("fd_check: dimension mismatch");
  const auto& layout = problem.layout();
  const Index primal = layout.multiplier(0);
  for (Index i = 0; i < primal; ++i) {
    if (point(i) - problem.lower()(i) < Scalar(2) * step || problem.upper()(i) - point(i) < Scalar(2) * step)
      throw std::invalid_argument("fd_check: point too close to the boundary at " + component_label(layout, i));
  }

  const Vector<Scalar> f = evaluate(problem, point);
  GradientCheck check;
  check.relative_errors = Vector<double>::Zero(problem.dimension());
  Vector<Scalar> probe = point;
  for (Index i = 0; i < primal; ++i) {
    const Index owner = i < layout.retailers * layout.markets ? i / layout.markets : i - layout.security(0);
    const Scalar base = point(i);
    probe(i) = base + step;
    const Scalar up = retailer_lagrangian(problem, owner, probe);
    probe(i) = base - step;
    const Scalar down = retailer_lagrangian(problem, owner, probe);
    probe(i) = base;
    const Scalar fd = (up - down) / (Scalar(2) * step);
    const double err = static_cast<double>(std::abs(f(i) - fd) / std::max(Scalar(1), std::abs(fd)));
    check.relative_errors(i) = err;
    if (err > check.max_relative_error || check.worst_component < 0) {
      check.max_relative_error = err;
      check.worst_component = i;
    }
  }
  check.worst_label = component_label(layout, check.worst_component);
  return check;
}

/// Uniform random point with every Q and u component at least `margin`
/// from its bounds; u is drawn from [margin, u_max].
template <typename Scalar, typename Rng>
Vector<Scalar> random_interior_point(const BasicViProblem<Scalar>& problem, Rng& rng, Scalar margin,
                                     Scalar u_max = Scalar(0.95), Scalar lambda_max = Scalar(10)) {
  const auto& layout = problem.layout();
  Vector<Scalar> x(problem.dimension());
  std::uniform_real_distribution<Scalar> quantity(margin, problem.model().q_upper() - margin);
  std::uniform_real_distribution<Scalar> level(margin, u_max);
  std::uniform_real_distribution<Scalar> mult(Scalar(0), lambda_max);
  for (Index i = 0; i < layout.retailers * layout.markets; ++i) x(i) = quantity(rng);
  for (Index r = 0; r < layout.retailers; ++r) x(layout.security(r)) = level(rng);
  for (Index r = 0; r < layout.retailers; ++r) x(layout.multiplier(r)) = mult(rng);
  return x;
}

/// Smallest (F(a) - F(b))^T (a - b) over `pairs` random feasible pairs with
/// u <= u_max. A negative value means the operator is not monotone there.
template <typename Scalar>
Scalar monotonicity_probe(const BasicViProblem<Scalar>& problem, Index pairs, std::uint64_t seed,
                          Scalar u_max = Scalar(0.99)) {
  std::mt19937_64 rng(seed);
  Scalar worst = std::numeric_limits<Scalar>::infinity();
  for (Index k = 0; k < pairs; ++k) {
    const Vector<Scalar> a = random_interior_point(problem, rng, Scalar(0), u_max);
    const Vector<Scalar> b = random_interior_point(problem, rng, Scalar(0), u_max);
    worst = std::min(worst, (evaluate(problem, a) - evaluate(problem, b)).dot(a - b));
  }
  return worst;
}

}  // namespace secgame

#endif  // SECGAME_VI_HPP
