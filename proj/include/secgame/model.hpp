#ifndef SECGAME_MODEL_HPP
#define SECGAME_MODEL_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace secgame {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Transaction quantities are stored retailer-major so that a row-major map
/// over the head of a flat decision vector is the m x n matrix Q.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Quadratic transaction cost c(q) = (quad * q^2 + lin * q) * scale.
template <typename Scalar>
struct TransactionCost {
  Scalar quad{0};
  Scalar lin{0};
  Scalar scale{1};

  Scalar value(Scalar q) const { return (quad * q * q + lin * q) * scale; }
  Scalar marginal(Scalar q) const { return (Scalar(2) * quad * q + lin) * scale; }

  friend bool operator==(const TransactionCost&, const TransactionCost&) = default;
};

template <typename Scalar>
struct Retailer {
  Scalar handling_cost{0};      // c_x, per unit
  Scalar budget{1};             // B_x
  Scalar base_loss{0};          // D_x
  Scalar market_share{0};       // t_x
  Scalar attack_multiplier{1};  // mu_x, scales the attack probability
  std::vector<TransactionCost<Scalar>> costs;  // one per market

  friend bool operator==(const Retailer&, const Retailer&) = default;
};

/// Affine inverse demand rho(d, u) = slope * d + security_sensitivity * mean(u) + intercept.
template <typename Scalar>
struct Market {
  Scalar slope{-1};
  Scalar security_sensitivity{0};
  Scalar intercept{1};

  friend bool operator==(const Market&, const Market&) = default;
};

/// Immutable game definition: m retailers selling into n markets.
///
/// Construction validates every invariant and throws std::invalid_argument
/// with a message naming the offending field.
template <typename Scalar>
class BasicModelSpec {
 public:
  using RetailerType = Retailer<Scalar>;
  using MarketType = Market<Scalar>;

  BasicModelSpec(std::vector<RetailerType> retailers, std::vector<MarketType> markets,
                 Scalar q_upper = Scalar(100), bool loss_gradient_includes_multiplier = true)
      : retailers_(std::move(retailers)),
        markets_(std::move(markets)),
        q_upper_(q_upper),
        loss_gradient_includes_multiplier_(loss_gradient_includes_multiplier) {
    validate();
  }

  Index retailer_count() const { return static_cast<Index>(retailers_.size()); }
  Index market_count() const { return static_cast<Index>(markets_.size()); }
  const std::vector<RetailerType>& retailers() const { return retailers_; }
  const std::vector<MarketType>& markets() const { return markets_; }
  const RetailerType& retailer(Index x) const { return retailers_.at(static_cast<std::size_t>(x)); }
  const MarketType& market(Index y) const { return markets_.at(static_cast<std::size_t>(y)); }
  Scalar q_upper() const { return q_upper_; }
  bool loss_gradient_includes_multiplier() const { return loss_gradient_includes_multiplier_; }

  /// Multiplier applied to the attack-loss term of the security gradient.
  Scalar loss_gradient_multiplier(Index x) const {
    return loss_gradient_includes_multiplier_ ? retailer(x).attack_multiplier : Scalar(1);
  }

  BasicModelSpec with_retailer(Index x, RetailerType r) const {
    auto copy = retailers_;
    copy.at(static_cast<std::size_t>(x)) = std::move(r);
    return BasicModelSpec(std::move(copy), markets_, q_upper_, loss_gradient_includes_multiplier_);
  }

  BasicModelSpec with_loss_gradient_multiplier(bool on) const {
    return BasicModelSpec(retailers_, markets_, q_upper_, on);
  }

  friend bool operator==(const BasicModelSpec&, const BasicModelSpec&) = default;

 private:
  void validate() const {
    if (retailers_.empty()) throw std::invalid_argument("model.retailers: need at least one retailer");
    if (markets_.empty()) throw std::invalid_argument("model.markets: need at least one market");
    if (!(q_upper_ > Scalar(0)) || !std::isfinite(q_upper_))
      throw std::invalid_argument("model.q_upper: must be positive and finite");
    for (std::size_t x = 0; x < retailers_.size(); ++x) {
      const auto& r = retailers_[x];
      const std::string where = "model.retailers[" + std::to_string(x) + "]";
      if (!(r.budget > Scalar(0))) throw std::invalid_argument(where + ".B: budget must be positive");
      if (!(r.base_loss >= Scalar(0))) throw std::invalid_argument(where + ".D: loss must be nonnegative");
      if (!(r.market_share >= Scalar(0) && r.market_share <= Scalar(1)))
        throw std::invalid_argument(where + ".t: market share must lie in [0, 1]");
      if (!(r.attack_multiplier >= Scalar(0)))
        throw std::invalid_argument(where + ".mu: attack multiplier must be nonnegative");
      if (!std::isfinite(r.handling_cost)) throw std::invalid_argument(where + ".c: must be finite");
      if (r.costs.size() != markets_.size())
        throw std::invalid_argument(where + ".costs: expected one entry per market");
      for (std::size_t y = 0; y < r.costs.size(); ++y) {
        const auto& c = r.costs[y];
        const std::string cw = where + ".costs[" + std::to_string(y) + "]";
        if (!(c.quad >= Scalar(0))) throw std::invalid_argument(cw + ".a: must be nonnegative");
        if (!(c.scale > Scalar(0))) throw std::invalid_argument(cw + ".s: must be positive");
        if (!std::isfinite(c.lin)) throw std::invalid_argument(cw + ".b: must be finite");
      }
    }
    for (std::size_t y = 0; y < markets_.size(); ++y) {
      const auto& mk = markets_[y];
      const std::string where = "model.markets[" + std::to_string(y) + "]";
      if (!(mk.slope < Scalar(0))) throw std::invalid_argument(where + ".alpha: demand slope must be negative");
      if (!(mk.intercept > Scalar(0))) throw std::invalid_argument(where + ".kappa: intercept must be positive");
      if (!std::isfinite(mk.security_sensitivity)) throw std::invalid_argument(where + ".gamma: must be finite");
    }
  }

  std::vector<RetailerType> retailers_;
  std::vector<MarketType> markets_;
  Scalar q_upper_;
  bool loss_gradient_includes_multiplier_;
};

using ModelSpec = BasicModelSpec<double>;

namespace detail {

inline void check_index(Index i, Index count, const char* what) {
  if (i < 0 || i >= count) throw std::out_of_range(std::string(what) + " index out of range");
}

template <typename Scalar>
void check_level(Scalar u) {
  if (!(u >= Scalar(0) && u < Scalar(1)))
    throw std::domain_error("security level must lie in [0, 1)");
}

template <typename Scalar, typename DerivedQ, typename DerivedU>
void check_shapes(const BasicModelSpec<Scalar>& model, const Eigen::MatrixBase<DerivedQ>& Q,
                  const Eigen::MatrixBase<DerivedU>& u) {
  if (Q.rows() != model.retailer_count() || Q.cols() != model.market_count())
    throw std::invalid_argument("quantity matrix must be m x n");
  if (u.size() != model.retailer_count()) throw std::invalid_argument("security vector must have length m");
}

}  // namespace detail

/// Total demand in market y: the column sum of Q.
template <typename Derived>
typename Derived::Scalar demand(const Eigen::MatrixBase<Derived>& Q, Index y) {
  detail::check_index(y, Q.cols(), "market");
  return Q.col(y).sum();
}

/// Investment needed to reach level u: -ln(1 - u).
template <typename Scalar>
Scalar security_cost(Scalar u) {
  detail::check_level(u);
  return -std::log1p(-u);
}

template <typename Scalar>
Scalar security_cost_deriv(Scalar u) {
  detail::check_level(u);
  return Scalar(1) / (Scalar(1) - u);
}

/// Budget constraint value; feasible iff <= 0.
template <typename Scalar>
Scalar budget_gap(Scalar u, Scalar budget) {
  return security_cost(u) - budget;
}

template <typename Derived>
typename Derived::Scalar mean_security(const Eigen::MatrixBase<Derived>& u) {
  if (u.size() == 0) throw std::invalid_argument("mean_security: empty level vector");
  return u.mean();
}

/// Probability-like attack exposure (1 - u_x)(1 - u_bar) * multiplier.
/// Levels may sit at the closed limit 1, where the exposure vanishes.
template <typename Scalar>
Scalar attack_probability(Scalar u_x, Scalar u_bar, Scalar multiplier) {
  if (!(u_x >= Scalar(0) && u_x <= Scalar(1)) || !(u_bar >= Scalar(0) && u_bar <= Scalar(1)))
    throw std::domain_error("attack_probability: levels must lie in [0, 1]");
  if (!(multiplier >= Scalar(0))) throw std::domain_error("attack_probability: negative multiplier");
  return (Scalar(1) - u_x) * (Scalar(1) - u_bar) * multiplier;
}

template <typename Scalar, typename DerivedQ, typename DerivedU>
Scalar price(const BasicModelSpec<Scalar>& model, Index y, const Eigen::MatrixBase<DerivedQ>& Q,
             const Eigen::MatrixBase<DerivedU>& u) {
  detail::check_index(y, model.market_count(), "market");
  detail::check_shapes(model, Q, u);
  const auto& mk = model.market(y);
  return mk.slope * demand(Q, y) + mk.security_sensitivity * mean_security(u) + mk.intercept;
}

/// Revenue minus handling and transaction costs for retailer x.
template <typename Scalar, typename DerivedQ, typename DerivedU>
Scalar profit(const BasicModelSpec<Scalar>& model, Index x, const Eigen::MatrixBase<DerivedQ>& Q,
              const Eigen::MatrixBase<DerivedU>& u) {
  detail::check_index(x, model.retailer_count(), "retailer");
  detail::check_shapes(model, Q, u);
  const auto& r = model.retailer(x);
  Scalar total(0);
  for (Index y = 0; y < model.market_count(); ++y) {
    const Scalar q = Q(x, y);
    total += price(model, y, Q, u) * q - r.handling_cost * q - r.costs[static_cast<std::size_t>(y)].value(q);
  }
  return total;
}

/// Profit less expected attack loss less security investment.
template <typename Scalar, typename DerivedQ, typename DerivedU>
Scalar expected_utility(const BasicModelSpec<Scalar>& model, Index x, const Eigen::MatrixBase<DerivedQ>& Q,
                        const Eigen::MatrixBase<DerivedU>& u) {
  detail::check_index(x, model.retailer_count(), "retailer");
  const auto& r = model.retailer(x);
  const Scalar ux = u(x);
  const Scalar loss = r.base_loss * attack_probability(ux, mean_security(u), r.attack_multiplier);
  return profit(model, x, Q, u) - loss - security_cost(ux);
}

/// d rho_y / d Q_xy; independent of x and of the point.
template <typename Scalar>
Scalar price_quantity_slope(const BasicModelSpec<Scalar>& model, Index y) {
  return model.market(y).slope;
}

/// d rho_y / d u_x = gamma_y / m.
template <typename Scalar>
Scalar price_security_slope(const BasicModelSpec<Scalar>& model, Index y) {
  return model.market(y).security_sensitivity / static_cast<Scalar>(model.retailer_count());
}

}  // namespace secgame

#endif  // SECGAME_MODEL_HPP
