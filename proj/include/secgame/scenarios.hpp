#ifndef SECGAME_SCENARIOS_HPP
#define SECGAME_SCENARIOS_HPP

#include "secgame/equilibrium.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace secgame {

struct Scenario {
  std::string name;
  ModelSpec model;
  Vector<double> initial;  // flat (Q, u, lambda)
  SolverConfig solver;
};

/// Two retailers with shares (0.76, 0.24) selling into two markets. Every
/// retailer-specific coefficient carries a (1 + t_x) factor.
Scenario experiment1();

/// Experiment 1 with a third entrant; shares (0.71, 0.20, 0.09).
Scenario experiment5();

/// Retailers built the way both experiments build them, from their shares.
ModelSpec share_scaled_model(std::span<const double> shares, bool loss_gradient_includes_multiplier = true);

/// Looks up a builtin scenario ("exp1", "exp5").
std::optional<Scenario> builtin_scenario(std::string_view name);

/// How the other shares react when a market share is swept.
enum class ShareCoupling {
  None,        // only the swept retailer changes
  Complement,  // two retailers: the other share is 1 - t
};

struct SweepSpec {
  Scenario base;
  std::string parameter;  // e.g. "B1", "D1", "t1", "c2", "mu1"
  double from{0};
  double to{1};
  long steps{2};
  ShareCoupling coupling{ShareCoupling::None};
  bool warm_start{true};

  void validate() const;
  double value_at(long i) const;
};

/// Experiment 2: B_1 from 2.0 to 3.5 over 31 points.
SweepSpec experiment2_sweep();
/// Experiment 3: D_1 from 120 to 200 over 81 points.
SweepSpec experiment3_sweep();
/// Experiment 4: t_1 from 0.55 to 0.89 over 18 points, t_2 = 1 - t_1.
SweepSpec experiment4_sweep();

std::optional<SweepSpec> builtin_sweep(std::string_view name);

/// Rewrites one retailer parameter. Paths are a field name followed by a
/// 1-based retailer index: c, B, D, t, mu. Setting a share rescales every
/// (1 + t)-scaled coefficient of that retailer (c, B, D, mu and the
/// transaction-cost scales) by (1 + t_new) / (1 + t_old).
ModelSpec apply_parameter(const ModelSpec& model, std::string_view path, double value,
                          ShareCoupling coupling = ShareCoupling::None);

struct SweepRow {
  double value{0};
  Vector<double> security;
  Matrix<double> quantities;
  Vector<double> multipliers;
  Vector<double> utilities;
  double residual{0};
  long iterations{0};
  bool converged{false};
};

struct SweepResult {
  std::string parameter;
  Index retailers{0};
  Index markets{0};
  std::vector<SweepRow> rows;  // ordered by parameter value

  std::vector<double> values() const;
  std::vector<double> security_series(Index retailer) const;
};

/// Solves the base scenario at every grid value. With warm starts the rows
/// are solved in order, each from the previous solution; otherwise rows are
/// independent and spread over up to `threads` workers.
SweepResult run_sweep(const SweepSpec& spec, unsigned threads = 1);

/// Parameter value where series_a - series_b changes sign between adjacent
/// converged rows, linearly interpolated. Returns the first such crossing.
std::optional<double> find_crossing(const SweepResult& result, std::span<const double> series_a,
                                    std::span<const double> series_b);

/// Per-retailer expected utility at a flat decision vector.
Vector<double> utilities(const ModelSpec& model, const Vector<double>& point);

/// Published reference values, kept for comparison output.
struct ReferenceValues {
  std::vector<double> quantities;  // row-major, empty when not published
  std::vector<double> security;
  std::optional<double> mean_security;
};

std::optional<ReferenceValues> published_reference(std::string_view scenario_name);

/// Side-by-side listing of published and computed values with the
/// per-component KKT residuals at both points.
std::string reconciliation_report(const Scenario& scenario, const SolverReport& report);

}  // namespace secgame

#endif  // SECGAME_SCENARIOS_HPP
