#include "oracles.hpp"
#include "secgame/pc_solver.hpp"

#include <doctest.h>

#include <limits>

using namespace secgame;

namespace {

AffineVi<double> shifted_identity() {
  Eigen::MatrixXd a(1, 1);
  a << 1.0;
  Vector<double> b(1), lo(1), hi(1);
  b << -3.0;
  lo << 0.0;
  hi << 10.0;
  return AffineVi<double>(a, b, lo, hi);
}

Vector<double> scalar(double v) {
  Vector<double> out(1);
  out << v;
  return out;
}

}  // namespace

TEST_SUITE("pc_solver") {
  TEST_CASE("config validation") {
    SolverConfig c;
    CHECK_NOTHROW(c.validate());
    c.mu = 0.95;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = SolverConfig{};
    c.rho = 2.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = SolverConfig{};
    c.tol = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = SolverConfig{};
    c.beta0 = -1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  }

  TEST_CASE("prediction at the solution is stationary") {
    const auto p = shifted_identity();
    const auto pred = predict(p, scalar(3.0), 1.0);
    CHECK(pred.at_solution);
    CHECK(pred.point(0) == 3.0);
    CHECK(pred.ratio == 0.0);
  }

  TEST_CASE("prediction from the lower bound") {
    const auto p = shifted_identity();
    const auto pred = predict(p, scalar(0.0), 1.0);
    CHECK(pred.point(0) == 3.0);
    CHECK(pred.ratio == doctest::Approx(1.0));
    CHECK_FALSE(pred.at_solution);
  }

  TEST_CASE("ratio is bounded by beta times the operator norm") {
    const auto planted = make_planted_affine_vi<double>(10);
    const double lipschitz = planted.problem.matrix().operatorNorm();
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> d(0, 10), bd(0.01, 2);
    for (int k = 0; k < 200; ++k) {
      Vector<double> x(10);
      for (Index i = 0; i < 10; ++i) x(i) = d(rng);
      const double beta = bd(rng);
      const auto pred = predict(planted.problem, x, beta);
      if (!pred.at_solution) CHECK(pred.ratio <= beta * lipschitz * (1 + 1e-12));
    }
  }

  TEST_CASE("correction with a constant operator") {
    const Vector<double> x = scalar(4.0), pred = scalar(1.0), f = scalar(2.0);
    const Vector<double> next = correct(x, pred, 0.7, f, f, 1.9);
    // d = x - pred, delta = 1.
    CHECK(next(0) == doctest::Approx(4.0 - 1.9 * 3.0));
  }

  TEST_CASE("correction with a vanishing direction") {
    // beta = 1 on F(x) = x - 3 from x = 0: d = -3 - (-3 - 0) = 0.
    CHECK_THROWS_AS(correct(scalar(0.0), scalar(3.0), 1.0, scalar(-3.0), scalar(0.0), 1.9), DegenerateDirection);
  }

  TEST_CASE("correction by hand with beta = 0.5") {
    const auto p = shifted_identity();
    const auto pred = predict(p, scalar(0.0), 0.5);
    CHECK(pred.point(0) == doctest::Approx(1.5));
    const Vector<double> next = correct(scalar(0.0), pred.point, 0.5, scalar(-3.0), pred.operator_value, 1.9);
    CHECK(next(0) == doctest::Approx(2.85).epsilon(1e-14));
  }

  TEST_CASE("one-dimensional problem converges") {
    const auto p = shifted_identity();
    const auto r = solve(p, SolverConfig{}, scalar(0.0));
    CHECK(r.converged);
    CHECK(r.solution(0) == doctest::Approx(3.0).epsilon(1e-7));
  }

  TEST_CASE("infinite tolerance returns the start untouched") {
    const auto planted = make_planted_affine_vi<double>(10);
    SolverConfig c;
    c.tol = std::numeric_limits<double>::infinity();
    const Vector<double> start = Vector<double>::Constant(10, 5.0);
    const auto r = solve(planted.problem, c, start);
    CHECK(r.converged);
    CHECK(r.iterations == 0);
    CHECK(r.solution == start);
  }

  TEST_CASE("infeasible start is rejected") {
    const auto planted = make_planted_affine_vi<double>(10);
    CHECK_THROWS_AS(solve(planted.problem, SolverConfig{}, Vector<double>::Constant(10, 11.0)),
                    std::invalid_argument);
  }

  TEST_CASE("planted affine VI: accuracy, speed and Fejer monotonicity") {
    const auto planted = make_planted_affine_vi<double>(10);
    const auto& p = planted.problem;
    const auto& star = planted.solution;

    // Replays the loop step by step to observe the distance to the solution.
    SolverConfig c;
    c.record_trace = true;
    const auto r = solve(p, c, Vector<double>::Zero(10));
    CHECK(r.converged);
    CHECK(r.iterations < 5000);
    CHECK((r.solution - star).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(r.final_residual <= c.tol);

    double previous = std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (long k = 0; k <= r.iterations; ++k) {
      SolverConfig limited = c;
      limited.max_iter = k;
      limited.record_trace = false;
      const auto partial = solve(p, limited, Vector<double>::Zero(10));
      const double dist = (partial.solution - star).norm();
      if (dist > previous + 1e-10) monotone = false;
      previous = dist;
    }
    CHECK(monotone);
  }

  TEST_CASE("trace invariants") {
    const auto planted = make_planted_affine_vi<double>(10);
    SolverConfig c;
    c.record_trace = true;
    const auto r = solve(planted.problem, c, Vector<double>::Zero(10));
    REQUIRE(static_cast<long>(r.trace.size()) == r.iterations);
    for (std::size_t k = 0; k < r.trace.size(); ++k) {
      CHECK(r.trace[k].beta > 0);
      CHECK(r.trace[k].beta <= std::pow(1.5, static_cast<double>(k)) * c.beta0 * (1 + 1e-12));
      CHECK(r.trace[k].ratio <= c.nu);
    }
  }

  TEST_CASE("identical inputs give identical traces") {
    const auto planted = make_planted_affine_vi<double>(10);
    SolverConfig c;
    c.record_trace = true;
    const auto a = solve(planted.problem, c, Vector<double>::Zero(10));
    const auto b = solve(planted.problem, c, Vector<double>::Zero(10));
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t k = 0; k < a.trace.size(); ++k) {
      CHECK(a.trace[k].residual == b.trace[k].residual);
      CHECK(a.trace[k].beta == b.trace[k].beta);
      CHECK(a.trace[k].ratio == b.trace[k].ratio);
    }
    CHECK(a.solution == b.solution);
  }

  TEST_CASE("iteration limit reports non-convergence") {
    const auto planted = make_planted_affine_vi<double>(10);
    SolverConfig c;
    c.max_iter = 3;
    const auto r = solve(planted.problem, c, Vector<double>::Zero(10));
    CHECK_FALSE(r.converged);
    CHECK(r.termination == Termination::IterationLimit);
    CHECK(r.iterations == 3);
  }

  TEST_CASE("non-finite operator values raise with the iteration") {
    Eigen::MatrixXd a(1, 1);
    a << std::numeric_limits<double>::quiet_NaN();
    const AffineVi<double> p(a, scalar(1.0), scalar(0.0), scalar(1.0));
    CHECK_THROWS_AS(solve(p, SolverConfig{}, scalar(0.5)), NumericError);
  }
}
