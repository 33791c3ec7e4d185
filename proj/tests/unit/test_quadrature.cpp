#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "ecfim/quadrature.hpp"

using namespace ecfim;

TEST(GaussLegendre, WeightsSumToTwoAndRuleIsExactForHighDegree) {
    const auto& rule = detail::gauss_legendre();
    double w = 0.0;
    for (double x : rule.weights) w += x;
    EXPECT_NEAR(w, 2.0, 1e-14);

    // A 20-point rule integrates x^38 exactly on [-1, 1].
    auto f = [](double x) { return std::pow(x, 38); };
    EXPECT_NEAR(detail::gauss_legendre_apply(f, -1.0, 1.0), 2.0 / 39.0, 1e-15);
}

TEST(Integrate, SmoothFiniteInterval) {
    const auto r = integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, QuadratureConfig{});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, 2.0, 1e-13);
}

TEST(Integrate, EndpointSingularityRefinesAdaptively) {
    const auto r = integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, QuadratureConfig{});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, 2.0, 1e-9);
    EXPECT_GT(r.intervals, 2);
}

TEST(Integrate, HalfLineExponentialAndPowerTails) {
    const QuadratureConfig cfg;
    const auto e = integrate_half_line([](double q) { return std::exp(-q); }, 1.0, cfg);
    EXPECT_TRUE(e.converged);
    EXPECT_NEAR(e.value, 1.0, 1e-12);

    // 1/(1+q)^2 has a polynomial tail.
    const auto p = integrate_half_line([](double q) { return 1.0 / ((1.0 + q) * (1.0 + q)); }, 1.0, cfg);
    EXPECT_TRUE(p.converged);
    EXPECT_NEAR(p.value, 1.0, 1e-10);

    // Peak far from the origin with a matching scale.
    const auto g = integrate_half_line([](double q) { return std::exp(31.0 * std::log(q) - q - std::lgamma(32.0)); },
                                       32.0, cfg);
    EXPECT_TRUE(g.converged);
    EXPECT_NEAR(g.value, 1.0, 1e-10);
}

TEST(Integrate, SubdivisionBudgetIsReportedAsNonConvergence) {
    QuadratureConfig cfg;
    cfg.max_subdivisions = 10;
    cfg.rel_tol = 1e-15;
    cfg.abs_tol = 1e-300;
    const auto r = integrate([](double x) { return std::sin(1.0 / (x + 1e-3)); }, 0.0, 1.0, cfg);
    EXPECT_FALSE(r.converged);
}

TEST(TailProbe, FlagsLogarithmicDivergence) {
    const QuadratureConfig cfg;
    EXPECT_TRUE(tail_decays([](double q) { return std::pow(1.0 + q, -1.5); }, 1.0, cfg));
    EXPECT_FALSE(tail_decays([](double q) { return 1.0 / (1.0 + q); }, 1.0, cfg));
}

TEST(QuadratureConfig, RejectsInvalidSettings) {
    QuadratureConfig cfg;
    cfg.rel_tol = 0.0;
    EXPECT_THROW(cfg.validate(), ContractError);
    cfg = {};
    cfg.max_subdivisions = 9;
    EXPECT_THROW(cfg.validate(), ContractError);
}
