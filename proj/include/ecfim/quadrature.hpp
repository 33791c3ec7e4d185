#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <queue>
#include <span>
#include <tuple>
#include <vector>

#include "ecfim/errors.hpp"

namespace ecfim {

struct QuadratureConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    int max_subdivisions = 200;
    /// Mass or boundary term that may be discarded past the end of a truncated domain.
    double tail_cutoff_mass = 1e-14;

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !(tail_cutoff_mass > 0.0))
            throw ContractError("QuadratureConfig: tolerances must be positive");
        if (max_subdivisions < 10)
            throw ContractError("QuadratureConfig: max_subdivisions must be at least 10");
    }
};

struct QuadratureResult {
    double value = 0.0;
    double abs_error = 0.0;
    int intervals = 0;
    bool converged = false;
};

namespace detail {

inline constexpr int kGaussOrder = 20;

struct GaussLegendreRule {
    std::array<double, kGaussOrder> nodes{};
    std::array<double, kGaussOrder> weights{};
};

// Nodes and weights on [-1, 1] by Newton iteration on P_n.
inline GaussLegendreRule make_gauss_legendre() {
    GaussLegendreRule rule;
    constexpr int n = kGaussOrder;
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

inline const GaussLegendreRule& gauss_legendre() {
    static const GaussLegendreRule rule = make_gauss_legendre();
    return rule;
}

template <class F>
double gauss_legendre_apply(F& f, double a, double b) {
    const auto& rule = gauss_legendre();
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (int i = 0; i < kGaussOrder; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return sum * half;
}

struct Panel {
    double a, b;
    double left, right;  // rule applied to the two halves
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
    double value() const { return left + right; }
};

template <class F>
Panel make_panel(F& f, double a, double b, double whole) {
    const double m = 0.5 * (a + b);
    Panel p{a, b, gauss_legendre_apply(f, a, m), gauss_legendre_apply(f, m, b), 0.0};
    p.error = std::abs(whole - p.value());
    return p;
}

}  // namespace detail

/// Adaptive Gauss-Legendre quadrature over the partition given by `breakpoints`.
///
/// Each panel is estimated by the 20-point rule on its two halves; the panel error is the
/// difference from the rule on the whole panel. The worst panel is bisected until the summed
/// error meets max(abs_tol, rel_tol * |I|) or `max_subdivisions` bisections have been spent.
template <class F>
QuadratureResult integrate(F&& f, std::span<const double> breakpoints, const QuadratureConfig& cfg) {
    cfg.validate();
    if (breakpoints.size() < 2) throw ContractError("integrate: need at least two breakpoints");

    std::priority_queue<detail::Panel> queue;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        const double a = breakpoints[i], b = breakpoints[i + 1];
        if (!(b > a)) throw ContractError("integrate: breakpoints must be strictly increasing");
        queue.push(detail::make_panel(f, a, b, detail::gauss_legendre_apply(f, a, b)));
    }

    auto totals = [&queue] {
        auto copy = queue;
        double value = 0.0, error = 0.0;
        while (!copy.empty()) {
            value += copy.top().value();
            error += copy.top().error;
            copy.pop();
        }
        return std::pair{value, error};
    };

    auto [value, error] = totals();
    int splits = 0;
    std::vector<detail::Panel> frozen;  // panels too narrow to bisect further
    while (error > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(value)) && splits < cfg.max_subdivisions &&
           !queue.empty()) {
        const detail::Panel worst = queue.top();
        queue.pop();
        const double m = 0.5 * (worst.a + worst.b);
        if (!(m > worst.a && m < worst.b) || (worst.b - worst.a) <= 1e-15 * std::abs(m)) {
            frozen.push_back(worst);
            continue;
        }
        auto lo = detail::make_panel(f, worst.a, m, worst.left);
        auto hi = detail::make_panel(f, m, worst.b, worst.right);
        value += lo.value() + hi.value() - worst.value();
        error += lo.error + hi.error - worst.error;
        queue.push(lo);
        queue.push(hi);
        ++splits;
    }
    for (const auto& p : frozen) queue.push(p);
    std::tie(value, error) = totals();

    QuadratureResult result;
    result.value = value;
    result.abs_error = error;
    result.intervals = static_cast<int>(queue.size());
    result.converged = std::isfinite(value) && std::isfinite(error) &&
                       error <= std::max(cfg.abs_tol, cfg.rel_tol * std::abs(value));
    return result;
}

template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureConfig& cfg) {
    const std::array<double, 2> ends{a, b};
    return integrate(std::forward<F>(f), std::span<const double>(ends), cfg);
}

/// Integral over [0, inf) through q = scale * s / (1 - s).
///
/// The map is evaluated in the complementary variable w = 1 - s, q = scale * (1 - w) / w, so
/// nodes crowding the q = inf end stay representable.
template <class F>
QuadratureResult integrate_half_line(F&& f, double scale, const QuadratureConfig& cfg) {
    if (!(scale > 0.0)) throw ContractError("integrate_half_line: scale must be positive");
    auto mapped = [&f, scale](double w) {
        if (w <= 0.0) return 0.0;
        const double q = scale * (1.0 - w) / w;
        const double jac = scale / (w * w);
        const double v = f(q);
        return v == 0.0 ? 0.0 : v * jac;
    };
    // Split at the image of q = scale so the bulk and the tail get separate panels.
    const std::array<double, 3> ends{0.0, 0.5, 1.0};
    return integrate(mapped, std::span<const double>(ends), cfg);
}

/// Checks that q * f(q) decays between two far-tail probe points. A non-decaying product means
/// the tail of the integral over [0, inf) is at least logarithmically divergent.
template <class F>
bool tail_decays(F&& f, double scale, const QuadratureConfig& cfg) {
    const double q1 = 1e6 * scale, q2 = 1e8 * scale;
    const double r1 = std::abs(q1 * f(q1));
    const double r2 = std::abs(q2 * f(q2));
    if (!std::isfinite(r1) || !std::isfinite(r2)) return false;
    return r2 <= cfg.tail_cutoff_mass || r2 < r1;
}

}  // namespace ecfim
