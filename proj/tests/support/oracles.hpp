#pragma once

// Test-only oracles. Nothing here calls into the ecfim quadrature or closed forms, so the checks
// built on top of it stay independent of the code paths they verify.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace oracle {

/// Integral over [0, inf) by exp-sinh quadrature.
inline double half_line_integral(const std::function<double(double)>& f) {
    boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity());
}

/// Integral over [a, b] by tanh-sinh quadrature.
inline double finite_integral(const std::function<double(double)>& f, double a, double b) {
    boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator.integrate(f, a, b);
}

/// Moment E[h(Q)] under the density proportional to `unnormalized` on [0, inf).
inline double normalized_moment(const std::function<double(double)>& unnormalized,
                                const std::function<double(double)>& h) {
    const double z = half_line_integral(unnormalized);
    return half_line_integral([&](double q) { return h(q) * unnormalized(q); }) / z;
}

/// Central-difference gradient of a scalar function of a parameter vector.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double rel_step = 1e-6) {
    std::vector<double> g(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double h = rel_step * std::max(1.0, std::abs(x[j]));
        const double x0 = x[j];
        x[j] = x0 + h;
        const double fp = f(x);
        x[j] = x0 - h;
        const double fm = f(x);
        x[j] = x0;
        g[j] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// Asymptotic Kolmogorov distribution tail, P(K > lambda).
inline double kolmogorov_tail(double lambda) {
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

/// Two-sample Kolmogorov-Smirnov test; returns the asymptotic p-value.
inline double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    const double ne = na * nb / (na + nb);
    const double sq = std::sqrt(ne);
    return kolmogorov_tail((sq + 0.12 + 0.11 / sq) * d);
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF; returns the asymptotic p-value.
inline double ks_one_sample_pvalue(std::vector<double> a, const std::function<double(double)>& cdf) {
    std::sort(a.begin(), a.end());
    const double n = static_cast<double>(a.size());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double f = cdf(a[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    const double sq = std::sqrt(n);
    return kolmogorov_tail((sq + 0.12 + 0.11 / sq) * d);
}

}  // namespace oracle
