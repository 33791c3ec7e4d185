#pragma once

/**
 * @file generators.hpp
 * @brief Density generators of complex elliptically contoured distributions.
 *
 * A generator g defines the density of x in C^M through g((x - mu)^H Sigma^{-1} (x - mu)). The
 * squared radius Q has density q^{M-1} g(q) / delta_{M,g} on [0, inf), and every Fisher
 * information formula in this library depends on g only through the two scalars
 * E[Q phi^2(Q)] and E[Q^2 phi^2(Q)], with phi = g'/g.
 *
 * The Student generator g(t) = (1 + t/d)^{-(d+M)} depends on the ambient dimension, so every
 * evaluation takes `dim` explicitly. One generator object then serves the per-snapshot
 * (dim = M) and the whole-matrix (dim = M*T) constructions.
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "ecfim/errors.hpp"
#include "ecfim/quadrature.hpp"

namespace ecfim {

enum class GeneratorFamily { Gaussian, Student, Tabulated };

enum class MomentMethod { Analytic, Quadrature };

inline const char* to_string(MomentMethod m) { return m == MomentMethod::Analytic ? "Analytic" : "Quadrature"; }

/// Piecewise-cubic Hermite interpolant of log g on a strictly increasing grid.
///
/// Node slopes come from centered differences (one-sided at the two ends) and are limited with
/// the Fritsch-Carlson conditions so the interpolant stays monotone wherever the data is.
class TabulatedLogG {
public:
    static constexpr std::size_t kMinPoints = 16;
    static constexpr double kMaxGridStart = 1e-6;

    TabulatedLogG(std::vector<double> grid, std::vector<double> log_g)
        : grid_(std::move(grid)), values_(std::move(log_g)) {
        if (grid_.size() != values_.size())
            throw ContractError("tabulated generator: grid and log_g sizes differ");
        if (grid_.size() < kMinPoints)
            throw ContractError("tabulated generator: need at least 16 grid points");
        if (!(grid_.front() >= 0.0 && grid_.front() <= kMaxGridStart))
            throw ContractError("tabulated generator: grid must start at 0 (within 1e-6)");
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            if (!std::isfinite(grid_[i]) || !std::isfinite(values_[i]))
                throw ContractError("tabulated generator: non-finite entry at index " + std::to_string(i));
            if (i > 0 && !(grid_[i] > grid_[i - 1]))
                throw ContractError("tabulated generator: grid not strictly increasing at index " +
                                    std::to_string(i));
        }
        compute_slopes();
    }

    const std::vector<double>& grid() const noexcept { return grid_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double front() const noexcept { return grid_.front(); }
    double back() const noexcept { return grid_.back(); }

    /// Returns (log g(t), d/dt log g(t)).
    std::pair<double, double> eval(double t) const {
        if (!(t >= grid_.front() && t <= grid_.back()))
            throw ExtrapolationError("tabulated generator evaluated at t = " + std::to_string(t) +
                                     " outside grid [" + std::to_string(grid_.front()) + ", " +
                                     std::to_string(grid_.back()) + "]");
        auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
        std::size_t k = it == grid_.begin() ? 0 : static_cast<std::size_t>(it - grid_.begin()) - 1;
        if (k >= grid_.size() - 1) k = grid_.size() - 2;

        const double h = grid_[k + 1] - grid_[k];
        const double s = (t - grid_[k]) / h;
        const double s2 = s * s, s3 = s2 * s;
        const double y0 = values_[k], y1 = values_[k + 1];
        const double m0 = slopes_[k], m1 = slopes_[k + 1];

        const double value = (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * m0 + (-2 * s3 + 3 * s2) * y1 +
                             (s3 - s2) * h * m1;
        const double deriv = ((6 * s2 - 6 * s) * y0 + (-6 * s2 + 6 * s) * y1) / h +
                             (3 * s2 - 4 * s + 1) * m0 + (3 * s2 - 2 * s) * m1;
        return {value, deriv};
    }

private:
    void compute_slopes() {
        const std::size_t n = grid_.size();
        slopes_.assign(n, 0.0);
        slopes_[0] = (values_[1] - values_[0]) / (grid_[1] - grid_[0]);
        slopes_[n - 1] = (values_[n - 1] - values_[n - 2]) / (grid_[n - 1] - grid_[n - 2]);
        for (std::size_t i = 1; i + 1 < n; ++i)
            slopes_[i] = (values_[i + 1] - values_[i - 1]) / (grid_[i + 1] - grid_[i - 1]);

        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double secant = (values_[k + 1] - values_[k]) / (grid_[k + 1] - grid_[k]);
            if (secant == 0.0) {
                slopes_[k] = slopes_[k + 1] = 0.0;
                continue;
            }
            if (slopes_[k] * secant < 0.0) slopes_[k] = 0.0;
            if (slopes_[k + 1] * secant < 0.0) slopes_[k + 1] = 0.0;
            const double a = slopes_[k] / secant, b = slopes_[k + 1] / secant;
            const double r2 = a * a + b * b;
            if (r2 > 9.0) {
                const double tau = 3.0 / std::sqrt(r2);
                slopes_[k] = tau * a * secant;
                slopes_[k + 1] = tau * b * secant;
            }
        }
    }

    std::vector<double> grid_;
    std::vector<double> values_;
    std::vector<double> slopes_;
};

/// Density generator g of a complex EC distribution. Immutable after construction.
class DensityGenerator {
public:
    struct Gaussian {};
    struct Student {
        double dof;
    };
    using Family = std::variant<Gaussian, Student, TabulatedLogG>;

    static DensityGenerator gaussian(std::string description = "gaussian") {
        return DensityGenerator(Gaussian{}, std::move(description));
    }

    static DensityGenerator student(double dof, std::string description = {}) {
        if (!(dof > 0.0) || !std::isfinite(dof))
            throw DomainError("Student generator requires dof > 0, got " + std::to_string(dof));
        if (description.empty()) description = "student";
        return DensityGenerator(Student{dof}, std::move(description));
    }

    static DensityGenerator tabulated(std::vector<double> grid, std::vector<double> log_g,
                                      std::string description = "tabulated") {
        return DensityGenerator(TabulatedLogG(std::move(grid), std::move(log_g)), std::move(description));
    }

    GeneratorFamily family() const noexcept {
        return static_cast<GeneratorFamily>(family_.index());
    }
    const Family& parameters() const noexcept { return family_; }
    const std::string& description() const noexcept { return description_; }

    double dof() const {
        if (const auto* s = std::get_if<Student>(&family_)) return s->dof;
        throw ContractError("dof() requested from a non-Student generator");
    }

    const TabulatedLogG& table() const {
        if (const auto* t = std::get_if<TabulatedLogG>(&family_)) return *t;
        throw ContractError("table() requested from a non-tabulated generator");
    }

    /// Short machine-readable tag, e.g. "gaussian", "student(d=3)".
    std::string tag() const {
        switch (family()) {
            case GeneratorFamily::Gaussian: return "gaussian";
            case GeneratorFamily::Student: {
                char buf[64];
                std::snprintf(buf, sizeof buf, "student(d=%.17g)", dof());
                return buf;
            }
            case GeneratorFamily::Tabulated:
                return "tabulated(n=" + std::to_string(table().grid().size()) + ")";
        }
        return {};
    }

    /// Upper end of the support of g (infinity except for tabulated generators).
    double support_end() const {
        if (family() == GeneratorFamily::Tabulated) return table().back();
        return std::numeric_limits<double>::infinity();
    }

    double log_g(double t, int dim) const {
        check_arguments(t, dim);
        return std::visit(
            [&](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, Gaussian>) {
                    return -t;
                } else if constexpr (std::is_same_v<T, Student>) {
                    return -(f.dof + dim) * std::log1p(t / f.dof);
                } else {
                    return f.eval(t).first;
                }
            },
            family_);
    }

    double phi(double t, int dim) const {
        check_arguments(t, dim);
        return std::visit(
            [&](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, Gaussian>) {
                    return -1.0;
                } else if constexpr (std::is_same_v<T, Student>) {
                    return -(f.dof + dim) / (f.dof + t);
                } else {
                    return f.eval(t).second;
                }
            },
            family_);
    }

private:
    DensityGenerator(Family family, std::string description)
        : family_(std::move(family)), description_(std::move(description)) {}

    static void check_arguments(double t, int dim) {
        if (dim < 1) throw ContractError("generator dimension must be >= 1, got " + std::to_string(dim));
        if (!(t >= 0.0)) throw DomainError("generator evaluated at negative argument t = " + std::to_string(t));
    }

    Family family_;
    std::string description_;
};

/// E[Q phi^2(Q)] and E[Q^2 phi^2(Q)] under the modular density at `dim`.
struct ModularMoments {
    int dim = 0;
    double e_q_phi2 = 0.0;
    double e_q2_phi2 = 0.0;
    MomentMethod method = MomentMethod::Analytic;
    double est_abs_error = 0.0;
};

/// phi(t) = g'(t) / g(t).
inline double eval_phi(const DensityGenerator& gen, double t, int dim) { return gen.phi(t, dim); }

namespace detail {

inline double log_pow(double q, int exponent) {
    if (exponent == 0) return 0.0;
    return exponent * std::log(q);
}

// Integral of t^{dim-1} g(t) over the tabulated grid, without the truncation check.
inline QuadratureResult tabulated_delta(const TabulatedLogG& table, int dim, const QuadratureConfig& cfg) {
    auto integrand = [&](double t) {
        if (t <= 0.0 && dim > 1) return 0.0;
        return std::exp(log_pow(t, dim - 1) + table.eval(t).first);
    };
    QuadratureConfig local = cfg;
    local.max_subdivisions = cfg.max_subdivisions + static_cast<int>(table.grid().size());
    return integrate(integrand, std::span<const double>(table.grid()), local);
}

// Tabulated quadrature shares the grid as its initial partition.
template <class F>
QuadratureResult integrate_over_support(const DensityGenerator& gen, int dim, F&& f, const QuadratureConfig& cfg) {
    if (gen.family() == GeneratorFamily::Tabulated) {
        const auto& grid = gen.table().grid();
        QuadratureConfig local = cfg;
        local.max_subdivisions = cfg.max_subdivisions + static_cast<int>(grid.size());
        return integrate(std::forward<F>(f), std::span<const double>(grid), local);
    }
    return integrate_half_line(std::forward<F>(f), static_cast<double>(dim), cfg);
}

/// Boundary term q^dim g(q) / delta at the upper end of a tabulated grid.
inline double tabulated_upper_boundary(const TabulatedLogG& table, int dim, double log_delta) {
    return std::exp(log_pow(table.back(), dim) + table.eval(table.back()).first - log_delta);
}

}  // namespace detail

/// log delta_{dim,g} = log of the integral of t^{dim-1} g(t) over [0, inf).
inline double log_delta(const DensityGenerator& gen, int dim, const QuadratureConfig& cfg = {}) {
    if (dim < 1) throw ContractError("dimension must be >= 1");
    switch (gen.family()) {
        case GeneratorFamily::Gaussian: return std::lgamma(static_cast<double>(dim));
        case GeneratorFamily::Student: {
            const double d = gen.dof();
            return dim * std::log(d) + std::lgamma(d) + std::lgamma(static_cast<double>(dim)) -
                   std::lgamma(d + dim);
        }
        case GeneratorFamily::Tabulated: {
            const auto& table = gen.table();
            const auto res = detail::tabulated_delta(table, dim, cfg);
            if (!res.converged || !(res.value > 0.0))
                throw DivergenceError("delta integral of tabulated generator did not converge at dim " +
                                      std::to_string(dim));
            const double ld = std::log(res.value);
            const double boundary = detail::tabulated_upper_boundary(table, dim, ld);
            if (boundary > cfg.tail_cutoff_mass)
                throw DivergenceError("tabulated generator is not integrable at dim " + std::to_string(dim) +
                                      ": boundary term " + std::to_string(boundary) +
                                      " at the end of the grid exceeds tail_cutoff_mass");
            return ld;
        }
    }
    throw ContractError("unknown generator family");
}

/// log C_{dim,g}, the constant making C det(Sigma)^{-1} g(.) a density on C^dim.
inline double log_normalizer(const DensityGenerator& gen, int dim, const QuadratureConfig& cfg = {}) {
    return std::lgamma(static_cast<double>(dim)) - dim * std::log(std::numbers::pi) - log_delta(gen, dim, cfg);
}

/// Density of the modular variate Q at a fixed dimension, with the normalizer cached.
class ModularDensity {
public:
    ModularDensity(const DensityGenerator& gen, int dim, const QuadratureConfig& cfg = {})
        : gen_(&gen), dim_(dim), log_delta_(ecfim::log_delta(gen, dim, cfg)) {}

    int dim() const noexcept { return dim_; }
    double log_delta() const noexcept { return log_delta_; }

    double operator()(double q) const {
        if (!(q >= 0.0)) throw DomainError("modular density evaluated at negative q");
        if (q == 0.0 && dim_ > 1) return 0.0;
        return std::exp(detail::log_pow(q, dim_ - 1) + gen_->log_g(q, dim_) - log_delta_);
    }

private:
    const DensityGenerator* gen_;
    int dim_;
    double log_delta_;
};

/// p(q) = q^{dim-1} g(q) / delta_{dim,g}.
inline double modular_pdf(const DensityGenerator& gen, int dim, double q, const QuadratureConfig& cfg = {}) {
    if (!(q >= 0.0)) throw DomainError("modular_pdf: q must be non-negative");
    return ModularDensity(gen, dim, cfg)(q);
}

/// The pair (E[Q phi^2(Q)], E[Q^2 phi^2(Q)]).
inline ModularMoments modular_moments(const DensityGenerator& gen, int dim, MomentMethod method,
                                      const QuadratureConfig& cfg = {}) {
    if (dim < 1) throw ContractError("modular_moments: dim must be >= 1");
    ModularMoments out;
    out.dim = dim;
    out.method = method;
    const double m = dim;

    if (method == MomentMethod::Analytic) {
        switch (gen.family()) {
            case GeneratorFamily::Gaussian:
                out.e_q_phi2 = m;
                out.e_q2_phi2 = m * (m + 1.0);
                return out;
            case GeneratorFamily::Student: {
                const double d = gen.dof();
                const double ratio = (d + m) / (d + m + 1.0);
                out.e_q_phi2 = ratio * m;
                out.e_q2_phi2 = ratio * m * (m + 1.0);
                return out;
            }
            case GeneratorFamily::Tabulated:
                throw ContractError("modular_moments: no analytic moments for a tabulated generator");
        }
    }

    cfg.validate();
    const ModularDensity pdf(gen, dim, cfg);
    auto moment = [&](int power) {
        auto integrand = [&](double q) {
            const double p = pdf(q);
            if (p == 0.0) return 0.0;
            const double ph = gen.phi(q, dim);
            return std::pow(q, power) * ph * ph * p;
        };
        if (gen.family() != GeneratorFamily::Tabulated && !tail_decays(integrand, m, cfg))
            throw DivergenceError("E[Q^" + std::to_string(power) + " phi^2(Q)] diverges for " + gen.tag() +
                                  " at dim " + std::to_string(dim));
        const auto res = detail::integrate_over_support(gen, dim, integrand, cfg);
        if (!res.converged)
            throw DivergenceError("E[Q^" + std::to_string(power) + " phi^2(Q)] quadrature did not converge for " +
                                  gen.tag() + " at dim " + std::to_string(dim) + " (error estimate " +
                                  std::to_string(res.abs_error) + ")");
        return res;
    };
    const auto r1 = moment(1);
    const auto r2 = moment(2);
    out.e_q_phi2 = r1.value;
    out.e_q2_phi2 = r2.value;
    out.est_abs_error = std::max(r1.abs_error, r2.abs_error);
    if (!(out.e_q_phi2 > 0.0) || !(out.e_q2_phi2 > 0.0))
        throw DivergenceError("modular moments are not positive for " + gen.tag());
    return out;
}

/// E[Q phi(Q)] by quadrature. Integration by parts gives -dim for every admissible generator,
/// so this doubles as a self-test of the generator.
inline double first_moment_identity(const DensityGenerator& gen, int dim, const QuadratureConfig& cfg = {}) {
    if (dim < 1) throw ContractError("first_moment_identity: dim must be >= 1");
    cfg.validate();

    double ld = 0.0;
    if (gen.family() == GeneratorFamily::Tabulated) {
        const auto& table = gen.table();
        const auto res = detail::tabulated_delta(table, dim, cfg);
        if (!res.converged || !(res.value > 0.0))
            throw DivergenceError("delta integral of tabulated generator did not converge");
        ld = std::log(res.value);
        const double upper = detail::tabulated_upper_boundary(table, dim, ld);
        const double lower =
            table.front() > 0.0 ? std::exp(detail::log_pow(table.front(), dim) + table.eval(table.front()).first - ld)
                                : 0.0;
        if (upper > cfg.tail_cutoff_mass || lower > cfg.tail_cutoff_mass)
            throw GeneratorValidityError("boundary term q^dim g(q)/delta does not vanish for " + gen.tag() +
                                         " at dim " + std::to_string(dim) + " (lower " + std::to_string(lower) +
                                         ", upper " + std::to_string(upper) + ")");
    } else {
        ld = log_delta(gen, dim, cfg);
        auto boundary = [&](double q) { return std::exp(detail::log_pow(q, dim) + gen.log_g(q, dim) - ld); };
        const double scale = dim;
        const double b1 = boundary(1e6 * scale), b2 = boundary(1e8 * scale);
        if (b2 > cfg.tail_cutoff_mass && !(b2 < b1))
            throw GeneratorValidityError("boundary term q^dim g(q)/delta does not vanish for " + gen.tag());
    }

    auto integrand = [&](double q) {
        if (q == 0.0 && dim > 1) return 0.0;
        const double p = std::exp(detail::log_pow(q, dim - 1) + gen.log_g(q, dim) - ld);
        return q * gen.phi(q, dim) * p;
    };
    const auto res = detail::integrate_over_support(gen, dim, integrand, cfg);
    if (!res.converged)
        throw DivergenceError("E[Q phi(Q)] quadrature did not converge for " + gen.tag());
    return res.value;
}

}  // namespace ecfim
