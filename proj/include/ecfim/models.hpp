#pragma once

/**
 * @file models.hpp
 * @brief Parametric mean/scatter models theta -> ({mu_t(theta)}, Sigma(theta)) with first derivatives.
 *
 * A model is a pure evaluator plus a domain check. Derivatives come either from the evaluator
 * itself (Analytic) or from central differences of its values (FiniteDifference). Three built-in
 * models are provided: "ula-doa", "ar1-scatter" and "scalar-mean".
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ecfim/constants.hpp"
#include "ecfim/errors.hpp"
#include "ecfim/linalg.hpp"

namespace ecfim {

struct ParamVector {
    std::vector<double> values;
    std::vector<std::string> names;

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

/// A model evaluated at one parameter point.
struct ModelEval {
    CMatrix means;                        // M x T, column t is mu_t
    CMatrix scatter;                      // M x M Hermitian PD
    std::vector<CMatrix> mean_jacobians;  // p entries, M x T each
    std::vector<CMatrix> scatter_derivs;  // p entries, M x M Hermitian each

    int M() const { return static_cast<int>(scatter.rows()); }
    int T() const { return static_cast<int>(means.cols()); }
    int p() const { return static_cast<int>(scatter_derivs.size()); }
};

struct AnalyticDerivatives {};
struct FiniteDifference {
    double step = tol::kFiniteDiffStep;
};
using DerivativeMode = std::variant<AnalyticDerivatives, FiniteDifference>;

class ParametricModel {
public:
    /// Returns means and scatter at theta. In Analytic mode it must also fill both derivative lists.
    using Evaluator = std::function<ModelEval(std::span<const double>)>;
    /// Throws DomainError (with the parameter index) when theta is outside the model domain.
    using DomainCheck = std::function<void(std::span<const double>)>;

    ParametricModel(std::string name, std::vector<std::string> param_names, int M, int T, Evaluator evaluator,
                    DomainCheck domain_check, DerivativeMode mode = AnalyticDerivatives{})
        : name_(std::move(name)),
          param_names_(std::move(param_names)),
          M_(M),
          T_(T),
          evaluator_(std::move(evaluator)),
          domain_check_(std::move(domain_check)),
          mode_(mode) {
        if (param_names_.empty()) throw ContractError("model '" + name_ + "' needs at least one parameter");
        if (M_ < 1 || T_ < 1) throw ContractError("model '" + name_ + "' needs M >= 1 and T >= 1");
        if (!evaluator_) throw ContractError("model '" + name_ + "' has no evaluator");
        if (const auto* fd = std::get_if<FiniteDifference>(&mode_); fd && !(fd->step > 0.0))
            throw ContractError("finite-difference step must be positive");
    }

    const std::string& name() const noexcept { return name_; }
    int p() const noexcept { return static_cast<int>(param_names_.size()); }
    int M() const noexcept { return M_; }
    int T() const noexcept { return T_; }
    const std::vector<std::string>& param_names() const noexcept { return param_names_; }
    const DerivativeMode& derivative_mode() const noexcept { return mode_; }

    ParametricModel with_derivative_mode(DerivativeMode mode) const {
        ParametricModel copy = *this;
        copy.mode_ = mode;
        return copy;
    }

    ParamVector params(std::vector<double> values) const {
        if (values.size() != param_names_.size())
            throw ContractError("model '" + name_ + "' expects " + std::to_string(p()) + " parameters, got " +
                                std::to_string(values.size()));
        return ParamVector{std::move(values), param_names_};
    }

    void check_domain(std::span<const double> theta) const {
        if (theta.size() != param_names_.size())
            throw ContractError("model '" + name_ + "' expects " + std::to_string(p()) + " parameters, got " +
                                std::to_string(theta.size()));
        for (std::size_t i = 0; i < theta.size(); ++i)
            if (!std::isfinite(theta[i]))
                throw DomainError("parameter '" + param_names_[i] + "' is not finite", i);
        if (domain_check_) domain_check_(theta);
    }

    /// Raw evaluator output, after the domain check and a dimension check.
    ModelEval evaluate_raw(std::span<const double> theta) const {
        check_domain(theta);
        ModelEval out = evaluator_(theta);
        if (out.means.rows() != M_ || out.means.cols() != T_ || out.scatter.rows() != M_ ||
            out.scatter.cols() != M_)
            throw ContractError("model '" + name_ + "' evaluator returned inconsistent dimensions");
        return out;
    }

private:
    std::string name_;
    std::vector<std::string> param_names_;
    int M_;
    int T_;
    Evaluator evaluator_;
    DomainCheck domain_check_;
    DerivativeMode mode_;
};

namespace detail {

inline void check_hermitian(const CMatrix& a, const std::string& what) {
    const double scale = std::max(1.0, a.size() ? a.cwiseAbs().maxCoeff() : 0.0);
    if (hermitian_defect(a) > tol::kHermitian * scale) throw ContractError(what + " is not Hermitian");
}

// Symmetrize, then enforce the ModelEval invariants.
inline ModelEval finalize_eval(ModelEval ev, const ParametricModel& model) {
    const auto p = static_cast<std::size_t>(model.p());
    if (ev.mean_jacobians.size() != p || ev.scatter_derivs.size() != p)
        throw ContractError("model '" + model.name() + "' returned " + std::to_string(ev.mean_jacobians.size()) +
                            " mean Jacobians and " + std::to_string(ev.scatter_derivs.size()) +
                            " scatter derivatives, expected " + std::to_string(p));
    check_hermitian(ev.scatter, "scatter of model '" + model.name() + "'");
    ev.scatter = hermitian_part(ev.scatter);
    for (std::size_t j = 0; j < p; ++j) {
        const auto& dmu = ev.mean_jacobians[j];
        const auto& ds = ev.scatter_derivs[j];
        if (dmu.rows() != model.M() || dmu.cols() != model.T() || ds.rows() != model.M() || ds.cols() != model.M())
            throw ContractError("model '" + model.name() + "' derivative block " + std::to_string(j) +
                                " has wrong dimensions");
        check_hermitian(ds, "scatter derivative '" + model.param_names()[j] + "'");
        ev.scatter_derivs[j] = hermitian_part(ds);
    }
    if (!ev.means.allFinite() || !ev.scatter.allFinite())
        throw NumericError("model '" + model.name() + "' produced non-finite values");
    hermitian_factor(ev.scatter, ("scatter of model '" + model.name() + "'").c_str());
    return ev;
}

}  // namespace detail

/// Central differences (f(theta + h e_j) - f(theta - h e_j)) / 2h with h = step * max(1, |theta_j|).
inline ModelEval finite_diff_eval(const ParametricModel& model, const ParamVector& theta,
                                  double step = tol::kFiniteDiffStep) {
    if (!(step > 0.0)) throw ContractError("finite_diff_eval: step must be positive");
    ModelEval center = model.evaluate_raw(theta.values);
    center.mean_jacobians.clear();
    center.scatter_derivs.clear();

    std::vector<double> shifted = theta.values;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const double h = step * std::max(1.0, std::abs(theta[j]));
        auto eval_at = [&](double value) {
            shifted[j] = value;
            try {
                model.check_domain(shifted);
            } catch (const DomainError&) {
                shifted[j] = theta[j];
                throw BoundaryError("finite-difference step " + std::to_string(h) + " on parameter '" +
                                        model.param_names()[j] + "' leaves the model domain",
                                    j);
            }
            ModelEval ev = model.evaluate_raw(shifted);
            shifted[j] = theta[j];
            return ev;
        };
        const ModelEval plus = eval_at(theta[j] + h);
        const ModelEval minus = eval_at(theta[j] - h);
        const double inv = 1.0 / (2.0 * h);
        center.mean_jacobians.push_back((plus.means - minus.means) * inv);
        center.scatter_derivs.push_back((plus.scatter - minus.scatter) * inv);
    }
    return detail::finalize_eval(std::move(center), model);
}

/// Model value and derivatives at theta, using the model's derivative mode.
inline ModelEval evaluate_model(const ParametricModel& model, const ParamVector& theta) {
    if (theta.size() != static_cast<std::size_t>(model.p()))
        throw ContractError("model '" + model.name() + "' expects " + std::to_string(model.p()) +
                            " parameters, got " + std::to_string(theta.size()));
    if (const auto* fd = std::get_if<FiniteDifference>(&model.derivative_mode()))
        return finite_diff_eval(model, theta, fd->step);
    return detail::finalize_eval(model.evaluate_raw(theta.values), model);
}

// ---------------------------------------------------------------------------------------------
// Built-in models

/// mu_t = A e^{i psi} a(omega) for every t with a(omega)_m = e^{i omega m}; Sigma = sigma2 I.
/// theta = (A, psi, omega, sigma2).
inline ParametricModel make_ula_doa(int M, int T) {
    auto evaluator = [M, T](std::span<const double> th) {
        const double amp = th[0], psi = th[1], omega = th[2], sigma2 = th[3];
        CVector steer(M), dsteer(M);
        for (int m = 0; m < M; ++m) {
            steer[m] = std::polar(1.0, omega * m);
            dsteer[m] = cdouble(0.0, m) * steer[m];
        }
        const cdouble phase = std::polar(1.0, psi);
        const CVector mu = amp * phase * steer;

        ModelEval ev;
        ev.means = mu.replicate(1, T);
        ev.scatter = sigma2 * CMatrix::Identity(M, M);
        ev.mean_jacobians = {
            (phase * steer).replicate(1, T),
            (cdouble(0.0, 1.0) * mu).replicate(1, T),
            (amp * phase * dsteer).replicate(1, T),
            CMatrix::Zero(M, T),
        };
        ev.scatter_derivs = {CMatrix::Zero(M, M), CMatrix::Zero(M, M), CMatrix::Zero(M, M),
                             CMatrix::Identity(M, M)};
        return ev;
    };
    auto domain = [](std::span<const double> th) {
        if (!(th[3] > 0.0)) throw DomainError("parameter 'sigma2' must be > 0", 3);
    };
    return ParametricModel("ula-doa", {"A", "psi", "omega", "sigma2"}, M, T, evaluator, domain);
}

/// mu_t = 0; Sigma_{mn} = sigma2 rho^{|m-n|}. theta = (rho, sigma2), |rho| < 1.
inline ParametricModel make_ar1_scatter(int M, int T) {
    auto evaluator = [M, T](std::span<const double> th) {
        const double rho = th[0], sigma2 = th[1];
        CMatrix sigma(M, M), dsig_rho(M, M);
        for (int m = 0; m < M; ++m) {
            for (int n = 0; n < M; ++n) {
                const int k = std::abs(m - n);
                const double rk = std::pow(rho, k);
                sigma(m, n) = sigma2 * rk;
                dsig_rho(m, n) = k == 0 ? 0.0 : sigma2 * k * std::pow(rho, k - 1);
            }
        }
        ModelEval ev;
        ev.means = CMatrix::Zero(M, T);
        ev.mean_jacobians = {CMatrix::Zero(M, T), CMatrix::Zero(M, T)};
        ev.scatter_derivs = {dsig_rho, sigma / sigma2};
        ev.scatter = std::move(sigma);
        return ev;
    };
    auto domain = [](std::span<const double> th) {
        if (!(std::abs(th[0]) < 1.0)) throw DomainError("parameter 'rho' must satisfy |rho| < 1", 0);
        if (!(th[1] > 0.0)) throw DomainError("parameter 'sigma2' must be > 0", 1);
    };
    return ParametricModel("ar1-scatter", {"rho", "sigma2"}, M, T, evaluator, domain);
}

/// M = 1, mu_t = theta (real), Sigma = 1.
inline ParametricModel make_scalar_mean(int T) {
    auto evaluator = [T](std::span<const double> th) {
        ModelEval ev;
        ev.means = CMatrix::Constant(1, T, cdouble(th[0], 0.0));
        ev.scatter = CMatrix::Identity(1, 1);
        ev.mean_jacobians = {CMatrix::Constant(1, T, cdouble(1.0, 0.0))};
        ev.scatter_derivs = {CMatrix::Zero(1, 1)};
        return ev;
    };
    return ParametricModel("scalar-mean", {"mu"}, 1, T, evaluator, nullptr);
}

inline std::vector<std::string> builtin_model_names() { return {"ula-doa", "ar1-scatter", "scalar-mean"}; }

/// Registry lookup. Throws ContractError for unknown names or M != 1 on "scalar-mean".
inline ParametricModel make_builtin_model(const std::string& name, int M, int T) {
    if (name == "ula-doa") return make_ula_doa(M, T);
    if (name == "ar1-scatter") return make_ar1_scatter(M, T);
    if (name == "scalar-mean") {
        if (M != 1) throw ContractError("model 'scalar-mean' requires M = 1");
        return make_scalar_mean(T);
    }
    throw ContractError("unknown model '" + name + "'");
}

}  // namespace ecfim
