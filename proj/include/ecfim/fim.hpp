#pragma once

/**
 * @file fim.hpp
 * @brief Closed-form Fisher information matrices and Cramer-Rao bounds.
 *
 * All three forms are assembled from the same per-model quantities:
 *   G(j,k) = sum_t Re{ dmu_t/dtheta_j^H Sigma^{-1} dmu_t/dtheta_k }
 *   t_j    = tr(Sigma^{-1} Sigma_j)
 *   P(j,k) = tr(Sigma^{-1} Sigma_j Sigma^{-1} Sigma_k)
 * and differ only in how the modular-variate moments weight them:
 *
 *   Gaussian : 2 G + T P
 *   EMS      : -T t_j t_k + (2/M) a G + T b / (M(M+1)) (t_j t_k + P)
 *   EVS      : -T^2 t_j t_k + 2/(MT) a G + b / (M(MT+1)) (T t_j t_k + P)
 *
 * with a = E[Q phi^2(Q)], b = E[Q^2 phi^2(Q)] at dim M (EMS) or M*T (EVS).
 */

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ecfim/constants.hpp"
#include "ecfim/errors.hpp"
#include "ecfim/generators.hpp"
#include "ecfim/linalg.hpp"
#include "ecfim/models.hpp"

namespace ecfim {

enum class FimFamily { GaussianSB, EMS, EVS };

inline const char* to_string(FimFamily f) {
    switch (f) {
        case FimFamily::GaussianSB: return "GaussianSB";
        case FimFamily::EMS: return "EMS";
        case FimFamily::EVS: return "EVS";
    }
    return "?";
}

struct FimMatrix {
    RMatrix entries;
    FimFamily family_tag = FimFamily::GaussianSB;
    std::optional<ModularMoments> moments_used;

    int p() const { return static_cast<int>(entries.rows()); }
};

struct CrbMatrix {
    RMatrix entries;
    double condition_estimate = 0.0;

    RVector diagonal() const { return entries.diagonal(); }
};

/// The Gaussian-shaped building blocks shared by every FIM formula.
struct FimTerms {
    RMatrix mean_gram;     // G
    RVector trace;         // t
    RMatrix trace_gram;    // P
    RMatrix trace_outer;   // t t^T
    int M = 0;
    int T = 0;
};

/// Sigma^{-1} is applied through a Cholesky factorization; A_j = Sigma^{-1} Sigma_j is formed once
/// per parameter and P(j,k) = tr(A_j A_k) is read off elementwise.
inline FimTerms fim_terms(const ModelEval& eval) {
    const int p = eval.p();
    if (p < 1 || static_cast<int>(eval.mean_jacobians.size()) != p)
        throw ContractError("fim: model evaluation has inconsistent derivative lists");
    const auto llt = hermitian_factor(eval.scatter);

    std::vector<CMatrix> a(p), w(p);
    FimTerms terms;
    terms.M = eval.M();
    terms.T = eval.T();
    terms.trace.resize(p);
    for (int j = 0; j < p; ++j) {
        a[j] = llt.solve(eval.scatter_derivs[j]);
        w[j] = llt.solve(eval.mean_jacobians[j]);
        terms.trace[j] = a[j].trace().real();
    }
    terms.mean_gram.resize(p, p);
    terms.trace_gram.resize(p, p);
    for (int j = 0; j < p; ++j) {
        for (int k = j; k < p; ++k) {
            // sum over t and m of conj(dmu_j) * (Sigma^{-1} dmu_k)
            const double g = eval.mean_jacobians[j].cwiseProduct(w[k].conjugate()).sum().real();
            const double tp = trace_of_product(a[j], a[k]);
            terms.mean_gram(j, k) = terms.mean_gram(k, j) = g;
            terms.trace_gram(j, k) = terms.trace_gram(k, j) = tp;
        }
    }
    terms.trace_outer = terms.trace * terms.trace.transpose();
    return terms;
}

namespace detail {

inline void check_fim(const FimMatrix& f) {
    if (!f.entries.allFinite()) throw NumericError(std::string(to_string(f.family_tag)) + " FIM is not finite");
    Eigen::SelfAdjointEigenSolver<RMatrix> es(f.entries, Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().maxCoeff(), lmin = es.eigenvalues().minCoeff();
    if (lmin < -tol::kFimPsdSlack * std::max(lmax, 0.0))
        throw DefinitenessError(std::string(to_string(f.family_tag)) +
                                    " FIM is not positive semidefinite (smallest eigenvalue " + std::to_string(lmin) +
                                    ")",
                                lmin);
}

inline void check_snapshots(const ModelEval& eval, int T) {
    if (T < 1) throw ContractError("fim: T must be positive");
    if (eval.T() != T)
        throw ContractError("fim: T = " + std::to_string(T) + " does not match the model's snapshot count " +
                            std::to_string(eval.T()));
}

// Mirror the upper triangle so F(j,k) == F(k,j) bit for bit.
inline RMatrix mirror_upper(const RMatrix& a) {
    RMatrix out = a;
    for (int j = 0; j < a.rows(); ++j)
        for (int k = j + 1; k < a.cols(); ++k) out(k, j) = out(j, k);
    return out;
}

}  // namespace detail

/// Slepian-Bangs: F = 2 G + T P.
inline FimMatrix fim_gaussian_sb(const ModelEval& eval, int T) {
    detail::check_snapshots(eval, T);
    const FimTerms t = fim_terms(eval);
    FimMatrix out;
    out.family_tag = FimFamily::GaussianSB;
    out.entries = detail::mirror_upper(2.0 * t.mean_gram + T * t.trace_gram);
    detail::check_fim(out);
    return out;
}

/// FIM for i.i.d. elliptical snapshots. `moments` must be computed at dim = M.
inline FimMatrix fim_ems(const ModelEval& eval, const ModularMoments& moments, int T) {
    detail::check_snapshots(eval, T);
    const int M = eval.M();
    if (moments.dim != M)
        throw ContractError("fim_ems: moments computed at dim " + std::to_string(moments.dim) + ", expected M = " +
                            std::to_string(M));
    const FimTerms t = fim_terms(eval);
    const double m = M;
    const double mean_w = 2.0 / m * moments.e_q_phi2;
    const double trace_w = moments.e_q2_phi2 * T / (m * (m + 1.0));

    FimMatrix out;
    out.family_tag = FimFamily::EMS;
    out.moments_used = moments;
    out.entries = detail::mirror_upper(-static_cast<double>(T) * t.trace_outer + mean_w * t.mean_gram +
                                       trace_w * (t.trace_outer + t.trace_gram));
    detail::check_fim(out);
    return out;
}

/// FIM for the vector-elliptical matrix model. `moments` must be computed at dim = M*T.
inline FimMatrix fim_evs(const ModelEval& eval, const ModularMoments& moments, int T) {
    detail::check_snapshots(eval, T);
    const int M = eval.M();
    if (moments.dim != M * T)
        throw ContractError("fim_evs: moments computed at dim " + std::to_string(moments.dim) +
                            ", expected M*T = " + std::to_string(M * T));
    const FimTerms t = fim_terms(eval);
    const double m = M, tt = T;
    const double mean_w = 2.0 / (m * tt) * moments.e_q_phi2;
    const double trace_w = moments.e_q2_phi2 / (m * (m * tt + 1.0));

    FimMatrix out;
    out.family_tag = FimFamily::EVS;
    out.moments_used = moments;
    out.entries = detail::mirror_upper(-tt * tt * t.trace_outer + mean_w * t.mean_gram +
                                       trace_w * (tt * t.trace_outer + t.trace_gram));
    detail::check_fim(out);
    return out;
}

/// Inverse FIM. Refuses (SingularityError) when the condition number reaches 1e12.
inline CrbMatrix crb_from_fim(const FimMatrix& fim) {
    const RMatrix f = symmetric_part(fim.entries);
    if (f.rows() == 0 || f.rows() != f.cols()) throw ContractError("crb_from_fim: FIM must be square and non-empty");
    Eigen::SelfAdjointEigenSolver<RMatrix> es(f);
    if (es.info() != Eigen::Success) throw NumericError("crb_from_fim: eigendecomposition failed");
    const RVector lam = es.eigenvalues();
    const double lmin = lam.minCoeff(), lmax = lam.maxCoeff();
    const double cond = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
    if (!(cond < tol::kMaxCondition))
        throw SingularityError("FIM is singular or near-singular (condition estimate " + std::to_string(cond) +
                                   "); the parameterization is not identifiable",
                               cond);
    CrbMatrix out;
    out.entries = symmetric_part(es.eigenvectors() * lam.cwiseInverse().asDiagonal() * es.eigenvectors().transpose());
    out.condition_estimate = cond;
    return out;
}

/// Analytic moments where available, quadrature otherwise.
inline ModularMoments default_moments(const DensityGenerator& gen, int dim, const QuadratureConfig& cfg = {}) {
    const auto method =
        gen.family() == GeneratorFamily::Tabulated ? MomentMethod::Quadrature : MomentMethod::Analytic;
    return modular_moments(gen, dim, method, cfg);
}

}  // namespace ecfim
