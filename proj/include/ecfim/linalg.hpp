#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ecfim/errors.hpp"

namespace ecfim {

using cdouble = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline CMatrix hermitian_part(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

inline RMatrix symmetric_part(const RMatrix& a) { return 0.5 * (a + a.transpose()); }

inline double hermitian_defect(const CMatrix& a) {
    if (a.size() == 0) return 0.0;
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline double smallest_eigenvalue(const CMatrix& hermitian) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

/// Cholesky factor of a Hermitian positive definite matrix; throws DefinitenessError otherwise.
inline Eigen::LLT<CMatrix> hermitian_factor(const CMatrix& sigma, const char* what = "scatter matrix") {
    Eigen::LLT<CMatrix> llt(sigma);
    if (llt.info() != Eigen::Success) {
        const double lmin = smallest_eigenvalue(hermitian_part(sigma));
        throw DefinitenessError(std::string(what) + " is not positive definite (smallest eigenvalue " +
                                    std::to_string(lmin) + ")",
                                lmin);
    }
    return llt;
}

/// Hermitian positive semidefinite square root through an eigendecomposition.
inline CMatrix hermitian_sqrt(const CMatrix& sigma) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(sigma);
    if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
    const RVector lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

/// Real part of tr(A B) without forming the product.
inline double trace_of_product(const CMatrix& a, const CMatrix& b) {
    return a.cwiseProduct(b.transpose()).sum().real();
}

}  // namespace ecfim
