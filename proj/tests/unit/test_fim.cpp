#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ecfim/fim.hpp"

using namespace ecfim;

namespace {

double rel_err(const RMatrix& a, const RMatrix& b) { return (a - b).norm() / b.norm(); }

std::vector<double> random_theta(const std::string& name, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (name == "ula-doa") return {0.5 + u(gen), -3.0 + 6.0 * u(gen), -2.5 + 5.0 * u(gen), 0.3 + 2.0 * u(gen)};
    if (name == "ar1-scatter") return {-0.9 + 1.8 * u(gen), 0.3 + 2.0 * u(gen)};
    return {-2.0 + 4.0 * u(gen)};
}

ParametricModel model_for(const std::string& name, int T) {
    return make_builtin_model(name, name == "scalar-mean" ? 1 : (name == "ula-doa" ? 4 : 3), T);
}

// Slepian-Bangs with explicit inverses and explicit four-matrix products.
RMatrix brute_force_sb(const ModelEval& ev) {
    const CMatrix inv = ev.scatter.inverse();
    const int p = ev.p();
    RMatrix f(p, p);
    for (int j = 0; j < p; ++j)
        for (int k = 0; k < p; ++k) {
            double mean = 0.0;
            for (int t = 0; t < ev.T(); ++t)
                mean += (ev.mean_jacobians[j].col(t).adjoint() * inv * ev.mean_jacobians[k].col(t))(0, 0).real();
            const double tr = (inv * ev.scatter_derivs[j] * inv * ev.scatter_derivs[k]).trace().real();
            f(j, k) = 2.0 * mean + ev.T() * tr;
        }
    return f;
}

// A whole M x T matrix viewed as one MT-vector: mean vec(mu), scatter I_T (x) Sigma.
ModelEval stack_as_vector(const ModelEval& ev) {
    const int M = ev.M(), T = ev.T(), n = M * T;
    auto kron_identity = [&](const CMatrix& s) {
        CMatrix big = CMatrix::Zero(n, n);
        for (int t = 0; t < T; ++t) big.block(t * M, t * M, M, M) = s;
        return big;
    };
    auto vec = [&](const CMatrix& a) { return CMatrix(Eigen::Map<const CMatrix>(a.data(), n, 1)); };
    ModelEval out;
    out.means = vec(ev.means);
    out.scatter = kron_identity(ev.scatter);
    for (int j = 0; j < ev.p(); ++j) {
        out.mean_jacobians.push_back(vec(ev.mean_jacobians[j]));
        out.scatter_derivs.push_back(kron_identity(ev.scatter_derivs[j]));
    }
    return out;
}

// Scatter-only scalar model Sigma = theta.
ParametricModel scalar_variance(int T) {
    auto evaluator = [T](std::span<const double> th) {
        ModelEval ev;
        ev.means = CMatrix::Zero(1, T);
        ev.scatter = CMatrix::Constant(1, 1, th[0]);
        ev.mean_jacobians = {CMatrix::Zero(1, T)};
        ev.scatter_derivs = {CMatrix::Ones(1, 1)};
        return ev;
    };
    auto domain = [](std::span<const double> th) {
        if (!(th[0] > 0)) throw DomainError("variance must be > 0", 0);
    };
    return ParametricModel("scalar-variance", {"v"}, 1, T, evaluator, domain);
}

}  // namespace

TEST(FimGaussianSB, ScalarMean) {
    const auto model = make_scalar_mean(5);
    const auto f = fim_gaussian_sb(evaluate_model(model, model.params({0.3})), 5);
    ASSERT_EQ(f.p(), 1);
    EXPECT_DOUBLE_EQ(f.entries(0, 0), 10.0);
    EXPECT_EQ(f.family_tag, FimFamily::GaussianSB);
}

TEST(FimGaussianSB, Ar1VarianceEntry) {
    const auto model = make_ar1_scatter(2, 3);
    const auto f = fim_gaussian_sb(evaluate_model(model, model.params({0.0, 1.0})), 3);
    EXPECT_NEAR(f.entries(1, 1), 6.0, 1e-14);
}

TEST(FimGaussianSB, MatchesBruteForceOnBuiltins) {
    std::mt19937_64 gen(11);
    for (const auto& name : builtin_model_names()) {
        const auto model = model_for(name, 3);
        for (int i = 0; i < 5; ++i) {
            const auto ev = evaluate_model(model, model.params(random_theta(name, gen)));
            EXPECT_LT(rel_err(fim_gaussian_sb(ev, 3).entries, brute_force_sb(ev)), 1e-12) << name;
        }
    }
}

TEST(FimGaussianSB, SnapshotCountMismatchIsContractError) {
    const auto model = make_scalar_mean(5);
    EXPECT_THROW(fim_gaussian_sb(evaluate_model(model, model.params({0.0})), 4), ContractError);
}

TEST(FimEms, StudentScalarMean) {
    const auto model = make_scalar_mean(5);
    const auto ev = evaluate_model(model, model.params({0.0}));
    const auto m = modular_moments(DensityGenerator::student(3.0), 1, MomentMethod::Analytic);
    EXPECT_NEAR(fim_ems(ev, m, 5).entries(0, 0), 8.0, 1e-13);
}

TEST(FimEms, StudentScalarVariance) {
    for (double d : {0.7, 3.0, 12.0}) {
        for (double v : {0.5, 2.0}) {
            const auto model = scalar_variance(4);
            const auto ev = evaluate_model(model, model.params({v}));
            const auto m = modular_moments(DensityGenerator::student(d), 1, MomentMethod::Analytic);
            EXPECT_NEAR(fim_ems(ev, m, 4).entries(0, 0), 4.0 / (v * v) * d / (d + 2.0), 1e-12);
        }
    }
}

TEST(FimEms, WrongMomentDimensionIsContractError) {
    const auto model = make_ar1_scatter(3, 2);
    const auto ev = evaluate_model(model, model.params({0.3, 1.0}));
    const auto m = modular_moments(DensityGenerator::gaussian(), 2, MomentMethod::Analytic);
    EXPECT_THROW(fim_ems(ev, m, 2), ContractError);
    EXPECT_THROW(fim_evs(ev, m, 2), ContractError);
}

TEST(FimEvs, EqualsEmsAtSingleSnapshot) {
    std::mt19937_64 gen(3);
    const auto s = DensityGenerator::student(2.5);
    for (const auto& name : builtin_model_names()) {
        const auto model = model_for(name, 1);
        const auto ev = evaluate_model(model, model.params(random_theta(name, gen)));
        const auto m = modular_moments(s, ev.M(), MomentMethod::Analytic);
        EXPECT_LT(rel_err(fim_evs(ev, m, 1).entries, fim_ems(ev, m, 1).entries), 1e-12) << name;
    }
}

TEST(FimEvs, EqualsVectorFimOfStackedModel) {
    // Independent algebraic route: the EVS matrix is a single EC vector of dimension MT.
    std::mt19937_64 gen(5);
    for (const auto& gen_ : {DensityGenerator::gaussian(), DensityGenerator::student(3.0)}) {
        for (const auto& name : builtin_model_names()) {
            const auto model = model_for(name, 4);
            const auto ev = evaluate_model(model, model.params(random_theta(name, gen)));
            const auto m = modular_moments(gen_, ev.M() * 4, MomentMethod::Analytic);
            const auto stacked = stack_as_vector(ev);
            EXPECT_LT(rel_err(fim_evs(ev, m, 4).entries, fim_ems(stacked, m, 1).entries), 1e-11)
                << name << " " << gen_.tag();
        }
    }
}

TEST(FimProperties, GaussianReductionEmsAndEvs) {
    std::mt19937_64 gen(17);
    const auto g = DensityGenerator::gaussian();
    for (const auto& name : builtin_model_names()) {
        for (int T : {1, 3, 8}) {
            const auto model = model_for(name, T);
            for (int i = 0; i < 20; ++i) {
                const auto ev = evaluate_model(model, model.params(random_theta(name, gen)));
                const auto sb = fim_gaussian_sb(ev, T).entries;
                const auto ems = fim_ems(ev, modular_moments(g, ev.M(), MomentMethod::Analytic), T).entries;
                const auto evs = fim_evs(ev, modular_moments(g, ev.M() * T, MomentMethod::Analytic), T).entries;
                EXPECT_LT(rel_err(ems, sb), tol::kGaussianReduction) << name;
                EXPECT_LT(rel_err(evs, sb), tol::kGaussianReduction) << name;
            }
        }
    }
}

TEST(FimProperties, SymmetricExactlyAndPositiveSemidefinite) {
    std::mt19937_64 gen(23);
    const auto s = DensityGenerator::student(1.5);
    for (const auto& name : builtin_model_names()) {
        const auto model = model_for(name, 5);
        for (int i = 0; i < 10; ++i) {
            const auto ev = evaluate_model(model, model.params(random_theta(name, gen)));
            for (const auto& f : {fim_ems(ev, modular_moments(s, ev.M(), MomentMethod::Analytic), 5),
                                  fim_evs(ev, modular_moments(s, ev.M() * 5, MomentMethod::Analytic), 5)}) {
                EXPECT_TRUE((f.entries - f.entries.transpose()).isZero(0.0));
                Eigen::SelfAdjointEigenSolver<RMatrix> es(f.entries);
                EXPECT_GE(es.eigenvalues().minCoeff(), -tol::kFimPsdSlack * es.eigenvalues().maxCoeff());
            }
        }
    }
}

TEST(FimProperties, StudentConvergesToGaussian) {
    const auto s = DensityGenerator::student(1e6);
    const auto g = DensityGenerator::gaussian();
    std::mt19937_64 gen(29);
    for (const auto& name : builtin_model_names()) {
        const auto model = model_for(name, 4);
        const auto ev = evaluate_model(model, model.params(random_theta(name, gen)));
        const auto fs = fim_ems(ev, modular_moments(s, ev.M(), MomentMethod::Analytic), 4).entries;
        const auto fg = fim_ems(ev, modular_moments(g, ev.M(), MomentMethod::Analytic), 4).entries;
        EXPECT_LT(rel_err(fs, fg), tol::kStudentLimit) << name;
    }
}

TEST(FimProperties, UlaDoaBlockStructure) {
    const auto model = make_ula_doa(4, 6);
    const auto ev = evaluate_model(model, model.params({1.2, 0.4, 0.9, 1.7}));
    const auto s = DensityGenerator::student(3.0);
    const auto m = modular_moments(s, 4, MomentMethod::Analytic);
    const auto ems = fim_ems(ev, m, 6).entries;
    const auto sb = fim_gaussian_sb(ev, 6).entries;
    for (int j = 0; j < 3; ++j) {
        EXPECT_EQ(ems(j, 3), 0.0);
        EXPECT_EQ(ems(3, j), 0.0);
        for (int k = 0; k < 3; ++k) {
            if (sb(j, k) == 0.0) continue;
            EXPECT_NEAR(ems(j, k) / sb(j, k), m.e_q_phi2 / 4.0, 1e-12);
        }
    }
}

TEST(FimProperties, Ar1ScatterBlockIsNotProportional) {
    const auto model = make_ar1_scatter(3, 4);
    const auto ev = evaluate_model(model, model.params({0.5, 1.5}));
    const auto st = fim_ems(ev, modular_moments(DensityGenerator::student(3.0), 3, MomentMethod::Analytic), 4).entries;
    const auto ga = fim_gaussian_sb(ev, 4).entries;
    const RMatrix ratio = st.cwiseQuotient(ga);
    EXPECT_GT(ratio.maxCoeff() - ratio.minCoeff(), 1e-3);
}

TEST(CrbFromFim, ScalarAndDiagonal) {
    FimMatrix f;
    f.entries = RMatrix::Constant(1, 1, 10.0);
    EXPECT_NEAR(crb_from_fim(f).entries(0, 0), 0.1, 1e-16);
    f.entries = RVector((RVector(2) << 8.0, 6.0).finished()).asDiagonal();
    const auto c = crb_from_fim(f);
    EXPECT_NEAR(c.entries(0, 0), 0.125, 1e-16);
    EXPECT_NEAR(c.entries(1, 1), 1.0 / 6.0, 1e-16);
    EXPECT_NEAR(c.entries(0, 1), 0.0, 1e-16);
    EXPECT_NEAR(c.condition_estimate, 8.0 / 6.0, 1e-14);
}

TEST(CrbFromFim, UlaDoaVarianceBound) {
    const auto model = make_ula_doa(2, 4);
    const auto f = fim_gaussian_sb(evaluate_model(model, model.params({1.0, 0.0, 0.0, 1.0})), 4);
    const auto c = crb_from_fim(f);
    EXPECT_NEAR(c.entries(3, 3), 1.0 / 8.0, 1e-12);
    EXPECT_TRUE((c.entries - c.entries.transpose()).isZero(0.0));
    for (int j = 0; j < 4; ++j) EXPECT_GT(c.entries(j, j), 0.0);
    EXPECT_LT((c.entries * f.entries - RMatrix::Identity(4, 4)).norm(), 1e-10);
}

TEST(CrbFromFim, NonIdentifiableModelIsSingularityError) {
    // A = 0 removes all information about the phase and the frequency.
    const auto model = make_ula_doa(3, 2);
    const auto f = fim_gaussian_sb(evaluate_model(model, model.params({0.0, 0.1, 0.2, 1.0})), 2);
    try {
        crb_from_fim(f);
        FAIL() << "expected SingularityError";
    } catch (const SingularityError& e) {
        EXPECT_GE(e.condition_estimate(), tol::kMaxCondition);
    }
}

TEST(FimTerms, TracesMatchDefinition) {
    const auto model = make_ar1_scatter(4, 2);
    const auto ev = evaluate_model(model, model.params({-0.3, 2.0}));
    const auto t = fim_terms(ev);
    const CMatrix inv = ev.scatter.inverse();
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(t.trace[j], (inv * ev.scatter_derivs[j]).trace().real(), 1e-12);
    // Sigma_sigma2 = Sigma / sigma2, so tr(Sigma^{-1} Sigma_sigma2) = M / sigma2.
    EXPECT_NEAR(t.trace[1], 4.0 / 2.0, 1e-12);
}
