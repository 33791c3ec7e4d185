#pragma once

/**
 * @file sampling.hpp
 * @brief EC data generation, exact scores and the Monte Carlo oracles that check the closed forms.
 *
 * Data follow the stochastic representation x = mu + sqrt(Q) Sigma^{1/2} u with u uniform on the
 * complex unit sphere. EMS draws an independent (Q_t, u_t) per snapshot at dim M; EVS draws a
 * single Q at dim M*T and one u on the M*T sphere for the whole matrix.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "ecfim/constants.hpp"
#include "ecfim/errors.hpp"
#include "ecfim/fim.hpp"
#include "ecfim/generators.hpp"
#include "ecfim/linalg.hpp"
#include "ecfim/models.hpp"
#include "ecfim/quadrature.hpp"
#include "ecfim/rng.hpp"

namespace ecfim {

enum class DatasetKind { EMS, EVS };

inline const char* to_string(DatasetKind k) { return k == DatasetKind::EMS ? "EMS" : "EVS"; }

/// Draws a standard complex Gaussian vector and normalizes it.
inline CVector sample_sphere(int dim, RngStream& rng) {
    if (dim < 1) throw ContractError("sample_sphere: dim must be >= 1");
    CVector u(dim);
    double norm = 0.0;
    do {
        for (int i = 0; i < dim; ++i) u[i] = rng.complex_normal();
        norm = u.norm();
    } while (!(norm > 1e-150));
    return u / norm;
}

/// Inverse-CDF sampler for a tabulated modular density.
///
/// The CDF is tabulated on the generator grid refined four times, with cell masses from adaptive
/// quadrature. Within a cell it is the cubic Hermite interpolant whose end slopes are the exact
/// density values; draws invert that cubic by bisection.
class InverseCdfTable {
public:
    InverseCdfTable(const DensityGenerator& gen, int dim, const QuadratureConfig& cfg = {}) {
        const ModularDensity pdf(gen, dim, cfg);
        const auto& grid = gen.table().grid();
        constexpr int kRefine = 4;
        nodes_.reserve((grid.size() - 1) * kRefine + 1);
        for (std::size_t i = 0; i + 1 < grid.size(); ++i)
            for (int r = 0; r < kRefine; ++r) nodes_.push_back(grid[i] + (grid[i + 1] - grid[i]) * r / kRefine);
        nodes_.push_back(grid.back());

        cdf_.assign(nodes_.size(), 0.0);
        density_.assign(nodes_.size(), 0.0);
        for (std::size_t i = 0; i < nodes_.size(); ++i) density_[i] = pdf(nodes_[i]);
        for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
            const auto res = integrate(pdf, nodes_[i], nodes_[i + 1], cfg);
            if (!res.converged && res.abs_error > cfg.abs_tol * 100)
                throw SamplerError("inverse-CDF table: cell integral did not converge near q = " +
                                   std::to_string(nodes_[i]));
            cdf_[i + 1] = cdf_[i] + res.value;
        }
        const double total = cdf_.back();
        if (!(std::abs(total - 1.0) < 1e-6))
            throw SamplerError("inverse-CDF table not converged: total mass " + std::to_string(total));
        for (auto& c : cdf_) c /= total;
        for (auto& d : density_) d /= total;
    }

    double sample(RngStream& rng) const { return quantile(rng.uniform()); }

    double quantile(double u) const {
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        std::size_t k = it == cdf_.begin() ? 0 : static_cast<std::size_t>(it - cdf_.begin()) - 1;
        if (k >= nodes_.size() - 1) return nodes_.back();
        double lo = nodes_[k], hi = nodes_[k + 1];
        for (int iter = 0; iter < 64 && hi - lo > 1e-15 * std::max(1.0, hi); ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (cell_cdf(k, mid) <= u)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    }

private:
    double cell_cdf(std::size_t k, double q) const {
        const double h = nodes_[k + 1] - nodes_[k];
        const double s = (q - nodes_[k]) / h;
        const double s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * cdf_[k] + (s3 - 2 * s2 + s) * h * density_[k] + (-2 * s3 + 3 * s2) * cdf_[k + 1] +
               (s3 - s2) * h * density_[k + 1];
    }

    std::vector<double> nodes_;
    std::vector<double> cdf_;
    std::vector<double> density_;
};

/// Draws from the modular density of a generator at a fixed dimension.
class ModularSampler {
public:
    ModularSampler(const DensityGenerator& gen, int dim, const QuadratureConfig& cfg = {})
        : family_(gen.family()), dim_(dim) {
        if (dim < 1) throw ContractError("ModularSampler: dim must be >= 1");
        if (family_ == GeneratorFamily::Student) dof_ = gen.dof();
        if (family_ == GeneratorFamily::Tabulated) table_.emplace_back(gen, dim, cfg);
    }

    int dim() const noexcept { return dim_; }

    double operator()(RngStream& rng) const {
        switch (family_) {
            case GeneratorFamily::Gaussian: return rng.gamma(dim_);
            case GeneratorFamily::Student: {
                const double g1 = rng.gamma(dim_);
                const double g2 = rng.gamma(dof_);
                return dof_ * g1 / g2;
            }
            case GeneratorFamily::Tabulated: return table_.front().sample(rng);
        }
        return 0.0;
    }

private:
    GeneratorFamily family_;
    int dim_;
    double dof_ = 0.0;
    std::vector<InverseCdfTable> table_;
};

inline double sample_modular(const DensityGenerator& gen, int dim, RngStream& rng, const QuadratureConfig& cfg = {}) {
    return ModularSampler(gen, dim, cfg)(rng);
}

struct EcDataset {
    CMatrix snapshots;  // M x T
    DatasetKind kind = DatasetKind::EMS;
    std::uint64_t seed = 0;
    std::uint64_t stream_index = 0;
    std::string generator_tag;
};

/// Precomputed state for repeated draws of EC datasets at one parameter point.
class DatasetSampler {
public:
    DatasetSampler(const ModelEval& eval, const DensityGenerator& gen, DatasetKind kind,
                   const QuadratureConfig& cfg = {})
        : means_(eval.means),
          root_(hermitian_sqrt(eval.scatter)),
          kind_(kind),
          modular_(gen, kind == DatasetKind::EMS ? eval.M() : eval.M() * eval.T(), cfg) {}

    CMatrix operator()(RngStream& rng) const {
        const auto M = means_.rows(), T = means_.cols();
        CMatrix noise(M, T);
        if (kind_ == DatasetKind::EMS) {
            for (Eigen::Index t = 0; t < T; ++t) {
                const double q = modular_(rng);
                noise.col(t) = std::sqrt(q) * sample_sphere(static_cast<int>(M), rng);
            }
        } else {
            const double q = modular_(rng);
            const CVector u = sample_sphere(static_cast<int>(M * T), rng);
            noise = std::sqrt(q) * Eigen::Map<const CMatrix>(u.data(), M, T);
        }
        return means_ + root_ * noise;
    }

private:
    CMatrix means_;
    CMatrix root_;
    DatasetKind kind_;
    ModularSampler modular_;
};

inline EcDataset sample_dataset(const ParametricModel& model, const ParamVector& theta, const DensityGenerator& gen,
                                int T, DatasetKind kind, RngStream& rng, const QuadratureConfig& cfg = {}) {
    if (T != model.T())
        throw ContractError("sample_dataset: T = " + std::to_string(T) + " does not match model T = " +
                            std::to_string(model.T()));
    const ModelEval eval = evaluate_model(model, theta);
    EcDataset out;
    out.snapshots = DatasetSampler(eval, gen, kind, cfg)(rng);
    out.kind = kind;
    out.seed = rng.master_seed();
    out.stream_index = rng.stream_index();
    out.generator_tag = gen.tag();
    return out;
}

/// Score of the log-likelihood for fixed (model evaluation, generator, kind).
///
/// With residuals r_t = x_t - mu_t and w_t = Sigma^{-1} r_t:
///   eta_t            = r_t^H w_t
///   d eta_t / d th_j = -2 Re{dmu_t/dth_j^H w_t} - w_t^H Sigma_j w_t
///   EMS: s_j = -T tr(Sigma^{-1} Sigma_j) + sum_t phi(eta_t) d eta_t/d th_j       (phi at dim M)
///   EVS: s_j = -T tr(Sigma^{-1} Sigma_j) + phi(sum_t eta_t) sum_t d eta_t/d th_j (phi at dim MT)
class ScoreEvaluator {
public:
    ScoreEvaluator(const ModelEval& eval, const DensityGenerator& gen, DatasetKind kind)
        : eval_(&eval), gen_(&gen), kind_(kind), llt_(hermitian_factor(eval.scatter)) {
        trace_.resize(eval.p());
        for (int j = 0; j < eval.p(); ++j) trace_[j] = llt_.solve(eval.scatter_derivs[j]).trace().real();
    }

    RVector operator()(const CMatrix& x) const {
        const ModelEval& ev = *eval_;
        const int M = ev.M(), T = ev.T(), p = ev.p();
        if (x.rows() != M || x.cols() != T)
            throw ContractError("score: data is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                                ", model expects " + std::to_string(M) + "x" + std::to_string(T));
        const CMatrix r = x - ev.means;
        const CMatrix w = llt_.solve(r);
        const RVector eta = r.cwiseProduct(w.conjugate()).colwise().sum().real().transpose();

        RVector score = -static_cast<double>(T) * trace_;
        if (kind_ == DatasetKind::EMS) {
            RVector phi(T);
            for (int t = 0; t < T; ++t) phi[t] = gen_->phi(std::max(eta[t], 0.0), M);
            for (int j = 0; j < p; ++j) score[j] += phi.dot(deta(w, j));
        } else {
            const double phi = gen_->phi(std::max(eta.sum(), 0.0), M * T);
            for (int j = 0; j < p; ++j) score[j] += phi * deta(w, j).sum();
        }
        return score;
    }

    DatasetKind kind() const noexcept { return kind_; }

private:
    // d eta_t / d theta_j for all t.
    RVector deta(const CMatrix& w, int j) const {
        const ModelEval& ev = *eval_;
        const RVector mean_part = ev.mean_jacobians[j].cwiseProduct(w.conjugate()).colwise().sum().real().transpose();
        const CMatrix sw = ev.scatter_derivs[j] * w;
        const RVector scatter_part = w.cwiseProduct(sw.conjugate()).colwise().sum().real().transpose();
        return -2.0 * mean_part - scatter_part;
    }

    const ModelEval* eval_;
    const DensityGenerator* gen_;
    DatasetKind kind_;
    Eigen::LLT<CMatrix> llt_;
    RVector trace_;
};

inline RVector score_ems(const ModelEval& eval, const DensityGenerator& gen, const EcDataset& x) {
    if (x.kind != DatasetKind::EMS) throw ContractError("score_ems: dataset kind is EVS");
    return ScoreEvaluator(eval, gen, DatasetKind::EMS)(x.snapshots);
}

inline RVector score_evs(const ModelEval& eval, const DensityGenerator& gen, const EcDataset& x) {
    if (x.kind != DatasetKind::EVS) throw ContractError("score_evs: dataset kind is EMS");
    return ScoreEvaluator(eval, gen, DatasetKind::EVS)(x.snapshots);
}

/// Log-likelihood -T log det Sigma + sum_t log g(eta_t) (EMS) or + log g(sum_t eta_t) (EVS).
/// With `include_constant`, adds T log C_{M,g} (EMS) or log C_{MT,g} (EVS).
inline double log_likelihood(const ModelEval& eval, const DensityGenerator& gen, const CMatrix& x, DatasetKind kind,
                             bool include_constant = false, const QuadratureConfig& cfg = {}) {
    const int M = eval.M(), T = eval.T();
    if (x.rows() != M || x.cols() != T) throw ContractError("log_likelihood: data dimensions do not match model");
    const auto llt = hermitian_factor(eval.scatter);
    const CMatrix r = x - eval.means;
    const CMatrix w = llt.solve(r);
    const RVector eta = r.cwiseProduct(w.conjugate()).colwise().sum().real().transpose();
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().real().array().log().sum();

    double ll = -T * log_det;
    if (kind == DatasetKind::EMS) {
        for (int t = 0; t < T; ++t) ll += gen.log_g(std::max(eta[t], 0.0), M);
        if (include_constant) ll += T * log_normalizer(gen, M, cfg);
    } else {
        ll += gen.log_g(std::max(eta.sum(), 0.0), M * T);
        if (include_constant) ll += log_normalizer(gen, M * T, cfg);
    }
    return ll;
}

/// Monte Carlo estimate of the FIM as the mean score outer product, against the closed form.
struct McReport {
    FimMatrix empirical;
    FimMatrix analytic;
    long n_trials = 0;
    double max_rel_err = 0.0;
    RMatrix per_entry_stderr;
    RVector score_mean;
    RVector score_mean_stderr;

    double max_fim_z = 0.0;    // max |empirical - analytic| / stderr
    double max_score_z = 0.0;  // max |score mean| / stderr
    bool fim_consistent = false;
    bool score_zero_mean = false;
    bool inconclusive = false;

    bool passed() const { return fim_consistent && score_zero_mean; }
};

struct McOptions {
    unsigned threads = 0;  // 0: hardware concurrency
    QuadratureConfig quadrature{};
};

namespace detail {

inline unsigned resolve_threads(unsigned requested, long work) {
    unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::clamp<long>(n, 1, std::max<long>(1, work)));
}

}  // namespace detail

/// Trial i draws its dataset from RngStream(master_seed, i). Scores are stored per trial and
/// reduced in trial order, so the report is bit-identical for any thread count.
inline McReport empirical_fim(const ParametricModel& model, const ParamVector& theta, const DensityGenerator& gen,
                              int T, DatasetKind kind, long n_trials, std::uint64_t master_seed,
                              const McOptions& options = {}) {
    if (n_trials < tol::kMinTrials)
        throw ContractError("empirical_fim: n_trials must be at least " + std::to_string(tol::kMinTrials));
    if (T != model.T())
        throw ContractError("empirical_fim: T = " + std::to_string(T) + " does not match model T = " +
                            std::to_string(model.T()));

    const ModelEval eval = evaluate_model(model, theta);
    const int p = eval.p();
    const DatasetSampler sampler(eval, gen, kind, options.quadrature);
    const ScoreEvaluator score(eval, gen, kind);

    RMatrix scores(p, n_trials);
    auto worker = [&](long begin, long end) {
        for (long i = begin; i < end; ++i) {
            RngStream rng(master_seed, static_cast<std::uint64_t>(i));
            scores.col(i) = score(sampler(rng));
        }
    };
    const unsigned threads = detail::resolve_threads(options.threads, n_trials);
    if (threads == 1) {
        worker(0, n_trials);
    } else {
        std::vector<std::jthread> pool;
        const long chunk = (n_trials + threads - 1) / threads;
        for (unsigned k = 0; k < threads; ++k) {
            const long b = k * chunk, e = std::min<long>(n_trials, b + chunk);
            if (b < e) pool.emplace_back(worker, b, e);
        }
    }

    const double n = static_cast<double>(n_trials);
    McReport rep;
    rep.n_trials = n_trials;

    rep.score_mean = RVector::Zero(p);
    for (long i = 0; i < n_trials; ++i) rep.score_mean += scores.col(i);
    rep.score_mean /= n;
    RVector score_var = RVector::Zero(p);
    for (long i = 0; i < n_trials; ++i) score_var += (scores.col(i) - rep.score_mean).array().square().matrix();
    rep.score_mean_stderr = (score_var / (n - 1.0) / n).cwiseSqrt();

    RMatrix mean = RMatrix::Zero(p, p);
    for (long i = 0; i < n_trials; ++i) mean.noalias() += scores.col(i) * scores.col(i).transpose();
    mean /= n;
    RMatrix var = RMatrix::Zero(p, p);
    for (long i = 0; i < n_trials; ++i) {
        const RMatrix d = scores.col(i) * scores.col(i).transpose() - mean;
        var += d.cwiseProduct(d);
    }
    rep.per_entry_stderr = (var / (n - 1.0) / n).cwiseSqrt();
    rep.empirical.entries = detail::mirror_upper(mean);
    rep.empirical.family_tag = kind == DatasetKind::EMS ? FimFamily::EMS : FimFamily::EVS;

    const int dim = kind == DatasetKind::EMS ? eval.M() : eval.M() * eval.T();
    const ModularMoments moments = default_moments(gen, dim, options.quadrature);
    rep.analytic = kind == DatasetKind::EMS ? fim_ems(eval, moments, T) : fim_evs(eval, moments, T);
    rep.empirical.moments_used = moments;

    const RMatrix& an = rep.analytic.entries;
    const double scale = an.cwiseAbs().maxCoeff();
    const RMatrix diff = (rep.empirical.entries - an).cwiseAbs();
    rep.max_rel_err = scale > 0.0 ? diff.maxCoeff() / scale : diff.maxCoeff();

    rep.fim_consistent = true;
    for (int j = 0; j < p; ++j) {
        for (int k = j; k < p; ++k) {
            const double se = rep.per_entry_stderr(j, k);
            if (se > 0.0) {
                const double z = diff(j, k) / se;
                rep.max_fim_z = std::max(rep.max_fim_z, z);
                if (z > tol::kMcStderrGate) rep.fim_consistent = false;
            } else if (diff(j, k) > 1e-12 * std::max(1.0, scale)) {
                rep.fim_consistent = false;
            }
            if (std::abs(an(j, k)) > 1e-12 * scale && se > tol::kMcInconclusiveFraction * std::abs(an(j, k)))
                rep.inconclusive = true;
        }
    }
    rep.score_zero_mean = true;
    for (int j = 0; j < p; ++j) {
        const double se = rep.score_mean_stderr[j];
        const double m = std::abs(rep.score_mean[j]);
        if (se > 0.0) {
            rep.max_score_z = std::max(rep.max_score_z, m / se);
            if (m > tol::kMcStderrGate * se) rep.score_zero_mean = false;
        } else if (m > 1e-12) {
            rep.score_zero_mean = false;
        }
    }
    return rep;
}

/// (tr A tr B + tr AB) / (dim (dim + 1)) = E[(u^H A u)(u^H B u)] for u uniform on the complex sphere.
inline double quartic_sphere_moment(const CMatrix& a, const CMatrix& b) {
    const double dim = static_cast<double>(a.rows());
    return (a.trace().real() * b.trace().real() + trace_of_product(a, b)) / (dim * (dim + 1.0));
}

struct QuarticOracleReport {
    double quartic_mean = 0.0;
    double quartic_stderr = 0.0;
    double closed_form = 0.0;
    cdouble odd_mean{};          // estimate of E[(u^H a)(u^H B u)], which vanishes
    double odd_stderr_re = 0.0;
    double odd_stderr_im = 0.0;
    long n_trials = 0;
};

/// Monte Carlo check of the sphere identities behind the trace terms: the quartic moment
/// E[(u^H A u)(u^H B u)] and the odd moment E[(u^H a)(u^H B u)] = 0.
inline QuarticOracleReport quartic_sphere_oracle(const CMatrix& a, const CMatrix& b, const CVector& vec, long n_trials,
                                                 RngStream& rng) {
    const auto dim = a.rows();
    if (a.cols() != dim || b.rows() != dim || b.cols() != dim || vec.size() != dim)
        throw ContractError("quartic_sphere_oracle: dimension mismatch");
    if (hermitian_defect(a) > 1e-12 || hermitian_defect(b) > 1e-12)
        throw ContractError("quartic_sphere_oracle: A and B must be Hermitian");
    if (n_trials < 2) throw ContractError("quartic_sphere_oracle: need at least two trials");

    double s = 0.0, s2 = 0.0, ore = 0.0, ore2 = 0.0, oim = 0.0, oim2 = 0.0;
    for (long i = 0; i < n_trials; ++i) {
        const CVector u = sample_sphere(static_cast<int>(dim), rng);
        const double qa = u.dot(a * u).real();
        const cdouble qb = u.dot(b * u);
        const double v = qa * qb.real();
        s += v;
        s2 += v * v;
        const cdouble odd = u.dot(vec) * qb.real();
        ore += odd.real();
        ore2 += odd.real() * odd.real();
        oim += odd.imag();
        oim2 += odd.imag() * odd.imag();
    }
    const double n = static_cast<double>(n_trials);
    auto stderr_of = [n](double sum, double sum2) {
        const double m = sum / n;
        return std::sqrt(std::max(0.0, (sum2 / n - m * m)) / (n - 1.0));
    };
    QuarticOracleReport rep;
    rep.n_trials = n_trials;
    rep.quartic_mean = s / n;
    rep.quartic_stderr = stderr_of(s, s2);
    rep.closed_form = quartic_sphere_moment(a, b);
    rep.odd_mean = {ore / n, oim / n};
    rep.odd_stderr_re = stderr_of(ore, ore2);
    rep.odd_stderr_im = stderr_of(oim, oim2);
    return rep;
}

inline QuarticOracleReport quartic_sphere_oracle(const CMatrix& a, const CMatrix& b, long n_trials, RngStream& rng) {
    const auto dim = a.rows();
    return quartic_sphere_oracle(a, b, CVector::Ones(dim) / std::sqrt(static_cast<double>(dim)), n_trials, rng);
}

}  // namespace ecfim
