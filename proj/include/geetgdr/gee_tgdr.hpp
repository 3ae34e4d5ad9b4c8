#pragma once
#include <geetgdr/correlation.hpp>
#include <geetgdr/dataset.hpp>
#include <geetgdr/selection.hpp>
#include <geetgdr/tgdr.hpp>
#include <geetgdr/types.hpp>
#include <functional>
#include <string>
#include <vector>

namespace geetgdr {

/// t x (P+1) coefficients; column 0 holds the per-time intercepts.
using CoefficientMatrix = Matrix;
/// t x (P+1) negative quasi-likelihood gradient (factor 2 dropped).
using GradientMatrix = Matrix;

struct FitResult
{
    CoefficientMatrix beta;
    WorkingCorrelation correlation;
    VarianceProfile variances;
    std::vector<double> ql_trace; // k_used + 1 entries
    Selection selection;
    int k_used = 0;
    int repairs = 0;
};

/// Snapshot handed to a FitObserver after each update. Nuisance fields are the
/// values the gradient was computed under (before re-estimation).
struct IterationState
{
    int iteration; // 1-based
    const LongitudinalDataset& data;
    const Matrix& beta_before;
    const Matrix& beta_after;
    const GradientMatrix& gradient;
    const Mask& mask; // t x P
    const Matrix& correlation;
    const VarianceProfile& variances;
};

using FitObserver = std::function<void(const IterationState&)>;

/// mu_ij = beta_j0 + sum_p beta_jp x_ip
inline Vector mean_response(const CoefficientMatrix& beta, const Vector& x)
{
    if (beta.cols() != x.size() + 1) {
        throw validation_error({"dimension mismatch: beta has " + std::to_string(beta.cols()) +
                                " columns for " + std::to_string(x.size()) + " covariates"});
    }
    return beta.col(0) + beta.rightCols(x.size()) * x;
}

/// n x t matrix of fitted means.
inline Matrix fitted_means(const CoefficientMatrix& beta, const Matrix& x)
{
    Matrix mu = x * beta.rightCols(x.cols()).transpose();
    mu.rowwise() += beta.col(0).transpose();
    return mu;
}

inline Matrix residuals(const LongitudinalDataset& ds, const CoefficientMatrix& beta)
{
    return ds.outcomes() - fitted_means(beta, ds.covariates());
}

namespace detail {

inline void check_fit_dims(const LongitudinalDataset& ds, const CoefficientMatrix& beta,
                           const Matrix& r, const VarianceProfile& v)
{
    const auto t = ds.n_times();
    if (beta.rows() != t || beta.cols() != ds.n_features() + 1 || r.rows() != t ||
        r.cols() != t || v.sigma_sq.size() != t) {
        throw validation_error({"dimension mismatch between dataset, coefficients, "
                                "correlation and variances"});
    }
    if (!(v.sigma_sq.array() > 0.0).all()) {
        throw validation_error({"variances must be positive"});
    }
}

/// V^{-1} = A^{-1/2} R^{-1} A^{-1/2}
inline Matrix weight_matrix(const Matrix& r_inverse, const VarianceProfile& v)
{
    const Vector s = v.sigma_sq.cwiseSqrt().cwiseInverse();
    return s.asDiagonal() * r_inverse * s.asDiagonal();
}

/// g = n^{-1} [sum_i w_i, W^T X] with W = E V^{-1}.
inline GradientMatrix gradient_from_weighted(const Matrix& x, const Matrix& w)
{
    const double n = static_cast<double>(x.rows());
    GradientMatrix g(w.cols(), x.cols() + 1);
    g.col(0) = w.colwise().sum().transpose() / n;
    g.rightCols(x.cols()) = w.transpose() * x / n;
    return g;
}

/// Under a diagonal working correlation, E V^{-1} reduces to column scaling.
inline Matrix weighted_residuals(const Matrix& e, const Matrix& r_inverse,
                                 const VarianceProfile& v, bool diagonal)
{
    if (diagonal) {
        return (e.array().rowwise() / v.sigma_sq.transpose().array()).matrix();
    }
    return e * weight_matrix(r_inverse, v);
}

inline double quasi_likelihood_from_residuals(const Matrix& e, const Matrix& r,
                                              const VarianceProfile& v)
{
    const Vector s = v.sigma_sq.cwiseSqrt();
    Matrix cov = s.asDiagonal() * r * s.asDiagonal();
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) {
        cov = s.asDiagonal() * repair_correlation(r) * s.asDiagonal();
        llt.compute(cov);
        if (llt.info() != Eigen::Success) {
            throw numerical_error("covariance factorization failed after repair");
        }
    }
    const Matrix z = llt.matrixL().solve(e.transpose());
    return z.squaredNorm() / static_cast<double>(e.rows());
}

} // namespace detail

/// QL = n^{-1} sum_i r_i^T V^{-1} r_i, evaluated through a Cholesky solve.
inline double quasi_likelihood(const LongitudinalDataset& ds, const CoefficientMatrix& beta,
                               const Matrix& r, const VarianceProfile& v)
{
    detail::check_fit_dims(ds, beta, r, v);
    return detail::quasi_likelihood_from_residuals(residuals(ds, beta), r, v);
}

inline GradientMatrix ql_gradient(const LongitudinalDataset& ds, const CoefficientMatrix& beta,
                                  const Matrix& r, const VarianceProfile& v)
{
    detail::check_fit_dims(ds, beta, r, v);
    const auto inv = invert_correlation(r);
    const Matrix w = residuals(ds, beta) * detail::weight_matrix(inv.inverse, v);
    return detail::gradient_from_weighted(ds.covariates(), w);
}

/// Row-wise threshold over the feature columns of g (intercept column excluded).
inline Mask per_time_threshold(const GradientMatrix& g, double tau)
{
    const auto p = g.cols() - 1;
    Mask m(g.rows(), p);
    for (Index j = 0; j < g.rows(); ++j) {
        m.row(j) = threshold_mask(g.row(j).tail(p).transpose(), tau).transpose();
    }
    return m;
}

/// Per-time sample variances (ddof = 1), floored.
inline VarianceProfile initial_variances(const Matrix& y)
{
    const double n = static_cast<double>(y.rows());
    const Matrix centered = y.rowwise() - y.colwise().mean();
    Vector s = (centered.array().square().colwise().sum() / (n - 1.0)).transpose();
    return {s.cwiseMax(min_variance)};
}

/**
 * GEE-TGDR. Starting from beta = 0, R = I and sample variances, each of the
 * config.k_max iterations
 *   1. computes the quasi-likelihood gradient under current nuisances,
 *   2. thresholds each time row against its own maximum,
 *   3. steps beta <- beta + dv * g (.) f (intercepts always move),
 *   4. re-estimates sigma^2 and alpha from the new residuals.
 * The observer, if given, sees every iteration before step 4 takes effect.
 */
inline FitResult gee_tgdr_fit(const LongitudinalDataset& ds, const FitConfig& config,
                              const FitObserver& observer = {})
{
    validate_config(config);
    const auto t = ds.n_times();
    const auto p = ds.n_features();
    const auto& x = ds.covariates();
    const bool diagonal = config.structure == CorrelationKind::independent;

    FitResult fit;
    fit.beta = Matrix::Zero(t, p + 1);
    fit.correlation.kind = config.structure;
    if (config.structure == CorrelationKind::unstructured) {
        fit.correlation.alpha_matrix = Matrix::Identity(t, t);
    }
    fit.variances = config.estimate_variances ? initial_variances(ds.outcomes())
                                              : VarianceProfile{Vector::Ones(t)};
    Matrix r = Matrix::Identity(t, t);
    Matrix r_inverse = Matrix::Identity(t, t);

    Matrix e = ds.outcomes() - fitted_means(fit.beta, x);
    fit.ql_trace.push_back(detail::quasi_likelihood_from_residuals(e, r, fit.variances));

    for (int k = 1; k <= config.k_max; ++k) {
        const Matrix w = detail::weighted_residuals(e, r_inverse, fit.variances, diagonal);
        const GradientMatrix g = detail::gradient_from_weighted(x, w);
        if (!g.allFinite()) throw divergence_error("non-finite gradient", k);
        const Mask f = per_time_threshold(g, config.tau);

        const Matrix before = fit.beta;
        fit.beta.col(0) += config.dv * g.col(0);
        for (Index j = 0; j < t; ++j) {
            for (Index q = 0; q < p; ++q) {
                if (f(j, q)) fit.beta(j, q + 1) += config.dv * g(j, q + 1);
            }
        }
        fit.k_used = k;
        if (observer) {
            observer(IterationState{k, ds, before, fit.beta, g, f, r, fit.variances});
        }

        e = ds.outcomes() - fitted_means(fit.beta, x);
        if (config.estimate_variances) fit.variances = estimate_variances(e);
        if (!diagonal) {
            bool repaired = false;
            fit.correlation = estimate_alpha(standardize_residuals(e, fit.variances),
                                             config.structure, config.alpha_floor_epsilon,
                                             &repaired);
            r = build_correlation(fit.correlation, t);
            const auto inv = invert_correlation(r);
            if (repaired || inv.repaired) ++fit.repairs;
            r = inv.used;
            r_inverse = inv.inverse;
        }
        const double ql = detail::quasi_likelihood_from_residuals(e, r, fit.variances);
        if (!std::isfinite(ql)) throw divergence_error("non-finite quasi-likelihood", k);
        fit.ql_trace.push_back(ql);
    }
    fit.selection = select_features(fit.beta, config.selection_tolerance);
    return fit;
}

} // namespace geetgdr
