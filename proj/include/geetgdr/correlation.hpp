#pragma once
#include <geetgdr/types.hpp>
#include <algorithm>
#include <cmath>
#include <string>

namespace geetgdr {

/// Smallest eigenvalue tolerated before a correlation matrix is repaired.
inline constexpr double min_correlation_eigenvalue = 1e-8;
/// Floor applied to per-time variance estimates.
inline constexpr double min_variance = 1e-12;

/**
 * Working correlation R(alpha). `alpha` is used by exchangeable and ar1,
 * `alpha_matrix` by unstructured; independent carries nothing.
 */
struct WorkingCorrelation
{
    CorrelationKind kind = CorrelationKind::independent;
    double alpha = 0.0;
    Matrix alpha_matrix;

    static WorkingCorrelation independent() { return {}; }
    static WorkingCorrelation exchangeable(double a) { return {CorrelationKind::exchangeable, a, {}}; }
    static WorkingCorrelation ar1(double a) { return {CorrelationKind::ar1, a, {}}; }
    static WorkingCorrelation unstructured(Matrix r)
    {
        return {CorrelationKind::unstructured, 0.0, std::move(r)};
    }
};

/// Per-time outcome variances sigma_j^2; A = diag(sigma_sq) for every subject.
struct VarianceProfile
{
    Vector sigma_sq;
};

inline Matrix build_correlation(const WorkingCorrelation& wc, Index t)
{
    switch (wc.kind) {
        case CorrelationKind::independent:
            return Matrix::Identity(t, t);
        case CorrelationKind::exchangeable: {
            Matrix r = Matrix::Constant(t, t, wc.alpha);
            r.diagonal().setOnes();
            return r;
        }
        case CorrelationKind::ar1: {
            Matrix r(t, t);
            for (Index j = 0; j < t; ++j) {
                for (Index k = 0; k < t; ++k) {
                    r(j, k) = std::pow(wc.alpha, static_cast<double>(std::abs(j - k)));
                }
            }
            return r;
        }
        case CorrelationKind::unstructured:
            if (wc.alpha_matrix.rows() != t || wc.alpha_matrix.cols() != t) {
                throw validation_error({"unstructured correlation is " +
                                        std::to_string(wc.alpha_matrix.rows()) + " x " +
                                        std::to_string(wc.alpha_matrix.cols()) + ", expected " +
                                        std::to_string(t) + " x " + std::to_string(t)});
            }
            return wc.alpha_matrix;
    }
    throw error("unreachable correlation kind");
}

inline bool is_symmetric(const Matrix& r, double tol = 1e-10)
{
    return r.rows() == r.cols() && (r - r.transpose()).cwiseAbs().maxCoeff() <= tol;
}

/// Floors eigenvalues at min_correlation_eigenvalue and rescales to unit diagonal.
inline Matrix repair_correlation(const Matrix& r)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(r);
    Vector lambda = es.eigenvalues().cwiseMax(min_correlation_eigenvalue);
    Matrix m = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
    Vector scale = m.diagonal().cwiseSqrt().cwiseInverse();
    Matrix out = scale.asDiagonal() * m * scale.asDiagonal();
    out = 0.5 * (out + out.transpose());
    out.diagonal().setOnes();
    return out;
}

inline bool needs_repair(const Matrix& r)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(r, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() < min_correlation_eigenvalue;
}

struct CorrelationInverse
{
    Matrix inverse;
    Matrix used; // the (possibly repaired) matrix that was inverted
    bool repaired = false;
};

inline CorrelationInverse invert_correlation(const Matrix& r)
{
    if (!is_symmetric(r)) throw validation_error({"correlation matrix is not symmetric"});
    CorrelationInverse out;
    out.repaired = needs_repair(r);
    out.used = out.repaired ? repair_correlation(r) : r;
    Eigen::LLT<Matrix> llt(out.used);
    if (llt.info() != Eigen::Success) {
        throw numerical_error("correlation matrix factorization failed after repair");
    }
    out.inverse = llt.solve(Matrix::Identity(r.rows(), r.cols()));
    out.inverse = 0.5 * (out.inverse + out.inverse.transpose());
    return out;
}

/// sigma_j^2 = mean of squared raw residuals in column j, floored.
inline VarianceProfile estimate_variances(const Matrix& residuals)
{
    const auto n = static_cast<double>(residuals.rows());
    Vector s = (residuals.array().square().colwise().sum() / n).transpose();
    return {s.cwiseMax(min_variance)};
}

inline double clamp_alpha(CorrelationKind kind, double alpha, Index t, double eps)
{
    double lo = -1.0 + eps;
    double hi = 1.0 - eps;
    if (kind == CorrelationKind::exchangeable) lo = -1.0 / static_cast<double>(t - 1) + eps;
    return std::clamp(alpha, lo, hi);
}

/**
 * Residual moment estimators on standardized residuals e_ij = r_ij / sigma_j.
 * exchangeable: mean over all within-subject pairs j < j';
 * ar1: mean over adjacent pairs; unstructured: (1/n) sum_i e_ij e_ij' with
 * unit diagonal, repaired to positive definite when needed.
 */
inline WorkingCorrelation estimate_alpha(const Matrix& std_residuals, CorrelationKind kind,
                                         double eps = 0.01, bool* repaired = nullptr)
{
    const auto n = std_residuals.rows();
    const auto t = std_residuals.cols();
    if (repaired) *repaired = false;
    switch (kind) {
        case CorrelationKind::independent:
            return WorkingCorrelation::independent();
        case CorrelationKind::exchangeable: {
            // sum_{j<j'} e_j e_j' = ((sum_j e_j)^2 - sum_j e_j^2) / 2
            const double total = std_residuals.rowwise().sum().squaredNorm();
            const double diag = std_residuals.squaredNorm();
            const double pairs = static_cast<double>(n) * static_cast<double>(t * (t - 1)) / 2.0;
            const double a = 0.5 * (total - diag) / pairs;
            return WorkingCorrelation::exchangeable(clamp_alpha(kind, a, t, eps));
        }
        case CorrelationKind::ar1: {
            const double s = (std_residuals.leftCols(t - 1).array() *
                              std_residuals.rightCols(t - 1).array())
                                 .sum();
            const double a = s / (static_cast<double>(n) * static_cast<double>(t - 1));
            return WorkingCorrelation::ar1(clamp_alpha(kind, a, t, eps));
        }
        case CorrelationKind::unstructured: {
            Matrix r = (std_residuals.transpose() * std_residuals) / static_cast<double>(n);
            r = 0.5 * (r + r.transpose());
            r.diagonal().setOnes();
            if (needs_repair(r)) {
                r = repair_correlation(r);
                if (repaired) *repaired = true;
            }
            return WorkingCorrelation::unstructured(std::move(r));
        }
    }
    throw error("unreachable correlation kind");
}

/// Divides each residual column by sqrt(sigma_j^2).
inline Matrix standardize_residuals(const Matrix& residuals, const VarianceProfile& v)
{
    return (residuals.array().rowwise() / v.sigma_sq.transpose().array().sqrt()).matrix();
}

} // namespace geetgdr
