#pragma once
#include <geetgdr/dataset.hpp>
#include <geetgdr/types.hpp>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace geetgdr {

/// Univariate TGDR result. beta(0) is the intercept.
struct UnivariateFit
{
    Vector beta;
    std::vector<double> response_trace; // k_used + 1 entries
    int k_used = 0;
};

namespace detail {

inline void check_univariate_dims(const Matrix& x, const Vector& y, const Vector& beta)
{
    if (x.rows() != y.size() || beta.size() != x.cols() + 1) {
        throw validation_error({"dimension mismatch: X is " + std::to_string(x.rows()) + " x " +
                                std::to_string(x.cols()) + ", y has " +
                                std::to_string(y.size()) + " entries, beta has " +
                                std::to_string(beta.size())});
    }
}

inline Vector univariate_residuals(const Matrix& x, const Vector& y, const Vector& beta)
{
    Vector mu = x * beta.tail(x.cols());
    mu.array() += beta(0);
    return y - mu;
}

} // namespace detail

/// Res(beta) = n^{-1} sum_i (y_i - beta_0 - x_i^T beta)^2
inline double response(const Matrix& x, const Vector& y, const Vector& beta)
{
    detail::check_univariate_dims(x, y, beta);
    return detail::univariate_residuals(x, y, beta).squaredNorm() / static_cast<double>(x.rows());
}

/// Negative gradient of Res without the factor 2; entry 0 is the intercept.
inline Vector gradient(const Matrix& x, const Vector& y, const Vector& beta)
{
    detail::check_univariate_dims(x, y, beta);
    const Vector r = detail::univariate_residuals(x, y, beta);
    const double n = static_cast<double>(x.rows());
    Vector g(beta.size());
    g(0) = r.sum() / n;
    g.tail(x.cols()) = x.transpose() * r / n;
    return g;
}

/// f_p = |g_p| >= tau * max_l |g_l|. An all-zero gradient passes everything.
template <class Derived>
MaskVector threshold_mask(const Eigen::MatrixBase<Derived>& g, double tau)
{
    const double cutoff = tau * g.cwiseAbs().maxCoeff();
    MaskVector mask(g.size());
    for (Index p = 0; p < g.size(); ++p) mask(p) = std::abs(g(p)) >= cutoff;
    return mask;
}

/// Called after each update with the iteration index (1-based) and new beta.
using UnivariateObserver = std::function<void(int, const Vector&)>;

/**
 * Threshold gradient descent for one continuous outcome. Starts from the null
 * model and runs exactly config.k_max steps of
 *   beta <- beta + dv * g (.) f
 * where the intercept is always updated and never competes in the threshold.
 */
inline UnivariateFit tgdr_fit(const Matrix& x, const Vector& y, const FitConfig& config,
                              const UnivariateObserver& observer = {})
{
    validate_config(config);
    const auto p = x.cols();
    UnivariateFit fit;
    fit.beta = Vector::Zero(p + 1);
    detail::check_univariate_dims(x, y, fit.beta);
    fit.response_trace.push_back(response(x, y, fit.beta));

    for (int k = 0; k < config.k_max; ++k) {
        const Vector g = gradient(x, y, fit.beta);
        if (!g.allFinite()) throw divergence_error("non-finite gradient", k + 1);
        const MaskVector f = threshold_mask(g.tail(p), config.tau);
        fit.beta(0) += config.dv * g(0);
        for (Index j = 0; j < p; ++j) {
            if (f(j)) fit.beta(j + 1) += config.dv * g(j + 1);
        }
        fit.response_trace.push_back(response(x, y, fit.beta));
        fit.k_used = k + 1;
        if (observer) observer(fit.k_used, fit.beta);
    }
    return fit;
}

} // namespace geetgdr
