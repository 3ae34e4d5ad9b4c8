#pragma once
#include <geetgdr/correlation.hpp>
#include <geetgdr/dataset.hpp>
#include <geetgdr/gee_tgdr.hpp>
#include <geetgdr/types.hpp>
#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace geetgdr {

/**
 * Synthetic design. Covariates are i.i.d. N(0, 1); noise rows are
 * N(0, diag(noise_sd) R(alpha) diag(noise_sd)). Draws come from
 * std::mt19937_64 seeded with `seed` through std::normal_distribution,
 * covariates first (row-major), then noise (row-major).
 */
struct SimulationSpec
{
    Index n = 60;
    Index p = 200;
    Index t = 4;
    std::vector<Index> true_support; // 0-based feature indices
    Matrix true_beta;                // t x (p+1), zero outside support columns
    WorkingCorrelation noise_correlation = WorkingCorrelation::exchangeable(0.5);
    Vector noise_sd;                 // length t
    std::uint64_t seed = 1;
};

struct GroundTruth
{
    std::vector<Index> support;
    Matrix beta;
    WorkingCorrelation correlation;
    Vector noise_sd;
};

struct SimulatedData
{
    LongitudinalDataset data;
    GroundTruth truth;
};

/// Fills true_beta with `magnitude` on every support column at every time,
/// alternating sign across support features (+, -, +, ...). Intercepts are zero.
inline Matrix sparse_beta(Index t, Index p, const std::vector<Index>& support, double magnitude)
{
    Matrix b = Matrix::Zero(t, p + 1);
    double sign = 1.0;
    for (auto f : support) {
        b.col(f + 1).setConstant(sign * magnitude);
        sign = -sign;
    }
    return b;
}

inline std::string numbered(const char* prefix, Index i, Index count)
{
    std::string digits = std::to_string(i + 1);
    const auto width = std::to_string(count).size();
    if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
    return prefix + digits;
}

inline void validate_simulation(const SimulationSpec& spec)
{
    std::vector<std::string> problems;
    if (spec.n < 2 || spec.t < 2 || spec.p < 1) problems.push_back("need n >= 2, t >= 2, p >= 1");
    for (auto f : spec.true_support) {
        if (f < 0 || f >= spec.p) problems.push_back("support index " + std::to_string(f + 1) + " outside 1.." + std::to_string(spec.p));
    }
    if (spec.true_beta.rows() != spec.t || spec.true_beta.cols() != spec.p + 1) {
        problems.push_back("true_beta must be t x (p+1)");
    } else {
        for (Index f = 0; f < spec.p; ++f) {
            const bool in = std::find(spec.true_support.begin(), spec.true_support.end(), f) !=
                            spec.true_support.end();
            if (!in && !spec.true_beta.col(f + 1).isZero(0.0)) {
                problems.push_back("true_beta non-zero outside the support at feature " + std::to_string(f + 1));
            }
        }
    }
    if (spec.noise_sd.size() != spec.t || !(spec.noise_sd.array() > 0.0).all()) {
        problems.push_back("noise_sd must have t positive entries");
    }
    if (!problems.empty()) throw validation_error(std::move(problems));
}

inline SimulatedData generate(const SimulationSpec& spec)
{
    validate_simulation(spec);
    const Matrix r = build_correlation(spec.noise_correlation, spec.t);
    Eigen::LLT<Matrix> llt(r);
    if (!is_symmetric(r) || llt.info() != Eigen::Success || needs_repair(r)) {
        throw validation_error({"requested noise correlation is not positive definite"});
    }
    const Matrix l = llt.matrixL();

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    RawDataset raw;
    raw.covariates.resize(spec.n, spec.p);
    for (Index i = 0; i < spec.n; ++i) {
        for (Index f = 0; f < spec.p; ++f) raw.covariates(i, f) = normal(rng);
    }
    Matrix z(spec.n, spec.t);
    for (Index i = 0; i < spec.n; ++i) {
        for (Index j = 0; j < spec.t; ++j) z(i, j) = normal(rng);
    }
    const Matrix noise = (z * l.transpose()) * spec.noise_sd.asDiagonal();
    raw.outcomes = fitted_means(spec.true_beta, raw.covariates) + noise;

    for (Index i = 0; i < spec.n; ++i) raw.subject_ids.push_back(numbered("S", i, spec.n));
    for (Index f = 0; f < spec.p; ++f) raw.feature_names.push_back(numbered("g", f, spec.p));
    for (Index j = 0; j < spec.t; ++j) raw.time_labels.push_back(numbered("t", j, spec.t));

    std::vector<Index> support = spec.true_support;
    std::sort(support.begin(), support.end());
    return {validate_dataset(std::move(raw)),
            {support, spec.true_beta, spec.noise_correlation, spec.noise_sd}};
}

struct SupportScore
{
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Precision, recall and F1 of a selected index set against the true support.
/// An empty selection scores precision 0.
inline SupportScore score_support(const std::vector<Index>& selected,
                                  const std::vector<Index>& truth)
{
    std::size_t hits = 0;
    for (auto f : selected) {
        if (std::find(truth.begin(), truth.end(), f) != truth.end()) ++hits;
    }
    SupportScore s;
    if (!selected.empty()) s.precision = static_cast<double>(hits) / static_cast<double>(selected.size());
    if (!truth.empty()) s.recall = static_cast<double>(hits) / static_cast<double>(truth.size());
    if (s.precision + s.recall > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

} // namespace geetgdr
