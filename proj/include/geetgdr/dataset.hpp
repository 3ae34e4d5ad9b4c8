#pragma once
#include <geetgdr/types.hpp>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace geetgdr {

/// Unvalidated input as parsed from files or produced by a generator.
struct RawDataset
{
    std::vector<std::string> subject_ids;
    std::vector<std::string> feature_names;
    std::vector<std::string> time_labels;
    Matrix covariates; // n x P
    Matrix outcomes;   // n x t
};

/**
 * n subjects, P time-invariant covariates, and an n x t outcome matrix.
 * Only obtainable through validate_dataset(), so every instance satisfies
 * n >= 2, t >= 2, P >= 1, finite entries and unique identifiers.
 */
class LongitudinalDataset
{
public:
    const std::vector<std::string>& subject_ids() const noexcept { return raw_.subject_ids; }
    const std::vector<std::string>& feature_names() const noexcept { return raw_.feature_names; }
    const std::vector<std::string>& time_labels() const noexcept { return raw_.time_labels; }
    const Matrix& covariates() const noexcept { return raw_.covariates; }
    const Matrix& outcomes() const noexcept { return raw_.outcomes; }

    Index n_subjects() const noexcept { return raw_.covariates.rows(); }
    Index n_features() const noexcept { return raw_.covariates.cols(); }
    Index n_times() const noexcept { return raw_.outcomes.cols(); }

    const RawDataset& raw() const noexcept { return raw_; }

private:
    explicit LongitudinalDataset(RawDataset raw) : raw_(std::move(raw)) {}
    friend LongitudinalDataset validate_dataset(RawDataset raw, Index min_subjects);

    RawDataset raw_;
};

namespace detail {

inline void check_unique(const std::vector<std::string>& ids, const char* what,
                         std::vector<std::string>& problems)
{
    std::unordered_set<std::string> seen;
    for (const auto& id : ids) {
        if (!seen.insert(id).second) {
            problems.push_back(std::string("duplicate ") + what + " identifier '" + id + "'");
        }
    }
}

inline void check_finite(const Matrix& m, const char* what, const char* col_kind,
                         const std::vector<std::string>& row_ids,
                         const std::vector<std::string>& col_ids,
                         std::vector<std::string>& problems)
{
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (std::isfinite(m(i, j))) continue;
            std::string msg = std::string(what) + ": non-finite value at subject " +
                              std::to_string(i + 1);
            if (static_cast<std::size_t>(i) < row_ids.size()) msg += " ('" + row_ids[i] + "')";
            msg += ", " + std::string(col_kind) + " " + std::to_string(j + 1);
            if (static_cast<std::size_t>(j) < col_ids.size()) msg += " ('" + col_ids[j] + "')";
            problems.push_back(std::move(msg));
        }
    }
}

} // namespace detail

/// Checks every invariant of LongitudinalDataset and throws a validation_error
/// listing all violations, or returns the validated dataset.
/// `min_subjects` is lowered only for held-out evaluation sets.
inline LongitudinalDataset validate_dataset(RawDataset raw, Index min_subjects = 2)
{
    std::vector<std::string> problems;
    const auto n = raw.covariates.rows();
    const auto p = raw.covariates.cols();
    const auto t = raw.outcomes.cols();

    if (n < min_subjects) {
        problems.push_back("need at least " + std::to_string(min_subjects) + " subjects, got " +
                           std::to_string(n));
    }
    if (t < 2) problems.push_back("need at least 2 time points, got " + std::to_string(t));
    if (p < 1) problems.push_back("need at least 1 feature, got " + std::to_string(p));
    if (raw.outcomes.rows() != n) {
        problems.push_back("dimension mismatch: covariates have " + std::to_string(n) +
                           " rows but outcomes have " + std::to_string(raw.outcomes.rows()));
    }
    if (static_cast<Index>(raw.subject_ids.size()) != n) {
        problems.push_back("dimension mismatch: " + std::to_string(raw.subject_ids.size()) +
                           " subject ids for " + std::to_string(n) + " rows");
    }
    if (static_cast<Index>(raw.feature_names.size()) != p) {
        problems.push_back("dimension mismatch: " + std::to_string(raw.feature_names.size()) +
                           " feature names for " + std::to_string(p) + " covariate columns");
    }
    if (static_cast<Index>(raw.time_labels.size()) != t) {
        problems.push_back("dimension mismatch: " + std::to_string(raw.time_labels.size()) +
                           " time labels for " + std::to_string(t) + " outcome columns");
    }
    detail::check_unique(raw.subject_ids, "subject", problems);
    detail::check_unique(raw.feature_names, "feature", problems);
    detail::check_unique(raw.time_labels, "time", problems);
    detail::check_finite(raw.covariates, "covariates", "feature", raw.subject_ids,
                         raw.feature_names, problems);
    detail::check_finite(raw.outcomes, "outcomes", "time", raw.subject_ids, raw.time_labels,
                         problems);

    if (!problems.empty()) throw validation_error(std::move(problems));
    return LongitudinalDataset(std::move(raw));
}

/// Restricts a dataset to the given subject rows, in the given order.
inline LongitudinalDataset subset_subjects(const LongitudinalDataset& ds,
                                           std::span<const Index> rows, Index min_subjects = 2)
{
    RawDataset raw;
    raw.feature_names = ds.feature_names();
    raw.time_labels = ds.time_labels();
    raw.covariates.resize(static_cast<Index>(rows.size()), ds.n_features());
    raw.outcomes.resize(static_cast<Index>(rows.size()), ds.n_times());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto i = rows[k];
        raw.subject_ids.push_back(ds.subject_ids()[static_cast<std::size_t>(i)]);
        raw.covariates.row(static_cast<Index>(k)) = ds.covariates().row(i);
        raw.outcomes.row(static_cast<Index>(k)) = ds.outcomes().row(i);
    }
    return validate_dataset(std::move(raw), min_subjects);
}

/// Same subjects and outcomes, new covariate values.
inline LongitudinalDataset with_covariates(const LongitudinalDataset& ds, Matrix covariates)
{
    RawDataset raw = ds.raw();
    raw.covariates = std::move(covariates);
    return validate_dataset(std::move(raw), std::min<Index>(2, ds.n_subjects()));
}

/// Per-feature z-score parameters (sample sd, ddof = 1).
struct Standardization
{
    Vector mean;
    Vector sd;

    Matrix apply(const Matrix& x) const
    {
        return ((x.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array())
            .matrix();
    }

    Matrix invert(const Matrix& z) const
    {
        return ((z.array().rowwise() * sd.transpose().array()).matrix().rowwise() +
                mean.transpose());
    }

    /// Maps a t x (P+1) coefficient matrix fit on standardized covariates back
    /// to the raw covariate scale.
    Matrix to_raw_scale(const Matrix& beta) const
    {
        Matrix out = beta;
        const auto p = sd.size();
        out.rightCols(p) = beta.rightCols(p).array().rowwise() / sd.transpose().array();
        out.col(0) = beta.col(0) - out.rightCols(p) * mean;
        return out;
    }
};

struct StandardizedDataset
{
    LongitudinalDataset data;
    Standardization transform;
};

inline Standardization fit_standardization(const LongitudinalDataset& ds)
{
    const auto& x = ds.covariates();
    const auto n = static_cast<double>(x.rows());
    Standardization s;
    s.mean = x.colwise().mean().transpose();
    s.sd.resize(x.cols());
    std::vector<std::string> problems;
    for (Index p = 0; p < x.cols(); ++p) {
        const double ss = (x.col(p).array() - s.mean(p)).square().sum();
        s.sd(p) = std::sqrt(ss / (n - 1.0));
        if (!(s.sd(p) > 0.0)) {
            problems.push_back("constant feature '" + ds.feature_names()[p] +
                               "' cannot be standardized");
        }
    }
    if (!problems.empty()) throw validation_error(std::move(problems));
    return s;
}

/// Z-scores every covariate column; throws on a constant column.
inline StandardizedDataset standardize_covariates(const LongitudinalDataset& ds)
{
    auto s = fit_standardization(ds);
    auto z = s.apply(ds.covariates());
    return {with_covariates(ds, std::move(z)), std::move(s)};
}

/// Tuning and numerical settings for a single fit.
struct FitConfig
{
    CorrelationKind structure = CorrelationKind::exchangeable;
    double tau = 1.0;
    double dv = 0.01;
    int k_max = 100;
    bool standardize = true;
    double alpha_floor_epsilon = 0.01;
    double selection_tolerance = 0.0;
    std::uint64_t rng_seed = 0;
    /// When false, the variance profile is held at 1 for every time point.
    bool estimate_variances = true;
};

inline void validate_config(const FitConfig& c)
{
    std::vector<std::string> problems;
    if (!(c.tau >= 0.0 && c.tau <= 1.0)) problems.push_back("tau must lie in [0, 1]");
    if (!(c.dv > 0.0) || !std::isfinite(c.dv)) problems.push_back("dv must be positive");
    if (c.k_max < 0) problems.push_back("k_max must be non-negative");
    if (!(c.alpha_floor_epsilon > 0.0 && c.alpha_floor_epsilon < 0.5)) {
        problems.push_back("alpha_floor_epsilon must lie in (0, 0.5)");
    }
    if (!(c.selection_tolerance >= 0.0)) {
        problems.push_back("selection_tolerance must be non-negative");
    }
    if (!problems.empty()) throw validation_error(std::move(problems));
}

} // namespace geetgdr
