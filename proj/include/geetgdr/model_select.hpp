#pragma once
#include <geetgdr/dataset.hpp>
#include <geetgdr/gee_tgdr.hpp>
#include <geetgdr/selection.hpp>
#include <geetgdr/types.hpp>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace geetgdr {

/// Per-observation mean squared error: (1/(n t)) sum_ij (Y_ij - mu_ij)^2.
inline double mse(const LongitudinalDataset& ds, const CoefficientMatrix& beta)
{
    const Matrix e = residuals(ds, beta);
    return e.squaredNorm() / static_cast<double>(e.size());
}

/// Subject-level fold labels in [0, folds); sizes differ by at most one.
inline std::vector<int> kfold_split(Index n, int folds, std::uint64_t seed)
{
    if (folds < 2 || folds > n) {
        throw validation_error({"folds must lie in [2, n] (folds = " + std::to_string(folds) +
                                ", n = " + std::to_string(n) + ")"});
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> assignment(static_cast<std::size_t>(n));
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        assignment[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos % static_cast<std::size_t>(folds));
    }
    return assignment;
}

/// 0, step, 2 step, ..., k_max with step = max(1, k_max / 100).
inline std::vector<int> default_k_grid(int k_max)
{
    const int step = std::max(1, k_max / 100);
    std::vector<int> grid;
    for (int k = 0; k <= k_max; k += step) grid.push_back(k);
    if (grid.back() != k_max) grid.push_back(k_max);
    return grid;
}

/// A fit together with the covariate transform it was trained under.
struct PreparedFit
{
    FitResult fit;
    std::optional<Standardization> transform;
};

/// Standardizes (when configured) and runs gee_tgdr_fit.
inline PreparedFit fit_prepared(const LongitudinalDataset& ds, const FitConfig& config,
                                const FitObserver& observer = {})
{
    if (!config.standardize) return {gee_tgdr_fit(ds, config, observer), std::nullopt};
    auto z = standardize_covariates(ds);
    return {gee_tgdr_fit(z.data, config, observer), std::move(z.transform)};
}

struct CVResult
{
    std::vector<int> k_grid;
    std::vector<double> mean_mse;
    std::vector<double> sd_mse;
    int best_k = 0;
    std::vector<int> fold_assignments;
    /// fold_mse[f][g]: held-out MSE of fold f at k_grid[g].
    std::vector<std::vector<double>> fold_mse;
};

struct CVOptions
{
    bool parallel = true;
    /// Invoked for every training iteration of every fold; may be called
    /// concurrently from several folds when `parallel` is set.
    std::function<void(int fold, const IterationState&)> fold_observer;
};

inline constexpr double best_k_tie_tolerance = 1e-12;

/// Index of the smallest mean; values within best_k_tie_tolerance of the
/// running best keep the earlier (smaller K) entry.
inline std::size_t best_grid_index(const std::vector<double>& mean_mse)
{
    std::size_t best = 0;
    for (std::size_t g = 1; g < mean_mse.size(); ++g) {
        if (mean_mse[g] < mean_mse[best] - best_k_tie_tolerance) best = g;
    }
    return best;
}

namespace detail {

inline void check_k_grid(const std::vector<int>& k_grid)
{
    if (k_grid.empty()) throw validation_error({"k_grid must not be empty"});
    if (k_grid.front() < 0) throw validation_error({"k_grid values must be non-negative"});
    for (std::size_t i = 1; i < k_grid.size(); ++i) {
        if (k_grid[i] <= k_grid[i - 1]) {
            throw validation_error({"k_grid must be strictly increasing"});
        }
    }
}

/// Held-out MSE at every grid K, read off a single training path.
inline std::vector<double> fold_path_mse(const LongitudinalDataset& train,
                                         const LongitudinalDataset& test, FitConfig config,
                                         const std::vector<int>& k_grid,
                                         const FitObserver& inner)
{
    LongitudinalDataset train_used = train;
    LongitudinalDataset test_used = test;
    if (config.standardize) {
        auto z = standardize_covariates(train);
        test_used = with_covariates(test, z.transform.apply(test.covariates()));
        train_used = std::move(z.data);
    }
    std::vector<double> out(k_grid.size());
    std::size_t next = 0;
    auto record = [&](int k, const Matrix& beta) {
        while (next < k_grid.size() && k_grid[next] == k) out[next++] = mse(test_used, beta);
    };
    record(0, Matrix::Zero(train.n_times(), train.n_features() + 1));
    config.k_max = k_grid.back();
    gee_tgdr_fit(train_used, config, [&](const IterationState& s) {
        if (inner) inner(s);
        record(s.iteration, s.beta_after);
    });
    return out;
}

} // namespace detail

/// K-fold CV over an explicit subject-to-fold assignment.
inline CVResult cross_validate(const LongitudinalDataset& ds, const FitConfig& config,
                               std::vector<int> fold_assignments, std::vector<int> k_grid,
                               const CVOptions& options = {})
{
    validate_config(config);
    detail::check_k_grid(k_grid);
    if (static_cast<Index>(fold_assignments.size()) != ds.n_subjects()) {
        throw validation_error({"fold assignment length does not match subject count"});
    }
    const int folds = *std::max_element(fold_assignments.begin(), fold_assignments.end()) + 1;
    if (folds < 2) throw validation_error({"need at least 2 folds"});

    auto run_fold = [&](int f) {
        std::vector<Index> train_rows, test_rows;
        for (Index i = 0; i < ds.n_subjects(); ++i) {
            (fold_assignments[static_cast<std::size_t>(i)] == f ? test_rows : train_rows).push_back(i);
        }
        try {
            if (test_rows.empty()) throw validation_error({"fold is empty"});
            const auto train = subset_subjects(ds, train_rows);
            const auto test = subset_subjects(ds, test_rows, 1);
            FitObserver inner;
            if (options.fold_observer) {
                inner = [&, f](const IterationState& s) { options.fold_observer(f, s); };
            }
            return detail::fold_path_mse(train, test, config, k_grid, inner);
        } catch (const error& e) {
            throw error("fold " + std::to_string(f + 1) + ": " + e.what());
        }
    };

    CVResult cv;
    cv.fold_mse.resize(static_cast<std::size_t>(folds));
    if (options.parallel) {
        std::vector<std::future<std::vector<double>>> jobs;
        for (int f = 0; f < folds; ++f) jobs.push_back(std::async(std::launch::async, run_fold, f));
        for (int f = 0; f < folds; ++f) cv.fold_mse[static_cast<std::size_t>(f)] = jobs[static_cast<std::size_t>(f)].get();
    } else {
        for (int f = 0; f < folds; ++f) cv.fold_mse[static_cast<std::size_t>(f)] = run_fold(f);
    }
    cv.k_grid = std::move(k_grid);
    cv.fold_assignments = std::move(fold_assignments);

    const auto g_count = cv.k_grid.size();
    cv.mean_mse.assign(g_count, 0.0);
    cv.sd_mse.assign(g_count, 0.0);
    for (std::size_t g = 0; g < g_count; ++g) {
        double sum = 0.0;
        for (const auto& row : cv.fold_mse) sum += row[g];
        const double mean = sum / folds;
        double ss = 0.0;
        for (const auto& row : cv.fold_mse) ss += (row[g] - mean) * (row[g] - mean);
        cv.mean_mse[g] = mean;
        cv.sd_mse[g] = std::sqrt(ss / (folds - 1));
    }
    cv.best_k = cv.k_grid[best_grid_index(cv.mean_mse)];
    return cv;
}

inline CVResult cross_validate(const LongitudinalDataset& ds, const FitConfig& config, int folds,
                               std::vector<int> k_grid, std::uint64_t seed,
                               const CVOptions& options = {})
{
    return cross_validate(ds, config, kfold_split(ds.n_subjects(), folds, seed),
                          std::move(k_grid), options);
}

struct StructureRow
{
    CorrelationKind structure;
    std::optional<CVResult> cv;
    double alldata_mse = 0.0;
    std::optional<FitResult> fit;
    std::vector<std::vector<std::string>> selected_names; // per time point
    std::string error_message;

    bool ok() const { return error_message.empty(); }
};

/// One row per structure in the fixed order ar1, unstructured, exchangeable, independent.
struct StructureComparison
{
    std::vector<StructureRow> rows;
};

inline std::vector<std::vector<std::string>> selected_names(const LongitudinalDataset& ds,
                                                            const Selection& s)
{
    std::vector<std::vector<std::string>> out;
    for (const auto& set : s.per_time) {
        auto& names = out.emplace_back();
        for (auto f : set) names.push_back(ds.feature_names()[static_cast<std::size_t>(f)]);
    }
    return out;
}

/// Cross-validates each structure, then refits on all data at its best K.
inline StructureComparison compare_structures(const LongitudinalDataset& ds,
                                              const FitConfig& base_config, int folds,
                                              const std::vector<int>& k_grid, std::uint64_t seed,
                                              bool parallel = true)
{
    const auto assignment = kfold_split(ds.n_subjects(), folds, seed);
    auto run = [&](CorrelationKind kind) {
        StructureRow row{kind, std::nullopt, 0.0, std::nullopt, {}, {}};
        try {
            FitConfig c = base_config;
            c.structure = kind;
            CVOptions opts;
            opts.parallel = false;
            row.cv = cross_validate(ds, c, assignment, k_grid, opts);
            c.k_max = row.cv->best_k;
            auto prepared = fit_prepared(ds, c);
            const auto& used = prepared.transform
                                   ? with_covariates(ds, prepared.transform->apply(ds.covariates()))
                                   : ds;
            row.alldata_mse = mse(used, prepared.fit.beta);
            row.selected_names = selected_names(ds, prepared.fit.selection);
            row.fit = std::move(prepared.fit);
        } catch (const std::exception& e) {
            row.error_message = e.what();
        }
        return row;
    };

    StructureComparison out;
    if (parallel) {
        std::vector<std::future<StructureRow>> jobs;
        for (auto kind : all_correlation_kinds) jobs.push_back(std::async(std::launch::async, run, kind));
        for (auto& j : jobs) out.rows.push_back(j.get());
    } else {
        for (auto kind : all_correlation_kinds) out.rows.push_back(run(kind));
    }
    return out;
}

} // namespace geetgdr
