#include <geetgdr/model_select.hpp>
#include <geetgdr/simulate.hpp>

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <limits>
#include <map>
#include <mutex>
#include <set>

using namespace geetgdr;

namespace {

FitConfig small_config(CorrelationKind kind, int k_max)
{
    FitConfig c;
    c.structure = kind;
    c.tau = 0.9;
    c.dv = 0.02;
    c.k_max = k_max;
    return c;
}

} // namespace

TEST(Mse, PerfectFitIsZero)
{
    std::mt19937_64 rng(1);
    const Matrix x = test::random_matrix(rng, 5, 2);
    const Matrix beta = test::random_matrix(rng, 3, 3);
    EXPECT_NEAR(mse(test::make_dataset(x, fitted_means(beta, x)), beta), 0.0, 1e-28);
}

TEST(Mse, PerObservationAveraging)
{
    // n = 1 is below the dataset minimum, so pad with an exact second subject.
    const Matrix x{{0.0}, {0.0}};
    const Matrix y{{1.0, 3.0}, {0.0, 0.0}};
    EXPECT_DOUBLE_EQ(mse(test::make_dataset(x, y), Matrix::Zero(2, 2)), 10.0 / 4.0);
}

TEST(Mse, MatchesDoubleLoop)
{
    std::mt19937_64 rng(2);
    const auto ds = test::random_dataset(rng, 9, 4, 3);
    const Matrix beta = test::random_matrix(rng, 3, 5);
    double s = 0.0;
    for (Index i = 0; i < 9; ++i)
        for (Index j = 0; j < 3; ++j) {
            double mu = beta(j, 0);
            for (Index p = 0; p < 4; ++p) mu += beta(j, p + 1) * ds.covariates()(i, p);
            s += (ds.outcomes()(i, j) - mu) * (ds.outcomes()(i, j) - mu);
        }
    EXPECT_NEAR(mse(ds, beta), s / 27.0, 1e-12);
}

TEST(KfoldSplit, BalancedSizes)
{
    auto sizes = [](const std::vector<int>& a, int folds) {
        std::vector<int> c(static_cast<std::size_t>(folds), 0);
        for (int f : a) ++c[static_cast<std::size_t>(f)];
        std::sort(c.rbegin(), c.rend());
        return c;
    };
    EXPECT_EQ(sizes(kfold_split(10, 5, 1), 5), (std::vector<int>{2, 2, 2, 2, 2}));
    EXPECT_EQ(sizes(kfold_split(7, 5, 1), 5), (std::vector<int>{2, 2, 1, 1, 1}));
    for (Index n = 2; n < 40; ++n) {
        for (int folds = 2; folds <= std::min<Index>(n, 10); ++folds) {
            const auto c = sizes(kfold_split(n, folds, static_cast<std::uint64_t>(n)), folds);
            EXPECT_LE(c.front() - c.back(), 1);
        }
    }
}

TEST(KfoldSplit, DeterministicAndSeedSensitive)
{
    EXPECT_EQ(kfold_split(30, 5, 42), kfold_split(30, 5, 42));
    EXPECT_NE(kfold_split(30, 5, 42), kfold_split(30, 5, 43));
}

TEST(KfoldSplit, TooManyFolds)
{
    EXPECT_THROW(kfold_split(4, 5, 0), validation_error);
    EXPECT_THROW(kfold_split(4, 1, 0), validation_error);
}

TEST(DefaultKGrid, StepsByOnePercent)
{
    EXPECT_EQ(default_k_grid(0), (std::vector<int>{0}));
    EXPECT_EQ(default_k_grid(3), (std::vector<int>{0, 1, 2, 3}));
    const auto g = default_k_grid(1000);
    EXPECT_EQ(g.size(), 101u);
    EXPECT_EQ(g[1], 10);
    EXPECT_EQ(g.back(), 1000);
}

TEST(BestGridIndex, TiesGoToSmallerK)
{
    EXPECT_EQ(best_grid_index({3.0, 2.0, 2.0, 2.5}), 1u);
    EXPECT_EQ(best_grid_index({3.0, 2.0, 2.0 - 5e-13, 2.5}), 1u);
    EXPECT_EQ(best_grid_index({3.0, 2.0, 2.0 - 1e-9, 2.5}), 2u);
}

TEST(CrossValidate, NullModelGrid)
{
    std::mt19937_64 rng(3);
    const auto ds = test::random_dataset(rng, 20, 5, 3);
    const auto assignment = kfold_split(20, 4, 9);
    const auto cv = cross_validate(ds, small_config(CorrelationKind::exchangeable, 50), assignment, {0});
    double expected = 0.0;
    for (int f = 0; f < 4; ++f) {
        double s = 0.0;
        int count = 0;
        for (Index i = 0; i < 20; ++i) {
            if (assignment[static_cast<std::size_t>(i)] != f) continue;
            s += ds.outcomes().row(i).squaredNorm();
            count += 3;
        }
        expected += s / count;
    }
    ASSERT_EQ(cv.mean_mse.size(), 1u);
    EXPECT_NEAR(cv.mean_mse[0], expected / 4.0, 1e-12);
    EXPECT_EQ(cv.best_k, 0);
}

TEST(CrossValidate, DuplicatedHalvesGiveZeroSd)
{
    std::mt19937_64 rng(4);
    const Matrix x = test::random_matrix(rng, 10, 4);
    const Matrix y = test::random_matrix(rng, 10, 3);
    Matrix x2(20, 4), y2(20, 3);
    x2 << x, x;
    y2 << y, y;
    const auto ds = test::make_dataset(x2, y2);
    std::vector<int> assignment(20, 0);
    for (int i = 10; i < 20; ++i) assignment[static_cast<std::size_t>(i)] = 1;
    const auto cv = cross_validate(ds, small_config(CorrelationKind::ar1, 40), assignment, {0, 10, 20, 40});
    for (std::size_t g = 0; g < cv.k_grid.size(); ++g) {
        EXPECT_EQ(cv.fold_mse[0][g], cv.fold_mse[1][g]);
        EXPECT_EQ(cv.sd_mse[g], 0.0);
    }
}

TEST(CrossValidate, PathTrickMatchesSeparateFits)
{
    std::mt19937_64 rng(5);
    const auto ds = test::random_dataset(rng, 18, 6, 3);
    const auto assignment = kfold_split(18, 3, 1);
    const auto cfg = small_config(CorrelationKind::unstructured, 30);
    const auto cv = cross_validate(ds, cfg, assignment, {5, 30});
    // refit fold 0 at K = 5 directly
    std::vector<Index> train, test;
    for (Index i = 0; i < 18; ++i) (assignment[static_cast<std::size_t>(i)] == 0 ? test : train).push_back(i);
    auto c5 = cfg;
    c5.k_max = 5;
    const auto tr = standardize_covariates(subset_subjects(ds, train));
    const auto te = subset_subjects(ds, test);
    const auto fit = gee_tgdr_fit(tr.data, c5);
    const double held = mse(with_covariates(te, tr.transform.apply(te.covariates())), fit.beta);
    EXPECT_NEAR(cv.fold_mse[0][0], held, 1e-12);
}

TEST(CrossValidate, StatisticsRecomputableFromFolds)
{
    std::mt19937_64 rng(6);
    const auto ds = test::random_dataset(rng, 25, 8, 3);
    const auto cv = cross_validate(ds, small_config(CorrelationKind::exchangeable, 60), 5, {0, 20, 40, 60}, 11);
    for (std::size_t g = 0; g < cv.k_grid.size(); ++g) {
        std::vector<double> v;
        for (const auto& f : cv.fold_mse) v.push_back(f[g]);
        const double m = std::accumulate(v.begin(), v.end(), 0.0) / 5.0;
        double ss = 0.0;
        for (double e : v) ss += (e - m) * (e - m);
        EXPECT_NEAR(cv.mean_mse[g], m, 1e-14);
        EXPECT_NEAR(cv.sd_mse[g], std::sqrt(ss / 4.0), 1e-14);
    }
    const auto best = std::min_element(cv.mean_mse.begin(), cv.mean_mse.end()) - cv.mean_mse.begin();
    EXPECT_EQ(cv.best_k, cv.k_grid[static_cast<std::size_t>(best)]);
}

TEST(CrossValidate, RejectsBadGrid)
{
    std::mt19937_64 rng(7);
    const auto ds = test::random_dataset(rng, 10, 3, 2);
    const auto cfg = small_config(CorrelationKind::ar1, 10);
    EXPECT_THROW(cross_validate(ds, cfg, 5, {}, 1), validation_error);
    EXPECT_THROW(cross_validate(ds, cfg, 5, {5, 5}, 1), validation_error);
    EXPECT_THROW(cross_validate(ds, cfg, 11, {0}, 1), validation_error);
}

TEST(CrossValidate, LeaveOneOutAccepted)
{
    std::mt19937_64 rng(8);
    const auto ds = test::random_dataset(rng, 6, 3, 2);
    const auto cv = cross_validate(ds, small_config(CorrelationKind::independent, 10), 6, {0, 10}, 1);
    EXPECT_EQ(cv.fold_mse.size(), 6u);
}

TEST(CrossValidate, FoldErrorNamesFold)
{
    RawDataset raw;
    raw.subject_ids = {"a", "b", "c", "d"};
    raw.feature_names = {"g"};
    raw.time_labels = {"t1", "t2"};
    raw.covariates = Matrix{{1.0}, {1.0}, {2.0}, {3.0}}; // constant once c, d are held out
    raw.outcomes = Matrix::Ones(4, 2);
    const auto ds = validate_dataset(raw);
    try {
        cross_validate(ds, small_config(CorrelationKind::ar1, 5), std::vector<int>{0, 0, 1, 1}, {0, 5});
        FAIL();
    } catch (const error& e) {
        EXPECT_NE(std::string(e.what()).find("fold 2"), std::string::npos);
    }
}

TEST(CrossValidate, HeldOutSubjectsNeverReachTrainingFits)
{
    std::mt19937_64 rng(9);
    const auto ds = test::random_dataset(rng, 20, 6, 3);
    const auto assignment = kfold_split(20, 4, 3);
    std::mutex mu;
    std::map<int, std::set<std::string>> seen;
    std::map<int, Index> rows;
    CVOptions opts;
    opts.fold_observer = [&](int fold, const IterationState& s) {
        std::lock_guard lock(mu);
        for (const auto& id : s.data.subject_ids()) seen[fold].insert(id);
        rows[fold] = s.data.n_subjects();
    };
    cross_validate(ds, small_config(CorrelationKind::exchangeable, 10), assignment, {0, 10}, opts);
    ASSERT_EQ(seen.size(), 4u);
    for (int f = 0; f < 4; ++f) {
        Index held = 0;
        for (Index i = 0; i < 20; ++i) {
            if (assignment[static_cast<std::size_t>(i)] == f) {
                ++held;
                EXPECT_EQ(seen[f].count(ds.subject_ids()[static_cast<std::size_t>(i)]), 0u);
            }
        }
        EXPECT_EQ(rows[f], 20 - held);
    }
}

TEST(SelectFeatures, Examples)
{
    const auto empty = select_features(Matrix::Zero(3, 5));
    for (const auto& s : empty.per_time) EXPECT_TRUE(s.empty());
    EXPECT_TRUE(empty.union_set.empty());
    EXPECT_TRUE(empty.intersection.empty());

    Matrix b = Matrix::Zero(3, 7);
    b(1, 1) = 0.2;      // feature index 0 at time 2 only
    b.col(5).setOnes(); // feature index 4 everywhere
    const auto s = select_features(b);
    EXPECT_EQ(s.union_set, (std::vector<Index>{0, 4}));
    EXPECT_EQ(s.intersection, (std::vector<Index>{4}));
    EXPECT_EQ(s.per_time[1], (std::vector<Index>{0, 4}));

    const auto tol = select_features(b, 0.5);
    EXPECT_EQ(tol.union_set, (std::vector<Index>{4}));
}

TEST(CompareStructures, FourRowsInTableOrderAndDeterministic)
{
    std::mt19937_64 rng(10);
    const auto ds = test::random_dataset(rng, 20, 8, 3);
    const auto cfg = small_config(CorrelationKind::independent, 40);
    const auto a = compare_structures(ds, cfg, 4, {0, 20, 40}, 5);
    const auto b = compare_structures(ds, cfg, 4, {0, 20, 40}, 5, false);
    ASSERT_EQ(a.rows.size(), 4u);
    const CorrelationKind order[] = {CorrelationKind::ar1, CorrelationKind::unstructured,
                                     CorrelationKind::exchangeable, CorrelationKind::independent};
    for (std::size_t r = 0; r < 4; ++r) {
        EXPECT_EQ(a.rows[r].structure, order[r]);
        ASSERT_TRUE(a.rows[r].ok()) << a.rows[r].error_message;
        EXPECT_EQ(a.rows[r].cv->mean_mse, b.rows[r].cv->mean_mse);
        EXPECT_EQ(a.rows[r].alldata_mse, b.rows[r].alldata_mse);
        EXPECT_EQ(a.rows[r].selected_names, b.rows[r].selected_names);
        EXPECT_EQ(a.rows[r].selected_names.size(), 3u);
        EXPECT_EQ(a.rows[r].fit->k_used, a.rows[r].cv->best_k);
    }
}

TEST(CompareStructures, PerStructureErrorsDoNotAbortOthers)
{
    RawDataset raw;
    raw.subject_ids = {"a", "b", "c", "d"};
    raw.feature_names = {"g"};
    raw.time_labels = {"t1", "t2"};
    raw.covariates = Matrix{{1.0}, {1.0}, {2.0}, {3.0}};
    raw.outcomes = Matrix::Ones(4, 2);
    const auto ds = validate_dataset(raw);
    // folds that leave a constant training column fail for every structure, but
    // the comparison still returns one row each
    const auto cmp = compare_structures(ds, small_config(CorrelationKind::ar1, 5), 2, {0, 5}, 0);
    EXPECT_EQ(cmp.rows.size(), 4u);
}

TEST(CompareStructures, CorrelatedStructureWinsOnExchangeableData)
{
    // Same design and calibration as the support-recovery acceptance check:
    // 60 x 200 x 4, five true features with random per-time signs, noise sd 1.5.
    std::vector<int> grid;
    for (int k = 0; k <= 1000; k += 20) grid.push_back(k);
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SimulationSpec spec;
        spec.true_support = {0, 1, 2, 3, 4};
        spec.true_beta = sparse_beta(4, 200, spec.true_support, 1.0);
        std::mt19937_64 signs(seed * 7919 + 17);
        std::bernoulli_distribution b(0.5);
        for (auto f : spec.true_support)
            for (Index j = 0; j < 4; ++j) spec.true_beta(j, f + 1) = b(signs) ? 1.0 : -1.0;
        spec.noise_correlation = WorkingCorrelation::exchangeable(0.5);
        spec.noise_sd = Vector::Constant(4, 1.5);
        spec.seed = seed;
        const auto sim = generate(spec);
        const auto cmp = compare_structures(sim.data, FitConfig{}, 5, grid, seed, false);
        double best = std::numeric_limits<double>::infinity();
        CorrelationKind best_kind = CorrelationKind::independent;
        for (const auto& row : cmp.rows) {
            ASSERT_TRUE(row.ok()) << row.error_message;
            const double m = *std::min_element(row.cv->mean_mse.begin(), row.cv->mean_mse.end());
            if (m < best) {
                best = m;
                best_kind = row.structure;
            }
        }
        if (best_kind == CorrelationKind::exchangeable || best_kind == CorrelationKind::unstructured) ++wins;
    }
    EXPECT_GE(wins, 6) << "exchangeable or unstructured lowest CV MSE in " << wins << "/10 seeds";
}
