#include <geetgdr/tgdr.hpp>

#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace geetgdr;

namespace {

double loop_response(const Matrix& x, const Vector& y, const Vector& b)
{
    double s = 0.0;
    for (Index i = 0; i < x.rows(); ++i) {
        double mu = b(0);
        for (Index p = 0; p < x.cols(); ++p) mu += x(i, p) * b(p + 1);
        s += (y(i) - mu) * (y(i) - mu);
    }
    return s / x.rows();
}

Matrix standardized(const Matrix& x)
{
    Matrix z = x.rowwise() - x.colwise().mean();
    for (Index p = 0; p < z.cols(); ++p) z.col(p) /= std::sqrt(z.col(p).squaredNorm() / (z.rows() - 1));
    return z;
}

FitConfig config(double tau, double dv, int k_max)
{
    FitConfig c;
    c.tau = tau;
    c.dv = dv;
    c.k_max = k_max;
    return c;
}

} // namespace

TEST(Response, ZeroModelZeroOutcome)
{
    EXPECT_EQ(response(Matrix::Zero(3, 2), Vector::Zero(3), Vector::Zero(3)), 0.0);
}

TEST(Response, Arithmetic)
{
    EXPECT_DOUBLE_EQ(response(Matrix::Zero(2, 1), Vector{{1.0, 3.0}}, Vector::Zero(2)), 5.0);
}

TEST(Response, MatchesLoopOracle)
{
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 20; ++rep) {
        const Matrix x = test::random_matrix(rng, 9, 4);
        const Vector y = test::random_matrix(rng, 9, 1);
        const Vector b = test::random_matrix(rng, 5, 1);
        EXPECT_NEAR(response(x, y, b), loop_response(x, y, b), 1e-12);
    }
}

TEST(Response, DimensionMismatch)
{
    EXPECT_THROW(response(Matrix::Zero(3, 2), Vector::Zero(4), Vector::Zero(3)), validation_error);
    EXPECT_THROW(gradient(Matrix::Zero(3, 2), Vector::Zero(3), Vector::Zero(2)), validation_error);
}

TEST(Gradient, ZeroResiduals)
{
    const Matrix x{{1.0}, {2.0}};
    const Vector b{{1.0, 2.0}};
    const Vector y{{3.0, 5.0}};
    EXPECT_TRUE(gradient(x, y, b).isZero(0.0));
}

TEST(Gradient, SingleObservation)
{
    const Vector g = gradient(Matrix{{2.0}}, Vector{{3.0}}, Vector::Zero(2));
    EXPECT_DOUBLE_EQ(g(0), 3.0);
    EXPECT_DOUBLE_EQ(g(1), 6.0);
}

TEST(Gradient, MatchesFiniteDifferences)
{
    std::mt19937_64 rng(2);
    const double h = 1e-4;
    for (int rep = 0; rep < 10; ++rep) {
        const Matrix x = test::random_matrix(rng, 15, 6);
        const Vector y = test::random_matrix(rng, 15, 1);
        const Vector b = test::random_matrix(rng, 7, 1);
        Vector fd(7);
        for (Index k = 0; k < 7; ++k) {
            Vector up = b, dn = b;
            up(k) += h;
            dn(k) -= h;
            fd(k) = -(loop_response(x, y, up) - loop_response(x, y, dn)) / (2 * h) / 2.0;
        }
        const Vector g = gradient(x, y, b);
        EXPECT_LT((g - fd).norm() / g.norm(), 1e-6);
    }
}

TEST(ThresholdMask, Examples)
{
    const auto m = threshold_mask(Vector{{0.5, 1.0, 0.2}}, 0.5);
    EXPECT_TRUE(m(0));
    EXPECT_TRUE(m(1));
    EXPECT_FALSE(m(2));

    const auto ties = threshold_mask(Vector{{0.3, -0.9, 0.9}}, 1.0);
    EXPECT_FALSE(ties(0));
    EXPECT_TRUE(ties(1));
    EXPECT_TRUE(ties(2));

    std::mt19937_64 rng(3);
    const Vector g = test::random_matrix(rng, 12, 1);
    EXPECT_TRUE(threshold_mask(g, 0.0).all());
    EXPECT_TRUE(threshold_mask(Vector::Zero(5), 1.0).all());
}

TEST(TgdrFit, ZeroIterationsIsNullModel)
{
    std::mt19937_64 rng(4);
    const Matrix x = test::random_matrix(rng, 10, 3);
    const Vector y = test::random_matrix(rng, 10, 1);
    const auto fit = tgdr_fit(x, y, config(1.0, 0.01, 0));
    EXPECT_TRUE(fit.beta.isZero(0.0));
    ASSERT_EQ(fit.response_trace.size(), 1u);
    EXPECT_DOUBLE_EQ(fit.response_trace[0], response(x, y, Vector::Zero(4)));
    EXPECT_EQ(fit.k_used, 0);
}

TEST(TgdrFit, NoiselessSingleSignalSelectsOnlyThatFeature)
{
    std::mt19937_64 rng(5);
    const Matrix x = standardized(test::random_matrix(rng, 50, 6));
    const Vector y = 2.0 * x.col(0);
    const auto fit = tgdr_fit(x, y, config(1.0, 0.01, 2000));
    EXPECT_NE(fit.beta(1), 0.0);
    for (Index p = 2; p <= 6; ++p) EXPECT_EQ(fit.beta(p), 0.0);
    EXPECT_NEAR(fit.beta(1), 2.0, 1e-3);
    for (std::size_t k = 1; k < fit.response_trace.size(); ++k) {
        EXPECT_LE(fit.response_trace[k], fit.response_trace[k - 1]);
    }
    EXPECT_EQ(fit.response_trace.size(), 2001u);
}

TEST(TgdrFit, TauZeroIsPlainGradientDescent)
{
    std::mt19937_64 rng(6);
    const Matrix x = test::random_matrix(rng, 25, 8);
    const Vector y = test::random_matrix(rng, 25, 1);
    const int k_max = 300;
    const double dv = 0.02;

    // independent loop: full gradient step on every coordinate
    Vector b = Vector::Zero(9);
    for (int k = 0; k < k_max; ++k) {
        Vector g(9);
        for (Index c = 0; c < 9; ++c) {
            double s = 0.0;
            for (Index i = 0; i < 25; ++i) {
                double mu = b(0);
                for (Index p = 0; p < 8; ++p) mu += x(i, p) * b(p + 1);
                s += (c == 0 ? 1.0 : x(i, c - 1)) * (y(i) - mu);
            }
            g(c) = s / 25.0;
        }
        b += dv * g;
    }
    const auto fit = tgdr_fit(x, y, config(0.0, dv, k_max));
    EXPECT_LT((fit.beta - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TgdrFit, DescentAlignmentAndMonotoneResponse)
{
    std::mt19937_64 rng(7);
    const Matrix x = test::random_matrix(rng, 20, 10);
    const Vector y = test::random_matrix(rng, 20, 1);
    Vector prev = Vector::Zero(11);
    int checked = 0;
    const auto fit = tgdr_fit(x, y, config(0.0, 1e-3, 500), [&](int, const Vector& beta) {
        const Vector g = gradient(x, y, prev);
        const Vector step = beta - prev;
        EXPECT_GE(step.dot(g), 0.0);
        if (!g.isZero(0.0)) EXPECT_GT(step.dot(g), 0.0);
        prev = beta;
        ++checked;
    });
    EXPECT_EQ(checked, 500);
    for (std::size_t k = 1; k < fit.response_trace.size(); ++k) {
        EXPECT_LE(fit.response_trace[k], fit.response_trace[k - 1]);
    }
}

TEST(TgdrFit, NeverUnmaskedStaysBitwiseZero)
{
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        const Matrix x = test::random_matrix(rng, 15, 12);
        const Vector y = test::random_matrix(rng, 15, 1);
        const double tau = test::uniform(rng, 0.5, 1.0);
        std::vector<bool> ever(12, false);
        Vector prev = Vector::Zero(13);
        const auto fit = tgdr_fit(x, y, config(tau, 0.05, 100), [&](int, const Vector& beta) {
            const auto m = threshold_mask(gradient(x, y, prev).tail(12), tau);
            for (Index p = 0; p < 12; ++p) ever[static_cast<std::size_t>(p)] = ever[static_cast<std::size_t>(p)] || m(p);
            prev = beta;
        });
        for (Index p = 0; p < 12; ++p) {
            if (!ever[static_cast<std::size_t>(p)]) EXPECT_EQ(fit.beta(p + 1), 0.0);
        }
    }
}

TEST(TgdrFit, FeaturePermutationEquivariance)
{
    std::mt19937_64 rng(9);
    const Matrix x = test::random_matrix(rng, 20, 7);
    const Vector y = test::random_matrix(rng, 20, 1);
    std::vector<Index> perm{3, 0, 6, 1, 5, 2, 4};
    Matrix xp(20, 7);
    for (Index p = 0; p < 7; ++p) xp.col(p) = x.col(perm[static_cast<std::size_t>(p)]);
    const auto a = tgdr_fit(x, y, config(0.7, 0.01, 200));
    const auto b = tgdr_fit(xp, y, config(0.7, 0.01, 200));
    EXPECT_NEAR(a.beta(0), b.beta(0), 1e-12);
    for (Index p = 0; p < 7; ++p) EXPECT_NEAR(b.beta(p + 1), a.beta(perm[static_cast<std::size_t>(p)] + 1), 1e-12);
}

TEST(TgdrFit, DivergenceReportsIteration)
{
    std::mt19937_64 rng(10);
    const Matrix x = test::random_matrix(rng, 10, 3, 10.0);
    const Vector y = test::random_matrix(rng, 10, 1, 10.0);
    try {
        tgdr_fit(x, y, config(0.0, 1e3, 5000));
        FAIL();
    } catch (const divergence_error& e) {
        EXPECT_GT(e.iteration(), 0);
    }
}
