#pragma once
#include <geetgdr/types.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace geetgdr {

/// 1-based ranks with ties replaced by their average rank.
inline std::vector<double> average_ranks(std::span<const double> v)
{
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j + 1); // mean of i+1 .. j
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
        i = j;
    }
    return ranks;
}

struct SpearmanResult
{
    double rho;
    double p_value;
};

/// Two-sided p-value of a correlation from the t approximation with n - 2 df.
inline double correlation_p_value(double rho, std::size_t n)
{
    if (std::abs(rho) >= 1.0) return 0.0;
    const double dof = static_cast<double>(n - 2);
    const double t = rho * std::sqrt(dof / ((1.0 + rho) * (1.0 - rho)));
    boost::math::students_t_distribution<double> dist(dof);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

/// Spearman correlation (Pearson on average ranks). Returns nullopt when either
/// input is constant, since the correlation is undefined.
inline std::optional<SpearmanResult> spearman(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) throw validation_error({"spearman: length mismatch"});
    if (x.size() < 3) throw validation_error({"spearman: need at least 3 observations"});
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    const double rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    return SpearmanResult{rho, correlation_p_value(rho, x.size())};
}

/// Benjamini-Hochberg step-up adjusted p-values, in the input order.
inline std::vector<double> bh_adjust(std::span<const double> p)
{
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] >= 0.0 && p[i] <= 1.0)) {
            throw validation_error({"p-value " + std::to_string(i + 1) + " outside [0, 1]"});
        }
    }
    const auto m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });
    std::vector<double> q(m);
    double running = 1.0;
    for (std::size_t k = m; k-- > 0;) {
        const double v = static_cast<double>(m) * p[order[k]] / static_cast<double>(k + 1);
        running = std::min(running, v);
        q[order[k]] = running;
    }
    return q;
}

struct Edge
{
    std::string source;
    std::string target;
    double rho;
    double p_value;
    double p_adjusted;
};

struct EdgeList
{
    std::vector<Edge> edges;
    double rho_min;
    double fdr_q;
    std::size_t tests = 0;     // size of the BH family
    std::size_t undefined = 0; // pairs skipped for a constant column
};

/**
 * Tests every panel x target column pair. The BH family is every pair with a
 * defined correlation. Edges keep |rho| > rho_min and p_adjusted < fdr_q and
 * are sorted by (source, target).
 */
inline EdgeList correlate_panel(const Matrix& panel, const std::vector<std::string>& panel_names,
                                const Matrix& targets,
                                const std::vector<std::string>& target_names, double rho_min,
                                double fdr_q)
{
    if (panel.rows() != targets.rows()) {
        throw validation_error({"panel has " + std::to_string(panel.rows()) +
                                " rows but targets have " + std::to_string(targets.rows())});
    }
    if (static_cast<Index>(panel_names.size()) != panel.cols() ||
        static_cast<Index>(target_names.size()) != targets.cols()) {
        throw validation_error({"column name count does not match matrix width"});
    }

    struct Test { Index s, t; SpearmanResult r; };
    std::vector<Test> tests;
    EdgeList out{{}, rho_min, fdr_q, 0, 0};
    const auto n = static_cast<std::size_t>(panel.rows());
    for (Index s = 0; s < panel.cols(); ++s) {
        const Vector x = panel.col(s);
        for (Index t = 0; t < targets.cols(); ++t) {
            const Vector y = targets.col(t);
            auto r = spearman(std::span<const double>(x.data(), n), std::span<const double>(y.data(), n));
            if (!r) {
                ++out.undefined;
                continue;
            }
            tests.push_back({s, t, *r});
        }
    }
    std::vector<double> p(tests.size());
    for (std::size_t k = 0; k < tests.size(); ++k) p[k] = tests[k].r.p_value;
    const auto q = bh_adjust(p);
    out.tests = tests.size();
    for (std::size_t k = 0; k < tests.size(); ++k) {
        const auto& tst = tests[k];
        if (std::abs(tst.r.rho) > rho_min && q[k] < fdr_q) {
            out.edges.push_back({panel_names[static_cast<std::size_t>(tst.s)],
                                 target_names[static_cast<std::size_t>(tst.t)], tst.r.rho,
                                 tst.r.p_value, q[k]});
        }
    }
    std::sort(out.edges.begin(), out.edges.end(), [](const Edge& a, const Edge& b) {
        return a.source != b.source ? a.source < b.source : a.target < b.target;
    });
    return out;
}

} // namespace geetgdr
