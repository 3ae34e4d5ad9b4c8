#pragma once
#include <geetgdr/types.hpp>
#include <algorithm>
#include <cmath>
#include <vector>

namespace geetgdr {

/// Selected feature indices (0-based into the covariate columns).
struct Selection
{
    std::vector<std::vector<Index>> per_time;
    std::vector<Index> union_set;
    std::vector<Index> intersection;
};

/// per-time set = {p : |beta_jp| > tol}; union and intersection across time.
inline Selection select_features(const Matrix& beta, double tol = 0.0)
{
    const auto t = beta.rows();
    const auto p = beta.cols() - 1;
    Selection s;
    s.per_time.resize(static_cast<std::size_t>(t));
    for (Index f = 0; f < p; ++f) {
        Index hits = 0;
        for (Index j = 0; j < t; ++j) {
            if (std::abs(beta(j, f + 1)) > tol) {
                s.per_time[static_cast<std::size_t>(j)].push_back(f);
                ++hits;
            }
        }
        if (hits > 0) s.union_set.push_back(f);
        if (t > 0 && hits == t) s.intersection.push_back(f);
    }
    return s;
}

} // namespace geetgdr
