#pragma once
#include <Eigen/Dense>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace geetgdr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
using MaskVector = Eigen::Matrix<bool, Eigen::Dynamic, 1>;

/// Base class for every error raised by the library.
class error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Input data or configuration violates a documented invariant.
/// `problems()` lists every violation found, in a stable order.
class validation_error : public error
{
public:
    explicit validation_error(std::vector<std::string> problems)
        : error(join(problems)), problems_(std::move(problems))
    {}

    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join(const std::vector<std::string>& ps)
    {
        std::string out;
        for (std::size_t i = 0; i < ps.size(); ++i) {
            if (i) out += "; ";
            out += ps[i];
        }
        return out;
    }

    std::vector<std::string> problems_;
};

/// Factorization failure or a non-finite quantity during optimization.
class numerical_error : public error
{
public:
    using error::error;
};

/// A fit produced a non-finite gradient or objective at `iteration()`.
class divergence_error : public numerical_error
{
public:
    divergence_error(const std::string& what, int iteration)
        : numerical_error(what + " at iteration " + std::to_string(iteration)),
          iteration_(iteration)
    {}

    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

enum class CorrelationKind { independent, exchangeable, ar1, unstructured };

inline constexpr CorrelationKind all_correlation_kinds[] = {
    CorrelationKind::ar1,
    CorrelationKind::unstructured,
    CorrelationKind::exchangeable,
    CorrelationKind::independent,
};

inline std::string_view to_string(CorrelationKind kind)
{
    switch (kind) {
        case CorrelationKind::independent: return "independent";
        case CorrelationKind::exchangeable: return "exchangeable";
        case CorrelationKind::ar1: return "ar1";
        case CorrelationKind::unstructured: return "unstructured";
    }
    return "unknown";
}

inline CorrelationKind parse_correlation_kind(std::string_view name)
{
    for (auto kind : all_correlation_kinds) {
        if (to_string(kind) == name) return kind;
    }
    throw validation_error({"unknown correlation structure '" + std::string(name) +
                            "' (expected ar1, exchangeable, unstructured or independent)"});
}

} // namespace geetgdr
