#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lsrk/common.hpp"
#include "lsrk/quadrature.hpp"

namespace lsrk {

using CoefficientFunction = std::function<double(double)>;

struct NamedFunction {
    std::string name;
    CoefficientFunction f;
};

// max - min over a fixed uniform grid of the truth; the normalization must not
// depend on estimator quality.
inline double function_range(const CoefficientFunction& f, int grid_points = 1001) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid_points; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(grid_points - 1);
        const double v = f(t);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

namespace detail {

inline void check_metric_inputs(const std::vector<NamedFunction>& truth,
                                const std::vector<CoefficientFunction>& estimate) {
    if (truth.empty()) throw std::invalid_argument("metrics: no coefficient functions supplied");
    if (truth.size() != estimate.size())
        throw std::invalid_argument("metrics: truth/estimate count mismatch");
}

}  // namespace detail

// Range-normalized integrated absolute error, averaged over the supplied
// coefficient functions. Integrals by Gauss-Legendre on [0,1].
inline double made(const std::vector<NamedFunction>& truth, const std::vector<CoefficientFunction>& estimate,
                   int quadrature_nodes = 50, int range_grid = 1001) {
    detail::check_metric_inputs(truth, estimate);
    const QuadratureRule rule = gauss_legendre(quadrature_nodes, 0.0, 1.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double range = function_range(truth[i].f, range_grid);
        if (!(range > 0.0))
            throw std::invalid_argument("made: coefficient function '" + truth[i].name + "' has zero range");
        double integral = 0.0;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k)
            integral += rule.weights[k] * std::abs(truth[i].f(rule.nodes[k]) - estimate[i](rule.nodes[k]));
        acc += integral / range;
    }
    return acc / static_cast<double>(truth.size());
}

// Squared-deviation counterpart with squared range normalization.
inline double wase(const std::vector<NamedFunction>& truth, const std::vector<CoefficientFunction>& estimate,
                   int quadrature_nodes = 50, int range_grid = 1001) {
    detail::check_metric_inputs(truth, estimate);
    const QuadratureRule rule = gauss_legendre(quadrature_nodes, 0.0, 1.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double range = function_range(truth[i].f, range_grid);
        if (!(range > 0.0))
            throw std::invalid_argument("wase: coefficient function '" + truth[i].name + "' has zero range");
        double integral = 0.0;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
            const double d = truth[i].f(rule.nodes[k]) - estimate[i](rule.nodes[k]);
            integral += rule.weights[k] * d * d;
        }
        acc += integral / (range * range);
    }
    return acc / static_cast<double>(truth.size());
}

// Unnormalized integrated squared errors, one per coefficient function.
inline std::vector<double> integrated_squared_errors(const std::vector<NamedFunction>& truth,
                                                     const std::vector<CoefficientFunction>& estimate,
                                                     int quadrature_nodes = 50) {
    detail::check_metric_inputs(truth, estimate);
    const QuadratureRule rule = gauss_legendre(quadrature_nodes, 0.0, 1.0);
    std::vector<double> out;
    out.reserve(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        double integral = 0.0;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
            const double d = truth[i].f(rule.nodes[k]) - estimate[i](rule.nodes[k]);
            integral += rule.weights[k] * d * d;
        }
        out.push_back(integral);
    }
    return out;
}

struct MetricsReport {
    double made = 0.0;
    double wase = 0.0;
    std::vector<double> per_function_ise;
    double runtime_seconds = 0.0;
};

}  // namespace lsrk
