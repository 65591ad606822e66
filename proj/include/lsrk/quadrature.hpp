#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace lsrk {

struct QuadratureRule {
    std::vector<double> nodes;    // ascending, inside (a,b)
    std::vector<double> weights;  // positive, sum to b-a
};

// Gauss-Legendre nodes and weights on [a,b] by Newton iteration on the
// Legendre polynomial; exact for polynomials of degree <= 2n-1.
inline QuadratureRule gauss_legendre(int n, double a, double b) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
    if (!(a < b)) throw std::invalid_argument("gauss_legendre: need a < b");
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    const double eps = 1e-15;
    const double xm = 0.5 * (b + a);
    const double xl = 0.5 * (b - a);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= eps) break;
        }
        rule.nodes[static_cast<std::size_t>(i)] = xm - xl * z;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = xm + xl * z;
        const double w = 2.0 * xl / ((1.0 - z * z) * pp * pp);
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    return rule;
}

inline double gauss_legendre_integrate(const std::function<double(double)>& f, double a, double b,
                                       int nodes) {
    const QuadratureRule rule = gauss_legendre(nodes, a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * f(rule.nodes[i]);
    return acc;
}

}  // namespace lsrk
