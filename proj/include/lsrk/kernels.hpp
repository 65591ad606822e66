#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "lsrk/common.hpp"

namespace lsrk {

inline constexpr double kPsdTolerance = 1e-8;
inline constexpr std::size_t kDefaultDenseCap = 5000;

// A reproducing kernel on [0,1]: either a Gaussian base kernel or a pointwise
// product of two Gaussian base kernels. Products of products are not allowed;
// every covariance target here lives in the span of base kernels and their
// pairwise products.
class Kernel {
public:
    static Kernel gaussian(double theta) {
        if (!(theta > 0.0)) throw std::invalid_argument("Kernel::gaussian: theta must be positive");
        Kernel k;
        k.product_ = false;
        k.theta_a_ = theta;
        k.theta_b_ = 0.0;
        return k;
    }

    static Kernel product(const Kernel& left, const Kernel& right) {
        if (left.is_product() || right.is_product())
            throw std::invalid_argument("Kernel::product: factors must be base kernels");
        Kernel k;
        k.product_ = true;
        k.theta_a_ = left.theta_a_;
        k.theta_b_ = right.theta_a_;
        return k;
    }

    bool is_product() const { return product_; }

    double theta() const {
        if (product_) throw std::invalid_argument("Kernel::theta: not a base kernel");
        return theta_a_;
    }

    Kernel left() const {
        if (!product_) throw std::invalid_argument("Kernel::left: not a product kernel");
        return gaussian(theta_a_);
    }

    Kernel right() const {
        if (!product_) throw std::invalid_argument("Kernel::right: not a product kernel");
        return gaussian(theta_b_);
    }

    double operator()(double s, double t) const {
        const double d = s - t;
        const double q = d * d;
        if (!product_) return std::exp(-q / (2.0 * theta_a_ * theta_a_));
        // Evaluated as a product of the two factors so that it agrees exactly
        // with the Hadamard product of the factor Gram matrices.
        return std::exp(-q / (2.0 * theta_a_ * theta_a_)) * std::exp(-q / (2.0 * theta_b_ * theta_b_));
    }

    // Stable identifier; order-insensitive for products (pointwise products commute).
    std::string key() const {
        char buf[96];
        if (!product_) {
            std::snprintf(buf, sizeof(buf), "g(%.17g)", theta_a_);
            return buf;
        }
        const double lo = std::min(theta_a_, theta_b_);
        const double hi = std::max(theta_a_, theta_b_);
        std::snprintf(buf, sizeof(buf), "p(%.17g,%.17g)", lo, hi);
        return buf;
    }

    friend bool operator==(const Kernel& a, const Kernel& b) { return a.key() == b.key(); }

private:
    Kernel() = default;
    bool product_ = false;
    double theta_a_ = 0.1;
    double theta_b_ = 0.0;
};

// Dense Gram matrix K(p_i, p_j). Each unordered pair is evaluated once and
// mirrored, so the result is exactly symmetric. The cap bounds memory at
// O(N^2); larger problems go through the low-rank route in the smoother.
inline Eigen::MatrixXd gram_matrix(const Kernel& k, std::span<const double> points,
                                   std::size_t dense_cap = kDefaultDenseCap) {
    const std::size_t n = points.size();
    if (n == 0) throw std::invalid_argument("gram_matrix: empty point set");
    if (n > dense_cap)
        throw numeric_error("gram_matrix: " + std::to_string(n) + " points exceeds dense cap " +
                            std::to_string(dense_cap));
    Eigen::MatrixXd g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = k(points[i], points[j]);
            g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    }
    return g;
}

// Hadamard product of the two base Gram matrices.
inline Eigen::MatrixXd product_gram_matrix(const Kernel& k1, const Kernel& k2,
                                           std::span<const double> points,
                                           std::size_t dense_cap = kDefaultDenseCap) {
    return gram_matrix(k1, points, dense_cap).cwiseProduct(gram_matrix(k2, points, dense_cap));
}

// True iff the smallest eigenvalue is >= -tol. Requires symmetry within tol.
inline bool check_nonneg_definite(const Eigen::MatrixXd& m, double tol) {
    if (m.rows() != m.cols()) throw std::invalid_argument("check_nonneg_definite: matrix not square");
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (asym > tol * scale) throw std::invalid_argument("check_nonneg_definite: matrix not symmetric within tolerance");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol;
}

// A function in the representer span: f(t) = sum_k a_k K(t, knot_k).
struct FunctionEstimate {
    Kernel kernel = Kernel::gaussian(0.1);
    std::vector<double> knots;
    Eigen::VectorXd coefficients;

    double operator()(double t) const {
        const std::size_t n = knots.size();
        if (static_cast<std::size_t>(coefficients.size()) != n)
            throw std::invalid_argument("FunctionEstimate: knots/coefficients length mismatch");
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            acc += coefficients(static_cast<Eigen::Index>(j)) * kernel(t, knots[j]);
        return acc;
    }

    Eigen::VectorXd evaluate(std::span<const double> points) const {
        Eigen::VectorXd out(static_cast<Eigen::Index>(points.size()));
        for (std::size_t i = 0; i < points.size(); ++i) out(static_cast<Eigen::Index>(i)) = (*this)(points[i]);
        return out;
    }

    // a' Q a accumulated pairwise without materializing Q, so there is no size cap.
    double rkhs_norm_sq() const {
        const std::size_t n = knots.size();
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ai = coefficients(static_cast<Eigen::Index>(i));
            acc += ai * ai;  // diagonal entries are 1 for these kernels
            for (std::size_t j = i + 1; j < n; ++j)
                acc += 2.0 * ai * coefficients(static_cast<Eigen::Index>(j)) * kernel(knots[i], knots[j]);
        }
        return acc;
    }
};

}  // namespace lsrk
