#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <map>
#include <span>
#include <vector>

#include "lsrk/covariance.hpp"
#include "lsrk/csv.hpp"
#include "lsrk/parallel.hpp"

namespace lsrk {

class EvaluationGrid {
public:
    explicit EvaluationGrid(std::vector<double> points) : points_(std::move(points)) {
        if (points_.empty()) throw std::invalid_argument("EvaluationGrid: empty");
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (points_[i] < 0.0 || points_[i] > 1.0)
                throw std::invalid_argument("EvaluationGrid: point outside [0,1]");
            if (i > 0 && points_[i] <= points_[i - 1])
                throw std::invalid_argument("EvaluationGrid: points must be strictly increasing");
        }
    }

    // Slightly inset from the boundary, where covariance estimates are least reliable.
    static EvaluationGrid standard(int size = 100, double lo = 0.005, double hi = 0.995) {
        return EvaluationGrid(linspace(lo, hi, size));
    }

    const std::vector<double>& points() const { return points_; }
    int size() const { return static_cast<int>(points_.size()); }

private:
    std::vector<double> points_;
};

// Gamma_t: pointwise cross-covariance matrix of the predictors, symmetrized
// after assembly.
inline Eigen::MatrixXd assemble_gamma_matrix(const CovarianceSet& cs, double t) {
    const int d = cs.d1 + cs.d2;
    Eigen::MatrixXd gamma(d, d);
    for (int p1 = 0; p1 < cs.d1; ++p1)
        for (int p2 = 0; p2 < cs.d1; ++p2) gamma(p1, p2) = cs.xx(p1, p2)(t);
    for (int p = 0; p < cs.d1; ++p)
        for (int q = 0; q < cs.d2; ++q) {
            const double value = cs.xz(p, q)(t);
            gamma(p, cs.d1 + q) = value;
            gamma(cs.d1 + q, p) = value;
        }
    for (int q1 = 0; q1 < cs.d2; ++q1)
        for (int q2 = 0; q2 < cs.d2; ++q2) gamma(cs.d1 + q1, cs.d1 + q2) = cs.cov_zz(q1, q2);
    gamma = 0.5 * (gamma + gamma.transpose()).eval();
    return gamma;
}

inline Eigen::VectorXd assemble_gamma_vector(const CovarianceSet& cs, double t) {
    Eigen::VectorXd g(cs.d1 + cs.d2);
    for (int p = 0; p < cs.d1; ++p) g(p) = cs.yx(p)(t);
    for (int q = 0; q < cs.d2; ++q) g(cs.d1 + q) = cs.yz(q)(t);
    return g;
}

struct RidgePolicy {
    std::vector<double> ladder{0.0, 1e-10, 1e-8, 1e-6, 1e-4};  // multiples of trace/dim
    double max_condition = 1e12;
    double residual_tol = 1e-8;
    int refinement_steps = 5;
};

struct PointSolution {
    Eigen::VectorXd x;
    double ridge_used = 0.0;
};

// Solves (Gamma + eps I) x = gamma with the smallest ladder ridge for which
// the system is invertible, well conditioned, and the refined residual meets
// the tolerance. eps is reported so downstream consumers can see where the
// pointwise system needed help.
inline PointSolution solve_pointwise(const Eigen::MatrixXd& gamma_matrix, const Eigen::VectorXd& gamma_vector,
                                     const RidgePolicy& policy = RidgePolicy{},
                                     double t_for_error = std::numeric_limits<double>::quiet_NaN()) {
    const int d = static_cast<int>(gamma_matrix.rows());
    if (gamma_matrix.cols() != d || gamma_vector.size() != d)
        throw std::invalid_argument("solve_pointwise: dimension mismatch");
    const double scale = std::max(std::abs(gamma_matrix.trace()) / d, std::numeric_limits<double>::min());
    const double rhs_scale = std::max(1.0, gamma_vector.norm());

    for (double mult : policy.ladder) {
        const double eps = mult * scale;
        Eigen::MatrixXd shifted = gamma_matrix;
        shifted.diagonal().array() += eps;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(shifted);
        if (es.info() != Eigen::Success) continue;
        const Eigen::VectorXd abs_eigs = es.eigenvalues().cwiseAbs();
        const double lo = abs_eigs.minCoeff();
        const double hi = abs_eigs.maxCoeff();
        if (!(lo > 0.0) || hi / lo >= policy.max_condition) continue;

        const auto apply_inverse = [&](const Eigen::VectorXd& rhs) {
            return (es.eigenvectors() *
                    (es.eigenvalues().cwiseInverse().asDiagonal() * (es.eigenvectors().transpose() * rhs)))
                .eval();
        };
        Eigen::VectorXd x = apply_inverse(gamma_vector);
        Eigen::VectorXd residual = gamma_vector - shifted * x;
        for (int step = 0; step < policy.refinement_steps && residual.norm() > policy.residual_tol * rhs_scale;
             ++step) {
            x += apply_inverse(residual);
            residual = gamma_vector - shifted * x;
        }
        if (residual.norm() <= policy.residual_tol * rhs_scale) return PointSolution{std::move(x), eps};
    }
    char tbuf[40];
    std::snprintf(tbuf, sizeof(tbuf), "%.6g", t_for_error);
    throw numeric_error(std::string("solve_pointwise: singular pointwise system at t = ") + tbuf);
}

// beta_0(t) = mu_Y(t) - sum_p beta_p(t) mu_Xp(t) - sum_q alpha_q(t) mu_Zq
inline double intercept(const CovarianceSet& cs, const Eigen::VectorXd& coefs_at_t, double t) {
    if (coefs_at_t.size() != cs.d1 + cs.d2) throw std::invalid_argument("intercept: coefficient size mismatch");
    double b0 = cs.mu_y(t);
    for (int p = 0; p < cs.d1; ++p) b0 -= coefs_at_t(p) * cs.mu_x[static_cast<std::size_t>(p)](t);
    for (int q = 0; q < cs.d2; ++q) b0 -= coefs_at_t(cs.d1 + q) * cs.mu_z(q);
    return b0;
}

struct CoefficientEstimates {
    std::vector<double> grid;
    Eigen::VectorXd beta0;      // G
    Eigen::MatrixXd beta;       // d1 x G
    Eigen::MatrixXd alpha;      // d2 x G
    Eigen::VectorXd ridge_used; // G
};

// Pointwise solves over a grid; independent points, parallel-safe.
inline CoefficientEstimates solve_coefficients(const CovarianceSet& cs, const EvaluationGrid& grid,
                                               const RidgePolicy& policy = RidgePolicy{}, int threads = 1) {
    CoefficientEstimates out;
    out.grid = grid.points();
    const int g = grid.size();
    out.beta0.resize(g);
    out.beta.resize(cs.d1, g);
    out.alpha.resize(cs.d2, g);
    out.ridge_used.resize(g);
    parallel_for(static_cast<std::size_t>(g), threads, [&](std::size_t gi) {
        const double t = out.grid[gi];
        const Eigen::MatrixXd gamma_m = assemble_gamma_matrix(cs, t);
        const Eigen::VectorXd gamma_v = assemble_gamma_vector(cs, t);
        const PointSolution sol = solve_pointwise(gamma_m, gamma_v, policy, t);
        const Eigen::Index col = static_cast<Eigen::Index>(gi);
        for (int p = 0; p < cs.d1; ++p) out.beta(p, col) = sol.x(p);
        for (int q = 0; q < cs.d2; ++q) out.alpha(q, col) = sol.x(cs.d1 + q);
        out.beta0(col) = intercept(cs, sol.x, t);
        out.ridge_used(col) = sol.ridge_used;
    });
    return out;
}

// On-demand coefficient evaluation with a per-point cache; one solve serves
// every coefficient function at that point. Not thread-safe.
class CoefficientEvaluator {
public:
    explicit CoefficientEvaluator(const CovarianceSet& cs, RidgePolicy policy = RidgePolicy{})
        : cs_(&cs), policy_(std::move(policy)) {}

    struct Row {
        double beta0;
        Eigen::VectorXd coefs;  // beta_1..beta_d1, alpha_1..alpha_d2
        double ridge_used;
    };

    const Row& at(double t) const {
        auto it = cache_.find(t);
        if (it != cache_.end()) return it->second;
        const Eigen::MatrixXd gm = assemble_gamma_matrix(*cs_, t);
        const Eigen::VectorXd gv = assemble_gamma_vector(*cs_, t);
        PointSolution sol = solve_pointwise(gm, gv, policy_, t);
        Row row{intercept(*cs_, sol.x, t), std::move(sol.x), sol.ridge_used};
        return cache_.emplace(t, std::move(row)).first->second;
    }

private:
    const CovarianceSet* cs_;
    RidgePolicy policy_;
    mutable std::map<double, Row> cache_;
};

inline void write_coefficients_csv(const CoefficientEstimates& est, const std::string& path,
                                   const std::vector<std::string>& predictor_names = {},
                                   const std::vector<std::string>& covariate_names = {}) {
    std::ofstream out(path);
    if (!out) throw input_error("coefficients: cannot write '" + path + "'");
    auto annotate = [](const std::string& base, const std::vector<std::string>& names, int idx) {
        if (idx < static_cast<int>(names.size()) && !names[static_cast<std::size_t>(idx)].empty())
            return base + "(" + names[static_cast<std::size_t>(idx)] + ")";
        return base;
    };
    char buf[40];
    out << "t,beta0";
    for (int p = 0; p < est.beta.rows(); ++p) out << ',' << annotate("beta" + std::to_string(p + 1), predictor_names, p);
    for (int q = 0; q < est.alpha.rows(); ++q) out << ',' << annotate("alpha" + std::to_string(q + 1), covariate_names, q);
    out << ",ridge_used\n";
    for (std::size_t i = 0; i < est.grid.size(); ++i) {
        const Eigen::Index col = static_cast<Eigen::Index>(i);
        std::snprintf(buf, sizeof(buf), "%.17g", est.grid[i]);
        out << buf;
        std::snprintf(buf, sizeof(buf), "%.17g", est.beta0(col));
        out << ',' << buf;
        for (int p = 0; p < est.beta.rows(); ++p) {
            std::snprintf(buf, sizeof(buf), "%.17g", est.beta(p, col));
            out << ',' << buf;
        }
        for (int q = 0; q < est.alpha.rows(); ++q) {
            std::snprintf(buf, sizeof(buf), "%.17g", est.alpha(q, col));
            out << ',' << buf;
        }
        std::snprintf(buf, sizeof(buf), "%.17g", est.ridge_used(col));
        out << ',' << buf << "\n";
    }
}

inline CoefficientEstimates read_coefficients_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("coefficients: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw input_error("coefficients: empty file '" + path + "'");
    const auto strip = [](std::string name) {
        const auto paren = name.find('(');
        if (paren != std::string::npos) name.erase(paren);
        return name;
    };
    std::vector<std::string> header;
    {
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                header.push_back(strip(cur));
                cur.clear();
            } else if (c != '\r') {
                cur.push_back(c);
            }
        }
        header.push_back(strip(cur));
    }
    int d1 = 0, d2 = 0;
    for (const auto& h : header) {
        if (h.rfind("beta", 0) == 0 && h != "beta0") ++d1;
        if (h.rfind("alpha", 0) == 0) ++d2;
    }
    std::vector<std::vector<double>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> row;
        std::string cur;
        auto push = [&]() {
            row.push_back(detail::parse_cell(cur, "coefficients", line_no));
            cur.clear();
        };
        for (char c : line) {
            if (c == ',')
                push();
            else if (c != '\r')
                cur.push_back(c);
        }
        push();
        if (row.size() != header.size())
            throw input_error("coefficients: row " + std::to_string(line_no) + " width mismatch");
        rows.push_back(std::move(row));
    }
    CoefficientEstimates est;
    const int g = static_cast<int>(rows.size());
    if (g == 0) throw input_error("coefficients: no rows in '" + path + "'");
    est.beta0.resize(g);
    est.beta.resize(d1, g);
    est.alpha.resize(d2, g);
    est.ridge_used.resize(g);
    for (int i = 0; i < g; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        est.grid.push_back(row[0]);
        est.beta0(i) = row[1];
        for (int p = 0; p < d1; ++p) est.beta(p, i) = row[static_cast<std::size_t>(2 + p)];
        for (int q = 0; q < d2; ++q) est.alpha(q, i) = row[static_cast<std::size_t>(2 + d1 + q)];
        est.ridge_used(i) = row.back();
    }
    return est;
}

}  // namespace lsrk
