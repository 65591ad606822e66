#pragma once

#include <Eigen/Dense>
#include <numeric>
#include <span>
#include <vector>

#include "lsrk/data.hpp"
#include "lsrk/kernels.hpp"

namespace lsrk {

// Raw per-observation targets in pooled order, plus the subject group sizes
// that define the 1/M_i observation weights.
struct RawTargets {
    Eigen::VectorXd values;
    std::vector<int> group_sizes;

    int n_subjects() const { return static_cast<int>(group_sizes.size()); }
};

// m = [1/sqrt(M_1) 1'_{M_1}, ..., 1/sqrt(M_n) 1'_{M_n}]'
inline Eigen::VectorXd weight_vector(const std::vector<int>& group_sizes) {
    int total = 0;
    for (int m : group_sizes) {
        if (m < 1) throw std::invalid_argument("weight_vector: group size must be >= 1");
        total += m;
    }
    Eigen::VectorXd w(total);
    int k = 0;
    for (int m : group_sizes) {
        const double value = 1.0 / std::sqrt(static_cast<double>(m));
        for (int j = 0; j < m; ++j) w(k++) = value;
    }
    return w;
}

// (1/n) sum_i (1/M_i) sum_j (g_ij - fitted_ij)^2
inline double weighted_loss_from_values(const Eigen::VectorXd& fitted, const RawTargets& targets) {
    if (fitted.size() != targets.values.size())
        throw std::invalid_argument("weighted_loss: fitted/targets length mismatch");
    double acc = 0.0;
    int k = 0;
    for (int m : targets.group_sizes) {
        double subject_acc = 0.0;
        for (int j = 0; j < m; ++j, ++k) {
            const double r = targets.values(k) - fitted(k);
            subject_acc += r * r;
        }
        acc += subject_acc / static_cast<double>(m);
    }
    if (k != static_cast<int>(fitted.size()))
        throw std::invalid_argument("weighted_loss: group sizes do not sum to target length");
    return acc / static_cast<double>(targets.group_sizes.size());
}

inline double weighted_loss(const FunctionEstimate& f, const RawTargets& targets,
                            std::span<const double> points) {
    return weighted_loss_from_values(f.evaluate(points), targets);
}

struct SmoothingFit {
    FunctionEstimate estimate;
    double lambda = 0.0;
    double objective = 0.0;  // loss + lambda * norm_sq
    double loss = 0.0;
    double norm_sq = 0.0;
    Eigen::VectorXd fitted_at_knots;
};

struct SmootherOptions {
    std::size_t dense_cap = kDefaultDenseCap;  // largest N handled with a dense Gram
    double lowrank_tol = 1e-12;                // relative trace tolerance of the pivoted factor
    int lowrank_max_rank = 2000;
};

// Penalized least squares over the representer span at the pooled knots.
// Minimizes (1/n) sum_i (1/M_i) sum_j (g_ij - f(T_ij))^2 + lambda |f|^2 by
// solving the symmetrized normal equations (S Q S + n lambda I) c = S g with
// S = diag(m) and a = S c. Above the dense cap the Gram matrix is replaced by
// a pivoted Cholesky factor Q ~ L L' (machine-tolerance accurate for these
// analytic kernels) and the shifted system is solved through the Woodbury
// identity at O(N r^2).
class RidgeSolver {
public:
    RidgeSolver(std::vector<double> points, std::vector<int> group_sizes, Kernel kernel,
                SmootherOptions options = SmootherOptions{})
        : points_(std::move(points)),
          group_sizes_(std::move(group_sizes)),
          kernel_(std::move(kernel)),
          options_(options) {
        const int total = std::accumulate(group_sizes_.begin(), group_sizes_.end(), 0);
        if (total != static_cast<int>(points_.size()))
            throw std::invalid_argument("RidgeSolver: group sizes do not match point count");
        if (points_.empty()) throw std::invalid_argument("RidgeSolver: no points");
        s_ = weight_vector(group_sizes_);
        n_subjects_ = static_cast<int>(group_sizes_.size());
        dense_ = points_.size() <= options_.dense_cap;
        if (dense_) {
            const Eigen::MatrixXd q = gram_matrix(kernel_, points_, options_.dense_cap);
            b_ = s_.asDiagonal() * q * s_.asDiagonal();
        } else {
            pivoted_cholesky();
        }
    }

    struct Factor {
        double lambda = 0.0;
        double ridge = 0.0;               // n * lambda actually applied (plus any jitter)
        bool dense = true;
        Eigen::LLT<Eigen::MatrixXd> llt;  // dense path
        Eigen::LDLT<Eigen::MatrixXd> core;  // low-rank path: nl*I_r + F'F
    };

    Factor factorize(double lambda) const {
        if (!(lambda > 0.0)) throw std::invalid_argument("RidgeSolver: lambda must be positive");
        Factor f;
        f.lambda = lambda;
        f.dense = dense_;
        const double nl = static_cast<double>(n_subjects_) * lambda;
        f.ridge = nl;
        if (dense_) {
            const double scale = b_.diagonal().mean();
            double jitter = 0.0;
            for (int attempt = 0; attempt < 8; ++attempt) {
                Eigen::MatrixXd shifted = b_;
                shifted.diagonal().array() += nl + jitter;
                f.llt.compute(shifted);
                if (f.llt.info() == Eigen::Success) {
                    f.ridge = nl + jitter;
                    return f;
                }
                jitter = (jitter == 0.0) ? 1e-12 * scale : 10.0 * jitter;
                if (jitter > 1e-6 * scale) break;
            }
            throw numeric_error("fit_regularized: system not factorizable; increase lambda");
        }
        Eigen::MatrixXd core = lowrank_f_.transpose() * lowrank_f_;
        core.diagonal().array() += nl;
        f.core.compute(core);
        if (f.core.info() != Eigen::Success)
            throw numeric_error("fit_regularized: low-rank core not factorizable; increase lambda");
        return f;
    }

    SmoothingFit fit(const Factor& factor, const Eigen::VectorXd& g) const {
        if (g.size() != static_cast<Eigen::Index>(points_.size()))
            throw std::invalid_argument("RidgeSolver: target length mismatch");
        SmoothingFit out;
        out.lambda = factor.lambda;
        const Eigen::VectorXd sg = s_.cwiseProduct(g);
        Eigen::VectorXd c;
        if (factor.dense) {
            c = factor.llt.solve(sg);
            const Eigen::VectorXd bc = b_ * c;
            out.fitted_at_knots = bc.cwiseQuotient(s_);
            out.norm_sq = c.dot(bc);
        } else {
            const Eigen::VectorXd ft = lowrank_f_.transpose() * sg;
            c = (sg - lowrank_f_ * factor.core.solve(ft)) / factor.ridge;
            const Eigen::VectorXd lta = lowrank_l_.transpose() * s_.cwiseProduct(c);
            out.fitted_at_knots = lowrank_l_ * lta;
            out.norm_sq = lta.squaredNorm();
        }
        out.estimate.kernel = kernel_;
        out.estimate.knots = points_;
        out.estimate.coefficients = s_.cwiseProduct(c);
        RawTargets targets{g, group_sizes_};
        out.loss = weighted_loss_from_values(out.fitted_at_knots, targets);
        out.objective = out.loss + factor.lambda * out.norm_sq;
        return out;
    }

    // Linear operator evaluating a fit at fixed new points: dense gives the
    // cross Gram block, low-rank gives extension rows against the factor.
    Eigen::MatrixXd prediction_operator(std::span<const double> new_points) const {
        const Eigen::Index p = static_cast<Eigen::Index>(new_points.size());
        if (dense_) {
            Eigen::MatrixXd op(p, static_cast<Eigen::Index>(points_.size()));
            for (Eigen::Index i = 0; i < p; ++i)
                for (std::size_t j = 0; j < points_.size(); ++j)
                    op(i, static_cast<Eigen::Index>(j)) = kernel_(new_points[static_cast<std::size_t>(i)], points_[j]);
            return op;
        }
        const int r = static_cast<int>(pivots_.size());
        Eigen::MatrixXd op(p, r);
        Eigen::VectorXd kvec(r);
        for (Eigen::Index i = 0; i < p; ++i) {
            for (int m = 0; m < r; ++m)
                kvec(m) = kernel_(new_points[static_cast<std::size_t>(i)], points_[static_cast<std::size_t>(pivots_[static_cast<std::size_t>(m)])]);
            op.row(i) = pivot_block_.triangularView<Eigen::Lower>().solve(kvec).transpose();
        }
        return op;
    }

    Eigen::VectorXd predict(const Eigen::MatrixXd& op, const Eigen::VectorXd& coefficients) const {
        if (dense_) return op * coefficients;
        return op * (lowrank_l_.transpose() * coefficients);
    }

    bool dense() const { return dense_; }
    int rank() const { return dense_ ? static_cast<int>(points_.size()) : static_cast<int>(pivots_.size()); }
    const std::vector<double>& points() const { return points_; }
    const std::vector<int>& group_sizes() const { return group_sizes_; }
    const Kernel& kernel() const { return kernel_; }

private:
    void pivoted_cholesky() {
        const std::size_t n = points_.size();
        const int max_rank = std::min<int>(options_.lowrank_max_rank, static_cast<int>(n));
        Eigen::VectorXd diag = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));  // K(t,t) = 1
        const double trace_tol = options_.lowrank_tol * static_cast<double>(n);
        Eigen::MatrixXd l(static_cast<Eigen::Index>(n), max_rank);
        std::vector<int> piv;
        int r = 0;
        while (r < max_rank) {
            if (diag.sum() <= trace_tol) break;
            Eigen::Index j;
            const double pivot = diag.maxCoeff(&j);
            if (pivot <= 0.0) break;
            Eigen::VectorXd col(static_cast<Eigen::Index>(n));
            const double tj = points_[static_cast<std::size_t>(j)];
            for (std::size_t i = 0; i < n; ++i) col(static_cast<Eigen::Index>(i)) = kernel_(points_[i], tj);
            if (r > 0) col.noalias() -= l.leftCols(r) * l.row(j).head(r).transpose();
            const double root = std::sqrt(pivot);
            col(j) = pivot;  // guard roundoff at the pivot itself
            col /= root;
            l.col(r) = col;
            diag -= col.cwiseProduct(col);
            diag = diag.cwiseMax(0.0);
            diag(j) = 0.0;
            piv.push_back(static_cast<int>(j));
            ++r;
        }
        if (diag.sum() > trace_tol)
            throw numeric_error("fit_regularized: kernel matrix rank exceeds the low-rank budget; "
                                "raise dense_cap or lowrank_max_rank");
        lowrank_l_ = l.leftCols(r);
        pivots_ = std::move(piv);
        pivot_block_.resize(r, r);
        for (int i = 0; i < r; ++i) pivot_block_.row(i) = lowrank_l_.row(pivots_[static_cast<std::size_t>(i)]);
        lowrank_f_ = s_.asDiagonal() * lowrank_l_;
    }

    std::vector<double> points_;
    std::vector<int> group_sizes_;
    Kernel kernel_;
    SmootherOptions options_;
    Eigen::VectorXd s_;  // diag entries 1/sqrt(M_i)
    int n_subjects_ = 0;
    bool dense_ = true;
    Eigen::MatrixXd b_;           // dense: S Q S
    Eigen::MatrixXd lowrank_l_;   // N x r with Q ~ L L'
    Eigen::MatrixXd lowrank_f_;   // S L
    Eigen::MatrixXd pivot_block_; // L(pivots, :), lower triangular
    std::vector<int> pivots_;
};

inline SmoothingFit fit_regularized(const RawTargets& targets, std::span<const double> points,
                                    const Kernel& kernel, double lambda,
                                    const SmootherOptions& options = SmootherOptions{}) {
    RidgeSolver solver(std::vector<double>(points.begin(), points.end()), targets.group_sizes, kernel,
                       options);
    return solver.fit(solver.factorize(lambda), targets.values);
}

enum class MeanTarget { response, predictor };

// Mean-function smoothing: the same ridge smoother applied to the raw
// observations of one variable.
inline SmoothingFit fit_mean_function(const LongitudinalDataset& data, MeanTarget target, int predictor,
                                      const Kernel& kernel, double lambda,
                                      const SmootherOptions& options = SmootherOptions{}) {
    RawTargets t;
    t.group_sizes = data.group_sizes();
    t.values.resize(data.total_observations());
    int k = 0;
    for (const auto& s : data.subjects()) {
        for (int j = 0; j < s.m(); ++j, ++k)
            t.values(k) = (target == MeanTarget::response) ? s.v[static_cast<std::size_t>(j)] : s.u(predictor, j);
    }
    return fit_regularized(t, pooled_times(data), kernel, lambda, options);
}

}  // namespace lsrk
