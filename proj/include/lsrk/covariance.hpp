#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "lsrk/data.hpp"
#include "lsrk/parallel.hpp"
#include "lsrk/smoothing.hpp"

namespace lsrk {

// One base kernel per observed process: K for the response, K_p for each
// functional predictor. Covariance targets use these or their pairwise
// products, matching the spaces the one-dimensional covariances live in:
// C_{X_{p1}X_{p2}} in H(K_{p1}K_{p2}), C_{X_pZ_q} in H(K_p),
// C_{YX_p} in H(K K_p), C_{YZ_q} in H(K).
struct KernelSet {
    Kernel y = Kernel::gaussian(0.1);
    std::vector<Kernel> x;

    static KernelSet defaults(int d1, double theta = 0.1) {
        KernelSet ks;
        ks.y = Kernel::gaussian(theta);
        ks.x.assign(static_cast<std::size_t>(d1), Kernel::gaussian(theta));
        return ks;
    }
};

struct MeanEstimates {
    FunctionEstimate mu_y;
    std::vector<FunctionEstimate> mu_x;
    Eigen::VectorXd mu_z;
};

inline Eigen::VectorXd scalar_means(const LongitudinalDataset& data) {
    Eigen::VectorXd zbar = Eigen::VectorXd::Zero(data.d2());
    for (const auto& s : data.subjects())
        for (int q = 0; q < data.d2(); ++q) zbar(q) += s.z[static_cast<std::size_t>(q)];
    return zbar / static_cast<double>(data.n());
}

// (1/n) sum_i (Z_{q1,i} - Zbar_{q1})(Z_{q2,i} - Zbar_{q2}); divisor n.
inline Eigen::MatrixXd scalar_covariances(const LongitudinalDataset& data) {
    if (data.n() < 2) throw input_error("scalar_covariances: need at least 2 subjects");
    const Eigen::VectorXd zbar = scalar_means(data);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(data.d2(), data.d2());
    for (const auto& s : data.subjects()) {
        Eigen::VectorXd centered(data.d2());
        for (int q = 0; q < data.d2(); ++q) centered(q) = s.z[static_cast<std::size_t>(q)] - zbar(q);
        c.noalias() += centered * centered.transpose();
    }
    return c / static_cast<double>(data.n());
}

struct CovPair {
    enum class Family { xx, xz, yx, yz };
    Family family;
    int a = 0;  // predictor index (or first of the pair)
    int b = 0;  // second predictor / covariate index

    static CovPair XX(int p1, int p2) { return {Family::xx, p1, p2}; }
    static CovPair XZ(int p, int q) { return {Family::xz, p, q}; }
    static CovPair YX(int p) { return {Family::yx, p, 0}; }
    static CovPair YZ(int q) { return {Family::yz, q, 0}; }
};

namespace detail {

// Centered observation residuals at the pooled points.
struct CenteredData {
    Eigen::VectorXd resid_y;                // V_ij - mu_y(T_ij)
    std::vector<Eigen::VectorXd> resid_x;   // U_pij - mu_xp(T_ij), per p
    Eigen::MatrixXd centered_z;             // d2 x n: Z_qi - Zbar_q
    std::vector<int> subject_of;            // pooled index -> subject index
};

inline CenteredData center_observations(const LongitudinalDataset& data, const Eigen::VectorXd& mu_y_at,
                                        const std::vector<Eigen::VectorXd>& mu_x_at,
                                        const Eigen::VectorXd& zbar) {
    CenteredData out;
    const int total = data.total_observations();
    out.resid_y.resize(total);
    out.resid_x.assign(static_cast<std::size_t>(data.d1()), Eigen::VectorXd(total));
    out.centered_z.resize(data.d2(), data.n());
    out.subject_of.resize(static_cast<std::size_t>(total));
    int k = 0;
    for (int i = 0; i < data.n(); ++i) {
        const auto& s = data.subject(i);
        for (int q = 0; q < data.d2(); ++q) out.centered_z(q, i) = s.z[static_cast<std::size_t>(q)] - zbar(q);
        for (int j = 0; j < s.m(); ++j, ++k) {
            out.subject_of[static_cast<std::size_t>(k)] = i;
            out.resid_y(k) = s.v[static_cast<std::size_t>(j)] - mu_y_at(k);
            for (int p = 0; p < data.d1(); ++p) out.resid_x[static_cast<std::size_t>(p)](k) = s.u(p, j) - mu_x_at[static_cast<std::size_t>(p)](k);
        }
    }
    return out;
}

inline Eigen::VectorXd raw_target_values(const CenteredData& c, const CovPair& pair) {
    const Eigen::Index total = c.resid_y.size();
    Eigen::VectorXd g(total);
    switch (pair.family) {
        case CovPair::Family::xx:
            g = c.resid_x.at(static_cast<std::size_t>(pair.a)).cwiseProduct(c.resid_x.at(static_cast<std::size_t>(pair.b)));
            break;
        case CovPair::Family::yx:
            g = c.resid_y.cwiseProduct(c.resid_x.at(static_cast<std::size_t>(pair.a)));
            break;
        case CovPair::Family::xz: {
            const Eigen::VectorXd& rx = c.resid_x.at(static_cast<std::size_t>(pair.a));
            for (Eigen::Index k = 0; k < total; ++k)
                g(k) = rx(k) * c.centered_z(pair.b, c.subject_of[static_cast<std::size_t>(k)]);
            break;
        }
        case CovPair::Family::yz:
            for (Eigen::Index k = 0; k < total; ++k)
                g(k) = c.resid_y(k) * c.centered_z(pair.a, c.subject_of[static_cast<std::size_t>(k)]);
            break;
    }
    return g;
}

}  // namespace detail

// Raw covariance terms at the pooled observation points: products of centered
// observations, with scalar covariates centered by their subject-level mean.
inline RawTargets raw_targets(const LongitudinalDataset& data, const MeanEstimates& means,
                              const CovPair& pair) {
    const int d1 = data.d1();
    const int d2 = data.d2();
    auto check = [&](int idx, int bound, const char* what) {
        if (idx < 0 || idx >= bound)
            throw std::invalid_argument(std::string("raw_targets: ") + what + " index out of range");
    };
    switch (pair.family) {
        case CovPair::Family::xx:
            check(pair.a, d1, "predictor");
            check(pair.b, d1, "predictor");
            break;
        case CovPair::Family::xz:
            check(pair.a, d1, "predictor");
            check(pair.b, d2, "covariate");
            break;
        case CovPair::Family::yx:
            check(pair.a, d1, "predictor");
            break;
        case CovPair::Family::yz:
            check(pair.a, d2, "covariate");
            break;
    }
    const std::vector<double> points = pooled_times(data);
    const Eigen::VectorXd mu_y_at = means.mu_y.evaluate(points);
    std::vector<Eigen::VectorXd> mu_x_at;
    for (const auto& f : means.mu_x) mu_x_at.push_back(f.evaluate(points));
    const auto centered = detail::center_observations(data, mu_y_at, mu_x_at, means.mu_z);
    return RawTargets{detail::raw_target_values(centered, pair), data.group_sizes()};
}

// Per-family smoothing parameters (already resolved to scalars), with optional
// per-pair overrides.
struct ResolvedLambdas {
    double mean_y = 1e-3;
    double mean_x = 1e-3;
    double xx = 1e-3;
    double xz = 1e-3;
    double yx = 1e-3;
    double yz = 1e-3;
    std::map<std::pair<int, int>, double> xx_overrides;  // keyed by (p1<=p2)
    std::map<std::pair<int, int>, double> xz_overrides;
    std::map<int, double> yx_overrides;
    std::map<int, double> yz_overrides;

    double for_pair(const CovPair& pair) const {
        switch (pair.family) {
            case CovPair::Family::xx: {
                const auto key = std::minmax(pair.a, pair.b);
                auto it = xx_overrides.find({key.first, key.second});
                return it == xx_overrides.end() ? xx : it->second;
            }
            case CovPair::Family::xz: {
                auto it = xz_overrides.find({pair.a, pair.b});
                return it == xz_overrides.end() ? xz : it->second;
            }
            case CovPair::Family::yx: {
                auto it = yx_overrides.find(pair.a);
                return it == yx_overrides.end() ? yx : it->second;
            }
            case CovPair::Family::yz: {
                auto it = yz_overrides.find(pair.a);
                return it == yz_overrides.end() ? yz : it->second;
            }
        }
        return 1e-3;
    }
};

// All estimated means and one-dimensional covariance functions, sharing the
// pooled knot set of the dataset they were fitted on.
struct CovarianceSet {
    int d1 = 0;
    int d2 = 0;
    FunctionEstimate mu_y;
    std::vector<FunctionEstimate> mu_x;
    Eigen::VectorXd mu_z;
    std::vector<FunctionEstimate> cov_xx;  // upper triangle, (p1,p2) with p1 <= p2
    std::vector<FunctionEstimate> cov_xz;  // row-major d1 x d2
    std::vector<FunctionEstimate> cov_yx;  // d1
    std::vector<FunctionEstimate> cov_yz;  // d2
    Eigen::MatrixXd cov_zz;

    static std::size_t xx_index(int p1, int p2, int d1) {
        const auto [lo, hi] = std::minmax(p1, p2);
        return static_cast<std::size_t>(lo * d1 - lo * (lo - 1) / 2 + (hi - lo));
    }
    const FunctionEstimate& xx(int p1, int p2) const { return cov_xx.at(xx_index(p1, p2, d1)); }
    const FunctionEstimate& xz(int p, int q) const { return cov_xz.at(static_cast<std::size_t>(p * d2 + q)); }
    const FunctionEstimate& yx(int p) const { return cov_yx.at(static_cast<std::size_t>(p)); }
    const FunctionEstimate& yz(int q) const { return cov_yz.at(static_cast<std::size_t>(q)); }
};

struct CovarianceOptions {
    SmootherOptions smoother;
    int threads = 1;
};

inline Kernel kernel_for_pair(const KernelSet& kernels, const CovPair& pair) {
    switch (pair.family) {
        case CovPair::Family::xx:
            return Kernel::product(kernels.x.at(static_cast<std::size_t>(pair.a)),
                                   kernels.x.at(static_cast<std::size_t>(pair.b)));
        case CovPair::Family::xz:
            return kernels.x.at(static_cast<std::size_t>(pair.a));
        case CovPair::Family::yx:
            return Kernel::product(kernels.y, kernels.x.at(static_cast<std::size_t>(pair.a)));
        case CovPair::Family::yz:
            return kernels.y;
    }
    throw std::logic_error("kernel_for_pair: unreachable");
}

inline std::vector<CovPair> covariance_pairs(int d1, int d2) {
    std::vector<CovPair> pairs;
    for (int p1 = 0; p1 < d1; ++p1)
        for (int p2 = p1; p2 < d1; ++p2) pairs.push_back(CovPair::XX(p1, p2));
    for (int p = 0; p < d1; ++p)
        for (int q = 0; q < d2; ++q) pairs.push_back(CovPair::XZ(p, q));
    for (int p = 0; p < d1; ++p) pairs.push_back(CovPair::YX(p));
    for (int q = 0; q < d2; ++q) pairs.push_back(CovPair::YZ(q));
    return pairs;
}

// Full plug-in covariance model: means first (then frozen), scalar moments,
// then every covariance target smoothed in its mandated kernel space.
inline CovarianceSet estimate_covariance_set(const LongitudinalDataset& data, const KernelSet& kernels,
                                             const ResolvedLambdas& lambdas,
                                             const CovarianceOptions& options = CovarianceOptions{}) {
    if (data.n() < 2) throw input_error("estimate_covariance_set: need at least 2 subjects");
    if (static_cast<int>(kernels.x.size()) != data.d1())
        throw std::invalid_argument("estimate_covariance_set: kernel count does not match d1");

    const std::vector<double> points = pooled_times(data);
    const std::vector<int> groups = data.group_sizes();

    std::map<std::string, std::shared_ptr<RidgeSolver>> solvers;
    auto solver_for = [&](const Kernel& k) {
        auto it = solvers.find(k.key());
        if (it != solvers.end()) return it->second;
        auto s = std::make_shared<RidgeSolver>(points, groups, k, options.smoother);
        solvers.emplace(k.key(), s);
        return s;
    };

    CovarianceSet out;
    out.d1 = data.d1();
    out.d2 = data.d2();

    // Means, fitted first and frozen.
    {
        auto sy = solver_for(kernels.y);
        RawTargets ty;
        ty.group_sizes = groups;
        ty.values.resize(data.total_observations());
        int k = 0;
        for (const auto& s : data.subjects())
            for (double v : s.v) ty.values(k++) = v;
        SmoothingFit fy = sy->fit(sy->factorize(lambdas.mean_y), ty.values);
        out.mu_y = fy.estimate;
        Eigen::VectorXd mu_y_at = fy.fitted_at_knots;

        std::vector<Eigen::VectorXd> mu_x_at;
        for (int p = 0; p < data.d1(); ++p) {
            auto sx = solver_for(kernels.x[static_cast<std::size_t>(p)]);
            Eigen::VectorXd g(data.total_observations());
            k = 0;
            for (const auto& s : data.subjects())
                for (int j = 0; j < s.m(); ++j) g(k++) = s.u(p, j);
            SmoothingFit fx = sx->fit(sx->factorize(lambdas.mean_x), g);
            out.mu_x.push_back(fx.estimate);
            mu_x_at.push_back(fx.fitted_at_knots);
        }

        out.mu_z = scalar_means(data);
        out.cov_zz = data.d2() > 0 ? scalar_covariances(data) : Eigen::MatrixXd(0, 0);

        const auto centered = detail::center_observations(data, mu_y_at, mu_x_at, out.mu_z);

        const std::vector<CovPair> pairs = covariance_pairs(data.d1(), data.d2());
        out.cov_xx.resize(static_cast<std::size_t>(data.d1() * (data.d1() + 1) / 2));
        out.cov_xz.resize(static_cast<std::size_t>(data.d1() * data.d2()));
        out.cov_yx.resize(static_cast<std::size_t>(data.d1()));
        out.cov_yz.resize(static_cast<std::size_t>(data.d2()));

        // Group by (kernel, lambda) so a factorization is shared by the pairs
        // that can use it; groups run in parallel, each writes its own slots.
        struct Job {
            std::shared_ptr<RidgeSolver> solver;
            double lambda;
            std::vector<CovPair> members;
        };
        std::map<std::pair<std::string, double>, Job> grouped;
        for (const CovPair& pair : pairs) {
            const Kernel k = kernel_for_pair(kernels, pair);
            const double lambda = lambdas.for_pair(pair);
            auto& job = grouped[{k.key(), lambda}];
            if (!job.solver) {
                job.solver = solver_for(k);
                job.lambda = lambda;
            }
            job.members.push_back(pair);
        }
        std::vector<Job> jobs;
        for (auto& [key, job] : grouped) jobs.push_back(std::move(job));

        parallel_for(jobs.size(), options.threads, [&](std::size_t ji) {
            const Job& job = jobs[ji];
            const auto factor = job.solver->factorize(job.lambda);
            for (const CovPair& pair : job.members) {
                const Eigen::VectorXd g = detail::raw_target_values(centered, pair);
                SmoothingFit fit = job.solver->fit(factor, g);
                switch (pair.family) {
                    case CovPair::Family::xx:
                        out.cov_xx[CovarianceSet::xx_index(pair.a, pair.b, data.d1())] = std::move(fit.estimate);
                        break;
                    case CovPair::Family::xz:
                        out.cov_xz[static_cast<std::size_t>(pair.a * data.d2() + pair.b)] = std::move(fit.estimate);
                        break;
                    case CovPair::Family::yx:
                        out.cov_yx[static_cast<std::size_t>(pair.a)] = std::move(fit.estimate);
                        break;
                    case CovPair::Family::yz:
                        out.cov_yz[static_cast<std::size_t>(pair.a)] = std::move(fit.estimate);
                        break;
                }
            }
        });
    }
    return out;
}

}  // namespace lsrk
