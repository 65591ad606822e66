#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "lsrk/covariance.hpp"
#include "lsrk/simulation.hpp"

using namespace lsrk;

namespace {

LongitudinalDataset dataset_with_z(const std::vector<std::vector<double>>& z_values) {
    std::vector<SubjectRecord> subjects;
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> t_dist(0.0, 1.0);
    for (std::size_t i = 0; i < z_values.size(); ++i) {
        SubjectRecord s;
        s.subject_id = "s" + std::to_string(i);
        for (int j = 0; j < 3; ++j) s.times.push_back(t_dist(rng));
        std::sort(s.times.begin(), s.times.end());
        s.u.resize(1, 3);
        s.u << 1.0, 2.0, 3.0;
        s.v = {1.0, 1.0, 1.0};
        s.z = z_values[i];
        subjects.push_back(std::move(s));
    }
    return LongitudinalDataset(std::move(subjects), 1, static_cast<int>(z_values.front().size()));
}

// Dense shared-grid noiseless study-1-style data; returns the dataset plus the
// empirical pointwise variance of the predictor on the grid.
struct DenseSample {
    std::vector<SubjectRecord> subjects;
    std::vector<double> grid;
    Eigen::VectorXd variance;
    Eigen::VectorXd mean;
};

DenseSample dense_noiseless_sample(int n, int m, unsigned seed, double response_beta1 = 0.0) {
    DenseSample out;
    out.grid = linspace(0.0, 1.0, m);
    std::mt19937_64 rng = make_engine(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    Eigen::MatrixXd values(n, m);
    for (int i = 0; i < n; ++i) {
        std::vector<double> xi(50);
        for (double& s : xi) s = unit(rng);
        SubjectRecord rec;
        rec.subject_id = "s" + std::to_string(i);
        rec.times = out.grid;
        rec.u.resize(1, m);
        for (int j = 0; j < m; ++j) {
            double x = mean_x1(out.grid[static_cast<std::size_t>(j)]);
            for (int k = 1; k <= 50; ++k)
                x += score_weight_x1(k) * xi[static_cast<std::size_t>(k - 1)] *
                     basis_phi(k, out.grid[static_cast<std::size_t>(j)]);
            rec.u(0, j) = x;
            values(i, j) = x;
            rec.v.push_back(response_beta1 * x);
        }
        out.subjects.push_back(std::move(rec));
    }
    out.mean = values.colwise().mean();
    out.variance.resize(m);
    for (int j = 0; j < m; ++j)
        out.variance(j) = (values.col(j).array() - out.mean(j)).square().sum() / n;
    return out;
}

}  // namespace

TEST_CASE("scalar means", "[covariance]") {
    CHECK(scalar_means(dataset_with_z({{3.0}, {3.0}, {3.0}}))(0) == 3.0);
    CHECK_THAT(scalar_means(dataset_with_z({{1.0}, {2.0}, {3.0}}))(0), Catch::Matchers::WithinRel(2.0, 1e-15));
}

TEST_CASE("scalar covariances use divisor n", "[covariance]") {
    CHECK(scalar_covariances(dataset_with_z({{5.0}, {5.0}, {5.0}}))(0, 0) == 0.0);
    // Z = (0, 2): (1/2)((-1)^2 + 1^2) = 1.
    CHECK_THAT(scalar_covariances(dataset_with_z({{0.0}, {2.0}}))(0, 0), Catch::Matchers::WithinRel(1.0, 1e-15));

    const auto cz = scalar_covariances(dataset_with_z({{1.0, 2.0}, {4.0, -1.0}, {0.5, 3.0}}));
    CHECK(cz == cz.transpose());
    CHECK(cz(0, 0) >= 0.0);
    CHECK(cz(1, 1) >= 0.0);
}

TEST_CASE("raw targets multiply centered observations", "[covariance]") {
    // Subject a: M = 1, V = 2, U = 3 at t = 0.4 with mu_Y(0.4) = mu_X(0.4) = 1.
    SubjectRecord a;
    a.subject_id = "a";
    a.times = {0.4};
    a.u.resize(1, 1);
    a.u << 3.0;
    a.v = {2.0};
    SubjectRecord b;
    b.subject_id = "b";
    b.times = {0.7};
    b.u.resize(1, 1);
    b.u << 1.0;
    b.v = {1.0};
    const LongitudinalDataset data({a, b}, 1, 0);

    MeanEstimates means;
    means.mu_y.kernel = Kernel::gaussian(0.1);
    means.mu_y.knots = {0.4};
    means.mu_y.coefficients = Eigen::VectorXd::Ones(1);  // value 1 at t = 0.4
    means.mu_x.push_back(means.mu_y);
    means.mu_z = Eigen::VectorXd(0);

    const RawTargets yx = raw_targets(data, means, CovPair::YX(0));
    CHECK_THAT(yx.values(0), Catch::Matchers::WithinRel(2.0, 1e-12));  // (2-1)(3-1)

    CHECK_THROWS_AS(raw_targets(data, means, CovPair::YX(1)), std::invalid_argument);
    CHECK_THROWS_AS(raw_targets(data, means, CovPair::XZ(0, 0)), std::invalid_argument);

    // Centered data of zero produce zero targets.
    MeanEstimates exact;
    exact.mu_y.kernel = Kernel::gaussian(0.1);
    exact.mu_y.knots = {0.4, 0.7};
    exact.mu_y.coefficients = Eigen::VectorXd::Zero(2);
    exact.mu_x.push_back(exact.mu_y);
    exact.mu_z = Eigen::VectorXd(0);
    SubjectRecord za = a, zb = b;
    za.u(0, 0) = 0.0;
    za.v = {0.0};
    zb.u(0, 0) = 0.0;
    zb.v = {0.0};
    const LongitudinalDataset zeros({za, zb}, 1, 0);
    const RawTargets zero_t = raw_targets(zeros, exact, CovPair::XX(0, 0));
    CHECK(zero_t.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("diagonal XX targets are nonnegative for any means", "[covariance]") {
    const auto sample = dense_noiseless_sample(50, 6, 17);
    const LongitudinalDataset data(sample.subjects, 1, 0);
    MeanEstimates means;
    means.mu_y.kernel = Kernel::gaussian(0.1);
    means.mu_y.knots = {0.5};
    means.mu_y.coefficients = Eigen::VectorXd::Zero(1);
    means.mu_x.push_back(means.mu_y);
    means.mu_z = Eigen::VectorXd(0);
    const RawTargets xx = raw_targets(data, means, CovPair::XX(0, 0));
    CHECK(xx.values.minCoeff() >= 0.0);
}

TEST_CASE("covariance set has the mandated structure", "[covariance]") {
    // d1 = 1, d2 = 0.
    {
        const auto sample = dense_noiseless_sample(12, 5, 5, 1.0);
        const LongitudinalDataset data(sample.subjects, 1, 0);
        const auto cs = estimate_covariance_set(data, KernelSet::defaults(1), ResolvedLambdas{});
        CHECK(cs.mu_x.size() == 1);
        CHECK(cs.cov_xx.size() == 1);
        CHECK(cs.cov_yx.size() == 1);
        CHECK(cs.cov_xz.empty());
        CHECK(cs.cov_yz.empty());
        CHECK(cs.cov_zz.size() == 0);
    }

    // d1 = 2, d2 = 1.
    {
        SimulationConfig config;
        config.study = 2;
        config.n = 12;
        config.stn = 8.0;
        const GeneratedData gen = generate(config, 99);
        const auto cs = estimate_covariance_set(gen.data, KernelSet::defaults(2), ResolvedLambdas{});
        CHECK(cs.cov_xx.size() == 3);
        CHECK(cs.cov_xz.size() == 2);
        CHECK(cs.cov_yx.size() == 2);
        CHECK(cs.cov_yz.size() == 1);
        CHECK(cs.cov_zz.rows() == 1);
        CHECK(cs.cov_zz.cols() == 1);

        // Kernel spaces exactly as mandated: products for xx and yx, bases for xz and yz.
        CHECK(cs.xx(0, 1).kernel.is_product());
        CHECK(cs.yx(0).kernel.is_product());
        CHECK_FALSE(cs.xz(0, 0).kernel.is_product());
        CHECK_FALSE(cs.yz(0).kernel.is_product());

        // The (p1,p2) and (p2,p1) tables share one object.
        CHECK(&cs.xx(0, 1) == &cs.xx(1, 0));

        // All estimates share the pooled knots.
        const auto knots = pooled_times(gen.data);
        CHECK(cs.mu_y.knots == knots);
        CHECK(cs.xx(0, 1).knots == knots);
        CHECK(cs.yz(0).knots == knots);
    }
}

TEST_CASE("smoothed variance function tracks the empirical variance", "[covariance][slowish]") {
    const int n = 600, m = 25;
    const auto sample = dense_noiseless_sample(n, m, 2025, 1.0);
    const LongitudinalDataset data(sample.subjects, 1, 0);

    ResolvedLambdas lambdas;
    lambdas.mean_y = lambdas.mean_x = 1e-6;
    lambdas.xx = lambdas.yx = 1e-5;
    const auto cs = estimate_covariance_set(data, KernelSet::defaults(1), lambdas);

    // Oracle: the empirical pointwise variance over subjects on the shared grid.
    double worst_rel = 0.0;
    for (int j = 0; j < m; ++j) {
        const double t = sample.grid[static_cast<std::size_t>(j)];
        if (t < 0.05 || t > 0.95) continue;
        const double fitted = cs.xx(0, 0)(t);
        const double target = sample.variance(j);
        worst_rel = std::max(worst_rel, std::abs(fitted - target) / (1.0 + std::abs(target)));
    }
    CHECK(worst_rel < 0.1);

    // Against the analytic variance the error floor is the n-subject sampling
    // noise (relative sd ~ sqrt(2/n) ~ 6%), so the bound is set accordingly.
    double worst_analytic = 0.0;
    for (int j = 0; j < m; ++j) {
        const double t = sample.grid[static_cast<std::size_t>(j)];
        if (t < 0.05 || t > 0.95) continue;
        double truth = 0.0;
        for (int k = 1; k <= 50; ++k) {
            const double term = score_weight_x1(k) * basis_phi(k, t);
            truth += term * term;
        }
        worst_analytic = std::max(worst_analytic, std::abs(cs.xx(0, 0)(t) - truth) / (1.0 + truth));
    }
    CHECK(worst_analytic < 0.3);
}

TEST_CASE("observation noise inflates the fitted variance function", "[covariance]") {
    const int n = 200, m = 12;
    const auto clean = dense_noiseless_sample(n, m, 88, 1.0);
    const LongitudinalDataset clean_data(clean.subjects, 1, 0);

    const double sigma = 1.0;
    std::mt19937_64 rng = make_engine(4242);
    std::normal_distribution<double> unit(0.0, 1.0);
    auto noisy_subjects = clean.subjects;
    for (auto& s : noisy_subjects)
        for (int j = 0; j < s.m(); ++j) s.u(0, j) += sigma * unit(rng);
    const LongitudinalDataset noisy_data(std::move(noisy_subjects), 1, 0);

    ResolvedLambdas lambdas;
    lambdas.mean_y = lambdas.mean_x = 1e-4;
    lambdas.xx = 1e-4;
    const auto cs_clean = estimate_covariance_set(clean_data, KernelSet::defaults(1), lambdas);
    const auto cs_noisy = estimate_covariance_set(noisy_data, KernelSet::defaults(1), lambdas);

    double mean_diff = 0.0;
    const auto grid = linspace(0.05, 0.95, 61);
    for (double t : grid) mean_diff += cs_noisy.xx(0, 0)(t) - cs_clean.xx(0, 0)(t);
    mean_diff /= static_cast<double>(grid.size());
    CHECK(mean_diff > 0.0);
}

TEST_CASE("parallel pair fitting matches the sequential result", "[covariance]") {
    SimulationConfig config;
    config.study = 2;
    config.n = 15;
    config.stn = 4.0;
    const GeneratedData gen = generate(config, 7);
    CovarianceOptions seq;
    seq.threads = 1;
    CovarianceOptions par;
    par.threads = 4;
    const auto cs1 = estimate_covariance_set(gen.data, KernelSet::defaults(2), ResolvedLambdas{}, seq);
    const auto cs2 = estimate_covariance_set(gen.data, KernelSet::defaults(2), ResolvedLambdas{}, par);
    CHECK(cs1.xx(0, 1).coefficients == cs2.xx(0, 1).coefficients);
    CHECK(cs1.yx(1).coefficients == cs2.yx(1).coefficients);
    CHECK(cs1.yz(0).coefficients == cs2.yz(0).coefficients);
}
