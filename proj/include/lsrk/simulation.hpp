#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "lsrk/data.hpp"
#include "lsrk/metrics.hpp"
#include "lsrk/rng.hpp"

namespace lsrk {

struct SimulationConfig {
    int study = 1;  // 1 or 2
    int n = 100;
    double stn = 4.0;  // signal-to-noise; infinity means noiseless
    int replications = 1;
    std::uint64_t seed = 1;
    int truncation = 50;  // basis terms kept (K)
    int fixed_m = 0;      // 0: M_i uniform on {4..8}; otherwise every M_i = fixed_m

    void validate() const {
        if (study != 1 && study != 2) throw input_error("simulation: study must be 1 or 2");
        if (n < 2) throw input_error("simulation: need n >= 2");
        if (!(stn > 0.0)) throw input_error("simulation: StN must be positive (or inf)");
        if (replications < 1) throw input_error("simulation: need at least one replication");
        if (truncation < 1 || truncation > 50) throw input_error("simulation: truncation must be in [1,50]");
        if (fixed_m < 0) throw input_error("simulation: fixed_m must be >= 0");
    }
};

// phi_k(t) = sqrt(2) cos(2 k pi t), 1 <= k <= 50
inline double basis_phi(int k, double t) {
    if (k < 1 || k > 50) throw std::invalid_argument("basis_phi: k out of range [1,50]");
    return std::sqrt(2.0) * std::cos(2.0 * k * M_PI * t);
}

// psi_k(t) = sqrt(2) sin(2 k pi t) for k <= 49, constant 1 for k = 50
inline double basis_psi(int k, double t) {
    if (k < 1 || k > 50) throw std::invalid_argument("basis_psi: k out of range [1,50]");
    if (k == 50) return 1.0;
    return std::sqrt(2.0) * std::sin(2.0 * k * M_PI * t);
}

inline double score_weight_x1(int k) {  // a_k = 4 (-1)^k / k^2
    return 4.0 * ((k % 2 == 0) ? 1.0 : -1.0) / (static_cast<double>(k) * k);
}

inline double score_weight_x2(int k) {  // b_k = sqrt(3)/2^k for k <= 49, sqrt(3) for k = 50
    if (k == 50) return std::sqrt(3.0);
    return std::sqrt(3.0) / std::pow(2.0, k);
}

inline double mean_x1(double t, int truncation = 50) {
    double acc = 0.0;
    for (int k = 1; k <= truncation; ++k)
        acc += ((k % 2 == 0) ? 1.0 : -1.0) * std::pow(static_cast<double>(k), -1.5) * basis_phi(k, t);
    return acc;
}

inline double mean_x2(double t) { return std::sin(2.0 * M_PI * t) - t * std::exp(-t); }

inline double noise_sd(double base, double stn) { return std::isinf(stn) ? 0.0 : base / stn; }

inline double sigma2_x1(double stn) { const double s = noise_sd(4.2954, stn); return s * s; }
inline double sigma2_x2(double stn) { const double s = noise_sd(1.2733, stn); return s * s; }
inline double sigma2_y_study1(double stn) { const double s = noise_sd(15.6815, stn); return s * s; }
inline double sigma2_y_study2(double stn) { const double s = noise_sd(15.8525, stn); return s * s; }

struct TrueCoefficients {
    std::vector<NamedFunction> functions;  // beta0, beta1, ..., alpha1, ...
};

inline TrueCoefficients study1_truth() {
    TrueCoefficients t;
    t.functions.push_back({"beta0", [](double x) { return 2.0 * std::sin(2.0 * M_PI * x); }});
    t.functions.push_back({"beta1", [](double x) { return 2.0 * std::exp(x); }});
    return t;
}

inline TrueCoefficients study2_truth() {
    TrueCoefficients t;
    t.functions.push_back({"beta0", [](double x) { return 2.0 * std::sin(2.0 * M_PI * x); }});
    t.functions.push_back({"beta1", [](double x) { return 2.0 * std::exp(x); }});
    t.functions.push_back({"beta2", [](double x) { return 5.0 * x * std::exp(-x); }});
    t.functions.push_back({"alpha1", [](double x) { return 2.0 * x; }});
    return t;
}

struct DesignDraw {
    int m;
    std::vector<double> times;  // ascending
};

// M_i uniform on {4..8} (unless pinned), T_ij iid U[0,1] sorted within subject.
inline std::vector<DesignDraw> sample_design(int n, std::mt19937_64& rng, int fixed_m = 0) {
    std::uniform_int_distribution<int> m_dist(4, 8);
    std::uniform_real_distribution<double> t_dist(0.0, 1.0);
    std::vector<DesignDraw> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        DesignDraw d;
        d.m = fixed_m > 0 ? fixed_m : m_dist(rng);
        d.times.resize(static_cast<std::size_t>(d.m));
        for (double& t : d.times) t = t_dist(rng);
        std::sort(d.times.begin(), d.times.end());
        out.push_back(std::move(d));
    }
    return out;
}

// Covariance of the score vector [Z*, xi_1..xi_K, zeta_1..zeta_K]:
//   corr(Z*, xi_j)   = 0.4^j
//   corr(Z*, zeta_j) = (-0.3)^j
//   corr(xi_j, zeta_j) = 0.8^(j+1)
// all other off-diagonal entries zero, unit diagonal.
struct ScoreCovariance {
    Eigen::MatrixXd sigma;
    Eigen::MatrixXd transform;  // sampling map: scores = transform * iid N(0,1)
    double min_eigenvalue = 0.0;
    double clip_distance = 0.0;  // Frobenius distance of any PSD projection applied
};

inline ScoreCovariance build_score_covariance(int truncation = 50) {
    const int k = truncation;
    const int dim = 1 + 2 * k;
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(dim, dim);
    for (int j = 1; j <= k; ++j) {
        sigma(0, j) = sigma(j, 0) = std::pow(0.4, j);
        sigma(0, k + j) = sigma(k + j, 0) = std::pow(-0.3, j);
        sigma(j, k + j) = sigma(k + j, j) = std::pow(0.8, j + 1);
    }
    sigma = (0.5 * (sigma + sigma.transpose())).eval();

    ScoreCovariance out;
    out.sigma = sigma;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    if (es.info() != Eigen::Success) throw numeric_error("score covariance: eigendecomposition failed");
    out.min_eigenvalue = es.eigenvalues().minCoeff();
    double clip_sq = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double ev = es.eigenvalues()(i);
        if (ev < -1e-10) clip_sq += ev * ev;
    }
    out.clip_distance = std::sqrt(clip_sq);
    const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
    out.transform = es.eigenvectors() * clipped.cwiseSqrt().asDiagonal();
    return out;
}

struct GeneratedData {
    LongitudinalDataset data;
    TrueCoefficients truth;
    double score_cov_clip_distance = 0.0;
};

// Study 1: one functional predictor, no scalar covariate, independent scores.
inline GeneratedData generate_study1(const SimulationConfig& config, std::mt19937_64& rng) {
    config.validate();
    const int k_max = config.truncation;
    const double sd_x = noise_sd(4.2954, config.stn);
    const double sd_y = noise_sd(15.6815, config.stn);
    const TrueCoefficients truth = study1_truth();
    const auto& beta0 = truth.functions[0].f;
    const auto& beta1 = truth.functions[1].f;

    std::normal_distribution<double> normal(0.0, 1.0);
    const std::vector<DesignDraw> design = sample_design(config.n, rng, config.fixed_m);

    std::vector<SubjectRecord> subjects;
    subjects.reserve(static_cast<std::size_t>(config.n));
    for (int i = 0; i < config.n; ++i) {
        const DesignDraw& d = design[static_cast<std::size_t>(i)];
        std::vector<double> xi(static_cast<std::size_t>(k_max));
        for (double& s : xi) s = normal(rng);

        SubjectRecord rec;
        rec.subject_id = "s" + std::to_string(i + 1);
        rec.times = d.times;
        rec.u.resize(1, d.m);
        rec.v.resize(static_cast<std::size_t>(d.m));
        for (int j = 0; j < d.m; ++j) {
            const double t = d.times[static_cast<std::size_t>(j)];
            double x = mean_x1(t, k_max);
            for (int k = 1; k <= k_max; ++k)
                x += score_weight_x1(k) * xi[static_cast<std::size_t>(k - 1)] * basis_phi(k, t);
            rec.u(0, j) = x + sd_x * normal(rng);
        }
        for (int j = 0; j < d.m; ++j) {
            const double t = d.times[static_cast<std::size_t>(j)];
            rec.v[static_cast<std::size_t>(j)] = beta0(t) + beta1(t) * rec.u(0, j) + sd_y * normal(rng);
        }
        subjects.push_back(std::move(rec));
    }
    return GeneratedData{LongitudinalDataset(std::move(subjects), 1, 0), truth, 0.0};
}

// Study 2: two functional predictors and one scalar covariate; the score
// vector [Z*, xi, zeta] is drawn from the structured covariance above and
// Z = 1 + Z*.
inline GeneratedData generate_study2(const SimulationConfig& config, std::mt19937_64& rng) {
    config.validate();
    const int k_max = config.truncation;
    const double sd_x1 = noise_sd(4.2954, config.stn);
    const double sd_x2 = noise_sd(1.2733, config.stn);
    const double sd_y = noise_sd(15.8525, config.stn);
    const TrueCoefficients truth = study2_truth();
    const auto& beta0 = truth.functions[0].f;
    const auto& beta1 = truth.functions[1].f;
    const auto& beta2 = truth.functions[2].f;
    const auto& alpha1 = truth.functions[3].f;

    const ScoreCovariance score_cov = build_score_covariance(k_max);
    const int score_dim = 1 + 2 * k_max;

    std::normal_distribution<double> normal(0.0, 1.0);
    const std::vector<DesignDraw> design = sample_design(config.n, rng, config.fixed_m);

    std::vector<SubjectRecord> subjects;
    subjects.reserve(static_cast<std::size_t>(config.n));
    Eigen::VectorXd iid(score_dim);
    for (int i = 0; i < config.n; ++i) {
        const DesignDraw& d = design[static_cast<std::size_t>(i)];
        for (int s = 0; s < score_dim; ++s) iid(s) = normal(rng);
        const Eigen::VectorXd scores = score_cov.transform * iid;
        const double z = 1.0 + scores(0);

        SubjectRecord rec;
        rec.subject_id = "s" + std::to_string(i + 1);
        rec.times = d.times;
        rec.u.resize(2, d.m);
        rec.v.resize(static_cast<std::size_t>(d.m));
        rec.z = {z};
        for (int j = 0; j < d.m; ++j) {
            const double t = d.times[static_cast<std::size_t>(j)];
            double x1 = mean_x1(t, k_max);
            for (int k = 1; k <= k_max; ++k) x1 += score_weight_x1(k) * scores(k) * basis_phi(k, t);
            rec.u(0, j) = x1 + sd_x1 * normal(rng);
        }
        for (int j = 0; j < d.m; ++j) {
            const double t = d.times[static_cast<std::size_t>(j)];
            double x2 = mean_x2(t);
            for (int k = 1; k <= k_max; ++k) x2 += score_weight_x2(k) * scores(k_max + k) * basis_psi(k, t);
            rec.u(1, j) = x2 + sd_x2 * normal(rng);
        }
        for (int j = 0; j < d.m; ++j) {
            const double t = d.times[static_cast<std::size_t>(j)];
            rec.v[static_cast<std::size_t>(j)] = beta0(t) + beta1(t) * rec.u(0, j) + beta2(t) * rec.u(1, j) +
                                                 alpha1(t) * z + sd_y * normal(rng);
        }
        subjects.push_back(std::move(rec));
    }
    return GeneratedData{LongitudinalDataset(std::move(subjects), 2, 1), truth, score_cov.clip_distance};
}

inline GeneratedData generate(const SimulationConfig& config, std::uint64_t seed) {
    std::mt19937_64 rng = make_engine(seed);
    return config.study == 1 ? generate_study1(config, rng) : generate_study2(config, rng);
}

}  // namespace lsrk
