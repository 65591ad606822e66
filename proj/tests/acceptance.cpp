// Acceptance suite: each criterion prints one [PASS]/[FAIL] line (with its
// wall time) and the process exits nonzero if any selected criterion fails.
//
//   acceptance <criterion|all> [--cli <path-to-lsrk-binary>]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lsrk/lsrk.hpp"
#include "oracles.hpp"

using namespace lsrk;

namespace {

std::string g_cli_path;

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        notes.push_back(std::string(ok ? "ok  " : "FAIL") + " | " + what);
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. Smoother optimality: closed form vs CG oracle and random perturbations.

Outcome criterion1() {
    Outcome out;
    std::mt19937 rng(515151);
    std::normal_distribution<double> unit(0.0, 1.0);
    double worst_rel = 0.0;
    int perturbation_wins = 0;
    for (unsigned i = 0; i < 100; ++i) {
        const auto inst = oracles::random_instance(40000 + i);
        RawTargets targets{inst.g, inst.group_sizes};
        const SmoothingFit fit = fit_regularized(targets, inst.points, inst.kernel, inst.lambda);
        const Eigen::MatrixXd q = gram_matrix(inst.kernel, inst.points);
        const Eigen::VectorXd w = weight_vector(inst.group_sizes).cwiseAbs2();

        const Eigen::VectorXd a_cg =
            oracles::cg_minimizer(q, w, static_cast<int>(inst.group_sizes.size()), inst.g, inst.lambda);
        const Eigen::VectorXd f_cg = q * a_cg;
        const Eigen::VectorXd f_cf = q * fit.estimate.coefficients;
        worst_rel = std::max(worst_rel, (f_cg - f_cf).norm() / std::max(1.0, f_cf.norm()));

        const double j_star =
            oracles::objective_value(q, inst.group_sizes, inst.g, fit.estimate.coefficients, inst.lambda);
        for (int trial = 0; trial < 1000; ++trial) {
            Eigen::VectorXd delta(inst.g.size());
            for (int k = 0; k < delta.size(); ++k) delta(k) = unit(rng);
            delta *= 1e-3 / delta.norm();
            const double j_alt = oracles::objective_value(q, inst.group_sizes, inst.g,
                                                          fit.estimate.coefficients + delta, inst.lambda);
            if (j_alt < j_star - 1e-12 * std::max(1.0, std::abs(j_star))) ++perturbation_wins;
        }
    }
    out.check(worst_rel <= 1e-6, "fitted values match CG oracle on 100 instances, worst rel err " + fmt(worst_rel));
    out.check(perturbation_wins == 0,
              "closed-form objective never beaten by 100x1000 perturbations (wins: " +
                  std::to_string(perturbation_wins) + ")");
    return out;
}

// ---------------------------------------------------------------------------
// 2. Scalar-reduction identity for d1=1, d2=0.

Outcome criterion2() {
    Outcome out;
    SimulationConfig config;
    config.study = 1;
    config.n = 60;
    config.stn = 8.0;
    const GeneratedData gen = generate(config, 123);

    SmoothingConfig smoothing;
    smoothing.lambda_mean_y = LambdaSpec::fixed(1e-3);
    smoothing.lambda_mean_x = LambdaSpec::fixed(1e-3);
    smoothing.lambda_xx = LambdaSpec::fixed(1e-3);
    smoothing.lambda_xz = LambdaSpec::fixed(1e-3);
    smoothing.lambda_yx = LambdaSpec::fixed(1e-3);
    smoothing.lambda_yz = LambdaSpec::fixed(1e-3);

    const FittedModel model = fit_model(gen.data, KernelSet::defaults(1), smoothing);
    const EvaluationGrid grid = EvaluationGrid::standard(100);
    const CoefficientEstimates est = solve_coefficients(model.covariances, grid);

    double worst = 0.0;
    int compared = 0;
    for (int i = 0; i < grid.size(); ++i) {
        if (est.ridge_used(i) != 0.0) continue;
        ++compared;
        const double t = grid.points()[static_cast<std::size_t>(i)];
        const double ratio = model.covariances.yx(0)(t) / model.covariances.xx(0, 0)(t);
        worst = std::max(worst, std::abs(est.beta(0, i) - ratio) / std::max(1.0, std::abs(ratio)));
    }
    out.check(compared > 80, "ridge-free grid points compared: " + std::to_string(compared));
    out.check(worst <= 1e-12, "pipeline equals C_yx/C_xx at ridge-free points, worst rel err " + fmt(worst));
    return out;
}

// ---------------------------------------------------------------------------
// 3. Dense-noiseless recovery with CV-selected lambdas.

Outcome criterion3() {
    Outcome out;
    SimulationConfig config;
    config.study = 1;
    config.n = 400;
    config.stn = std::numeric_limits<double>::infinity();
    config.fixed_m = 50;
    const GeneratedData gen = generate(config, 321);

    SmoothingConfig smoothing;  // every family cross-validated
    smoothing.seed = 321;
    PipelineOptions options;
    options.threads = default_thread_count();
    const FittedModel model = fit_model(gen.data, KernelSet::defaults(1), smoothing, options);

    const auto grid = linspace(0.05, 0.95, 181);
    const CoefficientEvaluator evaluator(model.covariances);
    double sup_beta1 = 0.0, sup_beta0 = 0.0;
    for (double t : grid) {
        const auto& row = evaluator.at(t);
        sup_beta1 = std::max(sup_beta1, std::abs(row.coefs(0) - 2.0 * std::exp(t)));
        sup_beta0 = std::max(sup_beta0, std::abs(row.beta0 - 2.0 * std::sin(2.0 * M_PI * t)));
    }
    out.check(sup_beta1 < 0.15, "sup |beta1_hat - 2e^t| on [0.05,0.95] = " + fmt(sup_beta1) + " < 0.15");
    out.check(sup_beta0 < 0.25, "sup |beta0_hat - 2sin(2pi t)| on [0.05,0.95] = " + fmt(sup_beta0) + " < 0.25");
    return out;
}

// ---------------------------------------------------------------------------
// 4./5. Monte Carlo cells.

MonteCarloReport run_cell(int study, int n, double stn, int reps, std::uint64_t seed) {
    SimulationConfig config;
    config.study = study;
    config.n = n;
    config.stn = stn;
    config.replications = reps;
    config.seed = seed;
    MonteCarloOptions options;  // cross-validated lambdas by default
    options.threads = default_thread_count();
    return run_monte_carlo(config, kernels_for_study(config), options);
}

Outcome criterion4() {
    Outcome out;
    const MonteCarloReport report = run_cell(1, 200, std::numeric_limits<double>::infinity(), 50, 2024);
    out.check(report.failures == 0, "replication failures: " + std::to_string(report.failures));
    out.check(report.mean_made >= 0.08 && report.mean_made <= 0.35,
              "mean MADE = " + fmt(report.mean_made) + " in [0.08, 0.35]");
    out.check(report.mean_wase >= 0.03 && report.mean_wase <= 0.30,
              "mean WASE = " + fmt(report.mean_wase) + " in [0.03, 0.30]");
    return out;
}

Outcome criterion5() {
    Outcome out;
    const double inf = std::numeric_limits<double>::infinity();
    const MonteCarloReport s1_n100_s4 = run_cell(1, 100, 4.0, 50, 11);
    const MonteCarloReport s1_n100_inf = run_cell(1, 100, inf, 50, 12);
    const MonteCarloReport s1_n200_s4 = run_cell(1, 200, 4.0, 50, 13);
    const MonteCarloReport s1_n200_inf = run_cell(1, 200, inf, 50, 14);
    const MonteCarloReport s2_n100_s4 = run_cell(2, 100, 4.0, 50, 15);
    const MonteCarloReport s2_n100_inf = run_cell(2, 100, inf, 50, 16);

    out.check(s1_n100_s4.mean_made > s1_n200_inf.mean_made,
              "study 1: MADE(100,4)=" + fmt(s1_n100_s4.mean_made) + " > MADE(200,inf)=" +
                  fmt(s1_n200_inf.mean_made));
    out.check(s1_n100_s4.mean_made > s1_n100_inf.mean_made,
              "study 1, n=100: MADE(StN=4)=" + fmt(s1_n100_s4.mean_made) + " > MADE(StN=inf)=" +
                  fmt(s1_n100_inf.mean_made));
    out.check(s1_n200_s4.mean_made > s1_n200_inf.mean_made,
              "study 1, n=200: MADE(StN=4)=" + fmt(s1_n200_s4.mean_made) + " > MADE(StN=inf)=" +
                  fmt(s1_n200_inf.mean_made));
    out.check(s2_n100_s4.mean_made > s2_n100_inf.mean_made,
              "study 2, n=100: MADE(StN=4)=" + fmt(s2_n100_s4.mean_made) + " > MADE(StN=inf)=" +
                  fmt(s2_n100_inf.mean_made));
    const int failures = s1_n100_s4.failures + s1_n100_inf.failures + s1_n200_s4.failures +
                         s1_n200_inf.failures + s2_n100_s4.failures + s2_n100_inf.failures;
    out.check(failures == 0, "replication failures across cells: " + std::to_string(failures));
    return out;
}

// ---------------------------------------------------------------------------
// 6. Generator distributional checks at 1e5 draws.

Outcome criterion6() {
    Outcome out;
    const ScoreCovariance sc = build_score_covariance(50);
    out.check(sc.min_eigenvalue >= -1e-10,
              "score covariance min eigenvalue = " + fmt(sc.min_eigenvalue) + " >= -1e-10");
    out.check(sc.clip_distance == 0.0, "PSD clipping distance = " + fmt(sc.clip_distance) + " (zero)");

    std::mt19937_64 rng = make_engine(606060);
    std::normal_distribution<double> unit(0.0, 1.0);
    const int draws = 100000;
    Eigen::VectorXd iid(101);
    double sz = 0.0, szz = 0.0, s_z_zeta = 0.0, s_xi_zeta = 0.0, s_zeta = 0.0, s_xi = 0.0, s_zeta_sq = 0.0,
           s_xi_sq = 0.0;
    for (int d = 0; d < draws; ++d) {
        for (int s = 0; s < 101; ++s) iid(s) = unit(rng);
        const Eigen::VectorXd scores = sc.transform * iid;
        const double z = 1.0 + scores(0);
        const double xi1 = scores(1);
        const double zeta1 = scores(51);
        sz += z;
        szz += z * z;
        s_z_zeta += z * zeta1;
        s_xi_zeta += xi1 * zeta1;
        s_zeta += zeta1;
        s_xi += xi1;
        s_zeta_sq += zeta1 * zeta1;
        s_xi_sq += xi1 * xi1;
    }
    const double mean_z = sz / draws;
    const double var_z = szz / draws - mean_z * mean_z;
    const double mean_zeta = s_zeta / draws;
    const double mean_xi = s_xi / draws;
    const double var_zeta = s_zeta_sq / draws - mean_zeta * mean_zeta;
    const double var_xi = s_xi_sq / draws - mean_xi * mean_xi;
    const double corr_z_zeta =
        (s_z_zeta / draws - mean_z * mean_zeta) / std::sqrt(var_z * var_zeta);
    const double corr_xi_zeta =
        (s_xi_zeta / draws - mean_xi * mean_zeta) / std::sqrt(var_xi * var_zeta);

    out.check(var_z >= 0.96 && var_z <= 1.04, "Var(Z) = " + fmt(var_z) + " in [0.96, 1.04]");
    out.check(std::abs(corr_z_zeta + 0.30) <= 0.02, "corr(Z, zeta_1) = " + fmt(corr_z_zeta) + " = -0.30 +/- 0.02");
    // As printed, the score covariance table fixes corr(xi_1, zeta_1) at
    // 0.8^2 = 0.64; the 0.80 reading is not jointly satisfiable with the PSD
    // requirement above, so this sub-check documents the discrepancy.
    out.check(std::abs(corr_xi_zeta - 0.80) <= 0.02, "corr(xi_1, zeta_1) = " + fmt(corr_xi_zeta) + " = 0.80 +/- 0.02");
    return out;
}

// ---------------------------------------------------------------------------
// 7. Kernel / PSD property sweep.

Outcome criterion7() {
    Outcome out;
    std::mt19937 rng(70707);
    std::uniform_int_distribution<int> size_dist(2, 200);
    std::uniform_real_distribution<double> theta_dist(0.03, 0.5);
    std::uniform_real_distribution<double> t_dist(0.0, 1.0);
    std::bernoulli_distribution cluster(0.3);
    int passed = 0;
    const int total = 500;
    for (int trial = 0; trial < total; ++trial) {
        const int count = size_dist(rng);
        std::vector<double> pts(static_cast<std::size_t>(count));
        for (double& p : pts) p = t_dist(rng);
        if (cluster(rng))  // clustered/duplicated knots stress the PSD tolerance
            for (std::size_t i = 1; i < pts.size(); i += 2) pts[i] = pts[i - 1];
        const Kernel a = Kernel::gaussian(theta_dist(rng));
        const Kernel b = Kernel::gaussian(theta_dist(rng));
        const bool hadamard = trial % 2 == 1;
        const Eigen::MatrixXd m =
            hadamard ? product_gram_matrix(a, b, pts) : gram_matrix(a, pts);
        if (check_nonneg_definite(m, 1e-8)) ++passed;
    }
    out.check(passed == total, std::to_string(passed) + "/" + std::to_string(total) +
                                   " randomized Gram/Hadamard matrices pass at tol 1e-8");
    return out;
}

// ---------------------------------------------------------------------------
// 8. Metrics exactness.

Outcome criterion8() {
    Outcome out;
    std::mt19937 rng(808);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    double worst_quad = 0.0;
    for (int nodes : {1, 2, 3, 5, 8, 13, 20, 50}) {
        const int degree = 2 * nodes - 1;
        std::vector<double> c(static_cast<std::size_t>(degree + 1));
        for (double& v : c) v = coef(rng);
        auto poly = [&](double t) {
            double acc = 0.0;
            for (int d = degree; d >= 0; --d) acc = acc * t + c[static_cast<std::size_t>(d)];
            return acc;
        };
        double exact = 0.0;
        for (int d = 0; d <= degree; ++d) exact += c[static_cast<std::size_t>(d)] / (d + 1.0);
        worst_quad = std::max(worst_quad,
                              std::abs(gauss_legendre_integrate(poly, 0.0, 1.0, nodes) - exact));
    }
    out.check(worst_quad < 1e-11, "polynomial exactness up to degree 2n-1, worst abs err " + fmt(worst_quad));

    const std::vector<NamedFunction> truth{{"beta0", [](double t) { return 2.0 * std::sin(2.0 * M_PI * t); }},
                                           {"beta1", [](double t) { return 2.0 * std::exp(t); }}};
    const double r0 = function_range(truth[0].f);
    const double r1 = function_range(truth[1].f);
    const std::vector<CoefficientFunction> offset{[&, r0](double t) { return truth[0].f(t) + 0.1 * r0; },
                                                  [&, r1](double t) { return truth[1].f(t) + 0.1 * r1; }};
    const double made_value = made(truth, offset);
    const double wase_value = wase(truth, offset);
    out.check(std::abs(made_value - 0.1) < 1e-12, "0.1-range offsets give MADE = " + fmt(made_value));
    out.check(std::abs(wase_value - 0.01) < 1e-12, "0.1-range offsets give WASE = " + fmt(wase_value));

    const std::vector<NamedFunction> single{truth[1]};
    const std::vector<CoefficientFunction> full_offset{[&, r1](double t) { return truth[1].f(t) + r1; }};
    out.check(std::abs(made(single, full_offset) - 1.0) < 1e-12, "full-range offset gives MADE = 1");
    out.check(std::abs(wase(single, full_offset) - 1.0) < 1e-12, "full-range offset gives WASE = 1");
    return out;
}

// ---------------------------------------------------------------------------
// 9. CLI determinism across thread counts.

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome criterion9() {
    Outcome out;
    if (g_cli_path.empty()) {
        out.check(false, "no --cli path supplied");
        return out;
    }
    const auto dir = std::filesystem::temp_directory_path() / "lsrk_acceptance9";
    std::filesystem::create_directories(dir);
    const std::string base = " simulate --study 2 --n 24 --stn 8 --reps 4 --seed 42 --cv-folds 4";
    const std::string prefix_a = (dir / "a").string();
    const std::string prefix_b = (dir / "b").string();
    const std::string cmd_a = "\"" + g_cli_path + "\"" + base + " --threads 1 --out-prefix " + prefix_a + " > /dev/null";
    const std::string cmd_b = "\"" + g_cli_path + "\"" + base + " --threads 4 --out-prefix " + prefix_b + " > /dev/null";
    out.check(std::system(cmd_a.c_str()) == 0, "simulate --threads 1 exits 0");
    out.check(std::system(cmd_b.c_str()) == 0, "simulate --threads 4 exits 0");

    const std::string metrics_a = slurp(prefix_a + "_metrics.json");
    const std::string metrics_b = slurp(prefix_b + "_metrics.json");
    const std::string reps_a = slurp(prefix_a + "_replications.csv");
    const std::string reps_b = slurp(prefix_b + "_replications.csv");
    out.check(!metrics_a.empty() && metrics_a == metrics_b, "metrics JSON byte-identical across thread counts");
    out.check(!reps_a.empty() && reps_a == reps_b, "replication CSV byte-identical across thread counts");

    // Re-running from the manifest reproduces the reports byte-for-byte.
    const std::string prefix_c = (dir / "c").string();
    const std::string cmd_c = "\"" + g_cli_path + "\" rerun --manifest " + prefix_a + "_manifest.json" +
                              " --out-prefix " + prefix_c + " > /dev/null";
    out.check(std::system(cmd_c.c_str()) == 0, "rerun from manifest exits 0");
    out.check(slurp(prefix_c + "_metrics.json") == metrics_a, "rerun metrics byte-identical");
    out.check(slurp(prefix_c + "_replications.csv") == reps_a, "rerun replication CSV byte-identical");
    std::filesystem::remove_all(dir);
    return out;
}

struct Criterion {
    int id;
    const char* label;
    double budget_seconds;  // 0: no budget stated
    Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "smoother optimality vs CG oracle and perturbations", 10.0, criterion1},
    {2, "scalar-reduction identity (d1=1, d2=0)", 5.0, criterion2},
    {3, "dense-noiseless recovery with CV lambdas", 120.0, criterion3},
    {4, "study 1 desk-scale table reproduction", 1200.0, criterion4},
    {5, "monotone MADE trends across cells", 2400.0, criterion5},
    {6, "generator distributional checks", 60.0, criterion6},
    {7, "kernel/PSD property sweep", 60.0, criterion7},
    {8, "metrics exactness", 5.0, criterion8},
    {9, "CLI determinism across thread counts", 0.0, criterion9},
};

}  // namespace

int main(int argc, char** argv) {
    std::string selection = "all";
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--cli" && i + 1 < argc)
            g_cli_path = argv[++i];
        else
            selection = arg;
    }

    bool all_pass = true;
    for (const Criterion& criterion : kCriteria) {
        if (selection != "all" && selection != std::to_string(criterion.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criterion.run();
        } catch (const std::exception& e) {
            outcome.check(false, std::string("exception: ") + e.what());
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (criterion.budget_seconds > 0.0)
            outcome.check(elapsed < criterion.budget_seconds,
                          "runtime " + fmt(elapsed) + " s < " + fmt(criterion.budget_seconds) + " s");
        all_pass = all_pass && outcome.pass;
        std::printf("[%s] criterion %d: %s (%.1f s)\n", outcome.pass ? "PASS" : "FAIL", criterion.id,
                    criterion.label, elapsed);
        for (const auto& note : outcome.notes) std::printf("       %s\n", note.c_str());
    }
    return all_pass ? 0 : 1;
}
