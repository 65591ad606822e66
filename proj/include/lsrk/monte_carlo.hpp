#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "lsrk/parallel.hpp"
#include "lsrk/pipeline.hpp"
#include "lsrk/simulation.hpp"

namespace lsrk {

struct MonteCarloOptions {
    SmoothingConfig smoothing;
    PipelineOptions pipeline;
    bool include_intercept = true;  // count beta0 in MADE/WASE
    int quadrature_nodes = 50;
    int threads = 1;
};

struct ReplicationResult {
    int index = 0;
    bool failed = false;
    std::string error;
    MetricsReport metrics;
};

struct MonteCarloReport {
    SimulationConfig config;
    double mean_made = 0.0;
    double sd_made = 0.0;
    double mean_wase = 0.0;
    double sd_wase = 0.0;
    std::vector<std::string> function_names;
    std::vector<double> mean_ise;  // per coefficient function, failures excluded
    std::vector<ReplicationResult> replications;
    int failures = 0;
    double runtime_seconds = 0.0;
};

inline KernelSet kernels_for_study(const SimulationConfig& config, double theta = 0.1) {
    return KernelSet::defaults(config.study == 1 ? 1 : 2, theta);
}

// Scores one fitted model against the generating truth. The coefficient
// estimates are solved once per quadrature node and shared by every function.
inline MetricsReport score_fit(const CovarianceSet& cs, const TrueCoefficients& truth,
                               bool include_intercept, int quadrature_nodes, const RidgePolicy& policy) {
    const auto evaluator = std::make_shared<CoefficientEvaluator>(cs, policy);
    std::vector<NamedFunction> truth_all = truth.functions;
    std::vector<CoefficientFunction> est_all;
    for (std::size_t fi = 0; fi < truth_all.size(); ++fi) {
        est_all.push_back([evaluator, fi](double t) {
            const auto& row = evaluator->at(t);
            return fi == 0 ? row.beta0 : row.coefs(static_cast<Eigen::Index>(fi - 1));
        });
    }
    std::vector<NamedFunction> truth_used = truth_all;
    std::vector<CoefficientFunction> est_used = est_all;
    if (!include_intercept) {
        truth_used.erase(truth_used.begin());
        est_used.erase(est_used.begin());
    }
    MetricsReport report;
    report.made = made(truth_used, est_used, quadrature_nodes);
    report.wase = wase(truth_used, est_used, quadrature_nodes);
    report.per_function_ise = integrated_squared_errors(truth_all, est_all, quadrature_nodes);
    return report;
}

// Seeded replications with independent child streams; execution order cannot
// change any result, and failed replications are reported, not silently dropped.
inline MonteCarloReport run_monte_carlo(const SimulationConfig& config, const KernelSet& kernels,
                                        const MonteCarloOptions& options) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();

    MonteCarloReport report;
    report.config = config;
    for (const auto& f : (config.study == 1 ? study1_truth() : study2_truth()).functions)
        report.function_names.push_back(f.name);

    report.replications.resize(static_cast<std::size_t>(config.replications));
    parallel_for(static_cast<std::size_t>(config.replications), options.threads, [&](std::size_t r) {
        ReplicationResult& slot = report.replications[r];
        slot.index = static_cast<int>(r);
        const std::uint64_t rep_seed = child_seed(config.seed, r);
        try {
            const GeneratedData generated = generate(config, rep_seed);
            SmoothingConfig smoothing = options.smoothing;
            smoothing.seed = child_seed(rep_seed, 1);
            PipelineOptions pipeline = options.pipeline;
            pipeline.threads = 1;  // parallelism lives at the replication level
            const FittedModel model = fit_model(generated.data, kernels, smoothing, pipeline);
            slot.metrics = score_fit(model.covariances, generated.truth, options.include_intercept,
                                     options.quadrature_nodes, options.pipeline.ridge);
        } catch (const std::exception& e) {
            slot.failed = true;
            slot.error = e.what();
        }
    });

    int ok = 0;
    double sum_made = 0.0, sum_wase = 0.0;
    std::vector<double> sum_ise(report.function_names.size(), 0.0);
    for (const auto& rep : report.replications) {
        if (rep.failed) {
            ++report.failures;
            continue;
        }
        ++ok;
        sum_made += rep.metrics.made;
        sum_wase += rep.metrics.wase;
        for (std::size_t i = 0; i < sum_ise.size(); ++i) sum_ise[i] += rep.metrics.per_function_ise[i];
    }
    if (ok > 0) {
        report.mean_made = sum_made / ok;
        report.mean_wase = sum_wase / ok;
        report.mean_ise = sum_ise;
        for (double& v : report.mean_ise) v /= ok;
        if (ok > 1) {
            double acc_m = 0.0, acc_w = 0.0;
            for (const auto& rep : report.replications) {
                if (rep.failed) continue;
                acc_m += (rep.metrics.made - report.mean_made) * (rep.metrics.made - report.mean_made);
                acc_w += (rep.metrics.wase - report.mean_wase) * (rep.metrics.wase - report.mean_wase);
            }
            report.sd_made = std::sqrt(acc_m / (ok - 1));
            report.sd_wase = std::sqrt(acc_w / (ok - 1));
        }
    }
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace lsrk
