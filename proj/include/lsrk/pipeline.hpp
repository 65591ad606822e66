#pragma once

#include "lsrk/coefficients.hpp"
#include "lsrk/cross_validation.hpp"

namespace lsrk {

struct PipelineOptions {
    SmootherOptions smoother;
    RidgePolicy ridge;
    int threads = 1;
};

struct FittedModel {
    CovarianceSet covariances;
    ResolvedSmoothing resolved;
};

inline ResolvedSmoothing resolve_smoothing(const LongitudinalDataset& data, const KernelSet& kernels,
                                           const SmoothingConfig& config,
                                           const SmootherOptions& options = SmootherOptions{}) {
    if (config.any_cv()) return select_lambdas_cv(data, kernels, config, options);
    ResolvedSmoothing resolved;
    resolved.kernels = kernels;
    resolved.lambdas.mean_y = config.lambda_mean_y.value;
    resolved.lambdas.mean_x = config.lambda_mean_x.value;
    resolved.lambdas.xx = config.lambda_xx.value;
    resolved.lambdas.xz = config.lambda_xz.value;
    resolved.lambdas.yx = config.lambda_yx.value;
    resolved.lambdas.yz = config.lambda_yz.value;
    return resolved;
}

inline FittedModel fit_model(const LongitudinalDataset& data, const KernelSet& kernels,
                             const SmoothingConfig& config, const PipelineOptions& options = PipelineOptions{}) {
    FittedModel model;
    model.resolved = resolve_smoothing(data, kernels, config, options.smoother);
    model.covariances = estimate_covariance_set(data, model.resolved.kernels, model.resolved.lambdas,
                                                CovarianceOptions{options.smoother, options.threads});
    return model;
}

// means -> covariances -> pointwise solves -> intercept; deterministic given inputs.
inline CoefficientEstimates estimate_coefficients(const LongitudinalDataset& data, const KernelSet& kernels,
                                                  const SmoothingConfig& config, const EvaluationGrid& grid,
                                                  const PipelineOptions& options = PipelineOptions{}) {
    const FittedModel model = fit_model(data, kernels, config, options);
    return solve_coefficients(model.covariances, grid, options.ridge, options.threads);
}

}  // namespace lsrk
