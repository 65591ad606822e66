#pragma once

// Varying coefficient models for sparse, irregularly sampled, noisy
// longitudinal functional data: RKHS-regularized estimation of the
// one-dimensional covariance and cross-covariance functions, pointwise
// recovery of the coefficient functions, and a seeded Monte Carlo harness.

#include "lsrk/coefficients.hpp"
#include "lsrk/common.hpp"
#include "lsrk/covariance.hpp"
#include "lsrk/cross_validation.hpp"
#include "lsrk/csv.hpp"
#include "lsrk/data.hpp"
#include "lsrk/kernels.hpp"
#include "lsrk/metrics.hpp"
#include "lsrk/monte_carlo.hpp"
#include "lsrk/pipeline.hpp"
#include "lsrk/quadrature.hpp"
#include "lsrk/serialization.hpp"
#include "lsrk/simulation.hpp"
#include "lsrk/smoothing.hpp"
