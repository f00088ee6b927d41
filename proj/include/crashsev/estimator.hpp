#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crashsev/data_model.hpp"
#include "crashsev/model_spec.hpp"

namespace crashsev {

struct EstimationOptions {
    /// Converged when the gradient max-norm drops below this.
    double tol = 1e-6;
    /// ...or when the relative log-likelihood change of an accepted step drops below this.
    double rel_ll_tol = 1e-10;
    int max_iter = 200;
    int max_halvings = 30;
    /// Information matrices with a larger condition number are treated as singular.
    double condition_threshold = 1e10;
    /// A terminal Newton step larger than this (max-norm) means the estimate is
    /// still drifting along a flat direction of the likelihood.
    double drift_tol = 1e-2;
    /// Skip the exact Hessian and use BFGS secant updates from the first iteration.
    bool secant_only = false;
};

struct EstimationResult {
    ParameterVector theta_hat;
    Eigen::MatrixXd covariance;
    Eigen::VectorXd standard_errors;
    Eigen::VectorXd t_ratios;
    Eigen::VectorXd gradient;
    double ll_converged = 0.0;
    /// Constants-only (saturated shares) log-likelihood.
    double ll_null = 0.0;
    /// Log-likelihood at theta = 0.
    double ll_zero = 0.0;
    int iterations = 0;
    bool converged = false;
    double condition_number = 0.0;
    std::size_t num_observations = 0;
    std::vector<std::string> diagnostics;

    std::size_t num_parameters() const noexcept { return theta_hat.size(); }
};

/// Maximum-likelihood fit by Newton iterations with step halving, starting at zero.
/// Throws NonConvergence and NonIdentification.
EstimationResult estimate(const ModelSpec& spec, const Dataset& dataset,
                          const EstimationOptions& options = {});

/// Weighted log-likelihood of the saturated constants-only model:
/// sum_i W_i ln(W_i / W).
double null_log_likelihood(const Dataset& dataset);

struct FitStatistics {
    double rho_squared = 0.0;
    /// 1 - (LL - K) / LL(0)
    double adjusted_rho_squared = 0.0;
    double aic = 0.0;
    double bic = 0.0;
};

/// Throws UndefinedStatistic when LL(0) is zero.
FitStatistics fit_statistics(const EstimationResult& result);

} // namespace crashsev
