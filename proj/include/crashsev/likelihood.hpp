#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "crashsev/data_model.hpp"
#include "crashsev/model_spec.hpp"

namespace crashsev {

/// Writes softmax(utilities) into `out` using max subtraction and returns
/// log(sum(exp(utilities))). Throws NumericError on non-finite input.
double softmax(std::span<const double> utilities, std::span<double> out);

/// MNL outcome probabilities for a utility vector.
std::vector<double> probabilities(std::span<const double> utilities);

std::vector<double> probabilities(const ModelSpec& spec, const ParameterVector& theta,
                                  const Dataset& dataset, std::size_t row);

struct LikelihoodEvaluation {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
    /// Number of observed-outcome probabilities floored at the smallest normal double.
    std::size_t floored = 0;
};

/// Log-likelihood of a bound model over one dataset. Evaluation walks the rows in
/// order, so results are bit-reproducible.
class LogLikelihood {
public:
    /// Throws InvalidArgument for an empty dataset or mismatched outcome sets and
    /// SchemaError when the dataset lacks a model covariate.
    LogLikelihood(const ModelSpec& spec, const Dataset& dataset);

    const BoundModel& model() const noexcept { return model_; }
    const Dataset& dataset() const noexcept { return *dataset_; }
    std::size_t num_parameters() const noexcept { return model_.num_parameters(); }

    double value(const Eigen::VectorXd& theta, std::size_t* floored = nullptr) const;
    LikelihoodEvaluation evaluate(const Eigen::VectorXd& theta) const;

    /// Probabilities for one row.
    void row_probabilities(const Eigen::VectorXd& theta, std::size_t row,
                           std::span<double> out) const;

private:
    BoundModel model_;
    const Dataset* dataset_;
};

double log_likelihood(const ModelSpec& spec, const ParameterVector& theta, const Dataset& dataset);

LikelihoodEvaluation gradient_hessian(const ModelSpec& spec, const ParameterVector& theta,
                                      const Dataset& dataset);

} // namespace crashsev
