#include "crashsev/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crashsev/errors.hpp"

namespace crashsev {

namespace {

const double kLogFloor = std::log(std::numeric_limits<double>::min());

void check_theta(const BoundModel& model, const Eigen::VectorXd& theta) {
    if (theta.size() != static_cast<Eigen::Index>(model.num_parameters()))
        throw InvalidArgument("parameter vector has " + std::to_string(theta.size()) +
                              " entries, model expects " +
                              std::to_string(model.num_parameters()));
}

} // namespace

double softmax(std::span<const double> utilities, std::span<double> out) {
    double max_u = -std::numeric_limits<double>::infinity();
    for (double u : utilities) {
        if (!std::isfinite(u)) throw NumericError("non-finite utility");
        max_u = std::max(max_u, u);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < utilities.size(); ++i) {
        out[i] = std::exp(utilities[i] - max_u);
        sum += out[i];
    }
    for (std::size_t i = 0; i < utilities.size(); ++i) out[i] /= sum;
    return max_u + std::log(sum);
}

std::vector<double> probabilities(std::span<const double> utilities) {
    std::vector<double> p(utilities.size());
    softmax(utilities, p);
    return p;
}

std::vector<double> probabilities(const ModelSpec& spec, const ParameterVector& theta,
                                  const Dataset& dataset, std::size_t row) {
    LogLikelihood ll(spec, dataset);
    std::vector<double> p(spec.outcome_set().size());
    ll.row_probabilities(theta.values, row, p);
    return p;
}

LogLikelihood::LogLikelihood(const ModelSpec& spec, const Dataset& dataset)
    : model_(spec, dataset.variable_names()), dataset_(&dataset) {
    if (dataset.empty()) throw InvalidArgument("dataset is empty");
    if (!(dataset.outcome_set() == spec.outcome_set()))
        throw InvalidArgument("dataset and model spec use different outcome sets");
}

void LogLikelihood::row_probabilities(const Eigen::VectorXd& theta, std::size_t row,
                                      std::span<double> out) const {
    check_theta(model_, theta);
    std::vector<double> u(model_.num_outcomes());
    model_.utilities(theta, dataset_->observations().at(row).covariates, u);
    softmax(u, out);
}

double LogLikelihood::value(const Eigen::VectorXd& theta, std::size_t* floored) const {
    check_theta(model_, theta);
    const std::size_t n_out = model_.num_outcomes();
    std::vector<double> u(n_out), p(n_out);
    double total = 0.0;
    std::size_t n_floored = 0;
    for (const auto& obs : dataset_->observations()) {
        model_.utilities(theta, obs.covariates, u);
        const double lse = softmax(u, p);
        double log_p = u[obs.outcome] - lse;
        if (log_p < kLogFloor) {
            log_p = kLogFloor;
            ++n_floored;
        }
        total += obs.weight * log_p;
    }
    if (floored) *floored = n_floored;
    return total;
}

LikelihoodEvaluation LogLikelihood::evaluate(const Eigen::VectorXd& theta) const {
    check_theta(model_, theta);
    const std::size_t n_out = model_.num_outcomes();
    const auto k = static_cast<Eigen::Index>(model_.num_parameters());

    LikelihoodEvaluation ev;
    ev.gradient = Eigen::VectorXd::Zero(k);
    ev.hessian = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd mean_design(k);
    std::vector<double> u(n_out), p(n_out);

    for (const auto& obs : dataset_->observations()) {
        const std::span<const double> x = obs.covariates;
        const double w = obs.weight;
        model_.utilities(theta, x, u);
        const double lse = softmax(u, p);
        double log_p = u[obs.outcome] - lse;
        if (log_p < kLogFloor) {
            log_p = kLogFloor;
            ++ev.floored;
        }
        ev.value += w * log_p;

        // Score: sum_i (y_i - P_i) d_i. Information: sum_i P_i d_i d_i' - m m', m = sum_i P_i d_i.
        mean_design.setZero();
        for (std::size_t i = 0; i < n_out; ++i) {
            const double resid = (i == obs.outcome ? 1.0 : 0.0) - p[i];
            const auto entries = model_.entries(i);
            for (const auto& a : entries) {
                const double xa = BoundModel::covariate(a, x);
                const auto sa = static_cast<Eigen::Index>(a.slot);
                ev.gradient[sa] += w * resid * xa;
                mean_design[sa] += p[i] * xa;
                for (const auto& b : entries)
                    ev.hessian(sa, static_cast<Eigen::Index>(b.slot)) -=
                        w * p[i] * xa * BoundModel::covariate(b, x);
            }
        }
        ev.hessian.noalias() += w * mean_design * mean_design.transpose();
    }
    ev.hessian = 0.5 * (ev.hessian + ev.hessian.transpose()).eval();
    return ev;
}

double log_likelihood(const ModelSpec& spec, const ParameterVector& theta, const Dataset& dataset) {
    return LogLikelihood(spec, dataset).value(theta.values);
}

LikelihoodEvaluation gradient_hessian(const ModelSpec& spec, const ParameterVector& theta,
                                      const Dataset& dataset) {
    return LogLikelihood(spec, dataset).evaluate(theta.values);
}

} // namespace crashsev
