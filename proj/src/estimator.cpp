#include "crashsev/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "crashsev/errors.hpp"
#include "crashsev/likelihood.hpp"

namespace crashsev {

namespace {

double max_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

std::string slot_list(const std::vector<std::size_t>& slots, const ParameterLayout& layout,
                      const OutcomeSet& outcomes) {
    std::string out;
    for (std::size_t k : slots) {
        if (!out.empty()) out += ", ";
        out += layout.label(k, outcomes);
    }
    return out;
}

// BFGS update of an approximation to the information matrix (negative Hessian).
void secant_update(Eigen::MatrixXd& info, const Eigen::VectorXd& step,
                   const Eigen::VectorXd& grad_decrease) {
    const double sy = step.dot(grad_decrease);
    if (!(sy > 1e-12 * step.norm() * grad_decrease.norm())) return;
    const Eigen::VectorXd bs = info * step;
    const double sbs = step.dot(bs);
    if (!(sbs > 0.0)) return;
    info += grad_decrease * grad_decrease.transpose() / sy - bs * bs.transpose() / sbs;
}

} // namespace

double null_log_likelihood(const Dataset& dataset) {
    std::vector<double> weight(dataset.outcome_set().size(), 0.0);
    double total = 0.0;
    for (const auto& obs : dataset.observations()) {
        weight[obs.outcome] += obs.weight;
        total += obs.weight;
    }
    double ll = 0.0;
    for (double w : weight)
        if (w > 0.0) ll += w * std::log(w / total);
    return ll;
}

EstimationResult estimate(const ModelSpec& spec, const Dataset& dataset,
                          const EstimationOptions& options) {
    if (!(options.tol > 0.0) || options.max_iter < 1 || options.max_halvings < 0)
        throw InvalidArgument("invalid estimation options");
    const LogLikelihood objective(spec, dataset);
    const auto& layout = objective.model().layout();
    const auto& outcomes = spec.outcome_set();
    const auto k = static_cast<Eigen::Index>(layout.size());

    EstimationResult result;
    result.num_observations = dataset.size();

    {
        std::vector<std::size_t> counts(outcomes.size(), 0);
        for (const auto& obs : dataset.observations()) ++counts[obs.outcome];
        std::vector<bool> referenced(outcomes.size(), false);
        for (const auto& t : spec.terms())
            for (std::size_t i : t.outcomes) referenced[i] = true;
        for (std::size_t i = 0; i < outcomes.size(); ++i)
            if ((referenced[i] || i == 0) && counts[i] == 0)
                result.diagnostics.push_back("identification: outcome '" + outcomes.label(i) +
                                             "' never occurs in the data");
    }

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(k);
    LikelihoodEvaluation current = objective.evaluate(theta);
    result.ll_zero = current.value;

    bool secant = options.secant_only;
    Eigen::MatrixXd secant_info;
    auto diagonal_start = [k](const Eigen::MatrixXd& info) {
        Eigen::MatrixXd b = Eigen::MatrixXd::Identity(k, k);
        for (Eigen::Index j = 0; j < k; ++j) b(j, j) = std::max(1e-8, std::abs(info(j, j)));
        return b;
    };
    if (secant) secant_info = diagonal_start(-current.hessian);

    bool converged = max_norm(current.gradient) < options.tol;
    int iter = 0;
    while (!converged) {
        if (iter >= options.max_iter)
            throw NonConvergence("iteration cap of " + std::to_string(options.max_iter) +
                                     " reached; gradient max-norm " +
                                     std::to_string(max_norm(current.gradient)),
                                 theta, iter);

        Eigen::VectorXd direction;
        if (!secant) {
            const Eigen::MatrixXd info = -current.hessian;
            Eigen::LLT<Eigen::MatrixXd> llt(info);
            if (llt.info() == Eigen::Success) direction = llt.solve(current.gradient);
            if (llt.info() != Eigen::Success || !direction.allFinite()) {
                secant = true;
                result.diagnostics.push_back("Hessian solve failed at iteration " +
                                             std::to_string(iter) +
                                             "; switched to secant updates");
                secant_info = diagonal_start(info);
            }
        }
        if (secant) {
            direction = secant_info.ldlt().solve(current.gradient);
            if (!direction.allFinite() || direction.dot(current.gradient) <= 0.0) {
                secant_info = diagonal_start(-current.hessian);
                direction = secant_info.ldlt().solve(current.gradient);
            }
        }

        const double rounding = 8.0 * std::numeric_limits<double>::epsilon() *
                                std::max(1.0, std::abs(current.value));
        double step = 1.0;
        Eigen::VectorXd candidate;
        double candidate_value = -std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int h = 0; h <= options.max_halvings; ++h, step *= 0.5) {
            candidate = theta + step * direction;
            candidate_value = objective.value(candidate);
            // Ties within rounding count as ascent; near the optimum the values stop resolving.
            if (candidate_value >= current.value - rounding) {
                accepted = true;
                break;
            }
        }
        if (!accepted)
            throw NonConvergence("line search failed after " +
                                     std::to_string(options.max_halvings) + " step halvings",
                                 theta, iter);

        LikelihoodEvaluation next = objective.evaluate(candidate);
        if (secant) secant_update(secant_info, candidate - theta, current.gradient - next.gradient);
        const double rel_change =
            std::abs(next.value - current.value) / std::max(1.0, std::abs(current.value));
        theta = std::move(candidate);
        current = std::move(next);
        ++iter;
        converged = max_norm(current.gradient) < options.tol || rel_change < options.rel_ll_tol;
    }

    // Identification: the information matrix must be well conditioned and the
    // estimate must not still be moving along a flat direction.
    const Eigen::MatrixXd info = -current.hessian;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
    const Eigen::VectorXd lambda = eig.eigenvalues();
    const double lambda_max = lambda.maxCoeff();
    const double lambda_min = lambda.minCoeff();
    const double condition = lambda_min > 0.0 ? lambda_max / lambda_min
                                              : std::numeric_limits<double>::infinity();
    result.condition_number = condition;
    if (!(condition <= options.condition_threshold)) {
        std::vector<std::size_t> slots;
        for (Eigen::Index c = 0; c < k; ++c) {
            if (lambda[c] * options.condition_threshold >= lambda_max) continue;
            const Eigen::VectorXd v = eig.eigenvectors().col(c);
            const double vmax = max_norm(v);
            for (Eigen::Index j = 0; j < k; ++j)
                if (std::abs(v[j]) >= 0.5 * vmax) slots.push_back(static_cast<std::size_t>(j));
        }
        std::sort(slots.begin(), slots.end());
        slots.erase(std::unique(slots.begin(), slots.end()), slots.end());
        std::ostringstream msg;
        msg << "information matrix is near-singular (condition number " << condition
            << "); not identified: " << slot_list(slots, layout, outcomes);
        throw NonIdentification(msg.str(), std::move(slots));
    }
    const Eigen::VectorXd newton_step = eig.eigenvectors() *
        (eig.eigenvectors().transpose() * current.gradient).cwiseQuotient(lambda);
    if (max_norm(newton_step) > options.drift_tol) {
        std::vector<std::size_t> slots;
        for (Eigen::Index j = 0; j < k; ++j)
            if (std::abs(newton_step[j]) > options.drift_tol)
                slots.push_back(static_cast<std::size_t>(j));
        const std::string msg =
            "likelihood has no interior maximum (estimate still drifting, likely separation); "
            "not identified: " + slot_list(slots, layout, outcomes);
        throw NonIdentification(msg, std::move(slots));
    }

    result.theta_hat = ParameterVector{layout, theta};
    result.covariance = eig.eigenvectors() * lambda.cwiseInverse().asDiagonal() *
                        eig.eigenvectors().transpose();
    result.covariance = 0.5 * (result.covariance + result.covariance.transpose()).eval();
    result.standard_errors = result.covariance.diagonal().cwiseSqrt();
    result.t_ratios = theta.cwiseQuotient(result.standard_errors);
    result.gradient = current.gradient;
    result.ll_converged = current.value;
    result.ll_null = null_log_likelihood(dataset);
    result.iterations = iter;
    result.converged = true;
    if (current.floored > 0)
        result.diagnostics.push_back(std::to_string(current.floored) +
                                     " observed-outcome probabilities floored at the smallest "
                                     "normal double (possible quasi-separation)");
    return result;
}

FitStatistics fit_statistics(const EstimationResult& result) {
    if (!result.converged) throw InvalidArgument("fit statistics need a converged estimate");
    if (result.ll_zero == 0.0) throw UndefinedStatistic("rho-squared undefined: LL(0) is zero");
    const auto k = static_cast<double>(result.num_parameters());
    FitStatistics s;
    s.rho_squared = 1.0 - result.ll_converged / result.ll_zero;
    s.adjusted_rho_squared = 1.0 - (result.ll_converged - k) / result.ll_zero;
    s.aic = 2.0 * k - 2.0 * result.ll_converged;
    s.bic = k * std::log(static_cast<double>(result.num_observations)) - 2.0 * result.ll_converged;
    return s;
}

} // namespace crashsev
