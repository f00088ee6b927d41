#include "crashsev/synth.hpp"

#include <cmath>

#include "crashsev/errors.hpp"
#include "crashsev/likelihood.hpp"

namespace crashsev {

namespace {

constexpr double kSumTolerance = 1e-9;

std::size_t inverse_cdf(std::span<const double> probabilities, double u) {
    double cumulative = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        cumulative += probabilities[i];
        if (u < cumulative) return i;
    }
    return probabilities.size() - 1;
}

struct Drawer {
    std::mt19937_64& rng;

    double operator()(const dist::Constant& d) const { return d.value; }
    double operator()(const dist::Uniform& d) const {
        return d.low + (d.high - d.low) * uniform01(rng);
    }
    double operator()(const dist::Categorical& d) const {
        return d.values[inverse_cdf(d.probabilities, uniform01(rng))];
    }
    double operator()(const dist::Indicator& d) const { return uniform01(rng) < d.p ? 1.0 : 0.0; }
};

struct Checker {
    const std::string& name;

    void fail(const std::string& what) const {
        throw ConfigError("covariate '" + name + "': " + what);
    }
    void operator()(const dist::Constant& d) const {
        if (!std::isfinite(d.value)) fail("constant value must be finite");
    }
    void operator()(const dist::Uniform& d) const {
        if (!std::isfinite(d.low) || !std::isfinite(d.high) || !(d.low < d.high))
            fail("uniform bounds must be finite with low < high");
    }
    void operator()(const dist::Categorical& d) const {
        if (d.values.empty() || d.values.size() != d.probabilities.size())
            fail("categorical needs matching, non-empty values and probabilities");
        double sum = 0.0;
        for (double p : d.probabilities) {
            if (!(p > 0.0)) fail("categorical probabilities must be positive");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kSumTolerance) fail("categorical probabilities must sum to 1");
        for (double v : d.values)
            if (!std::isfinite(v)) fail("categorical values must be finite");
    }
    void operator()(const dist::Indicator& d) const {
        if (!(d.p >= 0.0 && d.p <= 1.0)) fail("indicator probability must lie in [0, 1]");
    }
};

} // namespace

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void validate(const GeneratorConfig& config) {
    if (config.n < 1) throw ConfigError("generator needs n >= 1");
    const std::size_t k = build_layout(config.spec).size();
    if (config.true_theta.size() != static_cast<Eigen::Index>(k))
        throw ConfigError("true theta has " + std::to_string(config.true_theta.size()) +
                          " entries, the model has " + std::to_string(k) + " parameters");
    if (!config.true_theta.allFinite()) throw ConfigError("true theta must be finite");
    for (const auto& [name, d] : config.covariates) {
        if (name.empty() || name == kConstant)
            throw ConfigError("invalid covariate name '" + name + "'");
        std::visit(Checker{name}, d);
    }
    for (const auto& v : config.spec.variables())
        if (!config.covariates.contains(v))
            throw ConfigError("model variable '" + v + "' has no covariate distribution");
    if (!config.segment_mixture.empty()) {
        double sum = 0.0;
        for (const auto& c : config.segment_mixture) {
            if (!(c.weight > 0.0)) throw ConfigError("mixture weights must be positive");
            sum += c.weight;
            if (c.theta && (c.theta->size() != static_cast<Eigen::Index>(k) ||
                            !c.theta->allFinite()))
                throw ConfigError("segment theta override must have " + std::to_string(k) +
                                  " finite entries");
        }
        if (std::abs(sum - 1.0) > kSumTolerance) throw ConfigError("mixture weights must sum to 1");
    }
}

Dataset simulate(const GeneratorConfig& config) {
    validate(config);
    std::vector<std::string> names;
    std::vector<const CovariateDistribution*> dists;
    for (const auto& [name, d] : config.covariates) {
        names.push_back(name);
        dists.push_back(&d);
    }
    const BoundModel model(config.spec, names);
    const std::size_t n_out = model.num_outcomes();

    std::vector<double> mixture_weights;
    for (const auto& c : config.segment_mixture) mixture_weights.push_back(c.weight);

    std::mt19937_64 rng(config.seed);
    Drawer draw{rng};
    std::vector<double> u(n_out), p(n_out);
    std::vector<Observation> rows;
    rows.reserve(config.n);
    for (std::size_t r = 0; r < config.n; ++r) {
        Observation obs;
        obs.period = config.period;
        const Eigen::VectorXd* theta = &config.true_theta;
        if (!config.segment_mixture.empty()) {
            const std::size_t c = config.segment_mixture.size() == 1
                                      ? 0
                                      : inverse_cdf(mixture_weights, uniform01(rng));
            const auto& component = config.segment_mixture[c];
            obs.segment = component.segment;
            if (component.theta) theta = &*component.theta;
        }
        obs.covariates.reserve(dists.size());
        for (const auto* d : dists) obs.covariates.push_back(std::visit(draw, *d));
        model.utilities(*theta, obs.covariates, u);
        softmax(u, p);
        obs.outcome = inverse_cdf(p, uniform01(rng));
        rows.push_back(std::move(obs));
    }
    return Dataset(config.spec.outcome_set(), std::move(names), std::move(rows));
}

Eigen::VectorXd constants_from_shares(std::span<const double> shares) {
    if (shares.size() < 2) throw InvalidArgument("need at least two shares");
    for (double s : shares)
        if (!(s > 0.0)) throw InvalidArgument("shares must be positive");
    Eigen::VectorXd theta(static_cast<Eigen::Index>(shares.size() - 1));
    for (std::size_t i = 1; i < shares.size(); ++i)
        theta[static_cast<Eigen::Index>(i - 1)] = std::log(shares[i] / shares[0]);
    return theta;
}

} // namespace crashsev
