#include "crashsev/inference.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>

#include "crashsev/errors.hpp"
#include "crashsev/likelihood.hpp"

namespace crashsev {

double elasticity_point(double probability, double beta, double x) {
    return (1.0 - probability) * beta * x;
}

std::string_view to_string(Aggregation a) {
    return a == Aggregation::mean ? "mean" : "prob-weighted";
}

std::optional<Aggregation> parse_aggregation(std::string_view s) {
    if (s == "mean") return Aggregation::mean;
    if (s == "prob-weighted") return Aggregation::prob_weighted;
    return std::nullopt;
}

std::string_view to_string(ElasticityKind k) {
    return k == ElasticityKind::elasticity ? "elasticity" : "pseudo-elasticity";
}

const ElasticityEntry* ElasticityReport::find(std::string_view variable,
                                              std::size_t outcome) const {
    for (const auto& e : entries)
        if (e.variable == variable && e.outcome == outcome) return &e;
    return nullptr;
}

bool is_indicator(const Dataset& dataset, std::string_view variable) {
    const std::size_t c = dataset.require_column(variable);
    return std::all_of(dataset.observations().begin(), dataset.observations().end(),
                       [c](const Observation& o) {
                           return o.covariates[c] == 0.0 || o.covariates[c] == 1.0;
                       });
}

ElasticityReport elasticity_report(const ModelSpec& spec, const EstimationResult& result,
                                   const Dataset& dataset, const ElasticityOptions& options,
                                   const std::optional<std::string>& variable) {
    if (!result.converged) throw InvalidArgument("elasticities need a converged estimate");
    if (variable) {
        const auto vars = spec.variables();
        if (std::find(vars.begin(), vars.end(), *variable) == vars.end())
            throw InvalidArgument("variable '" + *variable + "' is not part of the model");
    }
    const LogLikelihood objective(spec, dataset);
    const BoundModel& model = objective.model();
    const auto& layout = model.layout();
    if (!(layout == result.theta_hat.layout))
        throw InvalidArgument("estimation result does not belong to this model spec");
    const Eigen::VectorXd& theta = result.theta_hat.values;

    ElasticityReport report;
    report.aggregation = options.aggregation;
    report.significance_threshold = options.significance_threshold;
    report.outcomes = spec.outcome_set();

    const std::size_t n_out = model.num_outcomes();
    std::vector<double> u(n_out), p(n_out);
    for (std::size_t k = 0; k < layout.size(); ++k) {
        const Slot& slot = layout.slot(k);
        if (slot.variable == kConstant) continue;
        if (variable && slot.variable != *variable) continue;
        const std::size_t column = dataset.require_column(slot.variable);
        const bool indicator = is_indicator(dataset, slot.variable);
        const auto ki = static_cast<Eigen::Index>(k);
        const double beta = theta[ki];

        for (std::size_t outcome : slot.outcomes) {
            ElasticityEntry entry;
            entry.variable = slot.variable;
            entry.outcome = outcome;
            entry.slot = k;
            entry.shared = slot.shared;
            entry.estimate = beta;
            entry.t_ratio = result.t_ratios[ki];
            entry.significant = std::abs(entry.t_ratio) > options.significance_threshold;
            entry.kind = indicator ? ElasticityKind::pseudo_elasticity : ElasticityKind::elasticity;
            if (!entry.significant) {
                report.entries.push_back(std::move(entry));
                continue;
            }

            std::vector<double> values;
            values.reserve(dataset.size());
            double weighted = 0.0;
            double weight_total = 0.0;
            for (const auto& obs : dataset.observations()) {
                const double x = obs.covariates[column];
                model.utilities(theta, obs.covariates, u);
                softmax(u, p);
                const double p_i = p[outcome];
                double e = 0.0;
                if (indicator) {
                    // Flip x_ki in the utility of this outcome only.
                    const double base = u[outcome] - beta * x;
                    u[outcome] = base;
                    softmax(u, p);
                    const double p0 = p[outcome];
                    u[outcome] = base + beta;
                    softmax(u, p);
                    e = (p[outcome] - p0) / p0;
                } else {
                    e = elasticity_point(p_i, beta, x);
                }
                values.push_back(e);
                weighted += p_i * e;
                weight_total += p_i;
            }
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= static_cast<double>(values.size());
            entry.value = options.aggregation == Aggregation::mean ? mean : weighted / weight_total;
            if (options.keep_per_observation) entry.per_observation = std::move(values);
            report.entries.push_back(std::move(entry));
        }
    }
    return report;
}

double chi_square_sf(double x, int df) {
    if (df <= 0) throw InvalidArgument("chi-square degrees of freedom must be positive");
    if (std::isnan(x) || x < 0.0) throw InvalidArgument("chi-square argument must be >= 0");
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

std::vector<double> default_confidence_levels() { return {0.90, 0.95, 0.99}; }

std::vector<double> temporal_confidence_levels() { return {0.70, 0.90, 0.95, 0.99}; }

bool LRTestResult::rejects(double confidence) const {
    auto it = reject_at.find(confidence);
    if (it != reject_at.end()) return it->second;
    return p_value < 1.0 - confidence;
}

namespace {

constexpr double kNegativeStatisticTolerance = 1e-8;

LRTestResult finish_test(double statistic, int df, double ll_restricted,
                         std::vector<double> ll_unrestricted,
                         const std::vector<double>& confidence_levels) {
    LRTestResult r;
    r.statistic = std::max(statistic, 0.0);
    r.df = df;
    r.p_value = chi_square_sf(r.statistic, df);
    for (double c : confidence_levels) {
        if (!(c > 0.0 && c < 1.0)) throw InvalidArgument("confidence levels must lie in (0, 1)");
        r.reject_at[c] = r.p_value < 1.0 - c;
    }
    r.ll_restricted = ll_restricted;
    r.ll_unrestricted = std::move(ll_unrestricted);
    return r;
}

} // namespace

LRTestResult lr_split_test(double ll_pooled, std::size_t k_pooled,
                           const std::vector<SubsetFit>& subsets,
                           const std::vector<double>& confidence_levels) {
    if (subsets.size() < 2) throw InvalidArgument("split test needs at least two subsets");
    double sum_ll = 0.0;
    long long sum_k = 0;
    std::vector<double> lls;
    for (const auto& s : subsets) {
        sum_ll += s.ll;
        sum_k += static_cast<long long>(s.num_parameters);
        lls.push_back(s.ll);
    }
    const long long df = sum_k - static_cast<long long>(k_pooled);
    if (df <= 0) throw InvalidArgument("split test has non-positive degrees of freedom");
    const double statistic = -2.0 * (ll_pooled - sum_ll);
    if (statistic < -kNegativeStatisticTolerance)
        throw InconsistencyError(
            "subset log-likelihoods sum to less than the pooled log-likelihood; a subset "
            "estimation most likely stopped short of its maximum");
    return finish_test(statistic, static_cast<int>(df), ll_pooled, std::move(lls),
                       confidence_levels);
}

LRTestResult lr_temporal_test(double ll_all, double ll_a, double ll_b, std::size_t k_all,
                              std::size_t k_a, std::size_t k_b,
                              const std::vector<double>& confidence_levels) {
    const long long df = static_cast<long long>(k_a) + static_cast<long long>(k_b) -
                         static_cast<long long>(k_all);
    if (df <= 0) throw InvalidArgument("temporal test has non-positive degrees of freedom");
    const double statistic = -2.0 * (ll_all - ll_a - ll_b);
    if (statistic < -kNegativeStatisticTolerance)
        throw InconsistencyError(
            "period log-likelihoods sum to less than the combined log-likelihood; one of the "
            "period estimations most likely stopped short of its maximum");
    return finish_test(statistic, static_cast<int>(df), ll_all, {ll_a, ll_b}, confidence_levels);
}

std::string_view to_string(CellStatus s) {
    switch (s) {
    case CellStatus::estimated: return "estimated";
    case CellStatus::skipped: return "skipped";
    case CellStatus::failed: return "failed";
    }
    return "failed";
}

bool PartitionReport::split_recommended(double confidence) const {
    return test && test->rejects(confidence);
}

PartitionReport evaluate_partition(const ModelSpec& spec, const Dataset& dataset,
                                   const std::set<Dimension>& dims,
                                   const PartitionOptions& options) {
    const auto cells = partition(dataset, dims);
    const std::size_t k = build_layout(spec).size();

    PartitionReport report;
    report.dims = dims;
    report.min_cell_size = options.min_cell_size.value_or(30 * k);
    report.pooled = estimate(spec, dataset, options.estimation);

    if (cells.size() == 1) {
        report.test_unavailable_reason = "partition has a single cell";
        return report;
    }

    for (const auto& [key, cell] : cells) {
        CellReport c;
        c.key = key;
        c.size = cell.size();
        if (c.size < report.min_cell_size) {
            c.status = CellStatus::skipped;
            c.reason = "cell has " + std::to_string(c.size) + " observations, minimum is " +
                       std::to_string(report.min_cell_size);
        }
        report.cells.push_back(std::move(c));
    }
    if (std::all_of(report.cells.begin(), report.cells.end(),
                    [](const CellReport& c) { return c.status == CellStatus::skipped; }))
        throw EmptyPartition("every cell of the partition is below the minimum cell size of " +
                             std::to_string(report.min_cell_size));

    auto fit = [&](const Dataset& cell) { return estimate(spec, cell, options.estimation); };
    std::vector<std::future<EstimationResult>> jobs;
    std::size_t idx = 0;
    for (const auto& [key, cell] : cells) {
        const auto policy = options.parallel ? std::launch::async : std::launch::deferred;
        if (report.cells[idx++].status == CellStatus::estimated)
            jobs.push_back(std::async(policy, fit, std::cref(cell)));
        else
            jobs.emplace_back();
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (!jobs[i].valid()) continue;
        try {
            report.cells[i].result = jobs[i].get();
        } catch (const Error& e) {
            report.cells[i].status = CellStatus::failed;
            report.cells[i].reason = e.what();
        }
    }

    std::vector<SubsetFit> fits;
    for (const auto& c : report.cells) {
        if (c.status != CellStatus::estimated) {
            report.test_unavailable_reason =
                "cell " + c.key.label() + " was " + std::string(to_string(c.status)) +
                "; the split test would only cover a subset of the data";
            return report;
        }
        fits.push_back({c.result->ll_converged, c.result->num_parameters()});
    }
    report.test = lr_split_test(report.pooled.ll_converged, report.pooled.num_parameters(), fits,
                                options.confidence_levels);
    return report;
}

TemporalReport evaluate_temporal(const ModelSpec& spec, const Dataset& dataset,
                                 const std::string& period_a, const std::string& period_b,
                                 const EstimationOptions& options,
                                 const std::vector<double>& confidence_levels) {
    if (period_a == period_b) throw InvalidArgument("temporal test needs two distinct periods");
    std::vector<Observation> both, a, b;
    for (const auto& obs : dataset.observations()) {
        if (!obs.period) continue;
        if (*obs.period == period_a) a.push_back(obs);
        else if (*obs.period == period_b) b.push_back(obs);
        else continue;
        both.push_back(obs);
    }
    if (a.empty() || b.empty())
        throw InvalidArgument("temporal test needs observations in both periods '" + period_a +
                              "' and '" + period_b + "'");
    TemporalReport report;
    report.period_a = period_a;
    report.period_b = period_b;
    report.combined = estimate(spec, dataset.with_observations(std::move(both)), options);
    report.first = estimate(spec, dataset.with_observations(std::move(a)), options);
    report.second = estimate(spec, dataset.with_observations(std::move(b)), options);
    report.test = lr_temporal_test(report.combined.ll_converged, report.first.ll_converged,
                                   report.second.ll_converged, report.combined.num_parameters(),
                                   report.first.num_parameters(), report.second.num_parameters(),
                                   confidence_levels);
    return report;
}

} // namespace crashsev
