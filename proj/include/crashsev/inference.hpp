#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crashsev/data_model.hpp"
#include "crashsev/estimator.hpp"
#include "crashsev/model_spec.hpp"

namespace crashsev {

// ---------------------------------------------------------------------------
// Elasticities

/// Percent change in P(i) per 1% change in x_ki: (1 - P(i)) * beta_ki * x_ki.
double elasticity_point(double probability, double beta, double x);

enum class Aggregation { mean, prob_weighted };

std::string_view to_string(Aggregation a);
std::optional<Aggregation> parse_aggregation(std::string_view s);

enum class ElasticityKind {
    /// Closed-form point elasticity.
    elasticity,
    /// Relative change in P(i) when an indicator covariate flips from 0 to 1.
    pseudo_elasticity,
};

std::string_view to_string(ElasticityKind k);

struct ElasticityOptions {
    Aggregation aggregation = Aggregation::mean;
    double significance_threshold = 1.96;
    bool keep_per_observation = false;
};

struct ElasticityEntry {
    std::string variable;
    std::size_t outcome = 0;
    std::size_t slot = 0;
    bool shared = false;
    double estimate = 0.0;
    double t_ratio = 0.0;
    /// |t| above the threshold; insignificant entries carry no elasticity.
    bool significant = false;
    ElasticityKind kind = ElasticityKind::elasticity;
    std::optional<double> value;
    std::vector<double> per_observation;
};

struct ElasticityReport {
    Aggregation aggregation = Aggregation::mean;
    double significance_threshold = 1.96;
    OutcomeSet outcomes;
    /// One entry per (variable, non-base outcome) pair, excluding constants, in
    /// slot order then outcome order.
    std::vector<ElasticityEntry> entries;

    const ElasticityEntry* find(std::string_view variable, std::size_t outcome) const;
};

/// True when every value of the covariate is exactly 0 or 1.
bool is_indicator(const Dataset& dataset, std::string_view variable);

/// Throws InvalidArgument when `variable` is given and absent from the spec.
ElasticityReport elasticity_report(const ModelSpec& spec, const EstimationResult& result,
                                   const Dataset& dataset, const ElasticityOptions& options = {},
                                   const std::optional<std::string>& variable = std::nullopt);

// ---------------------------------------------------------------------------
// Likelihood-ratio tests

/// Upper tail of the chi-square distribution, Q(df/2, x/2).
double chi_square_sf(double x, int df);

/// Confidence ladder applied to every LR test.
std::vector<double> default_confidence_levels();
/// Ladder plus the 0.70 diagnostic level used for temporal tests.
std::vector<double> temporal_confidence_levels();

struct LRTestResult {
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
    std::map<double, bool> reject_at;
    double ll_restricted = 0.0;
    std::vector<double> ll_unrestricted;

    bool rejects(double confidence) const;
};

struct SubsetFit {
    double ll = 0.0;
    std::size_t num_parameters = 0;
};

/// Pooled-versus-segmented test. df = sum K_m - K_pooled.
/// Throws InvalidArgument for M < 2 or df <= 0 and InconsistencyError when the
/// subset log-likelihoods sum to less than the pooled one.
LRTestResult lr_split_test(double ll_pooled, std::size_t k_pooled,
                           const std::vector<SubsetFit>& subsets,
                           const std::vector<double>& confidence_levels = default_confidence_levels());

/// Two-period stability test. df = K_a + K_b - K_all.
LRTestResult lr_temporal_test(double ll_all, double ll_a, double ll_b, std::size_t k_all,
                              std::size_t k_a, std::size_t k_b,
                              const std::vector<double>& confidence_levels = temporal_confidence_levels());

// ---------------------------------------------------------------------------
// Partition evaluation

struct PartitionOptions {
    EstimationOptions estimation;
    /// Minimum cell size; when unset, 30 observations per parameter.
    std::optional<std::size_t> min_cell_size;
    std::vector<double> confidence_levels = default_confidence_levels();
    /// Run per-cell estimations on worker threads.
    bool parallel = true;
};

enum class CellStatus { estimated, skipped, failed };

std::string_view to_string(CellStatus s);

struct CellReport {
    CellKey key;
    std::size_t size = 0;
    CellStatus status = CellStatus::estimated;
    std::string reason;
    std::optional<EstimationResult> result;
};

struct PartitionReport {
    std::set<Dimension> dims;
    std::size_t min_cell_size = 0;
    EstimationResult pooled;
    std::vector<CellReport> cells;
    std::optional<LRTestResult> test;
    /// Why the test is missing, when it is.
    std::string test_unavailable_reason;

    /// Split recommended at the given confidence level.
    bool split_recommended(double confidence) const;
};

/// Fits the pooled model and one model per cell, then runs the split test.
/// The test is only computed when every cell was estimated.
/// Throws EmptyPartition when every cell falls below the size threshold.
PartitionReport evaluate_partition(const ModelSpec& spec, const Dataset& dataset,
                                   const std::set<Dimension>& dims,
                                   const PartitionOptions& options = {});

struct TemporalReport {
    std::string period_a;
    std::string period_b;
    EstimationResult combined;
    EstimationResult first;
    EstimationResult second;
    LRTestResult test;
};

/// Fits the combined model and one model per period and runs the stability test.
TemporalReport evaluate_temporal(const ModelSpec& spec, const Dataset& dataset,
                                 const std::string& period_a, const std::string& period_b,
                                 const EstimationOptions& options = {},
                                 const std::vector<double>& confidence_levels = temporal_confidence_levels());

} // namespace crashsev
