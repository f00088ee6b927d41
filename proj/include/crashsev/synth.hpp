#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "crashsev/data_model.hpp"
#include "crashsev/model_spec.hpp"

namespace crashsev {

/// Name of the pseudorandom generator behind simulate(); written into emitted files.
inline constexpr std::string_view kGeneratorName = "mt19937_64";

namespace dist {
struct Constant {
    double value = 0.0;
};
struct Uniform {
    double low = 0.0;
    double high = 1.0;
};
struct Categorical {
    std::vector<double> values;
    std::vector<double> probabilities;
};
struct Indicator {
    double p = 0.5;
};
} // namespace dist

using CovariateDistribution =
    std::variant<dist::Constant, dist::Uniform, dist::Categorical, dist::Indicator>;

struct MixtureComponent {
    SegmentKey segment;
    double weight = 1.0;
    /// Replaces the generator's true theta for observations in this segment.
    std::optional<Eigen::VectorXd> theta;
};

struct GeneratorConfig {
    ModelSpec spec;
    /// Coefficients in build_layout(spec) order.
    Eigen::VectorXd true_theta;
    std::size_t n = 1;
    /// Covariates are emitted (and drawn) in name order.
    std::map<std::string, CovariateDistribution> covariates{};
    std::vector<MixtureComponent> segment_mixture{};
    std::optional<std::string> period{};
    std::uint64_t seed = 0;
};

/// Throws ConfigError describing the first problem found.
void validate(const GeneratorConfig& config);

/// Draws a dataset from the MNL process described by `config`. Covariates first
/// (segment, then each variable in name order), then the outcome by inverse CDF
/// over the outcome probabilities in index order. Bit-identical for equal seeds.
Dataset simulate(const GeneratorConfig& config);

/// Constants that make a constants-only model reproduce `shares` exactly:
/// theta_i = ln(share_i / share_0) for i >= 1.
Eigen::VectorXd constants_from_shares(std::span<const double> shares);

/// Uniform double in [0, 1) from the top 53 bits of one generator output.
double uniform01(std::mt19937_64& rng);

} // namespace crashsev
