#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crashsev/data_model.hpp"
#include "crashsev/model_spec.hpp"
#include "crashsev/synth.hpp"

namespace crashsev::fixtures {

inline constexpr std::size_t kInjury = 1;
inline constexpr std::size_t kFatality = 2;

inline Observation obs(std::vector<double> x, std::size_t outcome, SegmentKey seg = {},
                       std::optional<std::string> period = std::nullopt) {
    Observation o;
    o.covariates = std::move(x);
    o.outcome = outcome;
    o.segment = seg;
    o.period = std::move(period);
    return o;
}

/// constant[injury], constant[fatality], speed_limit[injury,fatality] (shared),
/// rural[injury], rural[fatality], age[fatality]: six parameters.
inline ModelSpec six_parameter_spec() {
    return ModelSpec(OutcomeSet(), {{"constant", {kInjury, kFatality}, false},
                                    {"speed_limit", {kInjury, kFatality}, true},
                                    {"rural", {kInjury, kFatality}, false},
                                    {"age", {kFatality}, false}});
}

/// Layout order: constant[injury], constant[fatality], age[fatality],
/// rural[injury], rural[fatality], speed_limit[injury,fatality].
inline Eigen::VectorXd six_parameter_theta() {
    Eigen::VectorXd t(6);
    t << -2.0, -6.0, 0.02, 0.3, 0.8, 0.025;
    return t;
}

inline GeneratorConfig six_parameter_generator(std::size_t n, std::uint64_t seed) {
    GeneratorConfig g{.spec = six_parameter_spec(), .true_theta = six_parameter_theta()};
    g.n = n;
    g.seed = seed;
    g.covariates = {{"age", dist::Uniform{16.0, 85.0}},
                    {"rural", dist::Indicator{0.4}},
                    {"speed_limit", dist::Uniform{25.0, 70.0}}};
    return g;
}

/// Unshared constants and an unshared speed-limit slope on both non-base outcomes.
inline ModelSpec speed_spec() {
    return ModelSpec(OutcomeSet(), {{"constant", {kInjury, kFatality}, false},
                                    {"speed_limit", {kInjury, kFatality}, false}});
}

inline GeneratorConfig speed_generator(std::size_t n, std::uint64_t seed) {
    GeneratorConfig g{.spec = speed_spec(), .true_theta = Eigen::VectorXd(4)};
    // constant[injury], constant[fatality], speed_limit[injury], speed_limit[fatality]
    g.true_theta << -2.0, -5.0, 0.02, 0.04;
    g.n = n;
    g.seed = seed;
    g.covariates = {{"speed_limit", dist::Uniform{25.0, 70.0}}};
    return g;
}

} // namespace crashsev::fixtures
