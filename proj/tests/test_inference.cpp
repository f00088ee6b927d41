#include <doctest.h>

#include <cmath>

#include "crashsev/errors.hpp"
#include "crashsev/inference.hpp"
#include "crashsev/likelihood.hpp"
#include "crashsev/synth.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace crashsev;
using fixtures::kFatality;
using fixtures::kInjury;
using fixtures::obs;

namespace {

EstimationResult fixed_result(const ModelSpec& spec, Eigen::VectorXd theta, Eigen::VectorXd t) {
    EstimationResult r;
    r.converged = true;
    r.theta_hat = ParameterVector{build_layout(spec), std::move(theta)};
    r.t_ratios = std::move(t);
    return r;
}

GeneratorConfig two_segment_generator(std::size_t n, std::uint64_t seed, double shift) {
    auto g = fixtures::speed_generator(n, seed);
    Eigen::VectorXd other = g.true_theta;
    other[2] += shift;  // speed_limit[injury]
    g.segment_mixture = {
        {{RoadClass::county_road, Location::rural, AccidentType::one_vehicle}, 0.5, std::nullopt},
        {{RoadClass::interstate, Location::rural, AccidentType::one_vehicle}, 0.5, other},
    };
    return g;
}

} // namespace

TEST_CASE("point elasticity") {
    CHECK(elasticity_point(1.0, 0.5, 60.0) == 0.0);
    CHECK(std::abs(elasticity_point(1.0 - 1e-12, 0.5, 60.0)) < 1e-10);
    CHECK(elasticity_point(0.3, 0.0, 60.0) == 0.0);
    CHECK(elasticity_point(0.5, 0.0396, 55.0) == doctest::Approx(1.089).epsilon(1e-12));
}

TEST_CASE("elasticity report of one observation is its point elasticity") {
    const auto spec = fixtures::speed_spec();
    Dataset d(OutcomeSet(), {"speed_limit"}, {obs({55.0}, 1)});
    Eigen::VectorXd theta(4), t(4);
    theta << -1.0, -4.0, 0.03, 0.05;
    t << 5, 5, 5, 5;
    const auto r = fixed_result(spec, theta, t);
    const auto rep = elasticity_report(spec, r, d);
    const auto p = oracle::probabilities(spec, theta, d, 0);
    const auto* inj = rep.find("speed_limit", kInjury);
    const auto* fat = rep.find("speed_limit", kFatality);
    REQUIRE(inj);
    REQUIRE(fat);
    CHECK(*inj->value == doctest::Approx((1 - p[1]) * 0.03 * 55.0).epsilon(1e-12));
    CHECK(*fat->value == doctest::Approx((1 - p[2]) * 0.05 * 55.0).epsilon(1e-12));
    CHECK(inj->kind == ElasticityKind::elasticity);
    CHECK(rep.entries.size() == 2);
}

TEST_CASE("analytic elasticity equals the finite-difference definition") {
    const auto spec = fixtures::speed_spec();
    const auto data = simulate(fixtures::speed_generator(400, 21));
    const auto result = estimate(spec, data);
    ElasticityOptions opts;
    opts.keep_per_observation = true;
    opts.significance_threshold = 0.0;
    const auto rep = elasticity_report(spec, result, data, opts);
    const auto& layout = result.theta_hat.layout;
    for (const auto& e : rep.entries) {
        REQUIRE(e.per_observation.size() == data.size());
        const double beta = e.estimate;
        for (std::size_t r = 0; r < data.size(); ++r) {
            const double x = data.value(r, e.variable);
            const double h = 1e-4 * std::abs(x);
            auto prob = [&](double dx) {
                auto u = oracle::utilities(spec, result.theta_hat.values, data, r);
                u[e.outcome] += beta * dx;
                double denom = 0;
                for (double v : u) denom += std::exp(v);
                return std::exp(u[e.outcome]) / denom;
            };
            const double fd = (prob(h) - prob(-h)) / (2 * h) * x / prob(0.0);
            CHECK(std::abs(e.per_observation[r] - fd) <= 1e-6 * std::abs(fd));
        }
        (void)layout;
    }
}

TEST_CASE("significance gating and aggregation") {
    const auto spec = fixtures::speed_spec();
    const auto data = simulate(fixtures::speed_generator(300, 22));
    Eigen::VectorXd theta(4), t(4);
    theta << -2.0, -5.0, 0.02, 0.04;
    t << 10, 10, 2.5, 1.5;  // speed_limit[fatality] insignificant
    const auto r = fixed_result(spec, theta, t);
    const auto rep = elasticity_report(spec, r, data);
    const auto* fat = rep.find("speed_limit", kFatality);
    const auto* inj = rep.find("speed_limit", kInjury);
    CHECK_FALSE(fat->significant);
    CHECK_FALSE(fat->value.has_value());
    CHECK(inj->significant);
    REQUIRE(inj->value.has_value());
    CHECK(rep.find("constant", kInjury) == nullptr);

    double mean = 0, weighted = 0, weights = 0;
    for (std::size_t row = 0; row < data.size(); ++row) {
        const auto p = oracle::probabilities(spec, theta, data, row);
        const double e = (1 - p[1]) * 0.02 * data.value(row, "speed_limit");
        mean += e;
        weighted += p[1] * e;
        weights += p[1];
    }
    CHECK(*inj->value == doctest::Approx(mean / data.size()).epsilon(1e-12));

    ElasticityOptions pw;
    pw.aggregation = Aggregation::prob_weighted;
    const auto rep2 = elasticity_report(spec, r, data, pw);
    CHECK(*rep2.find("speed_limit", kInjury)->value == doctest::Approx(weighted / weights).epsilon(1e-12));
    CHECK(rep2.aggregation == Aggregation::prob_weighted);

    ElasticityOptions strict;
    strict.significance_threshold = 3.0;
    const auto rep3 = elasticity_report(spec, r, data, strict);
    CHECK_FALSE(rep3.find("speed_limit", kInjury)->value.has_value());

    CHECK_THROWS_AS(elasticity_report(spec, r, data, {}, std::string("age")), InvalidArgument);
    CHECK(elasticity_report(spec, r, data, {}, std::string("speed_limit")).entries.size() == 2);
}

TEST_CASE("indicators get a labelled pseudo-elasticity") {
    const ModelSpec spec(OutcomeSet(), {{"constant", {kInjury, kFatality}, false},
                                        {"wet", {kInjury}, false}});
    Dataset d(OutcomeSet(), {"wet"}, {obs({1.0}, 1), obs({0.0}, 0)});
    Eigen::VectorXd theta(3), t(3);
    theta << -1.0, -3.0, 0.7;  // constant[injury], constant[fatality], wet[injury]
    t << 5, 5, 5;
    const auto rep = elasticity_report(spec, fixed_result(spec, theta, t), d);
    const auto* e = rep.find("wet", kInjury);
    REQUIRE(e);
    CHECK(e->kind == ElasticityKind::pseudo_elasticity);
    const double p0 = std::exp(-1.0) / (1 + std::exp(-1.0) + std::exp(-3.0));
    const double p1 = std::exp(-0.3) / (1 + std::exp(-0.3) + std::exp(-3.0));
    CHECK(*e->value == doctest::Approx((p1 - p0) / p0).epsilon(1e-12));
    CHECK(is_indicator(d, "wet"));
}

TEST_CASE("chi-square survival function") {
    for (int df : {1, 2, 3, 10}) CHECK(chi_square_sf(0.0, df) == 1.0);
    CHECK(std::abs(chi_square_sf(2.0, 2) - std::exp(-1.0)) < 1e-15);
    CHECK(std::abs(chi_square_sf(3.841, 1) - oracle::chi_square_sf_quadrature(3.841, 1)) < 1e-10);
    CHECK(chi_square_sf(3.841, 1) == doctest::Approx(0.0500).epsilon(1e-3));
    CHECK_THROWS_AS(chi_square_sf(1.0, 0), InvalidArgument);
    CHECK_THROWS_AS(chi_square_sf(-1.0, 2), InvalidArgument);
    CHECK(chi_square_sf(std::numeric_limits<double>::infinity(), 3) == 0.0);
}

TEST_CASE("property: chi-square tail monotonicity") {
    for (int df = 1; df <= 30; ++df) {
        double prev = 1.0;
        for (double x = 0.25; x < 80; x += 0.25) {
            const double p = chi_square_sf(x, df);
            CHECK(p <= prev);
            prev = p;
            if (x > df + 1) CHECK(chi_square_sf(x, df + 1) >= p);
        }
    }
}

TEST_CASE("split test") {
    auto none = lr_split_test(-100.0, 3, {{-60.0, 3}, {-40.0, 3}});
    CHECK(none.statistic == 0.0);
    CHECK(none.p_value == 1.0);
    for (const auto& [level, reject] : none.reject_at) CHECK_FALSE(reject);
    CHECK(none.reject_at.size() == 3);

    auto r = lr_split_test(-100.0, 5, {{-55.0, 5}, {-40.0, 5}});
    CHECK(r.df == 5);
    CHECK(r.statistic == doctest::Approx(10.0));
    CHECK(r.p_value == doctest::Approx(chi_square_sf(10.0, 5)));
    CHECK(r.rejects(0.90));
    CHECK_FALSE(r.rejects(0.99));

    auto unequal = lr_split_test(-100.0, 4, {{-50.0, 4}, {-45.0, 3}, {-1.0, 2}});
    CHECK(unequal.df == 5);

    CHECK_THROWS_AS(lr_split_test(-100.0, 3, {{-100.0, 3}}), InvalidArgument);
    CHECK_THROWS_AS(lr_split_test(-100.0, 3, {{-60.0, 3}, {-41.0, 3}}), InconsistencyError);
    CHECK_NOTHROW(lr_split_test(-100.0, 3, {{-60.0, 3}, {-40.000000001, 3}}));
}

TEST_CASE("temporal test") {
    auto same = lr_temporal_test(-80.0, -50.0, -30.0, 4, 4, 4);
    CHECK(same.statistic == 0.0);
    CHECK(same.df == 4);
    for (const auto& [level, reject] : same.reject_at) CHECK_FALSE(reject);
    CHECK(same.reject_at.contains(0.70));
    auto shifted = lr_temporal_test(-80.0, -40.0, -30.0, 4, 4, 4);
    CHECK(shifted.statistic == doctest::Approx(20.0));
    CHECK(shifted.rejects(0.99));
    CHECK_THROWS_AS(lr_temporal_test(-80.0, -50.0, -30.0, 8, 4, 4), InvalidArgument);
    CHECK_THROWS_AS(lr_temporal_test(-80.0, -51.0, -30.0, 4, 4, 4), InconsistencyError);
}

TEST_CASE("single-cell partition reports the pooled model only") {
    const auto spec = fixtures::speed_spec();
    const auto data = simulate(fixtures::speed_generator(1000, 30));
    const auto rep = evaluate_partition(spec, data, {Dimension::road_class});
    CHECK(rep.cells.empty());
    CHECK_FALSE(rep.test.has_value());
    CHECK(rep.pooled.converged);
    CHECK_FALSE(rep.test_unavailable_reason.empty());
}

TEST_CASE("distinct segments warrant a split") {
    const auto spec = fixtures::speed_spec();
    const auto data = simulate(two_segment_generator(6000, 31, 0.04));
    const auto rep = evaluate_partition(spec, data, {Dimension::road_class});
    REQUIRE(rep.test.has_value());
    CHECK(rep.cells.size() == 2);
    CHECK(rep.test->df == 4);
    CHECK(rep.split_recommended(0.95));
    double sum = 0;
    for (const auto& c : rep.cells) sum += c.result->ll_converged;
    CHECK(rep.test->statistic == doctest::Approx(-2 * (rep.pooled.ll_converged - sum)).epsilon(1e-12));
}

TEST_CASE("common segments rarely warrant a split") {
    const auto spec = fixtures::speed_spec();
    int rejections = 0;
    const int reps = 40;
    for (int i = 0; i < reps; ++i) {
        PartitionOptions opts;
        opts.parallel = (i % 2 == 0);
        const auto rep = evaluate_partition(
            spec, simulate(two_segment_generator(2000, 1000 + i, 0.0)), {Dimension::road_class}, opts);
        REQUIRE(rep.test.has_value());
        rejections += rep.split_recommended(0.95);
    }
    CHECK(rejections <= 6);
}

TEST_CASE("small or failing cells make the test unavailable") {
    const auto spec = fixtures::speed_spec();
    auto g = two_segment_generator(1000, 40, 0.0);
    g.segment_mixture[0].weight = 0.95;
    g.segment_mixture[1].weight = 0.05;
    const auto data = simulate(g);
    const auto rep = evaluate_partition(spec, data, {Dimension::road_class});
    CHECK_FALSE(rep.test.has_value());
    CHECK(rep.min_cell_size == 120);
    bool skipped = false;
    for (const auto& c : rep.cells) skipped = skipped || c.status == CellStatus::skipped;
    CHECK(skipped);

    PartitionOptions huge;
    huge.min_cell_size = 5000;
    CHECK_THROWS_AS(evaluate_partition(spec, data, {Dimension::road_class}, huge), EmptyPartition);

    // A cell with no fatalities cannot be estimated.
    auto rows = data.observations();
    for (auto& o : rows)
        if (o.segment.road_class == RoadClass::interstate && o.outcome == kFatality) o.outcome = 0;
    PartitionOptions small;
    small.min_cell_size = 10;
    const auto failed = evaluate_partition(spec, data.with_observations(rows), {Dimension::road_class}, small);
    CHECK_FALSE(failed.test.has_value());
    bool any_failed = false;
    for (const auto& c : failed.cells)
        if (c.status == CellStatus::failed) {
            any_failed = true;
            CHECK_FALSE(c.reason.empty());
        }
    CHECK(any_failed);
}

TEST_CASE("temporal evaluation on two same-model periods") {
    const auto spec = fixtures::speed_spec();
    auto a = fixtures::speed_generator(3000, 50);
    a.period = "2004";
    auto b = fixtures::speed_generator(3000, 51);
    b.period = "2006";
    auto rows = simulate(a).observations();
    const auto second = simulate(b).observations();
    rows.insert(rows.end(), second.begin(), second.end());
    const auto data = simulate(a).with_observations(rows);
    const auto rep = evaluate_temporal(spec, data, "2004", "2006");
    CHECK(rep.test.df == 4);
    CHECK(rep.combined.num_observations == 6000);
    CHECK(rep.test.statistic == doctest::Approx(-2 * (rep.combined.ll_converged - rep.first.ll_converged -
                                                      rep.second.ll_converged)));
    CHECK_THROWS_AS(evaluate_temporal(spec, data, "2004", "2005"), InvalidArgument);
}
