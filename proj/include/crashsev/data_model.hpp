#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace crashsev {

/// Ordered outcome labels. Index 0 is the base outcome whose utility is fixed at zero.
class OutcomeSet {
public:
    /// property_damage_only, injury, fatality
    OutcomeSet();
    explicit OutcomeSet(std::vector<std::string> labels);

    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::string& label(std::size_t i) const { return labels_.at(i); }
    std::optional<std::size_t> index_of(std::string_view label) const;

    bool operator==(const OutcomeSet&) const = default;

private:
    std::vector<std::string> labels_;
};

/// "property_damage_only" -> "Property Damage Only"
std::string display_label(std::string_view label);

enum class RoadClass { county_road, city_street, state_route, us_route, interstate, other };
enum class Location { rural, urban, other };
enum class AccidentType { one_vehicle, c_c, c_lt, lt_lt, clt_clt, clt_ht, other };

std::string_view to_string(RoadClass v);
std::string_view to_string(Location v);
std::string_view to_string(AccidentType v);
std::optional<RoadClass> parse_road_class(std::string_view s);
std::optional<Location> parse_location(std::string_view s);
std::optional<AccidentType> parse_accident_type(std::string_view s);

struct SegmentKey {
    RoadClass road_class = RoadClass::other;
    Location location = Location::other;
    AccidentType accident_type = AccidentType::other;

    auto operator<=>(const SegmentKey&) const = default;
};

/// One accident record. Covariates are positional, aligned with Dataset::variable_names().
struct Observation {
    std::vector<double> covariates;
    std::size_t outcome = 0;
    SegmentKey segment;
    std::optional<std::string> period;
    double weight = 1.0;

    bool operator==(const Observation&) const = default;
};

/// Immutable collection of observations sharing one outcome set and covariate schema.
class Dataset {
public:
    Dataset(OutcomeSet outcomes, std::vector<std::string> variable_names,
            std::vector<Observation> observations);

    const OutcomeSet& outcome_set() const noexcept { return outcomes_; }
    const std::vector<std::string>& variable_names() const noexcept { return variable_names_; }
    const std::vector<Observation>& observations() const noexcept { return observations_; }
    std::size_t size() const noexcept { return observations_.size(); }
    bool empty() const noexcept { return observations_.empty(); }

    std::optional<std::size_t> column(std::string_view variable) const;
    /// Throws SchemaError when the variable is not part of the schema.
    std::size_t require_column(std::string_view variable) const;
    double value(std::size_t row, std::string_view variable) const;

    /// Same schema, different rows.
    Dataset with_observations(std::vector<Observation> observations) const;

    bool operator==(const Dataset&) const = default;

private:
    OutcomeSet outcomes_;
    std::vector<std::string> variable_names_;
    std::vector<Observation> observations_;
};

enum class Dimension { road_class, location, accident_type, period };

std::string_view to_string(Dimension d);
std::optional<Dimension> parse_dimension(std::string_view s);

/// Projection of an observation onto a subset of the segmentation dimensions.
/// Fields outside the projection stay empty.
struct CellKey {
    std::optional<RoadClass> road_class;
    std::optional<Location> location;
    std::optional<AccidentType> accident_type;
    std::optional<std::string> period;
    bool period_selected = false;

    auto operator<=>(const CellKey&) const = default;

    /// e.g. "road_class=county_road,location=rural"
    std::string label() const;
};

CellKey project(const Observation& obs, const std::set<Dimension>& dims);

/// Splits a dataset into disjoint cells keyed by the projection onto `dims`.
std::map<CellKey, Dataset> partition(const Dataset& dataset, const std::set<Dimension>& dims);

struct SpeedBand {
    std::optional<double> lower;  // exclusive
    std::optional<double> upper;  // inclusive
    std::optional<std::string> period;
    std::vector<std::size_t> counts;  // per outcome
    std::size_t total = 0;
    std::vector<double> shares;  // empty when total == 0

    std::string label() const;
};

struct SeverityTable {
    std::vector<std::string> outcome_labels;
    std::string speed_variable;
    std::vector<double> edges;
    std::vector<SpeedBand> bands;
};

/// Outcome shares per speed-limit band. Edges e0 < e1 < ... produce the bands
/// (-inf, e0], (e0, e1], ..., (e_last, inf). With by_period, each band is split
/// further by period label.
SeverityTable summarize(const Dataset& dataset, std::span<const double> edges,
                        std::string_view speed_variable = "speed_limit", bool by_period = false);

} // namespace crashsev
