#include "crashsev/data_model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <sstream>
#include <utility>

#include "crashsev/errors.hpp"

namespace crashsev {

namespace {

constexpr std::array<std::pair<RoadClass, std::string_view>, 6> kRoadClasses{{
    {RoadClass::county_road, "county_road"},
    {RoadClass::city_street, "city_street"},
    {RoadClass::state_route, "state_route"},
    {RoadClass::us_route, "us_route"},
    {RoadClass::interstate, "interstate"},
    {RoadClass::other, "other"},
}};

constexpr std::array<std::pair<Location, std::string_view>, 3> kLocations{{
    {Location::rural, "rural"},
    {Location::urban, "urban"},
    {Location::other, "other"},
}};

constexpr std::array<std::pair<AccidentType, std::string_view>, 7> kAccidentTypes{{
    {AccidentType::one_vehicle, "one-vehicle"},
    {AccidentType::c_c, "C+C"},
    {AccidentType::c_lt, "C+LT"},
    {AccidentType::lt_lt, "LT+LT"},
    {AccidentType::clt_clt, "C/LT+C/LT"},
    {AccidentType::clt_ht, "C/LT+HT"},
    {AccidentType::other, "other"},
}};

constexpr std::array<std::pair<Dimension, std::string_view>, 4> kDimensions{{
    {Dimension::road_class, "road_class"},
    {Dimension::location, "location"},
    {Dimension::accident_type, "accident_type"},
    {Dimension::period, "period"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E v) {
    for (const auto& [e, name] : table)
        if (e == v) return name;
    return "other";
}

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<E, std::string_view>, N>& table,
                        std::string_view s) {
    for (const auto& [e, name] : table)
        if (name == s) return e;
    return std::nullopt;
}

std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

} // namespace

OutcomeSet::OutcomeSet() : labels_{"property_damage_only", "injury", "fatality"} {}

OutcomeSet::OutcomeSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.size() < 2)
        throw InvalidArgument("an outcome set needs at least two outcomes");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i].empty())
            throw InvalidArgument("outcome labels must be non-empty");
        for (std::size_t j = 0; j < i; ++j)
            if (labels_[i] == labels_[j])
                throw InvalidArgument("duplicate outcome label '" + labels_[i] + "'");
    }
}

std::optional<std::size_t> OutcomeSet::index_of(std::string_view label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels_.begin());
}

std::string display_label(std::string_view label) {
    std::string out;
    bool start = true;
    for (char c : label) {
        if (c == '_') {
            out.push_back(' ');
            start = true;
            continue;
        }
        out.push_back(start ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c);
        start = false;
    }
    return out;
}

std::string_view to_string(RoadClass v) { return name_of(kRoadClasses, v); }
std::string_view to_string(Location v) { return name_of(kLocations, v); }
std::string_view to_string(AccidentType v) { return name_of(kAccidentTypes, v); }
std::string_view to_string(Dimension d) { return name_of(kDimensions, d); }
std::optional<RoadClass> parse_road_class(std::string_view s) { return lookup(kRoadClasses, s); }
std::optional<Location> parse_location(std::string_view s) { return lookup(kLocations, s); }
std::optional<AccidentType> parse_accident_type(std::string_view s) {
    return lookup(kAccidentTypes, s);
}
std::optional<Dimension> parse_dimension(std::string_view s) { return lookup(kDimensions, s); }

Dataset::Dataset(OutcomeSet outcomes, std::vector<std::string> variable_names,
                 std::vector<Observation> observations)
    : outcomes_(std::move(outcomes)),
      variable_names_(std::move(variable_names)),
      observations_(std::move(observations)) {
    for (std::size_t i = 0; i < variable_names_.size(); ++i) {
        if (variable_names_[i].empty() || variable_names_[i] == "constant")
            throw SchemaError("invalid covariate name '" + variable_names_[i] + "'");
        for (std::size_t j = 0; j < i; ++j)
            if (variable_names_[i] == variable_names_[j])
                throw SchemaError("duplicate covariate '" + variable_names_[i] + "'");
    }
    for (std::size_t r = 0; r < observations_.size(); ++r) {
        const auto& obs = observations_[r];
        if (obs.covariates.size() != variable_names_.size())
            throw SchemaError("observation " + std::to_string(r) + " has " +
                              std::to_string(obs.covariates.size()) + " covariates, expected " +
                              std::to_string(variable_names_.size()));
        if (obs.outcome >= outcomes_.size())
            throw InvalidArgument("observation " + std::to_string(r) + " has outcome index " +
                                  std::to_string(obs.outcome) + " outside the outcome set");
        if (!(obs.weight > 0.0) || !std::isfinite(obs.weight))
            throw InvalidArgument("observation " + std::to_string(r) +
                                  " has a non-positive weight");
        for (double v : obs.covariates)
            if (!std::isfinite(v))
                throw InvalidArgument("observation " + std::to_string(r) +
                                      " has a non-finite covariate");
    }
}

std::optional<std::size_t> Dataset::column(std::string_view variable) const {
    auto it = std::find(variable_names_.begin(), variable_names_.end(), variable);
    if (it == variable_names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - variable_names_.begin());
}

std::size_t Dataset::require_column(std::string_view variable) const {
    auto c = column(variable);
    if (!c) throw SchemaError("dataset has no covariate '" + std::string(variable) + "'");
    return *c;
}

double Dataset::value(std::size_t row, std::string_view variable) const {
    return observations_.at(row).covariates[require_column(variable)];
}

Dataset Dataset::with_observations(std::vector<Observation> observations) const {
    return Dataset(outcomes_, variable_names_, std::move(observations));
}

std::string CellKey::label() const {
    std::string out;
    auto add = [&](std::string_view k, std::string_view v) {
        if (!out.empty()) out += ',';
        out += k;
        out += '=';
        out += v;
    };
    if (road_class) add("road_class", to_string(*road_class));
    if (location) add("location", to_string(*location));
    if (accident_type) add("accident_type", to_string(*accident_type));
    if (period_selected) add("period", period ? std::string_view(*period) : "<none>");
    return out.empty() ? std::string("all") : out;
}

CellKey project(const Observation& obs, const std::set<Dimension>& dims) {
    CellKey key;
    if (dims.contains(Dimension::road_class)) key.road_class = obs.segment.road_class;
    if (dims.contains(Dimension::location)) key.location = obs.segment.location;
    if (dims.contains(Dimension::accident_type)) key.accident_type = obs.segment.accident_type;
    if (dims.contains(Dimension::period)) {
        key.period_selected = true;
        key.period = obs.period;
    }
    return key;
}

std::map<CellKey, Dataset> partition(const Dataset& dataset, const std::set<Dimension>& dims) {
    if (dims.empty()) throw InvalidArgument("partition needs at least one dimension");
    std::map<CellKey, std::vector<Observation>> cells;
    for (const auto& obs : dataset.observations()) cells[project(obs, dims)].push_back(obs);
    std::map<CellKey, Dataset> out;
    for (auto& [key, rows] : cells) out.emplace(key, dataset.with_observations(std::move(rows)));
    return out;
}

std::string SpeedBand::label() const {
    std::string out = period ? *period + " posted " : std::string("posted ");
    if (!lower && upper) return out + format_number(*upper) + " mi/h or less";
    if (lower && !upper) return out + "over " + format_number(*lower) + " mi/h";
    if (lower && upper)
        return out + "over " + format_number(*lower) + " mi/h to " + format_number(*upper) +
               " mi/h";
    return out + "any speed";
}

SeverityTable summarize(const Dataset& dataset, std::span<const double> edges,
                        std::string_view speed_variable, bool by_period) {
    const std::size_t column = dataset.require_column(speed_variable);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (!std::isfinite(edges[i])) throw InvalidArgument("speed-limit bin edges must be finite");
        if (i > 0 && !(edges[i] > edges[i - 1]))
            throw InvalidArgument("speed-limit bin edges must be strictly increasing");
    }

    const std::size_t n_outcomes = dataset.outcome_set().size();
    const std::size_t n_bands = edges.size() + 1;

    std::vector<std::optional<std::string>> periods;
    if (by_period) {
        std::set<std::optional<std::string>> seen;
        for (const auto& obs : dataset.observations()) seen.insert(obs.period);
        periods.assign(seen.begin(), seen.end());
    } else {
        periods.push_back(std::nullopt);
    }

    SeverityTable table;
    table.outcome_labels = dataset.outcome_set().labels();
    table.speed_variable = std::string(speed_variable);
    table.edges.assign(edges.begin(), edges.end());
    for (std::size_t b = 0; b < n_bands; ++b) {
        for (const auto& p : periods) {
            SpeedBand band;
            if (b > 0) band.lower = edges[b - 1];
            if (b < edges.size()) band.upper = edges[b];
            band.period = p;
            band.counts.assign(n_outcomes, 0);
            table.bands.push_back(std::move(band));
        }
    }

    for (const auto& obs : dataset.observations()) {
        const double speed = obs.covariates[column];
        const auto b = static_cast<std::size_t>(
            std::lower_bound(edges.begin(), edges.end(), speed) - edges.begin());
        std::size_t p = 0;
        if (by_period)
            p = static_cast<std::size_t>(
                std::find(periods.begin(), periods.end(), obs.period) - periods.begin());
        auto& band = table.bands[b * periods.size() + p];
        ++band.counts[obs.outcome];
        ++band.total;
    }

    for (auto& band : table.bands) {
        if (band.total == 0) continue;
        band.shares.reserve(n_outcomes);
        for (std::size_t c : band.counts)
            band.shares.push_back(static_cast<double>(c) / static_cast<double>(band.total));
    }
    return table;
}

} // namespace crashsev
