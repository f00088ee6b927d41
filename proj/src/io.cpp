#include "crashsev/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include "crashsev/errors.hpp"

namespace crashsev {

namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::optional<double> parse_double(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

} // namespace

IngestionError::IngestionError(std::vector<Issue> issues)
    : Error([&] {
          std::string msg = std::to_string(issues.size()) + " ingestion error(s)";
          for (const auto& i : issues) msg += "\n  line " + std::to_string(i.line) + ": " + i.message;
          return msg;
      }()),
      issues_(std::move(issues)) {}

Dataset read_csv(std::istream& in, const OutcomeSet& outcomes) {
    std::vector<IngestionError::Issue> issues;
    std::string line;
    std::size_t line_no = 0;

    std::vector<std::string> header;
    std::size_t header_line = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        for (auto f : split(t)) header.emplace_back(f);
        header_line = line_no;
        break;
    }
    if (header.empty()) throw IngestionError({{line_no, "missing header row"}});

    std::optional<std::size_t> col_outcome, col_road, col_location, col_type, col_period, col_weight;
    std::vector<std::string> variables;
    std::vector<std::size_t> variable_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto& name = header[c];
        std::optional<std::size_t>* slot = nullptr;
        if (name == "outcome") slot = &col_outcome;
        else if (name == "road_class") slot = &col_road;
        else if (name == "location") slot = &col_location;
        else if (name == "accident_type") slot = &col_type;
        else if (name == "period") slot = &col_period;
        else if (name == "weight") slot = &col_weight;
        if (slot) {
            if (*slot) issues.push_back({header_line, "duplicate column '" + name + "'"});
            *slot = c;
            continue;
        }
        if (name.empty() || name == kConstant) {
            issues.push_back({header_line, "invalid covariate column name '" + name + "'"});
            continue;
        }
        if (std::find(variables.begin(), variables.end(), name) != variables.end()) {
            issues.push_back({header_line, "duplicate column '" + name + "'"});
            continue;
        }
        variables.push_back(name);
        variable_cols.push_back(c);
    }
    const std::array<std::pair<const char*, const std::optional<std::size_t>*>, 4> required{{
        {"outcome", &col_outcome},
        {"road_class", &col_road},
        {"location", &col_location},
        {"accident_type", &col_type},
    }};
    for (const auto& [name, col] : required)
        if (!*col) issues.push_back({header_line, std::string("missing required column '") + name + "'"});
    if (!issues.empty()) throw IngestionError(std::move(issues));

    std::vector<Observation> rows;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto fields = split(t);
        if (fields.size() != header.size()) {
            issues.push_back({line_no, "expected " + std::to_string(header.size()) +
                                           " fields, found " + std::to_string(fields.size())});
            continue;
        }
        const std::size_t before = issues.size();
        auto report = [&](std::string msg) { issues.push_back({line_no, std::move(msg)}); };

        Observation obs;
        if (auto o = outcomes.index_of(fields[*col_outcome])) obs.outcome = *o;
        else report("unknown outcome label '" + std::string(fields[*col_outcome]) + "'");
        if (auto v = parse_road_class(fields[*col_road])) obs.segment.road_class = *v;
        else report("unknown road_class '" + std::string(fields[*col_road]) + "'");
        if (auto v = parse_location(fields[*col_location])) obs.segment.location = *v;
        else report("unknown location '" + std::string(fields[*col_location]) + "'");
        if (auto v = parse_accident_type(fields[*col_type])) obs.segment.accident_type = *v;
        else report("unknown accident_type '" + std::string(fields[*col_type]) + "'");
        if (col_period && !fields[*col_period].empty()) obs.period = std::string(fields[*col_period]);
        if (col_weight) {
            auto w = parse_double(fields[*col_weight]);
            if (w && *w > 0.0) obs.weight = *w;
            else report("weight must be a positive number, got '" +
                        std::string(fields[*col_weight]) + "'");
        }
        obs.covariates.reserve(variables.size());
        for (std::size_t j = 0; j < variables.size(); ++j) {
            const auto field = fields[variable_cols[j]];
            if (field.empty()) {
                report("missing value for '" + variables[j] + "'");
                continue;
            }
            if (auto v = parse_double(field)) obs.covariates.push_back(*v);
            else report("non-numeric value '" + std::string(field) + "' for '" + variables[j] + "'");
        }
        if (issues.size() == before) rows.push_back(std::move(obs));
    }
    if (!issues.empty()) throw IngestionError(std::move(issues));
    return Dataset(outcomes, std::move(variables), std::move(rows));
}

Dataset ingest_csv(const std::filesystem::path& path, const OutcomeSet& outcomes) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open data file '" + path.string() + "'");
    return read_csv(in, outcomes);
}

std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

void write_csv(std::ostream& out, const Dataset& dataset, const std::vector<std::string>& comments) {
    for (const auto& c : comments) out << "# " << c << '\n';
    bool has_period = false;
    bool has_weight = false;
    for (const auto& obs : dataset.observations()) {
        has_period = has_period || obs.period.has_value();
        has_weight = has_weight || obs.weight != 1.0;
    }
    out << "outcome,road_class,location,accident_type";
    if (has_period) out << ",period";
    if (has_weight) out << ",weight";
    for (const auto& v : dataset.variable_names()) out << ',' << v;
    out << '\n';
    const auto& outcomes = dataset.outcome_set();
    for (const auto& obs : dataset.observations()) {
        out << outcomes.label(obs.outcome) << ',' << to_string(obs.segment.road_class) << ','
            << to_string(obs.segment.location) << ',' << to_string(obs.segment.accident_type);
        if (has_period) out << ',' << obs.period.value_or("");
        if (has_weight) out << ',' << format_double(obs.weight);
        for (double x : obs.covariates) out << ',' << format_double(x);
        out << '\n';
    }
}

ModelSpec parse_model_spec(const json& doc) {
    try {
        if (!doc.is_object()) throw SpecError("model spec must be a JSON object");
        OutcomeSet outcomes;
        if (doc.contains("outcomes"))
            outcomes = OutcomeSet(doc.at("outcomes").get<std::vector<std::string>>());
        if (!doc.contains("terms") || !doc.at("terms").is_array())
            throw SpecError("model spec needs a 'terms' array");
        std::vector<TermSpec> terms;
        for (const auto& t : doc.at("terms")) {
            TermSpec term;
            term.variable = t.at("variable").get<std::string>();
            term.shared = t.value("shared", false);
            for (const auto& label : t.at("outcomes").get<std::vector<std::string>>()) {
                auto i = outcomes.index_of(label);
                if (!i) throw SpecError("term '" + term.variable + "' references unknown outcome '" +
                                        label + "'");
                term.outcomes.push_back(*i);
            }
            terms.push_back(std::move(term));
        }
        return ModelSpec(std::move(outcomes), std::move(terms));
    } catch (const json::exception& e) {
        throw SpecError(std::string("malformed model spec: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw SpecError(std::string("malformed model spec: ") + e.what());
    }
}

ModelSpec load_model_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model spec '" + path.string() + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw SpecError("model spec '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_model_spec(doc);
}

json to_json(const ModelSpec& spec) {
    const auto& outcomes = spec.outcome_set();
    json terms = json::array();
    for (const auto& t : spec.terms()) {
        json labels = json::array();
        for (std::size_t i : t.outcomes) labels.push_back(outcomes.label(i));
        terms.push_back({{"variable", t.variable}, {"outcomes", labels}, {"shared", t.shared}});
    }
    return {{"outcomes", outcomes.labels()}, {"terms", terms}};
}

Eigen::VectorXd parse_theta(const json& doc, const ModelSpec& spec) {
    const auto layout = build_layout(spec);
    Eigen::VectorXd theta(static_cast<Eigen::Index>(layout.size()));
    if (doc.is_array()) {
        const auto values = doc.get<std::vector<double>>();
        if (values.size() != layout.size())
            throw ConfigError("theta array has " + std::to_string(values.size()) +
                              " entries, the model has " + std::to_string(layout.size()));
        for (std::size_t k = 0; k < values.size(); ++k) theta[static_cast<Eigen::Index>(k)] = values[k];
        return theta;
    }
    if (!doc.is_object()) throw ConfigError("theta must be an object keyed by slot label");
    for (const auto& [key, _] : doc.items()) {
        bool known = false;
        for (std::size_t k = 0; k < layout.size(); ++k)
            known = known || layout.label(k, spec.outcome_set()) == key;
        if (!known) throw ConfigError("theta names unknown slot '" + key + "'");
    }
    for (std::size_t k = 0; k < layout.size(); ++k) {
        const auto label = layout.label(k, spec.outcome_set());
        if (!doc.contains(label)) throw ConfigError("theta is missing slot '" + label + "'");
        theta[static_cast<Eigen::Index>(k)] = doc.at(label).get<double>();
    }
    return theta;
}

namespace {

CovariateDistribution parse_distribution(const std::string& name, const json& d) {
    const auto type = d.at("type").get<std::string>();
    if (type == "constant") return dist::Constant{d.at("value").get<double>()};
    if (type == "uniform") return dist::Uniform{d.at("low").get<double>(), d.at("high").get<double>()};
    if (type == "categorical")
        return dist::Categorical{d.at("values").get<std::vector<double>>(),
                                 d.at("probabilities").get<std::vector<double>>()};
    if (type == "indicator") return dist::Indicator{d.at("p").get<double>()};
    throw ConfigError("covariate '" + name + "' has unknown distribution type '" + type + "'");
}

} // namespace

GeneratorConfig parse_generator_config(const json& doc) {
    try {
        ModelSpec spec = parse_model_spec(doc.at("model"));
        GeneratorConfig config{.spec = spec, .true_theta = parse_theta(doc.at("theta"), spec)};
        config.n = doc.at("n").get<std::size_t>();
        config.seed = doc.value("seed", std::uint64_t{0});
        if (doc.contains("period")) config.period = doc.at("period").get<std::string>();
        for (const auto& [name, d] : doc.at("covariates").items())
            config.covariates.emplace(name, parse_distribution(name, d));
        if (doc.contains("segments")) {
            for (const auto& s : doc.at("segments")) {
                MixtureComponent c;
                auto road = parse_road_class(s.value("road_class", std::string("other")));
                auto loc = parse_location(s.value("location", std::string("other")));
                auto type = parse_accident_type(s.value("accident_type", std::string("other")));
                if (!road || !loc || !type) throw ConfigError("segment has an unknown category");
                c.segment = {*road, *loc, *type};
                c.weight = s.at("weight").get<double>();
                if (s.contains("theta")) c.theta = parse_theta(s.at("theta"), spec);
                config.segment_mixture.push_back(std::move(c));
            }
        }
        validate(config);
        return config;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed generator config: ") + e.what());
    } catch (const SpecError& e) {
        throw ConfigError(std::string("generator model: ") + e.what());
    }
}

GeneratorConfig load_generator_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open generator config '" + path.string() + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("generator config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_generator_config(doc);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
        out << contents;
        out.flush();
        if (!out) throw ConfigError("failed writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw ConfigError("cannot move report into place at '" + path.string() + "'");
    }
}

} // namespace crashsev
