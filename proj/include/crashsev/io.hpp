#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "crashsev/data_model.hpp"
#include "crashsev/model_spec.hpp"
#include "crashsev/synth.hpp"

namespace crashsev {

/// CSV ingestion. Required columns: outcome, road_class, location, accident_type.
/// Optional: period, weight. Every other column is a numeric covariate. Lines
/// starting with '#' and blank lines are skipped. Throws IngestionError listing
/// every offending line.
Dataset read_csv(std::istream& in, const OutcomeSet& outcomes = {});
Dataset ingest_csv(const std::filesystem::path& path, const OutcomeSet& outcomes = {});

/// Writes a dataset in the ingestion schema. Doubles use the shortest
/// representation that reads back exactly. `comments` become leading '#' lines.
void write_csv(std::ostream& out, const Dataset& dataset,
               const std::vector<std::string>& comments = {});

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// Model spec document:
///   {"outcomes": ["property_damage_only", "injury", "fatality"],
///    "terms": [{"variable": "speed_limit", "outcomes": ["injury", "fatality"], "shared": true}]}
/// Throws SpecError.
ModelSpec parse_model_spec(const nlohmann::json& doc);
ModelSpec load_model_spec(const std::filesystem::path& path);
nlohmann::json to_json(const ModelSpec& spec);

/// Generator document with keys model, theta (slot label -> value), n, seed,
/// covariates, and optional segments and period. Throws ConfigError.
GeneratorConfig parse_generator_config(const nlohmann::json& doc);
GeneratorConfig load_generator_config(const std::filesystem::path& path);

/// Coefficients keyed by slot label, e.g. {"speed_limit[injury,fatality]": 0.04}.
Eigen::VectorXd parse_theta(const nlohmann::json& doc, const ModelSpec& spec);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace crashsev
