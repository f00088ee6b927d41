#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "crashsev/data_model.hpp"
#include "crashsev/estimator.hpp"
#include "crashsev/inference.hpp"

namespace crashsev::cli {

enum class Command { estimate, elasticities, split_test, temporal_test, partition, simulate, summarize };
enum class Format { table, records };

std::string_view to_string(Command c);

namespace exit_code {
inline constexpr int success = 0;
inline constexpr int failure = 1;
inline constexpr int config = 2;
inline constexpr int ingestion = 3;
inline constexpr int non_convergence = 4;
inline constexpr int non_identification = 5;
} // namespace exit_code

struct RunConfig {
    Command command = Command::estimate;
    std::optional<std::filesystem::path> data;
    std::optional<std::filesystem::path> spec;
    std::optional<std::filesystem::path> generator;
    std::optional<std::filesystem::path> output;
    Format format = Format::table;

    EstimationOptions estimation;
    /// Empty means the default ladder of the command.
    std::vector<double> confidence;
    std::optional<std::size_t> min_cell_size;
    Aggregation aggregation = Aggregation::mean;
    double sig_threshold = 1.96;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n;

    std::set<Dimension> by;
    std::vector<std::string> periods;
    std::vector<double> bins;
    std::string speed_variable = "speed_limit";
    bool by_period = false;
    std::vector<std::string> outcome_labels;
};

/// The resolved configuration embedded at the top of every report.
nlohmann::json config_record(const RunConfig& config);

/// Runs one command. Reports go to config.output (written atomically) or to `out`;
/// errors go to `err`. Returns one of the exit codes above.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv and runs. Usage errors map to exit_code::config.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace crashsev::cli
