#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "crashsev/estimator.hpp"
#include "crashsev/inference.hpp"

namespace crashsev::report {

// Structured records: one self-describing JSON object per result.

nlohmann::json estimate_record(const std::string& segment, const ModelSpec& spec,
                               const EstimationResult& result);
nlohmann::json elasticity_record(const std::string& segment, const ElasticityReport& report);
nlohmann::json lr_test_record(const std::string& kind, const LRTestResult& test);
nlohmann::json cell_record(const CellReport& cell, const ModelSpec& spec);
nlohmann::json severity_record(const SeverityTable& table);

/// Serializes records as JSON lines.
std::string to_records(const std::vector<nlohmann::json>& records);

// Text tables.

std::string estimate_table(const std::string& segment, const ModelSpec& spec,
                           const EstimationResult& result);

/// One row of the segment x outcome elasticity summary.
struct ElasticityRow {
    std::string segment;
    const ElasticityReport* report = nullptr;
    /// Shown instead of values when the segment could not be estimated.
    std::string note;
};

/// Segment rows x {parameter (t-ratio) per non-base outcome, elasticity per
/// non-base outcome}; most severe outcome first, blanks where a parameter is
/// insignificant or absent.
std::string elasticity_table(const std::vector<ElasticityRow>& rows, const OutcomeSet& outcomes);

std::string lr_test_table(const std::string& title, const LRTestResult& test);

/// Speed-limit bands x outcome shares, one row per band (and period).
std::string severity_table(const SeverityTable& table);

/// Column-aligned text from rows of cells; the first `header_rows` rows are
/// followed by a rule.
std::string render_columns(const std::vector<std::vector<std::string>>& rows,
                           std::size_t header_rows);

/// printf-style "%.3g"
std::string sig3(double v);

} // namespace crashsev::report
