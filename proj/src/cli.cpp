#include "crashsev/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "crashsev/errors.hpp"
#include "crashsev/io.hpp"
#include "crashsev/report.hpp"
#include "crashsev/synth.hpp"

namespace crashsev::cli {

using nlohmann::json;

std::string_view to_string(Command c) {
    switch (c) {
    case Command::estimate: return "estimate";
    case Command::elasticities: return "elasticities";
    case Command::split_test: return "split-test";
    case Command::temporal_test: return "temporal-test";
    case Command::partition: return "partition";
    case Command::simulate: return "simulate";
    case Command::summarize: return "summarize";
    }
    return "estimate";
}

namespace {

std::string path_string(const std::optional<std::filesystem::path>& p) {
    return p ? p->generic_string() : std::string();
}

void require_readable(const std::optional<std::filesystem::path>& p, const char* what) {
    if (!p) throw ConfigError(std::string("missing required --") + what);
    std::ifstream in(*p);
    if (!in) throw ConfigError(std::string("cannot read ") + what + " file '" + p->string() + "'");
}

// Collects the report under construction in whichever format was requested.
class Output {
public:
    explicit Output(const RunConfig& config) : format_(config.format) {
        const auto header = config_record(config);
        if (format_ == Format::records) records_.push_back(header);
        else text_ << "# config: " << header.dump() << "\n\n";
    }

    void add(json record, const std::string& text) {
        if (format_ == Format::records) records_.push_back(std::move(record));
        else if (!text.empty()) text_ << text << '\n';
    }
    void note(const std::string& text) {
        if (format_ == Format::table) text_ << text << '\n';
    }

    std::string str() const {
        return format_ == Format::records ? report::to_records(records_) : text_.str();
    }

private:
    Format format_;
    std::vector<json> records_;
    std::ostringstream text_;
};

std::vector<double> levels(const RunConfig& config, std::vector<double> fallback) {
    return config.confidence.empty() ? fallback : config.confidence;
}

OutcomeSet outcomes_for(const RunConfig& config, const std::optional<ModelSpec>& spec) {
    if (spec) return spec->outcome_set();
    if (!config.outcome_labels.empty()) return OutcomeSet(config.outcome_labels);
    return OutcomeSet();
}

std::string run_estimate(const RunConfig& config, const ModelSpec& spec, const Dataset& data) {
    Output out(config);
    const auto result = estimate(spec, data, config.estimation);
    out.add(report::estimate_record("all", spec, result), report::estimate_table("all", spec, result));
    return out.str();
}

std::string run_elasticities(const RunConfig& config, const ModelSpec& spec, const Dataset& data) {
    Output out(config);
    ElasticityOptions options{config.aggregation, config.sig_threshold, false};

    std::vector<std::pair<std::string, Dataset>> segments;
    if (config.by.empty()) segments.emplace_back("all", data);
    else
        for (auto& [key, cell] : partition(data, config.by)) segments.emplace_back(key.label(), cell);

    std::vector<ElasticityReport> reports;
    reports.reserve(segments.size());
    std::vector<report::ElasticityRow> rows;
    std::vector<json> records;
    for (const auto& [label, cell] : segments) {
        try {
            const auto result = estimate(spec, cell, config.estimation);
            reports.push_back(elasticity_report(spec, result, cell, options));
            records.push_back(report::estimate_record(label, spec, result));
            records.push_back(report::elasticity_record(label, reports.back()));
            rows.push_back({label, nullptr, ""});
        } catch (const Error& e) {
            if (config.by.empty()) throw;
            rows.push_back({label, nullptr, std::string("estimation failed: ") + e.what()});
            records.push_back({{"record", "elasticities"},
                               {"segment", label},
                               {"error", e.what()}});
        }
    }
    std::size_t r = 0;
    for (auto& row : rows)
        if (row.note.empty()) row.report = &reports[r++];
    for (auto& rec : records) out.add(std::move(rec), "");
    out.note(report::elasticity_table(rows, spec.outcome_set()));
    return out.str();
}

std::string run_partition(const RunConfig& config, const ModelSpec& spec, const Dataset& data,
                          bool full) {
    if (config.by.empty()) throw ConfigError("--by is required");
    PartitionOptions options;
    options.estimation = config.estimation;
    options.min_cell_size = config.min_cell_size;
    options.confidence_levels = levels(config, default_confidence_levels());
    const auto rep = evaluate_partition(spec, data, config.by, options);

    Output out(config);
    char pooled_ll[32];
    std::snprintf(pooled_ll, sizeof pooled_ll, "%.4f", rep.pooled.ll_converged);
    out.add(report::estimate_record("pooled", spec, rep.pooled),
            full ? report::estimate_table("pooled", spec, rep.pooled)
                 : "Pooled model: n = " + std::to_string(rep.pooled.num_observations) +
                       ", LL = " + pooled_ll);
    std::vector<std::vector<std::string>> summary{{"Cell", "n", "Status", "Log-likelihood"}};
    for (const auto& cell : rep.cells) {
        std::string text;
        if (full && cell.result) text = report::estimate_table(cell.key.label(), spec, *cell.result);
        out.add(report::cell_record(cell, spec), text);
        char ll[64] = "";
        if (cell.result) std::snprintf(ll, sizeof ll, "%.4f", cell.result->ll_converged);
        summary.push_back({cell.key.label(), std::to_string(cell.size),
                           std::string(to_string(cell.status)) +
                               (cell.reason.empty() ? "" : " (" + cell.reason + ")"),
                           ll});
    }
    if (!rep.cells.empty()) out.note(report::render_columns(summary, 1));
    if (rep.test) {
        out.add(report::lr_test_record("split", *rep.test),
                report::lr_test_table("Likelihood-ratio split test", *rep.test));
        for (const auto& [level, reject] : rep.test->reject_at)
            out.note(std::string("Separate models ") + (reject ? "warranted" : "not warranted") +
                     " at " + report::sig3(100.0 * level) + "% confidence.");
    } else {
        out.add({{"record", "lr_test"}, {"test", "split"}, {"available", false},
                 {"reason", rep.test_unavailable_reason}},
                "Split test unavailable: " + rep.test_unavailable_reason);
    }
    return out.str();
}

std::string run_temporal(const RunConfig& config, const ModelSpec& spec, const Dataset& data) {
    std::vector<std::string> periods = config.periods;
    if (periods.empty()) {
        std::set<std::string> seen;
        for (const auto& obs : data.observations())
            if (obs.period) seen.insert(*obs.period);
        periods.assign(seen.begin(), seen.end());
    }
    if (periods.size() != 2)
        throw ConfigError("temporal test needs exactly two periods (found " +
                          std::to_string(periods.size()) + "); use --periods A,B");
    const auto rep = evaluate_temporal(spec, data, periods[0], periods[1], config.estimation,
                                       levels(config, temporal_confidence_levels()));
    Output out(config);
    out.add(report::estimate_record("all periods", spec, rep.combined),
            report::estimate_table("all periods", spec, rep.combined));
    out.add(report::estimate_record("period=" + periods[0], spec, rep.first),
            report::estimate_table("period=" + periods[0], spec, rep.first));
    out.add(report::estimate_record("period=" + periods[1], spec, rep.second),
            report::estimate_table("period=" + periods[1], spec, rep.second));
    out.add(report::lr_test_record("temporal", rep.test),
            report::lr_test_table("Likelihood-ratio temporal stability test", rep.test));
    return out.str();
}

std::string run_simulate(const RunConfig& config) {
    auto gen = load_generator_config(*config.generator);
    if (config.seed) gen.seed = *config.seed;
    if (config.n) gen.n = *config.n;
    const auto data = simulate(gen);
    std::ostringstream os;
    write_csv(os, data,
              {"generator=" + std::string(kGeneratorName) + " seed=" + std::to_string(gen.seed) +
                   " n=" + std::to_string(gen.n),
               "config: " + config_record(config).dump()});
    return os.str();
}

std::string run_summarize(const RunConfig& config, const Dataset& data) {
    const auto table = summarize(data, config.bins, config.speed_variable, config.by_period);
    Output out(config);
    out.add(report::severity_record(table), report::severity_table(table));
    return out.str();
}

int report_error(std::ostream& err, const char* kind, const std::exception& e, int code) {
    err << "error (" << kind << "): " << e.what() << '\n';
    return code;
}

} // namespace

json config_record(const RunConfig& config) {
    json by = json::array();
    for (auto d : config.by) by.push_back(to_string(d));
    json options{{"tol", config.estimation.tol},
                 {"rel_ll_tol", config.estimation.rel_ll_tol},
                 {"max_iter", config.estimation.max_iter},
                 {"max_halvings", config.estimation.max_halvings},
                 {"condition_threshold", config.estimation.condition_threshold},
                 {"confidence", config.confidence},
                 {"min_cell_size", config.min_cell_size ? json(*config.min_cell_size) : json("30*K")},
                 {"aggregation", to_string(config.aggregation)},
                 {"sig_threshold", config.sig_threshold},
                 {"seed", config.seed ? json(*config.seed) : json(nullptr)},
                 {"n", config.n ? json(*config.n) : json(nullptr)},
                 {"by", by},
                 {"periods", config.periods},
                 {"bins", config.bins},
                 {"speed_variable", config.speed_variable},
                 {"by_period", config.by_period},
                 {"format", config.format == Format::table ? "table" : "records"}};
    return {{"record", "config"},
            {"command", to_string(config.command)},
            {"data", path_string(config.data)},
            {"spec", path_string(config.spec)},
            {"generator", path_string(config.generator)},
            {"options", options}};
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        // Fail fast on unreadable inputs before any computation.
        const bool needs_spec = config.command != Command::simulate && config.command != Command::summarize;
        if (config.command == Command::simulate) require_readable(config.generator, "config");
        else require_readable(config.data, "data");
        if (needs_spec) require_readable(config.spec, "spec");
        else if (config.spec) require_readable(config.spec, "spec");
        if (config.output) {
            const auto parent = config.output->parent_path();
            if (!parent.empty() && !std::filesystem::is_directory(parent))
                throw ConfigError("output directory '" + parent.string() + "' does not exist");
        }

        std::string text;
        if (config.command == Command::simulate) {
            text = run_simulate(config);
        } else {
            std::optional<ModelSpec> spec;
            if (config.spec) spec = load_model_spec(*config.spec);
            const Dataset data = ingest_csv(*config.data, outcomes_for(config, spec));
            switch (config.command) {
            case Command::estimate: text = run_estimate(config, *spec, data); break;
            case Command::elasticities: text = run_elasticities(config, *spec, data); break;
            case Command::split_test: text = run_partition(config, *spec, data, false); break;
            case Command::partition: text = run_partition(config, *spec, data, true); break;
            case Command::temporal_test: text = run_temporal(config, *spec, data); break;
            case Command::summarize: text = run_summarize(config, data); break;
            case Command::simulate: break;
            }
        }
        if (config.output) write_file_atomic(*config.output, text);
        else out << text;
        return exit_code::success;
    } catch (const NonIdentification& e) {
        return report_error(err, "non-identification", e, exit_code::non_identification);
    } catch (const NonConvergence& e) {
        return report_error(err, "non-convergence", e, exit_code::non_convergence);
    } catch (const IngestionError& e) {
        return report_error(err, "ingestion", e, exit_code::ingestion);
    } catch (const SchemaError& e) {
        return report_error(err, "ingestion", e, exit_code::ingestion);
    } catch (const ConfigError& e) {
        return report_error(err, "config", e, exit_code::config);
    } catch (const SpecError& e) {
        return report_error(err, "config", e, exit_code::config);
    } catch (const InvalidArgument& e) {
        return report_error(err, "config", e, exit_code::config);
    } catch (const EmptyPartition& e) {
        return report_error(err, "config", e, exit_code::config);
    } catch (const std::exception& e) {
        return report_error(err, "failure", e, exit_code::failure);
    }
}

namespace {

template <typename T>
std::vector<T> split_list(const std::string& s, T (*convert)(const std::string&)) {
    std::vector<T> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(convert(item));
    return out;
}

double to_double(const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + s + "'");
    }
    if (pos != s.size()) throw ConfigError("not a number: '" + s + "'");
    return v;
}

std::string identity(const std::string& s) { return s; }

} // namespace

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multinomial-logit injury-severity estimation and likelihood-ratio segmentation tests"};
    app.require_subcommand(1);

    RunConfig config;
    std::string data, spec, generator, output, format = "table", aggregation = "mean";
    std::string confidence, by, periods, bins, outcomes;
    std::size_t min_cell = 0;
    std::uint64_t seed = 0;
    std::size_t n = 0;

    struct Sub {
        Command command;
        const char* description;
    };
    const std::vector<Sub> subs{
        {Command::estimate, "Fit one model by maximum likelihood"},
        {Command::elasticities, "Fit and report elasticities in a segment x outcome table"},
        {Command::split_test, "Likelihood-ratio test for splitting the data by segment"},
        {Command::temporal_test, "Likelihood-ratio test for parameter stability across two periods"},
        {Command::partition, "Per-cell models plus the split test"},
        {Command::simulate, "Generate a synthetic dataset from a known model"},
        {Command::summarize, "Outcome shares by speed-limit band"},
    };
    std::vector<CLI::App*> apps;
    for (const auto& s : subs) {
        auto* sub = app.add_subcommand(std::string(to_string(s.command)), s.description);
        apps.push_back(sub);
        sub->add_option("-o,--output", output, "Report path (written atomically); stdout if omitted");
        if (s.command == Command::simulate) {
            sub->add_option("-c,--config", generator, "Generator config (JSON)")->required();
            sub->add_option("--seed", seed, "Override the generator seed");
            sub->add_option("--n", n, "Override the observation count");
            continue;
        }
        sub->add_option("-d,--data", data, "Input CSV")->required();
        sub->add_option("--format", format, "table | records")
            ->check(CLI::IsMember({"table", "records"}));
        if (s.command == Command::summarize) {
            sub->add_option("--bins", bins, "Speed-limit bin edges, e.g. 30,50,60")->required();
            sub->add_option("--speed-var", config.speed_variable, "Speed-limit column");
            sub->add_flag("--by-period", config.by_period, "Split each band by period");
            sub->add_option("-s,--spec", spec, "Model spec (for its outcome labels)");
            sub->add_option("--outcomes", outcomes, "Outcome labels, base first");
            continue;
        }
        sub->add_option("-s,--spec", spec, "Model spec (JSON)")->required();
        sub->add_option("--tol", config.estimation.tol, "Gradient max-norm tolerance");
        sub->add_option("--max-iter", config.estimation.max_iter, "Iteration cap");
        sub->add_option("--seed", seed, "Recorded in the report");
        if (s.command == Command::elasticities) {
            sub->add_option("--aggregation", aggregation, "mean | prob-weighted")
                ->check(CLI::IsMember({"mean", "prob-weighted"}));
            sub->add_option("--sig-threshold", config.sig_threshold, "|t| cutoff for reporting");
            sub->add_option("--by", by, "Segment rows by road_class,location,accident_type,period");
        }
        if (s.command == Command::split_test || s.command == Command::partition) {
            sub->add_option("--by", by, "Dimensions: road_class,location,accident_type,period")
                ->required();
            sub->add_option("--min-cell-size", min_cell, "Minimum observations per cell (default 30*K)");
            sub->add_option("--confidence", confidence, "Confidence levels, e.g. 0.9,0.95,0.99");
        }
        if (s.command == Command::temporal_test) {
            sub->add_option("--periods", periods, "The two periods, e.g. 2004,2006");
            sub->add_option("--confidence", confidence, "Confidence levels");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_code::success : exit_code::config;
    }

    try {
        for (std::size_t i = 0; i < subs.size(); ++i) {
            auto* sub = apps[i];
            if (!sub->parsed()) continue;
            config.command = subs[i].command;
            auto given = [sub](const char* name) {
                const auto* opt = sub->get_option_no_throw(name);
                return opt != nullptr && opt->count() > 0;
            };
            if (given("--data")) config.data = data;
            if (given("--spec")) config.spec = spec;
            if (given("--config")) config.generator = generator;
            if (given("--output")) config.output = output;
            if (given("--seed")) config.seed = seed;
            if (given("--n")) config.n = n;
            if (given("--min-cell-size")) config.min_cell_size = min_cell;
        }
        config.format = format == "records" ? Format::records : Format::table;
        config.aggregation = *parse_aggregation(aggregation);
        config.confidence = split_list<double>(confidence, to_double);
        config.bins = split_list<double>(bins, to_double);
        config.periods = split_list<std::string>(periods, identity);
        config.outcome_labels = split_list<std::string>(outcomes, identity);
        for (const auto& d : split_list<std::string>(by, identity)) {
            auto dim = parse_dimension(d);
            if (!dim) throw ConfigError("unknown dimension '" + d + "'");
            config.by.insert(*dim);
        }
        for (double c : config.confidence)
            if (!(c > 0.0 && c < 1.0)) throw ConfigError("confidence levels must lie in (0, 1)");
    } catch (const ConfigError& e) {
        err << "error (config): " << e.what() << '\n';
        return exit_code::config;
    }
    return run(config, out, err);
}

} // namespace crashsev::cli
