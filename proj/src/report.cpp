#include "crashsev/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace crashsev::report {

using nlohmann::json;

namespace {

std::string printf_string(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

std::string percent(double share) { return printf_string("%.1f%%", 100.0 * share); }

std::string level_label(double c) { return printf_string("%g%%", 100.0 * c); }

json outcome_labels(const OutcomeSet& outcomes, const std::vector<std::size_t>& idx) {
    json out = json::array();
    for (std::size_t i : idx) out.push_back(outcomes.label(i));
    return out;
}

} // namespace

std::string sig3(double v) { return printf_string("%.3g", v); }

std::string render_columns(const std::vector<std::vector<std::string>>& rows,
                           std::size_t header_rows) {
    std::vector<std::size_t> width;
    for (const auto& row : rows) {
        if (width.size() < row.size()) width.resize(row.size(), 0);
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::size_t total = 0;
    for (std::size_t w : width) total += w + 2;
    total = total >= 2 ? total - 2 : 0;

    std::string out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::string line;
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            line += rows[r][c];
            if (c + 1 < rows[r].size()) line.append(width[c] - rows[r][c].size() + 2, ' ');
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + '\n';
        if (r + 1 == header_rows) out += std::string(total, '-') + '\n';
    }
    return out;
}

json estimate_record(const std::string& segment, const ModelSpec& spec,
                     const EstimationResult& result) {
    const auto& layout = result.theta_hat.layout;
    json params = json::array();
    for (std::size_t k = 0; k < layout.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        const auto& slot = layout.slot(k);
        params.push_back({{"slot", k},
                          {"label", layout.label(k, spec.outcome_set())},
                          {"variable", slot.variable},
                          {"outcomes", outcome_labels(spec.outcome_set(), slot.outcomes)},
                          {"shared", slot.shared},
                          {"estimate", result.theta_hat.values[kk]},
                          {"std_error", result.standard_errors[kk]},
                          {"t_ratio", result.t_ratios[kk]}});
    }
    const auto fit = fit_statistics(result);
    return {{"record", "estimate"},
            {"segment", segment},
            {"n", result.num_observations},
            {"num_parameters", result.num_parameters()},
            {"converged", result.converged},
            {"iterations", result.iterations},
            {"ll_converged", result.ll_converged},
            {"ll_null", result.ll_null},
            {"ll_zero", result.ll_zero},
            {"rho_squared", fit.rho_squared},
            {"adjusted_rho_squared", fit.adjusted_rho_squared},
            {"aic", fit.aic},
            {"bic", fit.bic},
            {"condition_number", result.condition_number},
            {"parameters", params},
            {"diagnostics", result.diagnostics}};
}

json elasticity_record(const std::string& segment, const ElasticityReport& report) {
    json entries = json::array();
    for (const auto& e : report.entries) {
        json j{{"variable", e.variable},
               {"outcome", report.outcomes.label(e.outcome)},
               {"slot", e.slot},
               {"shared", e.shared},
               {"estimate", e.estimate},
               {"t_ratio", e.t_ratio},
               {"significant", e.significant},
               {"kind", to_string(e.kind)},
               {"value", e.value ? json(*e.value) : json(nullptr)}};
        if (!e.per_observation.empty()) j["per_observation"] = e.per_observation;
        entries.push_back(std::move(j));
    }
    return {{"record", "elasticities"},
            {"segment", segment},
            {"aggregation", to_string(report.aggregation)},
            {"significance_threshold", report.significance_threshold},
            {"entries", entries}};
}

json lr_test_record(const std::string& kind, const LRTestResult& test) {
    json reject = json::object();
    for (const auto& [level, r] : test.reject_at) reject[printf_string("%g", level)] = r;
    return {{"record", "lr_test"},
            {"test", kind},
            {"statistic", test.statistic},
            {"df", test.df},
            {"p_value", test.p_value},
            {"reject_at", reject},
            {"ll_restricted", test.ll_restricted},
            {"ll_unrestricted", test.ll_unrestricted}};
}

json cell_record(const CellReport& cell, const ModelSpec& spec) {
    json j{{"record", "cell"},
           {"segment", cell.key.label()},
           {"n", cell.size},
           {"status", to_string(cell.status)},
           {"reason", cell.reason}};
    if (cell.result) j["estimate"] = estimate_record(cell.key.label(), spec, *cell.result);
    return j;
}

json severity_record(const SeverityTable& table) {
    json bands = json::array();
    for (const auto& b : table.bands) {
        bands.push_back({{"label", b.label()},
                         {"lower", b.lower ? json(*b.lower) : json(nullptr)},
                         {"upper", b.upper ? json(*b.upper) : json(nullptr)},
                         {"period", b.period ? json(*b.period) : json(nullptr)},
                         {"total", b.total},
                         {"counts", b.counts},
                         {"shares", b.total ? json(b.shares) : json(nullptr)}});
    }
    return {{"record", "severity_distribution"},
            {"speed_variable", table.speed_variable},
            {"edges", table.edges},
            {"outcomes", table.outcome_labels},
            {"bands", bands}};
}

std::string to_records(const std::vector<json>& records) {
    std::string out;
    for (const auto& r : records) out += r.dump() + '\n';
    return out;
}

std::string estimate_table(const std::string& segment, const ModelSpec& spec,
                           const EstimationResult& result) {
    const auto& layout = result.theta_hat.layout;
    std::ostringstream os;
    os << "Model: " << segment << " (n = " << result.num_observations
       << ", K = " << result.num_parameters() << ")\n";
    std::vector<std::vector<std::string>> rows{{"Parameter", "Estimate", "Std. error", "t-ratio"}};
    for (std::size_t k = 0; k < layout.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        rows.push_back({layout.label(k, spec.outcome_set()),
                        printf_string("%.6g", result.theta_hat.values[kk]),
                        printf_string("%.6g", result.standard_errors[kk]),
                        printf_string("%.2f", result.t_ratios[kk])});
    }
    os << render_columns(rows, 1);
    const auto fit = fit_statistics(result);
    std::vector<std::vector<std::string>> summary{
        {"Log-likelihood at convergence", printf_string("%.4f", result.ll_converged)},
        {"Log-likelihood, constants only", printf_string("%.4f", result.ll_null)},
        {"Log-likelihood at zero", printf_string("%.4f", result.ll_zero)},
        {"rho-squared", printf_string("%.4f", fit.rho_squared)},
        {"adjusted rho-squared", printf_string("%.4f", fit.adjusted_rho_squared)},
        {"Iterations", std::to_string(result.iterations)},
    };
    os << render_columns(summary, 0);
    for (const auto& d : result.diagnostics) os << "warning: " << d << '\n';
    return os.str();
}

std::string elasticity_table(const std::vector<ElasticityRow>& rows, const OutcomeSet& outcomes) {
    std::vector<std::size_t> order;
    for (std::size_t i = outcomes.size() - 1; i >= 1; --i) order.push_back(i);

    std::vector<std::string> top{"Model", "Variable", "Parameter estimate (t-ratio)"};
    std::vector<std::string> sub{"", ""};
    for (std::size_t j = 0; j < order.size(); ++j) {
        sub.push_back(display_label(outcomes.label(order[j])));
        if (j > 0) top.push_back("");
    }
    for (std::size_t i : order) {
        top.push_back(display_label(outcomes.label(i)) + " Elasticity");
        sub.push_back("");
    }
    std::vector<std::vector<std::string>> table{top, sub};

    bool any_pseudo = false;
    std::string aggregation;
    std::string threshold;
    for (const auto& row : rows) {
        if (!row.report) {
            std::vector<std::string> line{row.segment, row.note};
            table.push_back(line);
            continue;
        }
        aggregation = std::string(to_string(row.report->aggregation));
        threshold = printf_string("%g", row.report->significance_threshold);
        std::vector<std::string> variables;
        for (const auto& e : row.report->entries)
            if (std::find(variables.begin(), variables.end(), e.variable) == variables.end())
                variables.push_back(e.variable);
        if (variables.empty()) table.push_back({row.segment, "(no covariates)"});
        for (std::size_t v = 0; v < variables.size(); ++v) {
            std::vector<std::string> line{v == 0 ? row.segment : "", variables[v]};
            for (std::size_t i : order) {
                const auto* e = row.report->find(variables[v], i);
                line.push_back(e ? sig3(e->estimate) + printf_string("(%.2f)", e->t_ratio) : "");
            }
            for (std::size_t i : order) {
                const auto* e = row.report->find(variables[v], i);
                std::string cell;
                if (e && e->value) {
                    cell = sig3(*e->value);
                    if (e->kind == ElasticityKind::pseudo_elasticity) {
                        cell += '*';
                        any_pseudo = true;
                    }
                }
                line.push_back(cell);
            }
            table.push_back(std::move(line));
        }
    }
    std::string out = render_columns(table, 2);
    if (!aggregation.empty())
        out += "Elasticities: " + aggregation + " over observations, shown where |t-ratio| > " +
               threshold + ".\n";
    if (any_pseudo)
        out += "* pseudo-elasticity: relative change in the outcome probability when the "
               "indicator flips from 0 to 1.\n";
    return out;
}

std::string lr_test_table(const std::string& title, const LRTestResult& test) {
    std::vector<std::vector<std::string>> rows{
        {"Statistic", printf_string("%.4f", test.statistic)},
        {"Degrees of freedom", std::to_string(test.df)},
        {"p-value", printf_string("%.4g", test.p_value)},
    };
    for (const auto& [level, r] : test.reject_at)
        rows.push_back({"Reject null at " + level_label(level), r ? "yes" : "no"});
    return title + '\n' + render_columns(rows, 0);
}

std::string severity_table(const SeverityTable& table) {
    std::vector<std::string> top{"Speed limit", "Injury Severity Level"};
    std::vector<std::string> sub{""};
    for (std::size_t i = 0; i < table.outcome_labels.size(); ++i) {
        sub.push_back(display_label(table.outcome_labels[i]));
        if (i > 0) top.push_back("");
    }
    std::vector<std::vector<std::string>> rows{top, sub};
    for (const auto& b : table.bands) {
        std::vector<std::string> line{b.label()};
        for (std::size_t i = 0; i < table.outcome_labels.size(); ++i)
            line.push_back(b.total ? percent(b.shares[i]) : "-");
        rows.push_back(std::move(line));
    }
    return render_columns(rows, 2);
}

} // namespace crashsev::report
