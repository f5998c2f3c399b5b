#pragma once

#include <iomanip>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lzspa/metrics.hpp"

namespace lzspa {

/// JSON form with the fixed key names machine consumers rely on. Keys for
/// metrics that could not be computed (including fad without embeddings)
/// are omitted rather than filled with placeholders.
inline nlohmann::ordered_json report_to_json(const MetricsReport& report) {
    nlohmann::ordered_json j;
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v) j[key] = *v;
    };
    put("c_pitch", report.c_pitch);
    put("var_pitch", report.var_pitch);
    put("c_duration", report.c_duration);
    put("var_duration", report.var_duration);
    put("wd", report.wd);
    put("kl", report.kl);
    put("fad", report.fad);
    j["n_generated"] = report.n_generated;
    j["n_reference"] = report.n_reference;
    return j;
}

/// Aligned two-column table for humans.
inline std::string report_to_table(const MetricsReport& report) {
    std::ostringstream out;
    auto row = [&](const char* name, const std::optional<double>& v) {
        out << std::left << std::setw(14) << name;
        if (v)
            out << std::right << std::setw(12) << std::fixed << std::setprecision(6) << *v;
        else
            out << std::right << std::setw(12) << "n/a";
        out << '\n';
    };
    row("c_pitch", report.c_pitch);
    row("var_pitch", report.var_pitch);
    row("c_duration", report.c_duration);
    row("var_duration", report.var_duration);
    row("wd", report.wd);
    row("kl", report.kl);
    row("fad", report.fad);
    out << std::left << std::setw(14) << "n_generated" << std::right << std::setw(12)
        << report.n_generated << '\n';
    out << std::left << std::setw(14) << "n_reference" << std::right << std::setw(12)
        << report.n_reference << '\n';
    return out.str();
}

} // namespace lzspa
