#pragma once

#include <optional>
#include <string>

#include <json.hpp>

namespace epimail {

/// Machine-readable outcome of one CLI query.
struct Verdict {
    std::string command;
    std::string query;
    /// Absent for reports that are not yes/no answers (ei, ig, report).
    std::optional<bool> value;
    /// "exact", "exact-via-procedure" or "bounded".
    std::string mode = "exact";
    nlohmann::json witness = nlohmann::json::object();
    nlohmann::json details = nlohmann::json::object();
    std::optional<double> timing_ms;

    friend bool operator==(const Verdict&, const Verdict&) = default;
};

inline void to_json(nlohmann::json& j, const Verdict& v) {
    j = nlohmann::json{{"command", v.command}, {"query", v.query}, {"mode", v.mode},
                       {"witness", v.witness}, {"details", v.details}};
    j["value"] = v.value ? nlohmann::json(*v.value) : nlohmann::json(nullptr);
    if (v.timing_ms) j["timing_ms"] = *v.timing_ms;
}

inline void from_json(const nlohmann::json& j, Verdict& v) {
    j.at("command").get_to(v.command);
    j.at("query").get_to(v.query);
    j.at("mode").get_to(v.mode);
    v.witness = j.at("witness");
    v.details = j.at("details");
    v.value = j.at("value").is_null() ? std::nullopt : std::optional<bool>(j.at("value").get<bool>());
    v.timing_ms = j.contains("timing_ms") ? std::optional<double>(j.at("timing_ms").get<double>()) : std::nullopt;
}

}  // namespace epimail
