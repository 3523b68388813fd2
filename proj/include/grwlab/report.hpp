#pragma once

// Reports: an ordered JSON document plus an optional per-trial table.
// Floating-point values are written with 17 significant digits so that a
// report read back reproduces every double exactly.

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace grwlab {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

inline std::string format_double(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    // keep a marker that this is a float
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

namespace detail {

inline void write_string(std::ostream& os, const std::string& s) {
    // nlohmann's escaping, without the surrounding document machinery
    os << Json(s).dump();
}

inline void write_json(std::ostream& os, const Json& j, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ",\n";
                first = false;
                os << pad;
                write_string(os, it.key());
                os << ": ";
                write_json(os, it.value(), indent, depth + 1);
            }
            os << "\n" << close_pad << "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            bool scalars = true;
            for (const auto& e : j) scalars = scalars && !e.is_structured();
            if (scalars) {
                os << "[";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) os << ", ";
                    write_json(os, j[i], indent, depth + 1);
                }
                os << "]";
                return;
            }
            os << "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) os << ",\n";
                os << pad;
                write_json(os, j[i], indent, depth + 1);
            }
            os << "\n" << close_pad << "]";
            return;
        }
        case Json::value_t::number_float:
            os << format_double(j.get<double>());
            return;
        default:
            os << j.dump();
    }
}

}  // namespace detail

inline std::string to_json_text(const Json& j, int indent = 2) {
    std::ostringstream os;
    detail::write_json(os, j, indent, 0);
    os << "\n";
    return os.str();
}

/// Per-trial table; cells are preformatted strings.
struct TrialTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    bool empty() const { return header.empty(); }

    void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }

    std::string to_csv() const {
        std::ostringstream os;
        auto line = [&os](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
            os << "\n";
        };
        line(header);
        for (const auto& r : rows) line(r);
        return os.str();
    }
};

inline std::string cell(double v) { return format_double(v); }
inline std::string cell(std::size_t v) { return std::to_string(v); }
inline std::string cell(int v) { return std::to_string(v); }
inline std::string cell(const std::string& s) { return s; }
inline std::string cell(const char* s) { return s; }

struct ExperimentReport {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    Json config = Json::object();
    Json results = Json::object();
    TrialTable trials;
    std::optional<double> wall_time_seconds;

    Json to_json() const {
        Json j;
        j["schema_version"] = kSchemaVersion;
        j["scenario"] = scenario;
        j["seed"] = seed ? Json(*seed) : Json(nullptr);
        j["config"] = config;
        j["results"] = results;
        j["trial_count"] = trials.rows.size();
        if (wall_time_seconds) j["wall_time_seconds"] = *wall_time_seconds;
        return j;
    }

    std::string json_text() const { return to_json_text(to_json()); }
};

}  // namespace grwlab
