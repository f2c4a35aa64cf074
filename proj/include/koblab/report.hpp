#pragma once

// Experiment reports: verdict, parameters, summary statistics and per-sample tables.

#include <koblab/curve.hpp>

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace koblab {

using Json = nlohmann::ordered_json;

/// JSON number, or the strings "inf" / "-inf" / "nan" for non-finite values.
Json json_num(double x);
Json json_point(CSpan z);

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void write_csv(std::ostream& os) const;
};

/// Column names re_<p>1, im_<p>1, ... and the matching cells.
void point_columns(std::vector<std::string>& cols, const std::string& prefix, std::size_t n);
void point_cells(std::vector<std::string>& row, CSpan z);

namespace verdict {
inline constexpr const char* holds = "holds";
inline constexpr const char* holds_with_slack = "holds-with-slack";
inline constexpr const char* violated = "violated";
inline constexpr const char* inconclusive = "inconclusive";
inline constexpr const char* visible = "visible-evidence";
inline constexpr const char* non_visible = "non-visible-evidence";
}  // namespace verdict

struct ExperimentReport {
    std::string name;
    std::string verdict = verdict::inconclusive;
    Json parameters = Json::object();
    Json statistics = Json::object();
    std::size_t samples = 0;
    double slack_budget = 0.0;
    std::vector<Table> tables;
    std::vector<Curve> curves;
    std::vector<std::string> notes;

    Json to_json() const;
};

/// Tally for one-sided inequality checks. A sample is a sound violation when the conservative
/// margin is below -slack; it is strict when the certified margin is >= 0.
struct InequalityTally {
    std::size_t samples = 0;
    std::size_t strict = 0;
    std::size_t sound_violations = 0;
    double worst_margin = kInfinity;

    void add(double conservative_margin, double certified_margin, double slack);
    std::string verdict() const;
};

}  // namespace koblab
