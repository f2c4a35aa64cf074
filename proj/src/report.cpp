#include <koblab/csv.hpp>
#include <koblab/report.hpp>

#include <cmath>
#include <ostream>

namespace koblab {

Json json_num(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

Json json_point(CSpan z) {
    Json a = Json::array();
    for (const auto& c : z) a.push_back(Json::array({json_num(c.real()), json_num(c.imag())}));
    return a;
}

void Table::write_csv(std::ostream& os) const {
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
    os << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << '\n';
    }
}

void point_columns(std::vector<std::string>& cols, const std::string& prefix, std::size_t n) {
    for (std::size_t j = 1; j <= n; ++j) {
        cols.push_back("re_" + prefix + std::to_string(j));
        cols.push_back("im_" + prefix + std::to_string(j));
    }
}

void point_cells(std::vector<std::string>& row, CSpan z) {
    for (const auto& c : z) {
        row.push_back(fmt_num(c.real()));
        row.push_back(fmt_num(c.imag()));
    }
}

Json ExperimentReport::to_json() const {
    Json j;
    j["name"] = name;
    j["verdict"] = verdict;
    j["samples"] = samples;
    j["slack_budget"] = json_num(slack_budget);
    j["parameters"] = parameters;
    j["statistics"] = statistics;
    j["notes"] = notes;
    return j;
}

void InequalityTally::add(double conservative_margin, double certified_margin, double slack) {
    ++samples;
    if (conservative_margin < -slack) ++sound_violations;
    if (certified_margin >= 0.0) ++strict;
    worst_margin = std::min(worst_margin, conservative_margin);
}

std::string InequalityTally::verdict() const {
    if (samples == 0) return verdict::inconclusive;
    if (sound_violations > 0) return verdict::violated;
    return strict == samples ? verdict::holds : verdict::holds_with_slack;
}

}  // namespace koblab
