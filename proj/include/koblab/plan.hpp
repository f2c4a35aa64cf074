#pragma once

// Experiment plans: JSON parsing with defaults, dispatch to the suites and report emission.

#include <koblab/visibility.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace koblab {

/// Experiments understood by the runner, in documentation order.
const std::vector<std::string>& experiment_names();

DomainSpec domain_from_json(const Json& doc, const std::string& path = "domain");
Json domain_to_json(const DomainSpec& spec);

struct PlanGrid {
    double h = 0.0;                      // 0 before defaults: 0.02 for n = 1, 0.08 for n = 2
    std::optional<double> box_radius;
    double margin = 0.25;
    int m = 4;
    std::size_t node_budget = 300000;
    double sample_spacing = 0.0;         // survey sample lattice; default 2h
    bool refine = false;                 // surveys: rerun at h/2 and compare sup statistics
    bool override_budget = false;        // set from the command line, never serialized
};

struct PlanSequences {
    int count = 8;
    double rate = 0.5;
    double t0 = 0.5;
    std::size_t samples = 100;           // royden / sarkar samples
    std::size_t pairs = 400;             // survey pairs and length-localization curves
    std::size_t pair_budget = 64;        // certificate pairs per curve
    std::size_t mesh = 16;               // pair-visibility targets
    std::vector<double> exponents;       // per-coordinate approach rates (default all 1)
    PointPairs explicit_pairs;           // replaces generated sequences
};

struct ExperimentPlan {
    DomainSpec domain = DomainSpec::unit_disc();
    std::optional<DomainSpec> compare;   // germ: second domain, domain.compare in the document
    std::string experiment;
    std::map<std::string, ComplexPoint> points;  // p, q, o, z, w, v, interior
    std::vector<ComplexPoint> targets;           // weak-gromov boundary targets
    std::optional<double> U, V, W;
    PlanGrid grid;
    PlanSequences sequences;
    std::vector<double> lambda{1.0, 1.5, 2.0};
    std::vector<double> ladder{0.5, 0.2, 0.05};
    std::uint64_t seed = 0;
    std::string out;

    const ComplexPoint& point(const std::string& key) const;
    GridParams grid_params() const;
    /// Canonical document with every default written out; reparsing it gives the same document.
    Json to_json() const;
};

/// Validates and fills defaults. Errors are ParseError carrying the offending field path.
/// `experiment` (from the command line) fills a missing plan.experiment and must match a present one.
ExperimentPlan parse_plan(std::string_view text, const std::optional<std::string>& experiment = {});
ExperimentPlan load_plan(const std::filesystem::path& file, const std::optional<std::string>& experiment = {});

struct ReportBundle {
    std::string experiment;
    std::uint64_t seed = 0;
    Json plan = Json::object();
    std::vector<Json> graphs;  // summaries of the graphs that were built
    std::vector<ExperimentReport> reports;

    bool any_violated() const;
};

/// Builds the graphs the experiment needs once and runs it. Suite errors are rethrown with
/// the experiment name prefixed, keeping their type.
ReportBundle run_plan(const ExperimentPlan& plan);

/// summary.json plus one CSV per table and per curve, named {experiment}-{seed}-{index}.csv.
/// Returns the written file names (summary.json first).
std::vector<std::string> emit_reports(const ReportBundle& bundle, const std::filesystem::path& dir);

}  // namespace koblab
