#include <koblab/errors.hpp>
#include <koblab/plan.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

using namespace koblab;
namespace fs = std::filesystem;

namespace {

const char* kDiscDistance = R"({"domain":{"kind":"unitdisc","params":{},"dimension":1},
  "experiment":"distance","points":{"z":[[0,0]],"w":[[0.5,0]]},"seed":11})";

std::string field_of(const std::string& text, const std::optional<std::string>& e = {}) {
    try {
        parse_plan(text, e);
    } catch (const ParseError& err) {
        return err.field();
    }
    return "<parsed>";
}

fs::path scratch(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("koblab_plan_test_" + name);
    fs::remove_all(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Plan, MinimalDiscDistanceDefaults) {
    const auto p = parse_plan(kDiscDistance);
    EXPECT_EQ(p.experiment, "distance");
    EXPECT_EQ(p.seed, 11u);
    EXPECT_DOUBLE_EQ(p.grid.h, 0.02);
    EXPECT_EQ(p.grid.m, 4);
    EXPECT_DOUBLE_EQ(p.sequences.rate, 0.5);
    EXPECT_EQ(p.sequences.count, 8);
    EXPECT_EQ(p.lambda, (std::vector<double>{1.0, 1.5, 2.0}));
    EXPECT_EQ(p.ladder, (std::vector<double>{0.5, 0.2, 0.05}));
    EXPECT_EQ(p.point("w"), (ComplexPoint{cplx(0.5)}));
}

TEST(Plan, TwoDimensionalDefaultStep) {
    const auto p = parse_plan(R"({"domain":{"kind":"polydisc","params":{"radii":[1.0,1.0]},"dimension":2},
        "experiment":"distance","points":{"z":[0,0],"w":[0.5,0.3]},"seed":0})");
    EXPECT_DOUBLE_EQ(p.grid.h, 0.08);
    EXPECT_EQ(p.point("w"), (ComplexPoint{0.5, 0.3}));
}

TEST(Plan, FieldPathsOnErrors) {
    const std::string sarkar = R"({"domain":{"kind":"unitdisc"},"experiment":"sarkar","points":{"p":[1]},)";
    EXPECT_EQ(field_of(sarkar + R"("radii":{"U":0.3,"V":0.3},"seed":1})"), "radii.V");
    EXPECT_EQ(field_of(sarkar + R"("radii":{"U":0.3,"V":0.5},"seed":1})"), "radii.V");
    EXPECT_EQ(field_of(sarkar + R"("radii":{"U":0.6},"seed":1})"), "radii.V");
    EXPECT_EQ(field_of(sarkar + R"("radii":{"U":0.6,"V":0.3}})"), "seed");
    EXPECT_EQ(field_of(R"({"domain":{"kind":"puncturedexample"},"experiment":"visibility",
        "points":{"p":[0,0],"q":[0.5,2]},"seed":1})"), "grid.box_radius");
    EXPECT_EQ(field_of(R"({"domain":{"kind":"ellipsoid"},"experiment":"metric","seed":1})"), "domain.kind");
    EXPECT_EQ(field_of(R"({"domain":{"kind":"unitdisc"},"experiment":"curvature","seed":1})"), "experiment");
    EXPECT_EQ(field_of(R"({"domain":{"kind":"unitdisc"},"experiment":"royden","radii":{"U":0.5},"seed":1})"),
              "points.p");
    EXPECT_EQ(field_of(R"({"domain":{"kind":"unitdisc"},"experiment":"royden","points":{"p":[0.5]},
        "radii":{"U":0.5},"seed":1})"), "points.p");  // not a boundary point
    EXPECT_EQ(field_of(R"({"domain":{"kind":"unitdisc"},"experiment":"distance","points":{"z":[0],"w":[2]},
        "seed":1})"), "points.w");
    EXPECT_EQ(field_of(R"({"domain":{"kind":"unitdisc"},"experiment":"metric","seed":1,"extra":0})"), "extra");
    EXPECT_EQ(field_of(R"({"domain":{"kind":"discofradius","params":{"radius":-1}},"experiment":"metric",
        "points":{"z":[0],"v":[1]},"seed":1})"), "domain.params");
    EXPECT_EQ(field_of(R"({"domain":{"kind":"ball","params":{"center":[0,0],"radius":1},"dimension":3},
        "experiment":"metric","seed":1})"), "domain.dimension");
    EXPECT_EQ(field_of(R"({"domain":{"kind":"unitdisc"},"experiment":"distance","points":{"z":[0,0],"w":[0]},
        "seed":1})"), "points.z");
    EXPECT_EQ(field_of("{not json"), "$");
}

TEST(Plan, ExperimentFromCommandLine) {
    const std::string text = R"({"domain":{"kind":"unitdisc"},"points":{"z":[0],"w":[0.5]},"seed":2})";
    EXPECT_EQ(field_of(text), "experiment");
    EXPECT_EQ(parse_plan(text, std::string("distance")).experiment, "distance");
    EXPECT_EQ(field_of(kDiscDistance, std::string("geodesic")), "experiment");
}

TEST(Plan, RoundTripIsLossless) {
    const char* texts[] = {
        kDiscDistance,
        R"({"domain":{"kind":"product","params":{"first":{"kind":"discofradius","params":{"radius":0.7}},
            "second":{"kind":"annulus","params":{"inner":0.1,"outer":1.3}}}},"experiment":"geodesic",
            "points":{"z":[[0.1,0.2],[0.5,0.1]],"w":[0,[-0.3,0.4]]},"grid":{"h":0.1,"node_budget":50000},
            "lambda":[1,1.25],"seed":18446744073709551615,"out":"runs/x"})",
        R"({"domain":{"kind":"ball","params":{"center":[0,0],"radius":1},"compare":{"kind":"ballintersection",
            "params":{"base":{"kind":"halfspaceintersection","params":{"faces":[{"normal":[-1,0,0,0],"offset":0.5}]},
            "dimension":2},"ball":{"center":[0,0],"radius":1}}}},"experiment":"germ","points":{"p":[1,0]},
            "radii":{"U":0.3},"grid":{"h":0.25},"sequences":{"count":3,"mesh":2,"exponents":[2,1]},"seed":4})",
        R"({"domain":{"kind":"puncturedexample"},"experiment":"hyperbolicity","points":{"p":[0,0]},
            "radii":{"U":0.5,"V":0.2,"W":0.1},"grid":{"box_radius":200},
            "sequences":{"explicit":[[[0.01,0],[0.01,10]],[[0.0001,0],[0.0001,100]]]},"seed":9})",
    };
    for (const char* t : texts) {
        const auto once = parse_plan(t).to_json();
        const auto twice = parse_plan(once.dump()).to_json();
        EXPECT_EQ(once, twice);
        EXPECT_EQ(once.dump(), twice.dump());
    }
    EXPECT_EQ(parse_plan(texts[1]).seed, 18446744073709551615ULL);
}

TEST(Run, DiscDistanceNearOracle) {
    const auto b = run_plan(parse_plan(kDiscDistance));
    ASSERT_EQ(b.reports.size(), 1u);
    const double oracle = std::atanh(0.5);
    EXPECT_NEAR(b.reports[0].statistics["graph_distance"].get<double>(), oracle, 0.03 * oracle);
    EXPECT_EQ(b.reports[0].verdict, verdict::holds);
    ASSERT_EQ(b.graphs.size(), 1u);
    EXPECT_GT(b.graphs[0]["node_count"].get<std::size_t>(), 0u);
}

TEST(Run, SarkarReportsConstant) {
    const auto b = run_plan(parse_plan(R"({"domain":{"kind":"unitdisc"},"experiment":"sarkar",
        "points":{"p":[1]},"radii":{"U":0.6,"V":0.3},"sequences":{"samples":60},"seed":5})"));
    ASSERT_EQ(b.reports.size(), 1u);
    EXPECT_NEAR(b.reports[0].statistics["C"].get<double>(), 1.0 / std::tanh(0.3), 1e-12);
    EXPECT_NE(b.reports[0].verdict, verdict::violated);
}

TEST(Run, ErrorsCarryContext) {
    auto plan = parse_plan(kDiscDistance);
    plan.grid.node_budget = 10;
    try {
        run_plan(plan);
        FAIL() << "expected a grid error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("distance on unitdisc"), std::string::npos);
    }
}

TEST(Emit, AdditiveSurveyFiles) {
    const auto plan = parse_plan(R"({"domain":{"kind":"unitdisc"},"experiment":"additive","points":{"p":[1]},
        "radii":{"U":0.6,"V":0.3},"grid":{"h":0.04},"sequences":{"pairs":60},"seed":3})");
    const auto dir = scratch("additive");
    const auto files = emit_reports(run_plan(plan), dir);
    ASSERT_GE(files.size(), 2u);
    EXPECT_EQ(files[0], "summary.json");
    EXPECT_EQ(files[1], "additive-3-0.csv");
    const auto csv = slurp(dir / "additive-3-0.csv");
    EXPECT_EQ(csv.rfind("pair_id,", 0), 0u);
    EXPECT_NE(csv.find("dist_full_upper"), std::string::npos);
    EXPECT_EQ(csv.find('\r'), std::string::npos);
    const auto summary = Json::parse(slurp(dir / "summary.json"));
    EXPECT_EQ(summary["reports"][0]["files"][0]["file"], "additive-3-0.csv");
    EXPECT_FALSE(summary["plan"].contains("out"));
}

TEST(Emit, EmptyBundleWritesSummaryOnly) {
    ReportBundle b;
    b.experiment = "metric";
    const auto dir = scratch("empty");
    EXPECT_EQ(emit_reports(b, dir), std::vector<std::string>{"summary.json"});
    EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator()), 1);
}

TEST(Emit, UnwritableDirectory) {
    const auto dir = scratch("blocked");
    fs::create_directories(dir);
    std::ofstream(dir / "file") << "x";
    ReportBundle b;
    EXPECT_THROW(emit_reports(b, dir / "file" / "sub"), IoError);
}

TEST(Emit, RerunIsByteIdentical) {
    const auto plan = parse_plan(R"({"domain":{"kind":"unitdisc"},"experiment":"visibility",
        "points":{"p":[1],"q":[-1]},"grid":{"h":0.04},"sequences":{"count":4,"pair_budget":16},"seed":21})");
    const auto a = scratch("rerun_a"), b = scratch("rerun_b");
    const auto fa = emit_reports(run_plan(plan), a);
    const auto fb = emit_reports(run_plan(plan), b);
    ASSERT_EQ(fa, fb);
    EXPECT_GT(fa.size(), 2u);  // summary, table and curve dumps
    for (const auto& f : fa) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Emit, ViolationIsFlagged) {
    const auto plan = parse_plan(R"({"domain":{"kind":"puncturedexample"},"experiment":"hyperbolicity",
        "points":{"p":[0,0]},"radii":{"U":0.5,"V":0.2},"grid":{"box_radius":200},
        "sequences":{"explicit":[[[0.01,0],[0.01,10]],[[0.0001,0],[0.0001,100]]]},"seed":9})");
    EXPECT_TRUE(run_plan(plan).any_violated());
}
