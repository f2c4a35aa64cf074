#include <koblab/errors.hpp>
#include <koblab/localization.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace koblab;

namespace {

GridParams grid(double h) {
    GridParams p;
    p.h = h;
    return p;
}

const MetricGraph& disc_graph() {
    static const MetricGraph g = build_graph(DomainSpec::unit_disc(), grid(0.02));
    return g;
}

const ComplexPoint kOne{cplx(1.0)};
const Neighborhood kU{ComplexPoint{cplx(1.0)}, 0.6};
const Neighborhood kV{ComplexPoint{cplx(1.0)}, 0.3};

double column(const Table& t, const std::string& name, std::size_t row) {
    for (std::size_t c = 0; c < t.columns.size(); ++c)
        if (t.columns[c] == name) return std::stod(t.rows[row][c]);
    throw std::runtime_error("no column " + name);
}

}  // namespace

TEST(Sarkar, ConstantAndFactor) {
    EXPECT_NEAR(sarkar_constant(1.0), std::cosh(1.0) / std::sinh(1.0), 1e-15);
    EXPECT_NEAR(sarkar_constant(1.0), 1.3130, 1e-4);
    EXPECT_NEAR(sarkar_factor(1.3130, 2.0), 1.1777, 1e-4);
    EXPECT_EQ(sarkar_constant(kInfinity), 1.0);
    EXPECT_THROW(sarkar_constant(0.0), InputError);
}

TEST(Hyperbolicity, BoundedDiscHolds) {
    const auto r = hyperbolicity_probe(DomainSpec::unit_disc(), kOne, Neighborhood{kOne, 0.5},
                                       Neighborhood{kOne, 0.25}, &disc_graph());
    EXPECT_EQ(r.verdict, verdict::holds);
    EXPECT_GT(r.statistics["set_distance_lower"].get<double>(), 0.0);
    EXPECT_GE(r.statistics["set_distance_upper"].get<double>(), r.statistics["set_distance_lower"].get<double>());
}

TEST(Hyperbolicity, PuncturedExampleViolated) {
    const auto spec = DomainSpec::punctured_example();
    const ComplexPoint p{0.0, 0.0};
    HyperbolicityOptions o;
    for (double d : {1e-2, 1e-4}) o.sequences.push_back({{d, 0.0}, {d, 1.0 / std::sqrt(d)}});
    o.box_radius = 4.0;
    const auto r = hyperbolicity_probe(spec, p, Neighborhood{p, 0.5}, Neighborhood{p, 0.25}, nullptr, o);
    EXPECT_EQ(r.verdict, verdict::violated);
    ASSERT_EQ(r.tables.front().rows.size(), 2u);
    EXPECT_LE(column(r.tables.front(), "lempert_upper", 0), std::atanh(2.0 * std::sqrt(1e-2)) + 1e-12);
    EXPECT_LE(column(r.tables.front(), "lempert_upper", 1), std::atanh(2.0 * std::sqrt(1e-4)) + 1e-12);
}

TEST(Hyperbolicity, RejectsBadNestingAndInteriorPoint) {
    const auto disc = DomainSpec::unit_disc();
    EXPECT_THROW(hyperbolicity_probe(disc, kOne, Neighborhood{kOne, 0.25}, Neighborhood{kOne, 0.5}, nullptr),
                 DomainError);
    const ComplexPoint half{cplx(0.5)};
    EXPECT_THROW(hyperbolicity_probe(disc, half, Neighborhood{half, 0.5}, Neighborhood{half, 0.25}, nullptr),
                 DomainError);
}

TEST(Royden, DiscSamplesHold) {
    CheckOptions o;
    o.samples = 100;
    o.seed = 7;
    const auto r = check_royden_lemma(DomainSpec::unit_disc(), Neighborhood{kOne, 0.5}, o);
    EXPECT_EQ(r.samples, 100u);
    EXPECT_EQ(r.verdict, verdict::holds);
    EXPECT_EQ(r.statistics["sound_violations"].get<std::size_t>(), 0u);
}

TEST(Royden, ZeroVectorRejected) {
    const std::vector<TangentVector> s{{ComplexPoint{cplx(0.8)}, ComplexPoint{cplx(0.0)}}};
    EXPECT_THROW(check_royden_lemma_at(DomainSpec::unit_disc(), Neighborhood{kOne, 0.5}, s), InputError);
}

TEST(Royden, EmptySampleSetInconclusive) {
    const std::vector<TangentVector> none;
    const auto r = check_royden_lemma_at(DomainSpec::unit_disc(), Neighborhood{kOne, 0.5}, none);
    EXPECT_EQ(r.verdict, verdict::inconclusive);
}

TEST(Sarkar, DiscLensMostlyStrict) {
    CheckOptions o;
    o.samples = 200;
    o.seed = 11;
    const auto r = check_sarkar_estimate(DomainSpec::unit_disc(), kOne, kU, kV, nullptr, o);
    EXPECT_TRUE(r.verdict == verdict::holds || r.verdict == verdict::holds_with_slack) << r.verdict;
    EXPECT_GE(r.statistics["strict_fraction"].get<double>(), 0.95);
    EXPECT_NEAR(r.statistics["C"].get<double>(), sarkar_constant(0.3), 1e-12);
}

TEST(Sarkar, CoveringNeighbourhoodIsIdentity) {
    CheckOptions o;
    o.samples = 50;
    const Neighborhood big{kOne, 3.0}, inner{kOne, 2.5};
    const auto r = check_sarkar_estimate(DomainSpec::unit_disc(), kOne, big, inner, nullptr, o);
    EXPECT_EQ(r.verdict, verdict::holds);
    EXPECT_EQ(r.statistics["C"].get<double>(), 1.0);
    for (std::size_t i = 0; i < r.tables.front().rows.size(); ++i) {
        EXPECT_EQ(column(r.tables.front(), "factor_upper", i), 1.0);
        EXPECT_GE(column(r.tables.front(), "slack_lower", i), 0.0);
    }
}

TEST(Tally, ConservativeDirection) {
    InequalityTally t;
    t.add(0.2, 0.1, 0.05);
    EXPECT_EQ(t.verdict(), verdict::holds);
    t.add(-0.01, -0.5, 0.05);  // within slack: not a sound violation
    EXPECT_EQ(t.verdict(), verdict::holds_with_slack);
    t.add(-0.1, -0.5, 0.05);
    EXPECT_EQ(t.verdict(), verdict::violated);
}

TEST(Surveys, AdditiveGapNonnegative) {
    const auto& full = disc_graph();
    const auto local = build_local_graph(full, kU);
    SurveyOptions o;
    o.pairs = 200;
    o.seed = 3;
    const auto r = additive_gap_survey(DomainSpec::unit_disc(), kOne, kU, kV, full, local, o);
    EXPECT_EQ(r.verdict, verdict::holds);
    EXPECT_GE(r.statistics["min_gap"].get<double>(), 0.0);
    EXPECT_TRUE(std::isfinite(r.statistics["sup_gap"].get<double>()));
    EXPECT_GT(r.statistics["strata"].size(), 1u);
}

TEST(Surveys, SamePointGapZero) {
    const auto& full = disc_graph();
    const auto local = build_local_graph(full, kU);
    const ComplexPoint z{cplx(0.9, 0.02)};
    EXPECT_EQ(graph_distance(local, z, z) - graph_distance(full, z, z), 0.0);
}

TEST(Surveys, MultiplicativeRatioAtLeastOne) {
    const auto& full = disc_graph();
    const auto local = build_local_graph(full, kU);
    SurveyOptions o;
    o.pairs = 200;
    o.seed = 5;
    const auto r = multiplicative_ratio_survey(DomainSpec::unit_disc(), kOne, kU, kV, full, local, o);
    EXPECT_GE(r.statistics["min_ratio"].get<double>(), 1.0);
    EXPECT_TRUE(std::isfinite(r.statistics["sup_ratio"].get<double>()));
}

TEST(Surveys, InheritedWeightsGiveUnitRatioForNeighbours) {
    const auto& full = disc_graph();
    const auto local = build_local_graph(full, kU, LocalWeights::Inherited);
    const ComplexPoint z{cplx(0.9, 0.0)}, w{cplx(0.92, 0.0)};
    EXPECT_NEAR(graph_distance(local, z, w) / graph_distance(full, z, w), 1.0, 1e-12);
}

TEST(Surveys, SamplePointsOnCoarseLattice) {
    const auto& full = disc_graph();
    const auto local = build_local_graph(full, kU);
    const auto coarse = build_graph(DomainSpec::unit_disc(), grid(0.04));
    const auto coarse_local = build_local_graph(coarse, kU);
    EXPECT_EQ(survey_points(local, kV, 0.04), survey_points(coarse_local, kV, 0.04));
}

TEST(Surveys, RefinementComparison) {
    ExperimentReport a, b;
    a.name = b.name = "additive";
    a.statistics["sup_gap"] = 1.0;
    b.statistics["sup_gap"] = 1.05;
    EXPECT_EQ(refinement_comparison(a, b, "sup_gap", 0.1).verdict, verdict::holds);
    b.statistics["sup_gap"] = 1.3;
    EXPECT_EQ(refinement_comparison(a, b, "sup_gap", 0.1).verdict, verdict::inconclusive);
}

TEST(Surveys, LengthLocalization) {
    const auto disc = DomainSpec::unit_disc();
    std::vector<Curve> curves;
    curves.push_back(make_curve(disc, {ComplexPoint{cplx(0.9)}}));
    curves.push_back(shortest_curve(disc_graph(), ComplexPoint{cplx(0.8, 0.1)}, ComplexPoint{cplx(0.9, -0.1)}));
    curves.push_back(make_curve(disc, {ComplexPoint{cplx(0.2)}, ComplexPoint{cplx(0.9)}}));  // exits V
    const auto r = length_localization_survey(disc, kOne, kU, kV, curves);
    EXPECT_EQ(r.samples, 2u);
    EXPECT_EQ(r.statistics["excluded_outside_V"].get<std::size_t>(), 1u);
    EXPECT_EQ(column(r.tables.front(), "defect", 0), 0.0);
    EXPECT_GE(r.statistics["min_defect"].get<double>(), 0.0);
    EXPECT_EQ(r.verdict, verdict::holds);
}

TEST(Gromov, ProductExamples) {
    const auto& g = disc_graph();
    const ComplexPoint o{cplx(0.0)}, z{cplx(0.5)}, w{cplx(-0.5)};
    EXPECT_EQ(gromov_product(g, o, o, o), 0.0);
    EXPECT_NEAR(gromov_product(g, z, z, o), std::atanh(0.5), 0.01 * std::atanh(0.5));
    EXPECT_NEAR(gromov_product(g, z, w, o), 0.0, 1e-9);
}

TEST(Gromov, DiscBoundedAndBidiscDiverges) {
    const auto disc = DomainSpec::unit_disc();
    PointPairs seq;
    const auto zs = approach_sequence(disc, ComplexPoint{cplx(1.0)}, ComplexPoint{cplx(-1.0)}, {1.0}, 8, 0.5, 0.5);
    const auto ws = approach_sequence(disc, ComplexPoint{cplx(-1.0)}, ComplexPoint{cplx(1.0)}, {1.0}, 8, 0.5, 0.5);
    for (std::size_t i = 0; i < zs.size(); ++i) seq.push_back({zs[i], ws[i]});
    const auto r = gromov_property_probe(disc_graph(), kOne, ComplexPoint{cplx(-1.0)}, ComplexPoint{cplx(0.0)}, seq);
    EXPECT_EQ(r.verdict, verdict::holds);
    EXPECT_FALSE(r.statistics["divergence"].get<bool>());
    GromovOptions graph_only;
    graph_only.model_oracle = false;
    const auto rg = gromov_property_probe(disc_graph(), kOne, ComplexPoint{cplx(-1.0)}, ComplexPoint{cplx(0.0)}, seq,
                                          graph_only);
    EXPECT_EQ(rg.parameters["distance_source"], "graph");
    EXPECT_FALSE(rg.statistics["divergence"].get<bool>());

    const auto bidisc = DomainSpec::polydisc({1.0, 1.0});
    GridParams gp = grid(0.25);  // distances come from the product oracle
    const auto g2 = build_graph(bidisc, gp);
    const ComplexPoint p{1.0, 1.0}, q{1.0, -1.0};
    const auto bz = approach_sequence(bidisc, p, ComplexPoint{-1.0, -1.0}, {2.0, 1.0}, 8, 0.5, 0.5);
    const auto bw = approach_sequence(bidisc, q, ComplexPoint{-1.0, 1.0}, {2.0, 1.0}, 8, 0.5, 0.5);
    PointPairs bseq;
    for (std::size_t i = 0; i < bz.size(); ++i) bseq.push_back({bz[i], bw[i]});
    const auto r2 = gromov_property_probe(g2, p, q, ComplexPoint{0.0, 0.0}, bseq);
    EXPECT_TRUE(r2.statistics["divergence"].get<bool>());
    EXPECT_EQ(r2.verdict, verdict::violated);

    EXPECT_THROW(gromov_property_probe(disc_graph(), kOne, kOne, ComplexPoint{cplx(0.0)}, seq), InputError);
}

TEST(Gromov, WeakGromovDisc) {
    const auto disc = DomainSpec::unit_disc();
    const ComplexPoint o{cplx(0.0)}, q{cplx(-1.0)};
    const auto zs = approach_sequence(disc, kOne, ComplexPoint{cplx(-1.0)}, {1.0}, 8, 0.5, 0.5);
    const auto ws = approach_sequence(disc, q, ComplexPoint{cplx(1.0)}, {1.0}, 8, 0.5, 0.5);
    WeakGromovTarget t{q, {}};
    for (std::size_t i = 0; i < zs.size(); ++i) t.sequence.push_back({zs[i], ws[i]});
    const auto r = weak_gromov_probe(disc_graph(), kOne, o, {t});
    EXPECT_EQ(r.verdict, verdict::holds);
    EXPECT_TRUE(r.statistics["triangle_floor_respected"].get<bool>());
    EXPECT_GE(r.statistics["per_target"][0]["c_emp"].get<double>(), -0.05);
    EXPECT_THROW(weak_gromov_probe(disc_graph(), kOne, o, {WeakGromovTarget{o, {}}}), DomainError);
}

TEST(ApproachSequence, PerCoordinateRates) {
    const auto s = approach_sequence(DomainSpec::polydisc({1.0, 1.0}), ComplexPoint{1.0, 1.0}, ComplexPoint{-1.0, -1.0},
                                     {2.0, 1.0}, 3, 0.5, 0.5);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_NEAR(s[1][0].real(), 1.0 - 0.0625, 1e-15);
    EXPECT_NEAR(s[1][1].real(), 0.75, 1e-15);
    EXPECT_THROW(approach_sequence(DomainSpec::unit_disc(), kOne, ComplexPoint{cplx(1.0)}, {1.0}, 2, 0.5, 0.5),
                 DomainError);
}
