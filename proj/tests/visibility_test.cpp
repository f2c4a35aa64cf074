#include <koblab/errors.hpp>
#include <koblab/visibility.hpp>

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
const ComplexPoint kMinusOne{cplx(-1.0)};

VisibilityOptions quick(int count = 5) {
    VisibilityOptions o;
    o.count = count;
    o.pair_budget = 24;
    return o;
}

}  // namespace

TEST(Visibility, DiscOppositePointsVisible) {
    const auto v = pair_visibility_probe(disc_graph(), kOne, kMinusOne, quick());
    EXPECT_EQ(v.verdict, verdict::visible);
    for (const auto& r : v.per_n) {
        EXPECT_TRUE(r.reachable);
        EXPECT_TRUE(r.floors_hit.front());  // passes through the centre region
        ASSERT_EQ(r.eps_emp.size(), 3u);
        for (double e : r.eps_emp) EXPECT_GE(e, 0.0);
    }
}

TEST(Visibility, DiscSweepAllVisible) {
    auto o = quick(4);
    o.mesh = 8;
    const auto r = pair_visibility_sweep(disc_graph(), kOne, o);
    EXPECT_EQ(r.verdict, verdict::visible);
    EXPECT_EQ(r.statistics["targets"].get<std::size_t>(), 7u);  // the mesh point at p is skipped
}

TEST(Visibility, SamePointRejected) {
    EXPECT_THROW(pair_visibility_probe(disc_graph(), kOne, kOne), InputError);
}

TEST(Visibility, SequenceValidation) {
    SequencePair s;
    s.z = {ComplexPoint{cplx(0.9)}, ComplexPoint{cplx(0.8)}};  // moving away from the boundary
    s.w = {ComplexPoint{cplx(-0.9)}, ComplexPoint{cplx(-0.8)}};
    EXPECT_THROW(visibility_probe(disc_graph(), s), InputError);
    const Neighborhood U{kOne, 0.5}, V{kOne, 0.2};
    s.z = {ComplexPoint{cplx(0.6)}};
    s.w = {ComplexPoint{cplx(-0.6)}};
    EXPECT_THROW(visibility_probe(disc_graph(), s, {}, &U, &V), InputError);
}

TEST(Visibility, FloorLadderMonotone) {
    const auto v = pair_visibility_probe(disc_graph(), kOne, ComplexPoint{std::polar(1.0, 0.4)}, quick());
    for (const auto& r : v.per_n)
        for (std::size_t f = 1; f < r.floors_hit.size(); ++f)
            if (r.floors_hit[f - 1]) EXPECT_TRUE(r.floors_hit[f]);
}

TEST(Visibility, BallDiameterThroughCentre) {
    const auto ball = DomainSpec::ball(ComplexPoint{0.0, 0.0}, 1.0);
    const double h = 0.125;
    const auto g = build_graph(ball, grid(h));
    const auto c = shortest_curve(g, ComplexPoint{0.5, 0.0}, ComplexPoint{-0.5, 0.0});
    double closest = kInfinity;
    for (const auto& v : c.vertices) closest = std::min(closest, norm(v));
    EXPECT_LE(closest, h * std::sqrt(4.0));
}

TEST(Visibility, BidiscCoarseNonVisible) {
    const auto bidisc = DomainSpec::polydisc({1.0, 1.0});
    const double h = 0.125;
    const auto g = build_graph(bidisc, grid(h));
    SequencePair s;
    s.p = {1.0, 1.0};
    s.q = {1.0, -1.0};
    for (double r : {0.5, 0.7, 0.8, 0.9, 0.95}) {
        s.z.push_back({r, r});
        s.w.push_back({r, -r});
    }
    auto o = quick();
    o.lambdas = {1.0};
    const auto v = visibility_probe(g, s, o);
    EXPECT_EQ(v.verdict, verdict::non_visible);
    const double rs[] = {0.5, 0.7, 0.8, 0.9, 0.95};
    for (std::size_t k = 0; k < v.per_n.size(); ++k) EXPECT_LE(v.per_n[k].max_bdry_dist, 1.0 - rs[k] + 2.0 * h);
}

TEST(Visibility, ExplicitProductCurveIsGeodesic) {
    // t -> (r, sigma(t)) with sigma the real diameter segment: oracle length 2 atanh(r).
    const auto bidisc = DomainSpec::polydisc({1.0, 1.0});
    const double r = 0.9;
    std::vector<ComplexPoint> v;
    const int N = 400;
    for (int i = 0; i <= N; ++i) v.push_back(ComplexPoint{r, r - 2.0 * r * i / N});
    const auto len = kob_length(bidisc, v, 4);
    const double expected = 2.0 * std::atanh(r);
    EXPECT_NEAR(expected, 2.94444, 1e-5);
    EXPECT_NEAR(len.upper, expected, 0.01 * expected);
    EXPECT_NEAR(distance_oracle(bidisc, v.front(), v.back()), expected, 1e-12);
}

TEST(Visibility, TruncatedHeadKeepsCertificate) {
    const auto& g = disc_graph();
    const auto c = shortest_curve(g, ComplexPoint{cplx(0.9, 0.1)}, ComplexPoint{cplx(-0.7, -0.3)});
    const auto whole = certify_geodesic(g, c, 1.0, 100000);
    const Neighborhood V{kOne, 0.5};
    const auto head = truncate_at_exit(c, [&](CSpan z) { return V.contains(z); }).head;
    ASSERT_GE(head.vertices.size(), 2u);
    EXPECT_LE(certify_geodesic(g, head, 1.0, 100000).epsilon_emp, whole.epsilon_emp + 1e-12);
}

TEST(Transfer, DijkstraCurvesInBothDirections) {
    const auto& full = disc_graph();
    const Neighborhood U{kOne, 0.6}, V{kOne, 0.3};
    const auto local = build_local_graph(full, U);
    const ComplexPoint a{cplx(0.9, 0.12)}, b{cplx(0.86, -0.14)};

    const auto cl = shortest_curve(local, a, b);
    const auto rl = geodesic_transfer_check(kOne, U, V, cl, full, local);
    EXPECT_EQ(rl.statistics["eps_local"].get<double>(), 0.0);
    EXPECT_TRUE(std::isfinite(rl.statistics["eps_full"].get<double>()));
    EXPECT_EQ(rl.verdict, verdict::holds);

    const auto cf = shortest_curve(full, a, b);
    const auto rf = geodesic_transfer_check(kOne, U, V, cf, full, local);
    EXPECT_EQ(rf.statistics["eps_full"].get<double>(), 0.0);
    EXPECT_TRUE(std::isfinite(rf.statistics["eps_local"].get<double>()));

    TransferOptions o;
    o.penalty.assign(cf.seg_lengths.size(), 0.0);
    o.penalty[cf.seg_lengths.size() / 2] = 0.3;
    const auto rp = geodesic_transfer_check(kOne, U, V, cf, full, local, o);
    EXPECT_NEAR(rp.statistics["eps_full"].get<double>() - rf.statistics["eps_full"].get<double>(), 0.3, 0.01);
    EXPECT_NEAR(rp.statistics["eps_local"].get<double>() - rf.statistics["eps_local"].get<double>(), 0.3, 0.01);

    const auto outside = shortest_curve(full, ComplexPoint{cplx(0.9)}, ComplexPoint{cplx(0.2)});
    EXPECT_THROW(geodesic_transfer_check(kOne, U, V, outside, full, local), DomainError);
}

TEST(LocalGlobal, DiscAgreement) {
    const auto r = local_global_compare(disc_graph(), kOne, kMinusOne, Neighborhood{kOne, 0.5}, quick());
    EXPECT_EQ(r.verdict, verdict::holds);
    EXPECT_EQ(r.statistics["global_verdict"], verdict::visible);
    EXPECT_EQ(r.statistics["local_verdict"], verdict::visible);
}

TEST(LocalGlobal, CoveringNeighbourhoodIdentical) {
    const auto r = local_global_compare(disc_graph(), kOne, kMinusOne, Neighborhood{kOne, 3.0}, quick());
    EXPECT_EQ(r.statistics["global_verdict"], r.statistics["local_verdict"]);
    EXPECT_EQ(r.statistics["global"]["per_n"], r.statistics["local"]["per_n"]);
}

TEST(Germ, IdenticalDomainsAgree) {
    auto o = quick(4);
    o.mesh = 4;
    const auto disc = DomainSpec::unit_disc();
    const auto r = germ_compare(disc, disc, kOne, Neighborhood{kOne, 0.3}, grid(0.05), o);
    EXPECT_EQ(r.verdict, verdict::holds);
    EXPECT_TRUE(r.statistics["agreement"].get<bool>());
}

TEST(Germ, DisagreementInsideUIsRejected) {
    const auto disc = DomainSpec::unit_disc();
    const auto cut = DomainSpec::ball_intersection(DomainSpec::half_spaces(1, {kind::HalfSpace{{0.0, 1.0}, 0.1}}),
                                                   Neighborhood{ComplexPoint{cplx(0.0)}, 1.0});
    EXPECT_THROW(germ_compare(disc, cut, kOne, Neighborhood{kOne, 0.3}, grid(0.05)), InputError);
}

TEST(Germ, BallWithFarCut) {
    const auto ball = DomainSpec::ball(ComplexPoint{0.0, 0.0}, 1.0);
    const auto cut = DomainSpec::ball_intersection(DomainSpec::half_spaces(2, {kind::HalfSpace{{-1.0, 0.0, 0.0, 0.0}, 0.5}}),
                                                   Neighborhood{ComplexPoint{0.0, 0.0}, 1.0});
    auto o = quick(3);
    o.mesh = 2;
    o.lambdas = {1.0};
    const auto r = germ_compare(ball, cut, ComplexPoint{1.0, 0.0}, Neighborhood{ComplexPoint{1.0, 0.0}, 0.3},
                                grid(0.25), o);
    EXPECT_EQ(r.statistics["verdict_a"], verdict::visible);
    EXPECT_EQ(r.verdict, verdict::holds);
}
