#include <koblab/domain.hpp>
#include <koblab/errors.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace koblab;

namespace {

ComplexPoint random_point(std::mt19937_64& rng, std::size_t n, double box) {
    std::uniform_real_distribution<double> u(-box, box);
    ComplexPoint z;
    for (std::size_t j = 0; j < n; ++j) z.coords.emplace_back(u(rng), u(rng));
    return z;
}

}  // namespace

TEST(Contains, Examples) {
    const auto disc = DomainSpec::unit_disc();
    EXPECT_TRUE(contains(disc, ComplexPoint{0.5}));
    EXPECT_FALSE(contains(disc, ComplexPoint{1.0}));
    EXPECT_TRUE(contains(DomainSpec::punctured_example(), ComplexPoint{0.1, 5.0}));
    EXPECT_FALSE(contains(DomainSpec::punctured_example(), ComplexPoint{0.0, 0.5}));
    EXPECT_FALSE(contains(DomainSpec::punctured_example(), ComplexPoint{0.1, 10.0}));
}

TEST(Contains, DimensionMismatchIsInputError) {
    EXPECT_THROW(contains(DomainSpec::unit_disc(), ComplexPoint{0.1, 0.1}), InputError);
}

TEST(BoundaryDistance, Examples) {
    EXPECT_DOUBLE_EQ(boundary_distance(DomainSpec::unit_disc(), ComplexPoint{0.5}), 0.5);
    EXPECT_NEAR(boundary_distance(DomainSpec::polydisc({1, 1}), ComplexPoint{0.9, 0.0}), 0.1, 1e-15);
    EXPECT_NEAR(boundary_distance(DomainSpec::ball({0.0, 0.0}, 1.0), ComplexPoint{0.6, 0.0}), 0.4,
                1e-15);
    EXPECT_THROW(boundary_distance(DomainSpec::unit_disc(), ComplexPoint{1.5}), DomainError);
}

TEST(BoundaryDistance, PuncturedHyperbolaBranch) {
    // Near (0.5, 1.9) the nearest boundary piece is the surface |zw| = 1.
    const auto d = DomainSpec::punctured_example();
    const ComplexPoint z{0.5, 1.9};
    const double bd = boundary_distance(d, z);
    EXPECT_GT(bd, 0.0);
    EXPECT_LT(bd, 0.05);
}

TEST(BoundaryDistance, ProductIsMinOfFactors) {
    const auto a = DomainSpec::unit_disc();
    const auto b = DomainSpec::annulus(0.5, 1.0);
    const auto p = DomainSpec::product(a, b);
    std::mt19937_64 rng(3);
    int checked = 0;
    while (checked < 500) {
        const auto z = random_point(rng, 2, 1.0);
        if (!p.contains(z)) continue;
        const double expect = std::min(a.boundary_distance(ComplexPoint{z[0]}),
                                       b.boundary_distance(ComplexPoint{z[1]}));
        EXPECT_DOUBLE_EQ(p.boundary_distance(z), expect);
        ++checked;
    }
}

TEST(BoundaryDistance, PositiveImpliesContains) {
    const std::vector<DomainSpec> specs = {
        DomainSpec::ball({0.2, 0.0}, 0.9), DomainSpec::polydisc({1.0, 0.5}),
        intersect_with_ball(DomainSpec::polydisc({1, 1}), {ComplexPoint{1.0, 1.0}, 0.5})};
    std::mt19937_64 rng(11);
    for (const auto& s : specs)
        for (int i = 0; i < 2000; ++i) {
            const auto z = random_point(rng, 2, 1.2);
            if (s.contains(z)) {
                EXPECT_GT(s.boundary_distance(z), 0.0);
            }
        }
}

TEST(ComplexLineRadius, Examples) {
    const double tol = 2e-3;
    EXPECT_NEAR(complex_line_radius(DomainSpec::unit_disc(), ComplexPoint{0.0}, ComplexPoint{1.0}),
                1.0, tol);
    EXPECT_NEAR(complex_line_radius(DomainSpec::unit_disc(), ComplexPoint{0.5}, ComplexPoint{1.0}),
                0.5, tol);
    // Unit direction (1,1)/sqrt2: each coordinate is r zeta / sqrt2, so the radius is sqrt2.
    EXPECT_NEAR(complex_line_radius(DomainSpec::polydisc({1, 1}), ComplexPoint{0.0, 0.0},
                                    ComplexPoint{1.0, 1.0}),
                std::sqrt(2.0), tol);
}

TEST(ComplexLineRadius, NeverBelowInscribedBallOnConvexKinds) {
    const std::vector<DomainSpec> specs = {DomainSpec::ball({0.0, 0.0}, 1.0),
                                           DomainSpec::polydisc({1.0, 0.7})};
    std::mt19937_64 rng(5);
    for (const auto& s : specs) {
        int n = 0;
        while (n < 100) {
            const auto z = random_point(rng, 2, 0.9);
            if (!s.contains(z)) continue;
            const auto v = random_point(rng, 2, 1.0);
            EXPECT_GE(complex_line_radius(s, z, v), s.boundary_distance(z) * (1.0 - 2e-3));
            ++n;
        }
    }
}

TEST(ComplexLineRadius, AnnulusRespectsTheHole) {
    const auto a = DomainSpec::annulus(0.5, 1.0);
    const double r = complex_line_radius(a, ComplexPoint{0.75}, ComplexPoint{1.0});
    EXPECT_LE(r, 0.25 + 1e-9);
    EXPECT_GT(r, 0.24);
}

TEST(ComplexLineRadius, OutsideIsDomainError) {
    EXPECT_THROW(complex_line_radius(DomainSpec::unit_disc(), ComplexPoint{2.0}, ComplexPoint{1.0}),
                 DomainError);
}

TEST(SampleInterior, Examples) {
    const auto disc = DomainSpec::unit_disc();
    auto pts = sample_interior(disc, 1.0, 0.0, 1.0);
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_EQ(pts[0], ComplexPoint{0.0});

    // 5x5 lattice: the diagonal points (+-0.5 +-0.5i) have modulus 0.707 and are inside too.
    pts = sample_interior(disc, 0.5, 0.0, 1.0);
    std::vector<ComplexPoint> expect;
    for (double x : {-0.5, 0.0, 0.5})
        for (double y : {-0.5, 0.0, 0.5}) expect.push_back(ComplexPoint{cplx(x, y)});
    EXPECT_EQ(pts, expect);

    // Axis points have modulus 0.6, diagonal ones 0.849; all lie in the annulus.
    pts = sample_interior(DomainSpec::annulus(0.5, 1.0), 0.6, 0.0, 1.0);
    ASSERT_EQ(pts.size(), 8u);
    for (const auto& p : pts) {
        const double m = std::abs(p[0]);
        EXPECT_TRUE(std::abs(m - 0.6) < 1e-12 || std::abs(m - 0.6 * std::sqrt(2.0)) < 1e-12);
    }
}

TEST(SampleInterior, DeterministicAndInside) {
    const auto s = DomainSpec::ball({0.0, 0.0}, 1.0);
    const auto a = sample_interior(s, 0.25, 0.25, 1.0);
    const auto b = sample_interior(s, 0.25, 0.25, 1.0);
    EXPECT_EQ(a, b);
    for (const auto& p : a) {
        EXPECT_TRUE(s.contains(p));
        EXPECT_GE(s.boundary_distance(p), 0.25 * 0.25 - 1e-12);
    }
}

TEST(SampleInterior, EmptyIsDegenerate) {
    EXPECT_THROW(sample_interior(DomainSpec::annulus(0.5, 0.55), 1.0, 0.0, 1.0),
                 DegenerateGridError);
}

TEST(BoundaryApproach, Examples) {
    const auto disc = DomainSpec::unit_disc();
    const auto z = boundary_approach(disc, ComplexPoint{1.0}, ComplexPoint{-1.0}, 3, 0.5, 0.5);
    ASSERT_EQ(z.size(), 3u);
    EXPECT_DOUBLE_EQ(z[0][0].real(), 0.5);
    EXPECT_DOUBLE_EQ(z[1][0].real(), 0.75);
    EXPECT_DOUBLE_EQ(z[2][0].real(), 0.875);

    const double s = 1.0 / std::sqrt(2.0);
    const auto w = boundary_approach(DomainSpec::polydisc({1, 1}), ComplexPoint{1.0, 1.0},
                                     ComplexPoint{-s, -s}, 2, 0.1, 0.1);
    ASSERT_EQ(w.size(), 2u);
    for (const auto& p : w) EXPECT_EQ(p[0], p[1]);
    EXPECT_LT(distance(w[1], ComplexPoint{1.0, 1.0}), distance(w[0], ComplexPoint{1.0, 1.0}));

    EXPECT_THROW(boundary_approach(disc, ComplexPoint{1.0}, ComplexPoint{1.0}, 3, 0.5, 0.5),
                 DomainError);
}

TEST(IntersectWithBall, Examples) {
    const auto lens = intersect_with_ball(DomainSpec::unit_disc(), {ComplexPoint{1.0}, 0.5});
    EXPECT_TRUE(lens.bounded());
    EXPECT_TRUE(lens.contains(ComplexPoint{0.75}));
    EXPECT_FALSE(lens.contains(ComplexPoint{0.25}));

    const auto pd = intersect_with_ball(DomainSpec::polydisc({1, 1}), {ComplexPoint{1.0, 1.0}, 0.3});
    EXPECT_TRUE(pd.contains(ComplexPoint{0.9, 0.9}));
}

TEST(IntersectWithBall, MembershipIsConjunction) {
    const auto base = DomainSpec::ball({0.0, 0.0}, 1.0);
    const Neighborhood nb{ComplexPoint{1.0, 0.0}, 2.0};
    const auto s = intersect_with_ball(base, nb);
    const Neighborhood nb2{ComplexPoint{1.0, 0.0}, 0.6};
    const auto t = intersect_with_ball(base, nb2);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 10000; ++i) {
        const auto z = random_point(rng, 2, 1.1);
        EXPECT_EQ(s.contains(z), base.contains(z));
        EXPECT_EQ(t.contains(z), base.contains(z) && nb2.contains(z));
    }
}

TEST(Neighborhood, Nesting) {
    const Neighborhood u{ComplexPoint{1.0}, 0.6}, v{ComplexPoint{1.0}, 0.3};
    EXPECT_TRUE(v.compactly_inside(u));
    EXPECT_FALSE(u.compactly_inside(v));
}

TEST(CompactSlice, Predicate) {
    const CompactSlice k{DomainSpec::unit_disc(), 0.5, 1.0};
    EXPECT_TRUE(k.contains(ComplexPoint{0.4}));
    EXPECT_FALSE(k.contains(ComplexPoint{0.6}));
}

TEST(RequireBoundaryPoint, RejectsInterior) {
    EXPECT_NO_THROW(require_boundary_point(DomainSpec::unit_disc(), ComplexPoint{1.0}));
    EXPECT_THROW(require_boundary_point(DomainSpec::unit_disc(), ComplexPoint{0.9}), DomainError);
}

TEST(LineSlice, MatchesMembershipAlongTheLine) {
    const std::vector<DomainSpec> specs = {
        DomainSpec::ball({0.1, 0.0}, 1.0), DomainSpec::polydisc({1.0, 0.5}),
        DomainSpec::annulus(0.5, 1.0),
        intersect_with_ball(DomainSpec::unit_disc(), {ComplexPoint{1.0}, 0.5}),
        DomainSpec::half_spaces(1, {{{1.0, 0.0}, 0.5}, {{0.0, 1.0}, 0.5}})};
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (const auto& s : specs) {
        const std::size_t n = s.dimension();
        int tried = 0;
        while (tried < 50) {
            auto z = random_point(rng, n, 0.9);
            if (!s.contains(z)) continue;
            const auto dir = random_point(rng, n, 1.0);
            const auto slice = s.line_slice(z, dir);
            ASSERT_TRUE(slice.has_value()) << s.name();
            for (int k = 0; k < 50; ++k) {
                const cplx t(u(rng), u(rng));
                ComplexPoint w = z;
                for (std::size_t j = 0; j < n; ++j) w[j] += t * dir[j];
                EXPECT_EQ(slice->contains(t), s.contains(w)) << s.name();
            }
            ++tried;
        }
    }
}
