#pragma once

// Domains in C^n and the geometric primitives the metric code builds on.

#include <koblab/point.hpp>

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace koblab {

/// Open Euclidean ball B(center, radius).
struct Neighborhood {
    ComplexPoint center;
    double radius = 0.0;

    bool contains(CSpan z) const { return distance(z, center) < radius; }
    /// V compactly contained in U, checked for concentric balls.
    bool compactly_inside(const Neighborhood& outer) const;
};

class DomainSpec;

namespace kind {
struct UnitDisc {};
struct DiscOfRadius {
    double radius;
};
struct Polydisc {
    std::vector<double> radii;
};
struct Ball {
    ComplexPoint center;
    double radius;
};
struct Annulus {
    double inner;
    double outer;
};
/// Real-linear inequality normal . x < offset on R^{2n}, x = (Re z1, Im z1, Re z2, ...).
struct HalfSpace {
    std::vector<double> normal;
    double offset;
};
struct HalfSpaceIntersection {
    std::size_t dimension;
    std::vector<HalfSpace> faces;
};
struct Product {
    std::shared_ptr<const DomainSpec> first;
    std::shared_ptr<const DomainSpec> second;
};
/// D = {(z,w) in C^2 : 0 < |z| < 1, |zw| < 1}.
struct PuncturedExample {};
struct BallIntersection {
    std::shared_ptr<const DomainSpec> base;
    Neighborhood ball;
};
}  // namespace kind

/// Planar picture of the slice of a domain by the complex line s -> z + s u.
/// Every constraint is expressed in the line coordinate s.
struct LineSlice {
    struct Disc {
        cplx center;
        double radius;
    };
    struct HalfPlane {
        cplx normal;  // Re(conj(normal) s) < offset
        double offset;
    };
    std::vector<Disc> inside;       // |s - c| < r
    std::vector<Disc> outside;      // |s - c| > r
    std::vector<HalfPlane> planes;
    std::vector<cplx> punctures;    // s != c
    bool empty = false;             // a degenerate constraint excludes the whole line

    /// Largest r such that the disc of radius r about s satisfies every constraint (0 if s is outside).
    double inscribed_radius(cplx s) const;
    bool contains(cplx s) const { return inscribed_radius(s) > 0.0; }
};

class DomainSpec {
public:
    using Kind = std::variant<kind::UnitDisc, kind::DiscOfRadius, kind::Polydisc, kind::Ball,
                              kind::Annulus, kind::HalfSpaceIntersection, kind::Product,
                              kind::PuncturedExample, kind::BallIntersection>;

    static DomainSpec unit_disc();
    static DomainSpec disc(double radius);
    static DomainSpec polydisc(std::vector<double> radii);
    static DomainSpec ball(ComplexPoint center, double radius);
    static DomainSpec annulus(double inner, double outer);
    static DomainSpec half_spaces(std::size_t dimension, std::vector<kind::HalfSpace> faces);
    static DomainSpec product(DomainSpec first, DomainSpec second);
    static DomainSpec punctured_example();
    static DomainSpec ball_intersection(DomainSpec base, Neighborhood ball);

    const Kind& kind() const { return *kind_; }
    std::size_t dimension() const { return dim_; }
    bool bounded() const { return bounded_; }
    /// Radius of an origin-centred ball containing the domain; +inf when unbounded.
    double bounding_radius() const { return bounding_radius_; }
    /// True for kinds with closed-form metric and distance.
    bool is_model() const;
    std::string name() const;

    bool contains(CSpan z) const;
    /// Euclidean distance to the complement; requires z inside.
    double boundary_distance(CSpan z) const;
    /// Defining function: negative inside, zero on the boundary, positive outside.
    double gap(CSpan z) const;
    /// Upper limit on affine-disc radii imposed by holes (annulus core, puncture); +inf if none.
    double hole_limit(CSpan z, CSpan unit_dir) const;
    /// Exact slice along a complex line, or nullopt for kinds without a planar description.
    std::optional<LineSlice> line_slice(CSpan z, CSpan dir) const;

    friend bool operator==(const DomainSpec& a, const DomainSpec& b) { return a.kind_ == b.kind_; }

private:
    DomainSpec(Kind k, std::size_t dim, bool bounded, double bound);
    void check_dim(CSpan z) const;
    bool contains_unchecked(CSpan z) const;
    double distance_unchecked(CSpan z) const;
    bool slice_into(CSpan z, CSpan dir, LineSlice& out) const;

    std::shared_ptr<const Kind> kind_;
    std::size_t dim_ = 0;
    bool bounded_ = false;
    double bounding_radius_ = std::numeric_limits<double>::infinity();
};

/// z in K_r iff z in owner, boundary_distance >= floor and |z| <= box_radius.
struct CompactSlice {
    DomainSpec owner;
    double floor;
    double box_radius;

    bool contains(CSpan z) const;
};

struct LineRadiusOptions {
    int angles = 64;
    int radii = 8;
    double safety = 0.999;
    double tolerance = 1e-9;
    int max_iterations = 200;
};

bool contains(const DomainSpec& spec, CSpan z);
double boundary_distance(const DomainSpec& spec, CSpan z);

/// Feasible radius of the affine disc zeta -> z + r zeta v/|v|, validated on a polar grid.
double complex_line_radius(const DomainSpec& spec, CSpan z, CSpan v,
                           const LineRadiusOptions& opts = {});

/// Lattice points k*h of the centred box |x_i| <= box_radius lying in the domain with
/// boundary distance >= margin*h, lexicographic in the lattice index.
std::vector<ComplexPoint> sample_interior(const DomainSpec& spec, double h, double margin,
                                          double box_radius);

/// z_k = p + rate^k * t0 * inward for k = 0..count-1.
std::vector<ComplexPoint> boundary_approach(const DomainSpec& spec, const ComplexPoint& p,
                                            const ComplexPoint& inward, int count, double rate,
                                            double t0);

DomainSpec intersect_with_ball(const DomainSpec& spec, const Neighborhood& nb);

/// Throws DomainError unless |gap(p)| <= tol.
void require_boundary_point(const DomainSpec& spec, CSpan p, double tol = 1e-9);

/// Maps x in R^{2n} to C^n and back.
ComplexPoint from_real(std::span<const double> x);
std::vector<double> to_real(CSpan z);

}  // namespace koblab
