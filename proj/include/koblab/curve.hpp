#pragma once

// Polygonal curves, (lambda, epsilon)-geodesic certificates and region exits.

#include <koblab/graph.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

namespace koblab {

struct Curve {
    std::vector<ComplexPoint> vertices;
    std::vector<double> params;       // one per vertex, nondecreasing
    std::vector<double> seg_lengths;  // Kobayashi length upper bounds, one per segment

    double length() const;
    bool empty() const { return vertices.empty(); }
};

struct GeodesicCertificate {
    double lambda = 1.0;
    double epsilon_emp = 0.0;
    std::size_t pairs_checked = 0;
    std::pair<double, double> worst_pair{0.0, 0.0};         // (t1, t2)
    std::pair<std::size_t, std::size_t> worst_index{0, 0};  // vertex indices
};

/// Polygon through `vertices`: Euclidean arclength params, segment upper bounds with m.
Curve make_curve(const DomainSpec& spec, std::vector<ComplexPoint> vertices, int m = 4);

/// Dijkstra path between two points, with off-lattice endpoints joined to their attachment nodes.
Curve shortest_curve(const MetricGraph& g, CSpan a, CSpan b);

/// params := cumulative segment lengths. Segment lengths are computed when missing.
Curve reparametrize_by_length(const DomainSpec& spec, const Curve& curve, int m = 4);

/// epsilon_emp over all vertex pairs, or over `pair_budget` pairs drawn with `seed` when there
/// are more; distances are graph distances. Differences below 1e-12 relative are rounding.
GeodesicCertificate certify_geodesic(const MetricGraph& g, const Curve& curve, double lambda,
                                     std::size_t pair_budget, std::uint64_t seed = 0);
/// One certificate per lambda from a single set of pair distances.
std::vector<GeodesicCertificate> certify_geodesic(const MetricGraph& g, const Curve& curve,
                                                  const std::vector<double>& lambdas,
                                                  std::size_t pair_budget, std::uint64_t seed = 0);

struct TruncatedCurve {
    Curve head;
    std::optional<std::size_t> exit_index;  // index into the original curve
    std::optional<ComplexPoint> exit_vertex;
};

/// Maximal initial sub-curve inside `region` and the first vertex outside it.
TruncatedCurve truncate_at_exit(const Curve& curve, const std::function<bool(CSpan)>& region);

/// CSV: index,param,re_z1,im_z1,...,seg_length_upper (length of the segment ending at the row).
void write_curve_csv(std::ostream& os, const Curve& curve);

}  // namespace koblab
