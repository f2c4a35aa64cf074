#pragma once

// Visibility probes: do near-geodesics between points approaching the boundary stay in a
// compact part of the domain?  Verdicts are evidence, never proofs.

#include <koblab/localization.hpp>

#include <optional>

namespace koblab {

/// z_k -> p and w_k -> q (or escaping a neighbourhood); boundary distance of z strictly decreasing.
struct SequencePair {
    ComplexPoint p, q;
    std::vector<ComplexPoint> z, w;
};

struct VisibilityOptions {
    std::vector<double> lambdas{1.0, 1.5, 2.0};
    std::vector<double> floors{0.5, 0.2, 0.05};
    std::size_t pair_budget = 64;   // certificate pairs per curve
    std::uint64_t seed = 0;
    double decay_ratio = 0.5;       // last/first endpoint boundary distance for a decaying trend
    int count = 8;                  // sequence terms
    double rate = 0.5;
    double t0 = 0.5;
    std::size_t mesh = 16;          // boundary targets for the q-sweep
    std::optional<ComplexPoint> interior;  // sequences approach along rays from here (default: origin)
};

struct VisibilityRecord {
    std::size_t n = 0;
    bool reachable = false;
    std::vector<double> eps_emp;   // per lambda
    double max_bdry_dist = 0.0;
    double endpoint_bdry_dist = 0.0;
    std::vector<bool> floors_hit;  // per floor
    Curve curve;
};

struct VisibilityVerdict {
    std::string verdict;
    std::vector<double> lambdas, floors;
    std::vector<VisibilityRecord> per_n;
    std::vector<std::string> notes;
    double h = 0.0;

    Json to_json() const;
};

/// Geodesics from z_n to w_n on the graph, certified for each lambda, with floor hits.
/// visible-evidence: some floor hit by every curve.  non-visible-evidence: the curves of the
/// second half go no deeper than their endpoints' boundary distance plus 2h, the endpoint
/// distance decays (last <= decay_ratio * first) and 2h is below the top floor.  The
/// non-visibility test runs first: it overrides hits of a low floor.
VisibilityVerdict visibility_probe(const MetricGraph& g, const SequencePair& seq,
                                   const VisibilityOptions& opts = {},
                                   const Neighborhood* U = nullptr, const Neighborhood* V = nullptr);

/// Sequences p + t_n u_p, q + t_n u_q along rays towards the interior point.
SequencePair approach_pair(const DomainSpec& spec, const ComplexPoint& p, const ComplexPoint& q,
                           const VisibilityOptions& opts);

VisibilityVerdict pair_visibility_probe(const MetricGraph& g, const ComplexPoint& p, const ComplexPoint& q,
                                        const VisibilityOptions& opts = {});

/// Boundary points hit by rays from `center` (angles in C, seeded directions in C^n).
std::vector<ComplexPoint> boundary_mesh(const DomainSpec& spec, const ComplexPoint& center,
                                        std::size_t count, std::uint64_t seed = 0);

/// Pair probes from p to every mesh target: visible-evidence when all pairs are.
ExperimentReport pair_visibility_sweep(const MetricGraph& g, const ComplexPoint& p,
                                       const VisibilityOptions& opts = {});

struct TransferOptions {
    double lambda = 1.0;
    std::size_t pair_budget = 2000;
    std::uint64_t seed = 0;
    std::optional<double> additive_sup;  // sup gap of an additive survey on the same graphs
    std::vector<double> penalty;         // extra length per segment (defect injection)
    double slack_budget = 0.0;
};

/// Certifies one curve in Omega ∩ V against the full and the local graph.
ExperimentReport geodesic_transfer_check(const ComplexPoint& p, const Neighborhood& U, const Neighborhood& V,
                                         const Curve& curve, const MetricGraph& full, const MetricGraph& local,
                                         const TransferOptions& opts = {});

/// Segment lengths of a curve measured with the graph's weights (quadrature off the lattice).
Curve measure_on(const MetricGraph& g, const Curve& curve);

/// Visibility of p towards q in Omega and of p towards q' = p + r_U (q - p)/|q - p| in Omega ∩ U.
ExperimentReport local_global_compare(const MetricGraph& full, const ComplexPoint& p, const ComplexPoint& q,
                                      const Neighborhood& U, const VisibilityOptions& opts = {});

/// Membership agreement of two domains inside U, then q-sweeps at p on both.
ExperimentReport germ_compare(const DomainSpec& a, const DomainSpec& b, const ComplexPoint& p,
                              const Neighborhood& U, const GridParams& grid,
                              const VisibilityOptions& opts = {}, std::size_t membership_probes = 10000);

}  // namespace koblab
