#pragma once

// Lattice metric graphs: shortest paths upper-bound the Kobayashi distance.

#include <koblab/metric.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace koblab {

struct GridParams {
    double h = 0.02;
    double box_radius = 0.0;   // 0: use the bounding radius (bounded domains only)
    double margin = 0.25;
    int m = 4;
    std::size_t node_budget = 300000;
    bool override_budget = false;
};

/// Nodes are lattice points k*h; each node stores weights towards its forward Chebyshev-1
/// neighbours (first nonzero offset component positive). +inf marks a missing edge.
struct MetricGraph {
    explicit MetricGraph(DomainSpec s) : spec(std::move(s)) {}

    DomainSpec spec;
    /// Set on local graphs: query attachments also dominate the parent's.
    std::optional<DomainSpec> parent_spec;
    GridParams params;
    int lattice_k = 0;                       // lattice indices run over [-K, K]
    std::size_t real_dim = 0;                // 2n
    std::vector<ComplexPoint> nodes;
    std::vector<std::int16_t> node_index;    // lattice index per node, real_dim entries each
    std::vector<std::int32_t> cell_to_node;  // dense box lattice -> node id or -1
    std::vector<std::vector<int>> offsets;   // forward offsets
    std::vector<std::int64_t> cell_step;     // flat cell stride of each offset
    std::vector<double> offset_length;       // euclidean length of each offset
    std::vector<double> weights;             // nodes.size() * offsets.size()
    std::size_t edge_count = 0;
    double slack_bound = 0.0;
    std::vector<std::string> warnings;

    std::size_t node_count() const { return nodes.size(); }
    double weight(std::size_t node, std::size_t k) const { return weights[node * offsets.size() + k]; }
    /// Node id at a lattice index, -1 if absent or outside the box.
    std::int32_t node_at(const std::vector<int>& index) const;
    std::vector<int> lattice_index(CSpan z) const;
    /// Neighbour of `node` at +offset k (sign = +1) or -offset k (sign = -1), or -1.
    std::int32_t neighbour(std::size_t node, std::size_t k, int sign) const;

    /// Calls f(neighbour, weight, euclidean length) for every finite edge at `node`.
    template <class F>
    void for_each_edge(std::size_t node, F&& f) const {
        for (std::size_t k = 0; k < offsets.size(); ++k) {
            const double w = weight(node, k);
            if (w < kInfinity) f(static_cast<std::size_t>(neighbour(node, k, +1)), w, offset_length[k]);
            const std::int32_t j = neighbour(node, k, -1);
            if (j >= 0) {
                const double wb = weight(static_cast<std::size_t>(j), k);
                if (wb < kInfinity) f(static_cast<std::size_t>(j), wb, offset_length[k]);
            }
        }
    }
};

struct GraphSummary {
    std::size_t node_count;
    std::size_t edge_count;
    double h;
    int m;
    double slack_bound;
};

MetricGraph build_graph(const DomainSpec& spec, const GridParams& params);

enum class LocalWeights {
    Dominating,  // max(weight for the smaller domain, inherited weight)
    Inherited,   // weights copied from the parent graph
};

/// Induced subgraph on the nodes inside the ball, for the domain spec ∩ nb.
MetricGraph build_local_graph(const MetricGraph& parent, const Neighborhood& nb,
                              LocalWeights mode = LocalWeights::Dominating);

GraphSummary summarize(const MetricGraph& g);

/// Connection of an arbitrary query point to nearby nodes.
struct Attachment {
    std::int32_t exact = -1;  // node id when the point is a node
    std::vector<std::pair<std::int32_t, double>> links;
};
Attachment attach(const MetricGraph& g, CSpan z);

/// Weight of the lattice edge between adjacent nodes u and v (+inf if not adjacent or missing).
double lattice_edge_weight(const MetricGraph& g, std::int32_t u, std::int32_t v);
/// Weight used for off-lattice segments (attachments, direct hops): 4m-point quadrature,
/// dominated by the parent domain on local graphs.
double query_weight(const MetricGraph& g, CSpan a, CSpan b);

/// Shortest-path tree from a query point; dist is +inf at unreached nodes.
struct PathTree {
    std::vector<double> dist;
    std::vector<double> euclid;
    std::vector<std::int32_t> parent;  // -1 for roots
};
/// Dijkstra from a, ordered by (distance, euclidean length, node id). Stops once every node in
/// `stop_after` is settled (all nodes when empty).
PathTree shortest_path_tree(const MetricGraph& g, CSpan a,
                            const std::vector<std::int32_t>& stop_after = {});

/// Upper bound for k_Omega(a, b) along graph paths; throws UnreachableError when disconnected.
double graph_distance(const MetricGraph& g, CSpan a, CSpan b);

/// Graph distances from a to each target (+inf when unreachable).
std::vector<double> graph_distances(const MetricGraph& g, CSpan a,
                                    const std::vector<ComplexPoint>& targets);

/// min over node pairs of A x B of the graph distance; +inf if either side has no nodes.
double set_distance(const MetricGraph& g, const std::function<bool(CSpan)>& A,
                    const std::function<bool(CSpan)>& B);

/// upper = min(graph distance, Lempert bound); lower from enclosing model domains.
MetricEstimate distance_estimate(const DomainSpec& spec, const MetricGraph& g, CSpan z, CSpan w);

}  // namespace koblab
