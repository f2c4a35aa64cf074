#include <koblab/errors.hpp>
#include <koblab/graph.hpp>
#include <koblab/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>

namespace koblab {

namespace {

constexpr std::size_t kMaxCells = 400'000'000;

std::vector<std::vector<int>> forward_offsets(std::size_t d) {
    std::vector<std::vector<int>> out;
    std::vector<int> o(d, -1);
    for (;;) {
        const auto first = std::find_if(o.begin(), o.end(), [](int x) { return x != 0; });
        if (first != o.end() && *first > 0) out.push_back(o);
        std::size_t i = 0;
        while (i < d && o[i] == 1) o[i++] = -1;
        if (i == d) break;
        ++o[i];
    }
    return out;
}

void init_lattice(MetricGraph& g) {
    const std::size_t d = g.real_dim;
    const std::int64_t side = 2 * g.lattice_k + 1;
    double cells = 1.0;
    for (std::size_t i = 0; i < d; ++i) cells *= static_cast<double>(side);
    if (cells > static_cast<double>(kMaxCells))
        throw InputError("grid: box lattice too large (" + std::to_string(cells) + " cells)");
    g.cell_to_node.assign(static_cast<std::size_t>(cells), -1);
    g.offsets = forward_offsets(d);
    g.cell_step.clear();
    g.offset_length.clear();
    for (const auto& o : g.offsets) {
        std::int64_t step = 0, stride = 1;
        int nz = 0;
        for (std::size_t i = 0; i < d; ++i) {
            step += o[i] * stride;
            stride *= side;
            nz += o[i] != 0;
        }
        g.cell_step.push_back(step);
        g.offset_length.push_back(g.params.h * std::sqrt(static_cast<double>(nz)));
    }
}

std::int64_t flat_cell(const MetricGraph& g, const std::int16_t* idx) {
    const std::int64_t side = 2 * g.lattice_k + 1;
    std::int64_t c = 0, stride = 1;
    for (std::size_t i = 0; i < g.real_dim; ++i) {
        c += (idx[i] + g.lattice_k) * stride;
        stride *= side;
    }
    return c;
}

void index_nodes(MetricGraph& g) {
    const std::size_t d = g.real_dim;
    g.node_index.assign(g.nodes.size() * d, 0);
    for (std::size_t n = 0; n < g.nodes.size(); ++n) {
        const auto idx = g.lattice_index(g.nodes[n]);
        for (std::size_t i = 0; i < d; ++i) g.node_index[n * d + i] = static_cast<std::int16_t>(idx[i]);
        g.cell_to_node[flat_cell(g, &g.node_index[n * d])] = static_cast<std::int32_t>(n);
    }
}

void count_edges(MetricGraph& g) {
    g.edge_count = static_cast<std::size_t>(
        std::count_if(g.weights.begin(), g.weights.end(), [](double w) { return w < kInfinity; }));
    if (g.edge_count == 0)
        g.warnings.push_back("degenerate grid: " + std::to_string(g.nodes.size()) +
                             " nodes but no edges; refine h or check the domain");
}

double relative_slack(const DomainSpec& spec) {
    return spec.is_model() ? 0.0 : 1.0 - std::cos(M_PI / SearchConfig::fast().angles);
}

// Segment weight for query attachments; on local graphs also dominates the parent weight.
struct Source {
    std::int32_t node;
    double dist;
    double euclid;
};

// Dijkstra keyed by (distance, euclidean length, node id); `settled` returns true to stop.
struct NoReport {
    void operator()(std::int32_t, double) const {}
};

template <class Stop, class Report = NoReport>
PathTree dijkstra(const MetricGraph& g, const std::vector<Source>& sources, Stop settled,
                  Report report = {}) {
    const std::size_t n = g.node_count();
    PathTree t{std::vector<double>(n, kInfinity), std::vector<double>(n, kInfinity),
               std::vector<std::int32_t>(n, -1)};
    using Key = std::tuple<double, double, std::int32_t>;
    std::priority_queue<Key, std::vector<Key>, std::greater<>> heap;
    for (const auto& s : sources) {
        if (std::tie(s.dist, s.euclid) < std::tie(t.dist[s.node], t.euclid[s.node])) {
            t.dist[s.node] = s.dist;
            t.euclid[s.node] = s.euclid;
            heap.emplace(s.dist, s.euclid, s.node);
        }
    }
    std::vector<char> done(n, 0);
    while (!heap.empty()) {
        const auto [d, e, u] = heap.top();
        heap.pop();
        if (done[u] || d != t.dist[u] || e != t.euclid[u]) continue;
        done[u] = 1;
        if (settled(u)) {
            report(u, d);
            break;
        }
        g.for_each_edge(static_cast<std::size_t>(u), [&](std::size_t v, double w, double len) {
            if (done[v]) return;
            const double nd = d + w, ne = e + len;
            if (std::tie(nd, ne) < std::tie(t.dist[v], t.euclid[v])) {
                t.dist[v] = nd;
                t.euclid[v] = ne;
                t.parent[v] = u;
                heap.emplace(nd, ne, static_cast<std::int32_t>(v));
            }
        });
    }
    return t;
}

std::vector<Source> sources_of(const MetricGraph& g, CSpan a, const Attachment& att) {
    std::vector<Source> s;
    if (att.exact >= 0) {
        s.push_back({att.exact, 0.0, 0.0});
        return s;
    }
    for (const auto& [node, w] : att.links) s.push_back({node, w, distance(a, g.nodes[node])});
    return s;
}

std::vector<std::int32_t> targets_of(const Attachment& att) {
    if (att.exact >= 0) return {att.exact};
    std::vector<std::int32_t> t;
    for (const auto& l : att.links) t.push_back(l.first);
    return t;
}

double evaluate_target(const PathTree& t, const Attachment& att) {
    if (att.exact >= 0) return t.dist[att.exact];
    double best = kInfinity;
    for (const auto& [node, w] : att.links) best = std::min(best, t.dist[node] + w);
    return best;
}

template <class Pred>
PathTree tree_until(const MetricGraph& g, const std::vector<Source>& sources,
                    const std::vector<std::int32_t>& stop_after, Pred) {
    std::vector<char> wanted(g.node_count(), 0);
    std::size_t remaining = 0;
    for (auto id : stop_after)
        if (!wanted[id]) {
            wanted[id] = 1;
            ++remaining;
        }
    if (remaining == 0) return dijkstra(g, sources, [](std::int32_t) { return false; });
    return dijkstra(g, sources, [&](std::int32_t u) { return wanted[u] && --remaining == 0; });
}

bool near_in_lattice(const MetricGraph& g, CSpan a, CSpan b) {
    const auto ia = g.lattice_index(a), ib = g.lattice_index(b);
    for (std::size_t i = 0; i < ia.size(); ++i)
        if (std::abs(ia[i] - ib[i]) > 1) return false;
    return true;
}

}  // namespace

double query_weight(const MetricGraph& g, CSpan a, CSpan b) {
    const int m = 4 * g.params.m;
    double w = segment_upper(g.spec, a, b, m);
    if (g.parent_spec && w < kInfinity) w = std::max(w, segment_upper(*g.parent_spec, a, b, m));
    return w;
}

double lattice_edge_weight(const MetricGraph& g, std::int32_t u, std::int32_t v) {
    const std::size_t d = g.real_dim;
    std::vector<int> diff(d);
    for (std::size_t i = 0; i < d; ++i)
        diff[i] = g.node_index[static_cast<std::size_t>(v) * d + i] - g.node_index[static_cast<std::size_t>(u) * d + i];
    for (std::size_t k = 0; k < g.offsets.size(); ++k) {
        if (g.offsets[k] == diff) return g.weight(static_cast<std::size_t>(u), k);
        if (std::equal(diff.begin(), diff.end(), g.offsets[k].begin(), [](int a, int b) { return a == -b; }))
            return g.weight(static_cast<std::size_t>(v), k);
    }
    return kInfinity;
}

std::vector<int> MetricGraph::lattice_index(CSpan z) const {
    std::vector<int> idx(real_dim);
    for (std::size_t j = 0; j < z.size(); ++j) {
        idx[2 * j] = static_cast<int>(std::lround(z[j].real() / params.h));
        idx[2 * j + 1] = static_cast<int>(std::lround(z[j].imag() / params.h));
    }
    return idx;
}

std::int32_t MetricGraph::node_at(const std::vector<int>& index) const {
    const std::int64_t side = 2 * lattice_k + 1;
    std::int64_t c = 0, stride = 1;
    for (std::size_t i = 0; i < real_dim; ++i) {
        if (index[i] < -lattice_k || index[i] > lattice_k) return -1;
        c += (index[i] + lattice_k) * stride;
        stride *= side;
    }
    return cell_to_node[static_cast<std::size_t>(c)];
}

std::int32_t MetricGraph::neighbour(std::size_t node, std::size_t k, int sign) const {
    const std::int16_t* idx = &node_index[node * real_dim];
    const auto& o = offsets[k];
    for (std::size_t i = 0; i < real_dim; ++i) {
        const int x = idx[i] + sign * o[i];
        if (x < -lattice_k || x > lattice_k) return -1;
    }
    return cell_to_node[static_cast<std::size_t>(flat_cell(*this, idx) + sign * cell_step[k])];
}

MetricGraph build_graph(const DomainSpec& spec, const GridParams& params) {
    if (!(params.h > 0.0)) throw InputError("grid: h must be positive");
    if (params.m < 1) throw InputError("grid: quadrature order must be positive");
    GridParams p = params;
    if (!(p.box_radius > 0.0)) {
        if (!spec.bounded()) throw InputError("grid: box_radius is required for unbounded domains");
        p.box_radius = spec.bounding_radius();
    }
    MetricGraph g(spec);
    g.params = p;
    g.real_dim = 2 * spec.dimension();
    g.lattice_k = static_cast<int>(std::floor(p.box_radius / p.h + 1e-9));
    if (g.lattice_k > 30000) throw InputError("grid: too many lattice points per axis");
    g.nodes = sample_interior(spec, p.h, p.margin, p.box_radius);
    if (g.nodes.size() > p.node_budget && !p.override_budget)
        throw InputError("grid: " + std::to_string(g.nodes.size()) + " nodes exceed the budget of " +
                         std::to_string(p.node_budget) + "; coarsen h or override the budget");
    init_lattice(g);
    index_nodes(g);

    const std::size_t F = g.offsets.size();
    g.weights.assign(g.nodes.size() * F, kInfinity);
    parallel_for(g.nodes.size(), [&](std::size_t n) {
        for (std::size_t k = 0; k < F; ++k) {
            const std::int32_t j = g.neighbour(n, k, +1);
            if (j < 0) continue;
            g.weights[n * F + k] = segment_upper(spec, g.nodes[n], g.nodes[j], p.m);
        }
    });
    count_edges(g);
    g.slack_bound = relative_slack(spec);
    return g;
}

MetricGraph build_local_graph(const MetricGraph& parent, const Neighborhood& nb, LocalWeights mode) {
    const auto local = intersect_with_ball(parent.spec, nb);
    MetricGraph g(local);
    g.parent_spec = parent.spec;
    g.params = parent.params;
    g.real_dim = parent.real_dim;
    g.lattice_k = parent.lattice_k;
    std::vector<std::int32_t> to_parent;
    for (std::size_t n = 0; n < parent.node_count(); ++n)
        if (nb.contains(parent.nodes[n])) {
            g.nodes.push_back(parent.nodes[n]);
            to_parent.push_back(static_cast<std::int32_t>(n));
        }
    if (g.nodes.empty())
        throw DegenerateGridError("local graph: no grid nodes inside the neighbourhood");
    init_lattice(g);
    index_nodes(g);

    const std::size_t F = g.offsets.size();
    g.weights.assign(g.nodes.size() * F, kInfinity);
    parallel_for(g.nodes.size(), [&](std::size_t n) {
        for (std::size_t k = 0; k < F; ++k) {
            const std::int32_t j = g.neighbour(n, k, +1);
            if (j < 0) continue;
            const double inherited = parent.weight(static_cast<std::size_t>(to_parent[n]), k);
            double w = inherited;
            if (mode == LocalWeights::Dominating && inherited < kInfinity)
                w = std::max(inherited, segment_upper(local, g.nodes[n], g.nodes[j], g.params.m));
            g.weights[n * F + k] = w;
        }
    });
    count_edges(g);
    g.slack_bound = std::max(parent.slack_bound, relative_slack(local));
    return g;
}

GraphSummary summarize(const MetricGraph& g) {
    return {g.node_count(), g.edge_count, g.params.h, g.params.m, g.slack_bound};
}

Attachment attach(const MetricGraph& g, CSpan z) {
    if (!g.spec.contains(z)) throw DomainError("graph query point outside the domain");
    Attachment att;
    const auto idx = g.lattice_index(z);
    const std::int32_t at = g.node_at(idx);
    if (at >= 0 && distance(g.nodes[at], z) <= 1e-12 * g.params.h) {
        att.exact = at;
        return att;
    }
    const std::size_t d = g.real_dim;
    std::vector<int> o(d, -1), probe(d);
    for (;;) {
        for (std::size_t i = 0; i < d; ++i) probe[i] = idx[i] + o[i];
        const std::int32_t n = g.node_at(probe);
        if (n >= 0) {
            const double w = query_weight(g, z, g.nodes[n]);
            if (w < kInfinity) att.links.emplace_back(n, w);
        }
        std::size_t i = 0;
        while (i < d && o[i] == 1) o[i++] = -1;
        if (i == d) break;
        ++o[i];
    }
    return att;
}

PathTree shortest_path_tree(const MetricGraph& g, CSpan a, const std::vector<std::int32_t>& stop_after) {
    const auto att = attach(g, a);
    return tree_until(g, sources_of(g, a, att), stop_after, 0);
}

double graph_distance(const MetricGraph& g, CSpan a, CSpan b) {
    if (!g.spec.contains(a) || !g.spec.contains(b))
        throw DomainError("graph_distance: point outside the domain");
    if (distance(a, b) == 0.0) return 0.0;
    const auto ta = attach(g, a);
    const auto tb = attach(g, b);
    const auto tree = tree_until(g, sources_of(g, a, ta), targets_of(tb), 0);
    double best = evaluate_target(tree, tb);
    if ((ta.exact < 0 || tb.exact < 0) && near_in_lattice(g, a, b))
        best = std::min(best, query_weight(g, a, b));
    if (!(best < kInfinity)) throw UnreachableError("graph_distance: points are not connected");
    return best;
}

std::vector<double> graph_distances(const MetricGraph& g, CSpan a,
                                    const std::vector<ComplexPoint>& targets) {
    const auto ta = attach(g, a);
    std::vector<Attachment> atts;
    std::vector<std::int32_t> stop;
    for (const auto& t : targets) {
        atts.push_back(attach(g, t));
        const auto ids = targets_of(atts.back());
        stop.insert(stop.end(), ids.begin(), ids.end());
    }
    const auto tree = tree_until(g, sources_of(g, a, ta), stop, 0);
    std::vector<double> out;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (distance(a, targets[i]) == 0.0) {
            out.push_back(0.0);
            continue;
        }
        double d = evaluate_target(tree, atts[i]);
        if ((ta.exact < 0 || atts[i].exact < 0) && near_in_lattice(g, a, targets[i]))
            d = std::min(d, query_weight(g, a, targets[i]));
        out.push_back(d);
    }
    return out;
}

double set_distance(const MetricGraph& g, const std::function<bool(CSpan)>& A,
                    const std::function<bool(CSpan)>& B) {
    std::vector<Source> sources;
    std::vector<char> in_b(g.node_count(), 0);
    bool any_b = false;
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        const bool a = A(g.nodes[n]), b = B(g.nodes[n]);
        if (a && b) return 0.0;
        if (a) sources.push_back({static_cast<std::int32_t>(n), 0.0, 0.0});
        in_b[n] = b;
        any_b = any_b || b;
    }
    if (sources.empty() || !any_b) return kInfinity;
    // The first settled B-node carries the minimum.
    double result = kInfinity;
    dijkstra(g, sources, [&](std::int32_t u) { return static_cast<bool>(in_b[u]); },
             [&](std::int32_t u, double d) { result = d; (void)u; });
    return result;
}

MetricEstimate distance_estimate(const DomainSpec& spec, const MetricGraph& g, CSpan z, CSpan w) {
    if (distance(z, w) == 0.0) {
        if (!spec.contains(z)) throw DomainError("distance_estimate: point outside the domain");
        return {0.0, 0.0, "identity", "identity", 0.0};
    }
    if (spec.is_model()) {
        const double k = distance_oracle(spec, z, w);
        return {k, k, "oracle", "oracle", 0.0};
    }
    MetricEstimate e;
    e.lower = distance_lower(spec, z, w);
    e.lower_method = e.lower > 0.0 ? "enclosing-model" : "none";
    double graph = kInfinity;
    try {
        graph = graph_distance(g, z, w);
    } catch (const UnreachableError&) {
    }
    const double lempert = lempert_upper(spec, z, w);
    e.upper = std::min(graph, lempert);
    e.upper_method = graph <= lempert ? "graph" : "lempert";
    e.grid_slack = g.slack_bound;
    if (e.upper < e.lower) {
        // Quadrature error pushed the path sum below a sound minorant.
        e.upper = e.lower;
        e.upper_method += "(clamped)";
    }
    return e;
}

}  // namespace koblab
