#include <koblab/csv.hpp>
#include <koblab/curve.hpp>
#include <koblab/errors.hpp>
#include <koblab/parallel.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

namespace koblab {

namespace {

double edge_weight(const MetricGraph& g, std::int32_t u, std::int32_t v) {
    const double w = lattice_edge_weight(g, u, v);
    if (!(w < kInfinity)) throw NumericError("curve: consecutive path nodes are not adjacent");
    return w;
}

std::vector<double> euclidean_params(const std::vector<ComplexPoint>& v) {
    std::vector<double> p(v.size(), 0.0);
    for (std::size_t i = 1; i < v.size(); ++i) p[i] = p[i - 1] + distance(v[i - 1], v[i]);
    return p;
}

}  // namespace

double Curve::length() const { return std::accumulate(seg_lengths.begin(), seg_lengths.end(), 0.0); }

Curve make_curve(const DomainSpec& spec, std::vector<ComplexPoint> vertices, int m) {
    Curve c;
    c.vertices = std::move(vertices);
    for (const auto& v : c.vertices)
        if (!spec.contains(v)) throw DomainError("curve vertex outside the domain");
    c.params = euclidean_params(c.vertices);
    for (std::size_t i = 0; i + 1 < c.vertices.size(); ++i) {
        const double w = segment_upper(spec, c.vertices[i], c.vertices[i + 1], m);
        if (!(w < kInfinity)) throw DomainError("curve segment leaves the domain");
        c.seg_lengths.push_back(w);
    }
    return c;
}

Curve shortest_curve(const MetricGraph& g, CSpan a, CSpan b) {
    Curve c;
    if (!g.spec.contains(a) || !g.spec.contains(b))
        throw DomainError("shortest_curve: point outside the domain");
    if (distance(a, b) == 0.0) {
        c.vertices.emplace_back(a);
        c.params = {0.0};
        return c;
    }
    const auto ta = attach(g, a);
    const auto tb = attach(g, b);
    std::vector<std::int32_t> stop;
    if (tb.exact >= 0)
        stop.push_back(tb.exact);
    else
        for (const auto& l : tb.links) stop.push_back(l.first);
    const auto tree = shortest_path_tree(g, a, stop);

    // Best end node (ties: smaller node id, links are in lattice order).
    std::int32_t end = -1;
    double best = kInfinity, tail = 0.0;
    if (tb.exact >= 0) {
        end = tb.exact;
        best = tree.dist[end];
    } else {
        for (const auto& [node, w] : tb.links) {
            const double d = tree.dist[node] + w;
            if (d < best || (d == best && node < end)) {
                best = d;
                end = node;
                tail = w;
            }
        }
    }
    const bool direct_possible = ta.exact < 0 || tb.exact < 0;
    if (direct_possible) {
        const double dw = query_weight(g, a, b);
        bool near = true;
        const auto ia = g.lattice_index(a), ib = g.lattice_index(b);
        for (std::size_t i = 0; i < ia.size(); ++i) near = near && std::abs(ia[i] - ib[i]) <= 1;
        if (near && dw < best) {
            c.vertices = {ComplexPoint(a), ComplexPoint(b)};
            c.seg_lengths = {dw};
            c.params = euclidean_params(c.vertices);
            return c;
        }
    }
    if (end < 0 || !(best < kInfinity)) throw UnreachableError("shortest_curve: points are not connected");

    std::vector<std::int32_t> path;
    for (std::int32_t u = end; u >= 0; u = tree.parent[u]) path.push_back(u);
    std::reverse(path.begin(), path.end());

    if (ta.exact < 0) {
        const auto it = std::find_if(ta.links.begin(), ta.links.end(),
                                     [&](const auto& l) { return l.first == path.front(); });
        c.vertices.emplace_back(a);
        c.seg_lengths.push_back(it->second);
    }
    for (std::size_t i = 0; i < path.size(); ++i) {
        c.vertices.push_back(g.nodes[path[i]]);
        if (i > 0) c.seg_lengths.push_back(edge_weight(g, path[i - 1], path[i]));
    }
    if (tb.exact < 0) {
        c.vertices.emplace_back(b);
        c.seg_lengths.push_back(tail);
    }
    c.params = euclidean_params(c.vertices);
    return c;
}

Curve reparametrize_by_length(const DomainSpec& spec, const Curve& curve, int m) {
    if (curve.vertices.size() <= 1) return curve;
    Curve c = curve;
    if (c.seg_lengths.size() + 1 != c.vertices.size()) c = make_curve(spec, curve.vertices, m);
    if (c.length() == 0.0) return curve;
    c.params.assign(c.vertices.size(), 0.0);
    for (std::size_t i = 1; i < c.vertices.size(); ++i) c.params[i] = c.params[i - 1] + c.seg_lengths[i - 1];
    return c;
}

GeodesicCertificate certify_geodesic(const MetricGraph& g, const Curve& curve, double lambda,
                                     std::size_t pair_budget, std::uint64_t seed) {
    return certify_geodesic(g, curve, std::vector<double>{lambda}, pair_budget, seed).front();
}

std::vector<GeodesicCertificate> certify_geodesic(const MetricGraph& g, const Curve& curve,
                                                  const std::vector<double>& lambdas,
                                                  std::size_t pair_budget, std::uint64_t seed) {
    std::vector<GeodesicCertificate> certs(lambdas.size());
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
        if (lambdas[l] < 1.0) throw InputError("certify_geodesic: lambda must be >= 1");
        certs[l].lambda = lambdas[l];
    }
    const std::size_t n = curve.vertices.size();
    if (n < 2) return certs;
    if (curve.seg_lengths.size() + 1 != n) throw InputError("certify_geodesic: missing segment lengths");

    std::map<std::size_t, std::set<std::size_t>> pairs;
    const std::size_t total = n * (n - 1) / 2;
    if (total <= pair_budget) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) pairs[i].insert(j);
    } else {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::size_t drawn = 0;
        while (drawn < pair_budget) {
            std::size_t i = pick(rng), j = pick(rng);
            if (i == j) continue;
            if (i > j) std::swap(i, j);
            if (pairs[i].insert(j).second) ++drawn;
        }
    }

    std::vector<double> prefix(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) prefix[i] = prefix[i - 1] + curve.seg_lengths[i - 1];

    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> jobs;
    for (const auto& [i, js] : pairs) jobs.emplace_back(i, std::vector<std::size_t>(js.begin(), js.end()));
    std::vector<std::vector<double>> dists(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t k) {
        std::vector<ComplexPoint> targets;
        for (auto j : jobs[k].second) targets.push_back(curve.vertices[j]);
        dists[k] = graph_distances(g, curve.vertices[jobs[k].first], targets);
    });

    for (auto& cert : certs) {
        for (std::size_t k = 0; k < jobs.size(); ++k) {
            const std::size_t i = jobs[k].first;
            for (std::size_t t = 0; t < jobs[k].second.size(); ++t) {
                const std::size_t j = jobs[k].second[t];
                ++cert.pairs_checked;
                const double len = prefix[j] - prefix[i];
                const double d = dists[k][t];
                if (!(d < kInfinity)) continue;
                double eps = len - cert.lambda * d;
                if (eps <= 1e-12 * std::max(1.0, len)) eps = 0.0;
                if (eps > cert.epsilon_emp) {
                    cert.epsilon_emp = eps;
                    cert.worst_index = {i, j};
                    cert.worst_pair = {curve.params[i], curve.params[j]};
                }
            }
        }
    }
    return certs;
}

TruncatedCurve truncate_at_exit(const Curve& curve, const std::function<bool(CSpan)>& region) {
    if (curve.vertices.empty() || !region(curve.vertices.front()))
        throw DomainError("truncate_at_exit: curve does not start inside the region");
    TruncatedCurve out;
    std::size_t k = 1;
    while (k < curve.vertices.size() && region(curve.vertices[k])) ++k;
    if (k < curve.vertices.size()) {
        out.exit_index = k;
        out.exit_vertex = curve.vertices[k];
    }
    out.head.vertices.assign(curve.vertices.begin(), curve.vertices.begin() + k);
    if (!curve.params.empty()) out.head.params.assign(curve.params.begin(), curve.params.begin() + k);
    if (curve.seg_lengths.size() + 1 == curve.vertices.size())
        out.head.seg_lengths.assign(curve.seg_lengths.begin(), curve.seg_lengths.begin() + (k - 1));
    return out;
}

void write_curve_csv(std::ostream& os, const Curve& curve) {
    const std::size_t n = curve.vertices.empty() ? 0 : curve.vertices.front().dim();
    os << "index,param";
    for (std::size_t j = 1; j <= n; ++j) os << ",re_z" << j << ",im_z" << j;
    os << ",seg_length_upper\n";
    for (std::size_t i = 0; i < curve.vertices.size(); ++i) {
        os << i << ',' << fmt_num(i < curve.params.size() ? curve.params[i] : 0.0);
        for (const auto& c : curve.vertices[i].coords) os << ',' << fmt_num(c.real()) << ',' << fmt_num(c.imag());
        os << ',' << fmt_num(i == 0 || i > curve.seg_lengths.size() ? 0.0 : curve.seg_lengths[i - 1]) << '\n';
    }
}

}  // namespace koblab
