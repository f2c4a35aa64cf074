#include <koblab/csv.hpp>
#include <koblab/errors.hpp>
#include <koblab/parallel.hpp>
#include <koblab/visibility.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace koblab {

namespace {

ComplexPoint unit(const ComplexPoint& v) {
    const double n = norm(v);
    if (n == 0.0) throw InputError("zero direction");
    return cplx(1.0 / n) * v;
}

ComplexPoint origin(std::size_t n) { return ComplexPoint(std::vector<cplx>(n, 0.0)); }

double box_of(const MetricGraph& g) { return (g.lattice_k + 1) * g.params.h; }

Json nb_json(const Neighborhood& nb) {
    return Json{{"center", json_point(nb.center)}, {"radius", json_num(nb.radius)}};
}

Json record_json(const VisibilityRecord& r) {
    Json eps = Json::array(), hits = Json::array();
    for (double e : r.eps_emp) eps.push_back(json_num(e));
    for (bool b : r.floors_hit) hits.push_back(b);
    return {{"n", r.n},
            {"reachable", r.reachable},
            {"eps_emp", eps},
            {"max_bdry_dist", json_num(r.max_bdry_dist)},
            {"endpoint_bdry_dist", json_num(r.endpoint_bdry_dist)},
            {"floors_hit", hits},
            {"vertices", r.curve.vertices.size()}};
}

}  // namespace

Json VisibilityVerdict::to_json() const {
    Json j{{"verdict", verdict}};
    Json l = Json::array(), f = Json::array(), per = Json::array();
    for (double x : lambdas) l.push_back(json_num(x));
    for (double x : floors) f.push_back(json_num(x));
    for (const auto& r : per_n) per.push_back(record_json(r));
    j["lambda"] = l;
    j["floors"] = f;
    j["h"] = json_num(h);
    j["per_n"] = per;
    j["notes"] = notes;
    return j;
}

VisibilityVerdict visibility_probe(const MetricGraph& g, const SequencePair& seq, const VisibilityOptions& opts,
                                   const Neighborhood* U, const Neighborhood* V) {
    const DomainSpec& spec = g.spec;
    if (seq.z.empty() || seq.z.size() != seq.w.size()) throw InputError("visibility: sequences must be nonempty and of equal length");
    if (opts.lambdas.empty()) throw InputError("visibility: lambda list is empty");
    for (std::size_t k = 0; k < seq.z.size(); ++k) {
        if (!spec.contains(seq.z[k]) || !spec.contains(seq.w[k]))
            throw InputError("visibility: sequence point outside the domain");
        if (V && !V->contains(seq.z[k])) throw InputError("visibility: z_n must lie in V");
        if (U && U->contains(seq.w[k])) throw InputError("visibility: w_n must lie outside U");
        if (k > 0 && !(spec.boundary_distance(seq.z[k]) < spec.boundary_distance(seq.z[k - 1])))
            throw InputError("visibility: boundary distance of z_n must decrease strictly");
    }

    VisibilityVerdict out;
    out.lambdas = opts.lambdas;
    out.floors = opts.floors;
    out.h = g.params.h;
    std::vector<CompactSlice> slices;
    for (double f : opts.floors) slices.push_back(CompactSlice{spec, f, box_of(g)});

    for (std::size_t k = 0; k < seq.z.size(); ++k) {
        VisibilityRecord r;
        r.n = k;
        r.endpoint_bdry_dist = std::max(spec.boundary_distance(seq.z[k]), spec.boundary_distance(seq.w[k]));
        r.floors_hit.assign(slices.size(), false);
        try {
            r.curve = shortest_curve(g, seq.z[k], seq.w[k]);
            r.reachable = true;
        } catch (const UnreachableError& e) {
            out.notes.push_back("n=" + std::to_string(k) + ": " + e.what());
            out.per_n.push_back(std::move(r));
            continue;
        }
        for (const auto& v : r.curve.vertices) {
            r.max_bdry_dist = std::max(r.max_bdry_dist, spec.boundary_distance(v));
            for (std::size_t f = 0; f < slices.size(); ++f)
                if (!r.floors_hit[f] && slices[f].contains(v)) r.floors_hit[f] = true;
        }
        for (const auto& c : certify_geodesic(g, r.curve, opts.lambdas, opts.pair_budget, opts.seed + k))
            r.eps_emp.push_back(c.epsilon_emp);
        out.per_n.push_back(std::move(r));
    }

    const bool all_reachable =
        std::all_of(out.per_n.begin(), out.per_n.end(), [](const auto& r) { return r.reachable; });
    if (!all_reachable) {
        out.verdict = verdict::inconclusive;
        return out;
    }
    // Non-visibility at grid resolution: the tail curves go no deeper than their endpoints plus
    // 2h while the endpoints approach the boundary; needs 2h below the top floor to mean anything.
    const double res = 2.0 * g.params.h;
    const std::size_t tail = std::min(out.per_n.size() / 2, out.per_n.size() - 1);
    bool shallow = out.per_n.size() >= 2;
    for (std::size_t k = tail; k < out.per_n.size(); ++k)
        shallow = shallow && out.per_n[k].max_bdry_dist <= out.per_n[k].endpoint_bdry_dist + res;
    const bool decays =
        out.per_n.back().endpoint_bdry_dist <= opts.decay_ratio * out.per_n.front().endpoint_bdry_dist;
    const double top = opts.floors.empty() ? 0.0 : *std::max_element(opts.floors.begin(), opts.floors.end());
    if (shallow && decays && res < top) {
        out.verdict = verdict::non_visible;
        out.notes.push_back("tail curves stay within 2h of their endpoints' boundary distance");
        return out;
    }
    for (std::size_t f = 0; f < slices.size(); ++f) {
        const bool all = std::all_of(out.per_n.begin(), out.per_n.end(), [&](const auto& r) { return r.floors_hit[f]; });
        if (all && opts.floors[f] > 0.0) {
            out.verdict = verdict::visible;
            out.notes.push_back("every curve meets the slice at floor " + fmt_num(opts.floors[f]));
            return out;
        }
    }
    out.verdict = verdict::inconclusive;
    return out;
}

SequencePair approach_pair(const DomainSpec& spec, const ComplexPoint& p, const ComplexPoint& q,
                           const VisibilityOptions& opts) {
    if (distance(p, q) == 0.0) throw InputError("visibility: p and q must differ");
    require_boundary_point(spec, p);
    require_boundary_point(spec, q);
    const ComplexPoint c = opts.interior.value_or(origin(spec.dimension()));
    SequencePair s;
    s.p = p;
    s.q = q;
    s.z = boundary_approach(spec, p, unit(c - p), opts.count, opts.rate, opts.t0);
    s.w = boundary_approach(spec, q, unit(c - q), opts.count, opts.rate, opts.t0);
    return s;
}

VisibilityVerdict pair_visibility_probe(const MetricGraph& g, const ComplexPoint& p, const ComplexPoint& q,
                                        const VisibilityOptions& opts) {
    return visibility_probe(g, approach_pair(g.spec, p, q, opts), opts);
}

std::vector<ComplexPoint> boundary_mesh(const DomainSpec& spec, const ComplexPoint& center, std::size_t count,
                                        std::uint64_t seed) {
    if (!spec.contains(center)) throw InputError("boundary_mesh: center must lie in the domain");
    if (!spec.bounded()) throw InputError("boundary_mesh: domain must be bounded");
    const std::size_t n = spec.dimension();
    std::vector<ComplexPoint> dirs;
    if (n == 1) {
        for (std::size_t k = 0; k < count; ++k)
            dirs.push_back(ComplexPoint{std::polar(1.0, 2.0 * M_PI * static_cast<double>(k) / count)});
    } else {
        dirs = random_directions(n, count, seed);
    }
    const double reach = 2.0 * (spec.bounding_radius() + norm(center));
    std::vector<ComplexPoint> out;
    for (const auto& d : dirs) {
        // First exit along the ray, then bisection.
        double lo = 0.0, hi = reach;
        const int steps = 1024;
        for (int i = 1; i <= steps; ++i) {
            const double s = reach * i / steps;
            if (!spec.contains(center + cplx(s) * d)) {
                hi = s;
                break;
            }
            lo = s;
        }
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
            const double mid = 0.5 * (lo + hi);
            (spec.contains(center + cplx(mid) * d) ? lo : hi) = mid;
        }
        out.push_back(center + cplx(lo) * d);
    }
    return out;
}

ExperimentReport pair_visibility_sweep(const MetricGraph& g, const ComplexPoint& p, const VisibilityOptions& opts) {
    require_boundary_point(g.spec, p);
    const ComplexPoint c = opts.interior.value_or(origin(g.spec.dimension()));
    const auto targets = boundary_mesh(g.spec, c, opts.mesh, opts.seed);
    ExperimentReport r;
    r.name = "pair-visibility";
    r.parameters = {{"domain", g.spec.name()}, {"p", json_point(p)}, {"h", json_num(g.params.h)},
                    {"mesh", opts.mesh}, {"seed", opts.seed}};
    const std::size_t n = g.spec.dimension();
    Table t;
    t.columns = {"target"};
    point_columns(t.columns, "q", n);
    for (const char* col : {"verdict", "last_max_bdry_dist", "max_eps_emp"}) t.columns.emplace_back(col);
    std::size_t visible = 0, non_visible = 0, used = 0;
    Json per = Json::array();
    for (std::size_t k = 0; k < targets.size(); ++k) {
        const auto& q = targets[k];
        if (distance(p, q) < 1e-6) continue;
        std::string v = verdict::inconclusive;
        double last = kInfinity, eps = 0.0;
        try {
            const auto res = pair_visibility_probe(g, p, q, opts);
            v = res.verdict;
            last = res.per_n.back().max_bdry_dist;
            for (const auto& rec : res.per_n)
                for (double e : rec.eps_emp) eps = std::max(eps, e);
            per.push_back(res.to_json());
        } catch (const Error& e) {
            r.notes.push_back("target " + std::to_string(k) + ": " + e.what());
        }
        ++used;
        visible += v == verdict::visible;
        non_visible += v == verdict::non_visible;
        std::vector<std::string> row{std::to_string(k)};
        point_cells(row, q);
        row.push_back(v);
        row.push_back(fmt_num(last));
        row.push_back(fmt_num(eps));
        t.rows.push_back(std::move(row));
    }
    r.samples = used;
    r.tables.push_back(std::move(t));
    r.statistics = {{"targets", used}, {"visible", visible}, {"non_visible", non_visible}, {"probes", per}};
    if (non_visible > 0)
        r.verdict = verdict::non_visible;
    else if (used > 0 && visible == used)
        r.verdict = verdict::visible;
    else
        r.verdict = verdict::inconclusive;
    return r;
}

Curve measure_on(const MetricGraph& g, const Curve& curve) {
    Curve c = curve;
    c.seg_lengths.clear();
    const auto node_of = [&](const ComplexPoint& z) -> std::int32_t {
        const std::int32_t id = g.node_at(g.lattice_index(z));
        return id >= 0 && distance(g.nodes[id], z) < 1e-12 ? id : -1;
    };
    for (std::size_t i = 0; i + 1 < c.vertices.size(); ++i) {
        const auto a = node_of(c.vertices[i]), b = node_of(c.vertices[i + 1]);
        double w = a >= 0 && b >= 0 ? lattice_edge_weight(g, a, b) : kInfinity;
        if (!(w < kInfinity)) w = query_weight(g, c.vertices[i], c.vertices[i + 1]);
        if (!(w < kInfinity)) throw DomainError("measure_on: curve segment leaves the graph's domain");
        c.seg_lengths.push_back(w);
    }
    return c;
}

ExperimentReport geodesic_transfer_check(const ComplexPoint& p, const Neighborhood& U, const Neighborhood& V,
                                         const Curve& curve, const MetricGraph& full, const MetricGraph& local,
                                         const TransferOptions& opts) {
    if (!V.compactly_inside(U)) throw DomainError("neighbourhoods must satisfy V ⊂⊂ U");
    for (const auto& v : curve.vertices)
        if (!V.contains(v) || !local.spec.contains(v)) throw DomainError("transfer: curve leaves Ω ∩ V");
    Curve cf = measure_on(full, curve), cl = measure_on(local, curve);
    if (!opts.penalty.empty()) {
        if (opts.penalty.size() != cf.seg_lengths.size()) throw InputError("transfer: one penalty per segment");
        for (std::size_t i = 0; i < opts.penalty.size(); ++i) {
            cf.seg_lengths[i] += opts.penalty[i];
            cl.seg_lengths[i] += opts.penalty[i];
        }
    }
    const auto ef = certify_geodesic(full, cf, opts.lambda, opts.pair_budget, opts.seed);
    const auto el = certify_geodesic(local, cl, opts.lambda, opts.pair_budget, opts.seed);
    const double defect = cl.length() - cf.length();

    ExperimentReport r;
    r.name = "geodesic-transfer";
    r.slack_budget = opts.slack_budget;
    r.parameters = {{"p", json_point(p)}, {"U", nb_json(U)}, {"V", nb_json(V)}, {"lambda", json_num(opts.lambda)},
                    {"h", json_num(full.params.h)}, {"seed", opts.seed}, {"vertices", curve.vertices.size()}};
    r.samples = ef.pairs_checked;
    r.statistics = {{"eps_full", json_num(ef.epsilon_emp)},
                    {"eps_local", json_num(el.epsilon_emp)},
                    {"length_full_upper", json_num(cf.length())},
                    {"length_local_upper", json_num(cl.length())},
                    {"length_defect", json_num(defect)},
                    {"eps_local_bound", json_num(ef.epsilon_emp + defect)}};
    // eps_local <= eps_full + defect holds exactly at graph level (local weights dominate).
    if (!std::isfinite(ef.epsilon_emp) || !std::isfinite(el.epsilon_emp)) {
        r.verdict = verdict::inconclusive;
    } else if (el.epsilon_emp > ef.epsilon_emp + defect + opts.slack_budget + 1e-12) {
        r.verdict = verdict::violated;
    } else {
        r.verdict = verdict::holds;
        if (opts.additive_sup) {
            const double bound = el.epsilon_emp + opts.lambda * *opts.additive_sup;
            r.statistics["eps_full_bound"] = json_num(bound);
            if (ef.epsilon_emp > bound + opts.slack_budget) r.verdict = verdict::inconclusive;
        }
    }
    return r;
}

ExperimentReport local_global_compare(const MetricGraph& full, const ComplexPoint& p, const ComplexPoint& q,
                                      const Neighborhood& U, const VisibilityOptions& opts) {
    const DomainSpec& spec = full.spec;
    require_boundary_point(spec, p);
    const Neighborhood V{U.center, 0.5 * U.radius};
    ExperimentReport r;
    r.name = "local-global";
    r.parameters = {{"domain", spec.name()}, {"p", json_point(p)}, {"q", json_point(q)}, {"U", nb_json(U)},
                    {"V", nb_json(V)}, {"h", json_num(full.params.h)}};

    const auto hyp = hyperbolicity_probe(spec, p, U, V, nullptr);
    r.statistics["hyperbolicity"] = hyp.verdict;
    if (hyp.verdict != verdict::holds) {
        r.verdict = verdict::inconclusive;
        r.notes.push_back("hyperbolicity at p not established");
        return r;
    }

    VisibilityOptions o = opts;
    o.t0 = std::min(opts.t0, 0.4 * U.radius);  // z_n start inside V
    const ComplexPoint c = opts.interior.value_or(origin(spec.dimension()));
    const ComplexPoint up = unit(c - p);
    const auto global_seq = approach_pair(spec, p, q, o);
    const auto vg = visibility_probe(full, global_seq, o);

    const auto local = build_local_graph(full, U);
    SequencePair ls;
    ls.p = p;
    ls.z = global_seq.z;
    const bool covers = spec.bounded() && norm(U.center) + spec.bounding_radius() <= U.radius;
    if (covers) {
        ls.q = q;
        ls.w = global_seq.w;
    } else {
        // Target on the sphere of U, approached towards an interior point of Omega ∩ U.
        ls.q = p + cplx(U.radius) * unit(q - p);
        const ComplexPoint m = p + cplx(0.5 * U.radius) * up;
        const ComplexPoint uq = unit(m - ls.q);
        double t = 0.25 * U.radius;
        for (int k = 0; k < o.count; ++k, t *= o.rate) ls.w.push_back(ls.q + cplx(t) * uq);
    }
    r.parameters["q_local"] = json_point(ls.q);
    const auto vl = visibility_probe(local, ls, o);

    // Heads of the global curves inside V, certified on the local graph.
    Table t;
    t.columns = {"n", "head_vertices", "head_eps_full", "head_eps_local", "curve_eps_full"};
    for (const auto& rec : vg.per_n) {
        if (!rec.reachable) continue;
        const auto head = truncate_at_exit(rec.curve, [&](CSpan z) { return V.contains(z); }).head;
        double ef = 0.0, el = 0.0;
        if (head.vertices.size() >= 2) {
            ef = certify_geodesic(full, measure_on(full, head), 1.0, o.pair_budget, o.seed + rec.n).epsilon_emp;
            el = certify_geodesic(local, measure_on(local, head), 1.0, o.pair_budget, o.seed + rec.n).epsilon_emp;
        }
        t.rows.push_back({std::to_string(rec.n), std::to_string(head.vertices.size()), fmt_num(ef), fmt_num(el),
                          fmt_num(rec.eps_emp.empty() ? 0.0 : rec.eps_emp.front())});
    }
    r.tables.push_back(std::move(t));
    r.samples = vg.per_n.size() + vl.per_n.size();
    const bool agree = vg.verdict == vl.verdict && vg.verdict != verdict::inconclusive;
    r.statistics["global"] = vg.to_json();
    r.statistics["local"] = vl.to_json();
    r.statistics["global_verdict"] = vg.verdict;
    r.statistics["local_verdict"] = vl.verdict;
    r.statistics["agreement"] = agree;
    r.verdict = agree ? verdict::holds : verdict::inconclusive;
    return r;
}

ExperimentReport germ_compare(const DomainSpec& a, const DomainSpec& b, const ComplexPoint& p,
                              const Neighborhood& U, const GridParams& grid, const VisibilityOptions& opts,
                              std::size_t membership_probes) {
    if (a.dimension() != b.dimension()) throw InputError("germ: dimension mismatch");
    require_boundary_point(a, p);
    require_boundary_point(b, p);
    const std::size_t n = a.dimension();
    std::mt19937_64 rng(opts.seed ^ 0x6e726d);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::size_t mismatches = 0;
    for (std::size_t k = 0; k < membership_probes; ++k) {
        ComplexPoint d{std::vector<cplx>(n)};
        for (auto& c : d.coords) c = cplx(gauss(rng), gauss(rng));
        const double rad = U.radius * std::pow(unif(rng), 1.0 / (2.0 * n));
        const ComplexPoint z = U.center + cplx(rad / norm(d)) * d;
        mismatches += a.contains(z) != b.contains(z);
    }
    if (mismatches > 0)
        throw InputError("germ: domains differ inside U at " + std::to_string(mismatches) + " of " +
                         std::to_string(membership_probes) + " probes");

    ExperimentReport r;
    r.name = "germ";
    r.parameters = {{"a", a.name()}, {"b", b.name()}, {"p", json_point(p)}, {"U", nb_json(U)},
                    {"h", json_num(grid.h)}, {"membership_probes", membership_probes}, {"mesh", opts.mesh}};
    const Neighborhood V{U.center, 0.5 * U.radius};
    for (const auto* s : {&a, &b}) {
        if (hyperbolicity_probe(*s, p, U, V, nullptr).verdict != verdict::holds) {
            r.verdict = verdict::inconclusive;
            r.notes.push_back("hyperbolicity at p not established for " + s->name());
            return r;
        }
    }
    const auto ga = build_graph(a, grid);
    const auto gb = build_graph(b, grid);
    const auto va = pair_visibility_sweep(ga, p, opts);
    const auto vb = pair_visibility_sweep(gb, p, opts);
    r.samples = va.samples + vb.samples;
    r.statistics = {{"verdict_a", va.verdict}, {"verdict_b", vb.verdict},
                    {"agreement", va.verdict == vb.verdict}, {"sweep_a", va.to_json()}, {"sweep_b", vb.to_json()}};
    r.verdict = va.verdict == vb.verdict && va.verdict != verdict::inconclusive ? verdict::holds : verdict::inconclusive;
    return r;
}

}  // namespace koblab
