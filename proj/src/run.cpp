#include <koblab/plan.hpp>

#include <koblab/csv.hpp>
#include <koblab/errors.hpp>

#include <fstream>
#include <sstream>

namespace koblab {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Json graph_json(const MetricGraph& g, const std::string& role) {
    const auto s = summarize(g);
    return Json{{"role", role},
                {"domain", g.spec.name()},
                {"node_count", s.node_count},
                {"edge_count", s.edge_count},
                {"h", json_num(s.h)},
                {"m", s.m},
                {"slack_bound", json_num(s.slack_bound)},
                {"warnings", g.warnings}};
}

ComplexPoint inward(const ExperimentPlan& plan, const ComplexPoint& p) {
    const ComplexPoint o = plan.points.count("interior") ? plan.point("interior")
                                                          : ComplexPoint{std::vector<cplx>(p.dim())};
    ComplexPoint d = p;
    for (std::size_t i = 0; i < p.dim(); ++i) d[i] = o[i] - p[i];
    return d;
}

std::vector<ComplexPoint> approach(const ExperimentPlan& plan, const ComplexPoint& p) {
    const auto& s = plan.sequences;
    return approach_sequence(plan.domain, p, inward(plan, p), s.exponents, s.count, s.rate, s.t0);
}

PointPairs approach_pairs(const ExperimentPlan& plan, const ComplexPoint& p, const ComplexPoint& q) {
    if (!plan.sequences.explicit_pairs.empty()) return plan.sequences.explicit_pairs;
    const auto zs = approach(plan, p), ws = approach(plan, q);
    PointPairs out;
    for (std::size_t i = 0; i < zs.size(); ++i) out.emplace_back(zs[i], ws[i]);
    return out;
}

VisibilityOptions visibility_options(const ExperimentPlan& plan) {
    VisibilityOptions o;
    o.lambdas = plan.lambda;
    o.floors = plan.ladder;
    o.pair_budget = plan.sequences.pair_budget;
    o.seed = plan.seed;
    o.count = plan.sequences.count;
    o.rate = plan.sequences.rate;
    o.t0 = plan.sequences.t0;
    o.mesh = plan.sequences.mesh;
    if (plan.points.count("interior")) o.interior = plan.point("interior");
    return o;
}

ExperimentReport estimate_report(const std::string& name, const MetricEstimate& e,
                                 std::optional<double> oracle, Json params) {
    ExperimentReport r;
    r.name = name;
    r.parameters = std::move(params);
    r.samples = 1;
    r.statistics = {{"lower", json_num(e.lower)},
                    {"upper", json_num(e.upper)},
                    {"lower_method", e.lower_method},
                    {"upper_method", e.upper_method},
                    {"grid_slack", json_num(e.grid_slack)}};
    if (oracle) {
        r.statistics["oracle"] = json_num(*oracle);
        r.statistics["upper_rel_error"] = json_num(std::abs(e.upper - *oracle) / *oracle);
    }
    const bool ordered = e.lower <= e.upper * (1.0 + 1e-12) + 1e-12;
    r.verdict = ordered ? verdict::holds : verdict::violated;
    if (!ordered) r.notes.push_back("lower bound exceeds upper bound");
    Table t;
    t.columns = {"lower", "upper", "lower_method", "upper_method", "grid_slack"};
    t.rows.push_back({fmt_num(e.lower), fmt_num(e.upper), e.lower_method, e.upper_method, fmt_num(e.grid_slack)});
    r.tables.push_back(std::move(t));
    return r;
}

ExperimentReport from_verdict(const VisibilityVerdict& v, Json params) {
    ExperimentReport r;
    r.name = "visibility";
    r.verdict = v.verdict;
    r.parameters = std::move(params);
    r.samples = v.per_n.size();
    r.statistics = v.to_json();
    r.notes = v.notes;
    Table t;
    t.columns = {"n", "reachable", "max_bdry_dist", "endpoint_bdry_dist"};
    for (double l : v.lambdas) t.columns.push_back("eps_emp_lambda_" + fmt_num(l));
    for (double f : v.floors) t.columns.push_back("hit_floor_" + fmt_num(f));
    for (const auto& rec : v.per_n) {
        std::vector<std::string> row{std::to_string(rec.n), rec.reachable ? "1" : "0", fmt_num(rec.max_bdry_dist),
                                     fmt_num(rec.endpoint_bdry_dist)};
        for (double e : rec.eps_emp) row.push_back(fmt_num(e));
        for (std::size_t f = 0; f < v.floors.size(); ++f)
            row.push_back(f < rec.floors_hit.size() && rec.floors_hit[f] ? "1" : "0");
        t.rows.push_back(std::move(row));
        if (rec.reachable) r.curves.push_back(rec.curve);
    }
    r.tables.push_back(std::move(t));
    return r;
}

/// Seeded pairs of sample points, joined by graph geodesics.
std::vector<Curve> sample_curves(const MetricGraph& full, const std::vector<ComplexPoint>& pts, std::size_t count,
                                 std::uint64_t seed) {
    std::vector<Curve> curves;
    if (pts.size() < 2) return curves;
    std::uint64_t state = splitmix(seed ^ 0x6c656e67ULL);
    for (std::size_t k = 0; k < count; ++k) {
        state = splitmix(state);
        const std::size_t i = state % pts.size();
        state = splitmix(state);
        std::size_t j = state % (pts.size() - 1);
        if (j >= i) ++j;
        curves.push_back(shortest_curve(full, pts[i], pts[j]));
    }
    return curves;
}

void dispatch(const ExperimentPlan& plan, ReportBundle& b) {
    const std::string& e = plan.experiment;
    const DomainSpec& spec = plan.domain;
    const GridParams gp = plan.grid_params();

    std::optional<MetricGraph> full;
    auto graph = [&]() -> const MetricGraph& {
        if (!full) {
            full.emplace(build_graph(spec, gp));
            b.graphs.push_back(graph_json(*full, "full"));
        }
        return *full;
    };
    auto nb = [&](double r) { return Neighborhood{plan.point("p"), r}; };

    if (e == "metric") {
        const auto& z = plan.point("z");
        const auto& v = plan.point("v");
        std::optional<double> oracle;
        if (spec.is_model()) oracle = royden_oracle(spec, z, v);
        b.reports.push_back(estimate_report("metric", royden_estimate(spec, z, v), oracle,
                                            {{"domain", spec.name()}, {"z", json_point(z)}, {"v", json_point(v)}}));
    } else if (e == "distance") {
        const auto& z = plan.point("z");
        const auto& w = plan.point("w");
        std::optional<double> oracle;
        if (spec.is_model()) oracle = distance_oracle(spec, z, w);
        auto r = estimate_report("distance", distance_estimate(spec, graph(), z, w), oracle,
                                 {{"domain", spec.name()}, {"z", json_point(z)}, {"w", json_point(w)},
                                  {"h", json_num(gp.h)}, {"m", gp.m}});
        // The estimate collapses to the oracle on model domains; keep the graph's own value visible.
        const double gd = graph_distance(graph(), z, w);
        r.statistics["graph_distance"] = json_num(gd);
        if (oracle) r.statistics["graph_rel_error"] = json_num(std::abs(gd - *oracle) / *oracle);
        b.reports.push_back(std::move(r));
    } else if (e == "geodesic") {
        const auto& g = graph();
        const auto c = shortest_curve(g, plan.point("z"), plan.point("w"));
        const auto certs = certify_geodesic(g, c, plan.lambda, plan.sequences.pair_budget, plan.seed);
        ExperimentReport r;
        r.name = "geodesic";
        r.verdict = verdict::holds;
        r.parameters = {{"domain", spec.name()},           {"z", json_point(plan.point("z"))},
                        {"w", json_point(plan.point("w"))}, {"h", json_num(gp.h)},
                        {"pair_budget", plan.sequences.pair_budget}};
        r.samples = certs.empty() ? 0 : certs.front().pairs_checked;
        r.statistics["length_upper"] = json_num(c.length());
        r.statistics["vertices"] = c.vertices.size();
        Json cj = Json::array();
        Table t;
        t.columns = {"lambda", "epsilon_emp", "pairs_checked", "t1", "t2"};
        for (const auto& cert : certs) {
            cj.push_back({{"lambda", json_num(cert.lambda)},
                          {"epsilon_emp", json_num(cert.epsilon_emp)},
                          {"pairs_checked", cert.pairs_checked}});
            t.rows.push_back({fmt_num(cert.lambda), fmt_num(cert.epsilon_emp), std::to_string(cert.pairs_checked),
                              fmt_num(cert.worst_pair.first), fmt_num(cert.worst_pair.second)});
        }
        r.statistics["certificates"] = cj;
        r.tables.push_back(std::move(t));
        r.curves.push_back(c);
        b.reports.push_back(std::move(r));
    } else if (e == "hyperbolicity") {
        HyperbolicityOptions o;
        o.sequences = plan.sequences.explicit_pairs;
        o.box_radius = plan.grid.box_radius.value_or(0.0);
        const MetricGraph* g = spec.bounded() ? &graph() : nullptr;
        b.reports.push_back(hyperbolicity_probe(spec, plan.point("p"), nb(*plan.U), nb(*plan.V), g, o));
    } else if (e == "royden") {
        CheckOptions o;
        o.samples = plan.sequences.samples;
        o.seed = plan.seed;
        b.reports.push_back(check_royden_lemma(spec, nb(*plan.U), o));
    } else if (e == "sarkar") {
        CheckOptions o;
        o.samples = plan.sequences.samples;
        o.seed = plan.seed;
        const MetricGraph* g = spec.bounded() || plan.grid.box_radius ? &graph() : nullptr;
        b.reports.push_back(check_sarkar_estimate(spec, plan.point("p"), nb(*plan.U), nb(*plan.V), g, o));
    } else if (e == "additive" || e == "multiplicative") {
        SurveyOptions o;
        o.pairs = plan.sequences.pairs;
        o.seed = plan.seed;
        o.sample_spacing = plan.grid.sample_spacing;
        const auto U = nb(*plan.U), V = nb(*plan.V);
        auto survey = [&](const MetricGraph& f) {
            const auto local = build_local_graph(f, U);
            b.graphs.push_back(graph_json(local, "local"));
            return e == "additive" ? additive_gap_survey(spec, plan.point("p"), U, V, f, local, o)
                                   : multiplicative_ratio_survey(spec, plan.point("p"), U, V, f, local, o);
        };
        auto coarse = survey(graph());
        if (plan.grid.refine) {
            GridParams fine_params = gp;
            fine_params.h = gp.h / 2.0;
            const auto fine_graph = build_graph(spec, fine_params);
            b.graphs.push_back(graph_json(fine_graph, "full-refined"));
            auto fine = survey(fine_graph);
            auto cmp = refinement_comparison(coarse, fine, e == "additive" ? "sup_gap" : "sup_ratio", 0.1);
            b.reports.push_back(std::move(coarse));
            b.reports.push_back(std::move(fine));
            b.reports.push_back(std::move(cmp));
        } else {
            b.reports.push_back(std::move(coarse));
        }
    } else if (e == "length-localization") {
        const auto U = nb(*plan.U), V = nb(*plan.V);
        const auto& f = graph();
        const auto local = build_local_graph(f, U);
        b.graphs.push_back(graph_json(local, "local"));
        const auto pts = survey_points(local, V, plan.grid.sample_spacing);
        const auto curves = sample_curves(f, pts, plan.sequences.pairs, plan.seed);
        b.reports.push_back(length_localization_survey(spec, plan.point("p"), U, V, curves, gp.m));
    } else if (e == "gromov") {
        const auto& p = plan.point("p");
        const auto& q = plan.point("q");
        b.reports.push_back(gromov_property_probe(graph(), p, q, plan.point("o"), approach_pairs(plan, p, q)));
    } else if (e == "weak-gromov") {
        const auto& p = plan.point("p");
        std::vector<ComplexPoint> qs = plan.targets;
        if (qs.empty()) qs.push_back(plan.point("q"));
        std::vector<WeakGromovTarget> targets;
        for (const auto& q : qs) targets.push_back({q, approach_pairs(plan, p, q)});
        b.reports.push_back(weak_gromov_probe(graph(), p, plan.point("o"), targets));
    } else if (e == "visibility") {
        const auto& p = plan.point("p");
        const auto& q = plan.point("q");
        const auto vo = visibility_options(plan);
        SequencePair seq;
        if (plan.sequences.explicit_pairs.empty()) {
            seq = approach_pair(spec, p, q, vo);
        } else {
            seq.p = p;
            seq.q = q;
            for (const auto& [z, w] : plan.sequences.explicit_pairs) {
                seq.z.push_back(z);
                seq.w.push_back(w);
            }
        }
        std::optional<Neighborhood> U, V;
        if (plan.U) U = nb(*plan.U);
        if (plan.V) V = nb(*plan.V);
        const auto v = visibility_probe(graph(), seq, vo, U ? &*U : nullptr, V ? &*V : nullptr);
        b.reports.push_back(from_verdict(v, {{"domain", spec.name()}, {"p", json_point(p)}, {"q", json_point(q)},
                                             {"h", json_num(gp.h)}, {"terms", seq.z.size()}}));
    } else if (e == "pair-visibility") {
        b.reports.push_back(pair_visibility_sweep(graph(), plan.point("p"), visibility_options(plan)));
    } else if (e == "transfer") {
        const auto U = nb(*plan.U), V = nb(*plan.V);
        const auto& f = graph();
        const auto local = build_local_graph(f, U);
        b.graphs.push_back(graph_json(local, "local"));
        TransferOptions o;
        o.lambda = plan.lambda.front();
        o.seed = plan.seed;
        const auto& z = plan.point("z");
        const auto& w = plan.point("w");
        for (const auto* g : {&local, &f}) {
            const auto c = shortest_curve(*g, z, w);
            auto r = geodesic_transfer_check(plan.point("p"), U, V, c, f, local, o);
            r.parameters["curve_source"] = g == &local ? "local" : "full";
            r.curves.push_back(c);
            b.reports.push_back(std::move(r));
        }
    } else if (e == "local-global") {
        b.reports.push_back(local_global_compare(graph(), plan.point("p"), plan.point("q"), nb(*plan.U),
                                                 visibility_options(plan)));
    } else if (e == "germ") {
        b.reports.push_back(germ_compare(spec, *plan.compare, plan.point("p"), nb(*plan.U), gp,
                                         visibility_options(plan)));
    } else {
        throw InputError("unknown experiment '" + e + "'");
    }
}

template <class E>
[[noreturn]] void rethrow_with(const E& e, const std::string& context) {
    throw E(context + ": " + e.what());
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

bool ReportBundle::any_violated() const {
    for (const auto& r : reports)
        if (r.verdict == verdict::violated) return true;
    return false;
}

ReportBundle run_plan(const ExperimentPlan& plan) {
    ReportBundle b;
    b.experiment = plan.experiment;
    b.seed = plan.seed;
    b.plan = plan.to_json();
    b.plan.erase("out");  // the output directory does not change results
    const std::string ctx = plan.experiment + " on " + plan.domain.name();
    try {
        dispatch(plan, b);
    } catch (const DegenerateGridError& e) {
        rethrow_with(e, ctx);
    } catch (const UnreachableError& e) {
        rethrow_with(e, ctx);
    } catch (const UnsupportedError& e) {
        rethrow_with(e, ctx);
    } catch (const NumericError& e) {
        rethrow_with(e, ctx);
    } catch (const DomainError& e) {
        rethrow_with(e, ctx);
    } catch (const InputError& e) {
        rethrow_with(e, ctx);
    }
    return b;
}

std::vector<std::string> emit_reports(const ReportBundle& bundle, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw IoError("cannot create output directory " + dir.string() + (ec ? ": " + ec.message() : ""));

    std::vector<std::string> files{"summary.json"};
    const std::string prefix = bundle.experiment + "-" + std::to_string(bundle.seed) + "-";
    std::size_t next = 0;
    Json reports = Json::array();
    for (const auto& r : bundle.reports) {
        Json rj = r.to_json();
        Json listed = Json::array();
        auto emit = [&](const std::string& kind, const std::string& content) {
            const std::string name = prefix + std::to_string(next++) + ".csv";
            write_file(dir / name, content);
            files.push_back(name);
            listed.push_back({{"kind", kind}, {"file", name}});
        };
        for (const auto& t : r.tables) {
            std::ostringstream os;
            t.write_csv(os);
            emit("table", os.str());
        }
        for (const auto& c : r.curves) {
            std::ostringstream os;
            write_curve_csv(os, c);
            emit("curve", os.str());
        }
        rj["files"] = listed;
        reports.push_back(std::move(rj));
    }
    Json summary{{"experiment", bundle.experiment},
                 {"seed", bundle.seed},
                 {"plan", bundle.plan},
                 {"graphs", bundle.graphs},
                 {"reports", reports}};
    write_file(dir / "summary.json", summary.dump(2) + "\n");
    return files;
}

}  // namespace koblab
