#include <koblab/csv.hpp>
#include <koblab/errors.hpp>
#include <koblab/localization.hpp>
#include <koblab/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace koblab {

namespace {

Json nb_json(const Neighborhood& nb) {
    return Json{{"center", json_point(nb.center)}, {"radius", json_num(nb.radius)}};
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void require_nesting(const Neighborhood& U, const Neighborhood& V) {
    if (!V.compactly_inside(U)) throw DomainError("neighbourhoods must satisfy V ⊂⊂ U");
}

int stratum_of(double delta, double base) {
    if (delta < base) return 0;
    return 1 + static_cast<int>(std::floor(std::log2(delta / base)));
}

double stratum_lower(int s, double base) { return s == 0 ? 0.0 : base * std::ldexp(1.0, s - 1); }

struct Pair {
    std::size_t i, j;
};

std::vector<Pair> draw_pairs(std::size_t n, std::size_t count, std::uint64_t seed) {
    std::vector<Pair> out;
    if (n < 2) return out;
    const std::size_t total = n * (n - 1) / 2;
    std::mt19937_64 rng(seed);
    if (count >= total) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) out.push_back({i, j});
        return out;
    }
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::map<std::pair<std::size_t, std::size_t>, bool> seen;
    // A quarter of the pairs join a random point to its nearest neighbour (small distances).
    const std::size_t near = count / 4;
    while (out.size() < near) {
        const std::size_t i = pick(rng);
        out.push_back({i, i});  // partner resolved by resolve_near_pairs
    }
    while (out.size() < count) {
        std::size_t i = pick(rng), j = pick(rng);
        if (i == j) continue;
        if (i > j) std::swap(i, j);
        if (seen.emplace(std::make_pair(i, j), true).second) out.push_back({i, j});
    }
    return out;
}

void resolve_near_pairs(std::vector<Pair>& pairs, const std::vector<ComplexPoint>& pts) {
    for (auto& pr : pairs) {
        if (pr.i != pr.j) continue;
        double best = kInfinity;
        std::size_t arg = pr.i;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            if (k == pr.i) continue;
            const double d = distance(pts[pr.i], pts[k]);
            if (d < best) {
                best = d;
                arg = k;
            }
        }
        pr.j = arg;
        if (pr.i > pr.j) std::swap(pr.i, pr.j);
    }
}

// Distances between the pair endpoints on one graph, one Dijkstra per distinct first index.
std::vector<double> pair_distances(const MetricGraph& g, const std::vector<ComplexPoint>& pts,
                                   const std::vector<Pair>& pairs) {
    std::map<std::size_t, std::vector<std::size_t>> by_first;
    for (std::size_t k = 0; k < pairs.size(); ++k) by_first[pairs[k].i].push_back(k);
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> jobs(by_first.begin(), by_first.end());
    std::vector<double> out(pairs.size(), kInfinity);
    parallel_for(jobs.size(), [&](std::size_t t) {
        const auto& [i, ks] = jobs[t];
        std::vector<ComplexPoint> targets;
        for (auto k : ks) targets.push_back(pts[pairs[k].j]);
        const auto d = graph_distances(g, pts[i], targets);
        for (std::size_t r = 0; r < ks.size(); ++r) out[ks[r]] = d[r];
    });
    return out;
}

// Divergence trend across strata: sup values increase inward over >= 3 strata and the innermost
// exceeds twice the outermost plus an absolute allowance.
bool diverging(const std::map<int, double>& sup_by_stratum, double allowance) {
    if (sup_by_stratum.size() < 3) return false;
    double prev = -kInfinity;
    for (auto it = sup_by_stratum.rbegin(); it != sup_by_stratum.rend(); ++it) {
        if (it->second <= prev) return false;
        prev = it->second;
    }
    return sup_by_stratum.begin()->second > 2.0 * sup_by_stratum.rbegin()->second + allowance;
}

Json strata_json(const std::map<int, std::pair<std::size_t, double>>& strata, double base,
                 const char* key) {
    Json a = Json::array();
    for (const auto& [s, cv] : strata)
        a.push_back({{"stratum_lower", json_num(stratum_lower(s, base))}, {"count", cv.first},
                     {key, json_num(cv.second)}});
    return a;
}

std::vector<ComplexPoint> sphere_probes(const Neighborhood& nb, std::size_t n, int count) {
    std::vector<ComplexPoint> out;
    const double r = nb.radius * (1.0 + 1e-9);
    if (n == 1) {
        for (int k = 0; k < count; ++k)
            out.push_back(ComplexPoint{nb.center[0] + std::polar(r, 2.0 * M_PI * k / count)});
        return out;
    }
    for (const auto& d : random_directions(n, static_cast<std::size_t>(count), 0x5eedULL)) {
        ComplexPoint w = nb.center;
        for (std::size_t j = 0; j < n; ++j) w[j] += r * d[j];
        out.push_back(std::move(w));
    }
    return out;
}

// Distances from a to each target: exact on model domains when allowed, graph otherwise.
std::vector<double> source_distances(const MetricGraph& g, bool oracle, CSpan a,
                                     const std::vector<ComplexPoint>& targets) {
    if (!oracle) return graph_distances(g, a, targets);
    std::vector<double> out;
    for (const auto& t : targets) out.push_back(distance_oracle(g.spec, a, t));
    return out;
}

}  // namespace

std::vector<ComplexPoint> sample_in_ball(const DomainSpec& spec, const Neighborhood& nb,
                                         std::size_t count, std::uint64_t seed) {
    const std::size_t n = spec.dimension();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<ComplexPoint> out;
    const std::size_t max_attempts = 1000 * std::max<std::size_t>(count, 1);
    for (std::size_t attempt = 0; attempt < max_attempts && out.size() < count; ++attempt) {
        std::vector<cplx> d(n);
        for (auto& c : d) c = cplx(gauss(rng), gauss(rng));
        const double dn = norm(d);
        const double r = nb.radius * std::pow(unif(rng), 1.0 / (2.0 * n));
        ComplexPoint z = nb.center;
        for (std::size_t j = 0; j < n; ++j) z[j] += r * d[j] / dn;
        if (spec.contains(z) && nb.contains(z)) out.push_back(std::move(z));
    }
    return out;
}

std::vector<ComplexPoint> random_directions(std::size_t n, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<ComplexPoint> out;
    while (out.size() < count) {
        std::vector<cplx> d(n);
        for (auto& c : d) c = cplx(gauss(rng), gauss(rng));
        const double dn = norm(d);
        if (dn == 0.0) continue;
        for (auto& c : d) c /= dn;
        out.emplace_back(std::move(d));
    }
    return out;
}

double set_distance_lower(const DomainSpec& spec, const Neighborhood& U, const Neighborhood& V) {
    if (!spec.bounded()) return 0.0;
    const double R = spec.bounding_radius();
    if (norm(U.center) + R <= U.radius) return kInfinity;
    return std::max(0.0, U.radius - V.radius - distance(U.center, V.center)) / R;
}

double point_set_distance_lower(const DomainSpec& spec, CSpan x, const Neighborhood& U) {
    if (!spec.bounded()) return 0.0;
    const double R = spec.bounding_radius();
    if (norm(U.center) + R <= U.radius) return kInfinity;
    return std::max(0.0, U.radius - distance(x, U.center)) / R;
}

double sarkar_constant(double k) {
    if (!(k > 0.0)) throw InputError("sarkar: set-distance lower bound must be positive");
    return std::isinf(k) ? 1.0 : 1.0 / std::tanh(k);
}

double sarkar_factor(double C, double k) { return 1.0 + C * std::exp(-k); }

ExperimentReport hyperbolicity_probe(const DomainSpec& spec, const ComplexPoint& p,
                                     const Neighborhood& U, const Neighborhood& V,
                                     const MetricGraph* graph, const HyperbolicityOptions& opts) {
    require_boundary_point(spec, p);
    require_nesting(U, V);
    ExperimentReport r;
    r.name = "hyperbolicity";
    r.parameters = {{"domain", spec.name()}, {"p", json_point(p)}, {"U", nb_json(U)}, {"V", nb_json(V)}};

    const double lower = set_distance_lower(spec, U, V);
    double upper = kInfinity;
    if (graph) {
        upper = set_distance(
            *graph, [&](CSpan z) { return V.contains(z); }, [&](CSpan z) { return !U.contains(z); });
    }
    r.statistics["set_distance_lower"] = json_num(lower);
    r.statistics["set_distance_upper"] = json_num(upper);

    if (spec.bounded()) {
        r.samples = 1;
        r.verdict = lower > 0.0 ? verdict::holds : verdict::inconclusive;
        r.notes.push_back("bounded domain: k(Ω∩V, Ω\\U) ≥ (r_U − r_V)/R from Ω ⊂ B(0,R)");
        return r;
    }

    const std::size_t n = spec.dimension();
    Table t;
    t.columns = {"n"};
    point_columns(t.columns, "z", n);
    point_columns(t.columns, "w", n);
    for (const char* c : {"lempert_upper", "distance_lower", "escaped"}) t.columns.emplace_back(c);
    std::vector<double> l(opts.sequences.size()), k(opts.sequences.size());
    parallel_for(opts.sequences.size(), [&](std::size_t i) {
        const auto& [z, w] = opts.sequences[i];
        l[i] = lempert_upper(spec, z, w);
        k[i] = distance_lower(spec, z, w);
    });
    double min_lower = kInfinity;
    bool monotone = true;
    for (std::size_t i = 0; i < opts.sequences.size(); ++i) {
        const auto& [z, w] = opts.sequences[i];
        std::vector<std::string> row{std::to_string(i)};
        point_cells(row, z);
        point_cells(row, w);
        const bool escaped = opts.box_radius > 0.0 && norm(w) > opts.box_radius;
        row.push_back(fmt_num(l[i]));
        row.push_back(fmt_num(k[i]));
        row.push_back(escaped ? "1" : "0");
        t.rows.push_back(std::move(row));
        min_lower = std::min(min_lower, k[i]);
        if (i > 0 && l[i] > l[i - 1]) monotone = false;
    }
    r.samples = opts.sequences.size();
    r.tables.push_back(std::move(t));
    r.parameters["box_radius"] = json_num(opts.box_radius);
    r.parameters["decay_ratio"] = json_num(opts.decay_ratio);
    if (opts.sequences.empty()) {
        r.verdict = verdict::inconclusive;
        r.notes.push_back("unbounded domain without sequences");
        return r;
    }
    r.statistics["lempert_upper_first"] = json_num(l.front());
    r.statistics["lempert_upper_last"] = json_num(l.back());
    r.statistics["distance_lower_min"] = json_num(min_lower);
    if (min_lower > 0.0) {
        r.verdict = verdict::holds;
    } else if (monotone && l.size() >= 2 && l.back() <= opts.decay_ratio * l.front()) {
        r.verdict = verdict::violated;
        r.notes.push_back("Lempert upper bounds decay to 0 along z_n → p, w_n escaping: not hyperbolic at p");
    } else {
        r.verdict = verdict::inconclusive;
    }
    return r;
}

ExperimentReport check_royden_lemma_at(const DomainSpec& spec, const Neighborhood& D,
                                       const std::vector<TangentVector>& samples,
                                       const CheckOptions& opts) {
    const auto local = intersect_with_ball(spec, D);
    const std::size_t n = spec.dimension();
    for (const auto& s : samples)
        if (all_zero(s.dir)) throw InputError("royden: zero tangent vector");
    const auto probes = sphere_probes(D, n, opts.boundary_probes);

    struct Row {
        double lt_lo, lt_hi;
        MetricEstimate kl, ko;
    };
    std::vector<Row> rows(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        const auto& z = samples[i].base;
        const auto& v = samples[i].dir;
        Row& row = rows[i];
        row.ko = royden_estimate(spec, z, v, opts.search);
        row.kl = royden_estimate(local, z, v, opts.search);
        row.lt_lo = std::tanh(point_set_distance_lower(spec, z, D));
        row.lt_hi = 1.0;
        const auto probe = [&](const ComplexPoint& w) {
            if (spec.contains(w)) row.lt_hi = std::min(row.lt_hi, std::tanh(lempert_upper(spec, z, w)));
        };
        for (const auto& w : probes) probe(w);
        // Nearest point of the sphere, just outside D.
        const double dz = distance(z, D.center);
        if (dz > 0.0) probe(D.center + cplx(D.radius * (1.0 + 1e-9) / dz) * (ComplexPoint(z) - D.center));
    });

    ExperimentReport r;
    r.name = "royden";
    r.slack_budget = opts.slack_budget;
    r.parameters = {{"domain", spec.name()}, {"D", nb_json(D)}, {"samples", samples.size()},
                    {"seed", opts.seed}, {"boundary_probes", opts.boundary_probes}};
    Table t;
    t.columns = {"index"};
    point_columns(t.columns, "z", n);
    point_columns(t.columns, "v", n);
    for (const char* c : {"ltilde_lower", "ltilde_upper", "kappa_local_lower", "kappa_local_upper",
                          "kappa_lower", "kappa_upper", "margin_upper", "margin_lower"})
        t.columns.emplace_back(c);
    InequalityTally tally;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& row = rows[i];
        const double sound = row.ko.upper - row.lt_lo * row.kl.lower;
        const double certified = row.ko.lower - row.lt_hi * row.kl.upper;
        tally.add(sound, certified, opts.slack_budget);
        std::vector<std::string> cells{std::to_string(i)};
        point_cells(cells, samples[i].base);
        point_cells(cells, samples[i].dir);
        for (double x : {row.lt_lo, row.lt_hi, row.kl.lower, row.kl.upper, row.ko.lower, row.ko.upper,
                         sound, certified})
            cells.push_back(fmt_num(x));
        t.rows.push_back(std::move(cells));
    }
    r.samples = samples.size();
    r.tables.push_back(std::move(t));
    r.verdict = tally.verdict();
    r.statistics = {{"strict", tally.strict},
                    {"sound_violations", tally.sound_violations},
                    {"worst_margin_upper", json_num(tally.worst_margin)}};
    if (samples.empty()) r.notes.push_back("no samples in Ω∩D");
    return r;
}

ExperimentReport check_royden_lemma(const DomainSpec& spec, const Neighborhood& D, const CheckOptions& opts) {
    const auto pts = sample_in_ball(spec, D, opts.samples, mix(opts.seed, 1));
    const auto dirs = random_directions(spec.dimension(), pts.size(), mix(opts.seed, 2));
    std::vector<TangentVector> samples;
    for (std::size_t i = 0; i < pts.size(); ++i) samples.push_back({pts[i], dirs[i]});
    return check_royden_lemma_at(spec, D, samples, opts);
}

ExperimentReport check_sarkar_estimate(const DomainSpec& spec, const ComplexPoint& p,
                                       const Neighborhood& U, const Neighborhood& V,
                                       const MetricGraph* graph, const CheckOptions& opts) {
    require_boundary_point(spec, p);
    require_nesting(U, V);
    ExperimentReport r;
    r.name = "sarkar";
    r.slack_budget = opts.slack_budget;
    r.parameters = {{"domain", spec.name()}, {"p", json_point(p)}, {"U", nb_json(U)}, {"V", nb_json(V)},
                    {"samples", opts.samples}, {"seed", opts.seed}};

    const double kset = set_distance_lower(spec, U, V);
    r.statistics["set_distance_lower"] = json_num(kset);
    if (graph) {
        r.statistics["set_distance_upper"] = json_num(set_distance(
            *graph, [&](CSpan z) { return V.contains(z); }, [&](CSpan z) { return !U.contains(z); }));
    }
    if (!(kset > 0.0)) {
        r.verdict = verdict::inconclusive;
        r.notes.push_back("set-distance lower bound is 0: C = coth(0) undefined");
        return r;
    }
    const double C = sarkar_constant(kset);
    r.statistics["C"] = json_num(C);

    const auto local = intersect_with_ball(spec, U);
    const auto pts = sample_in_ball(spec, V, opts.samples, mix(opts.seed, 1));
    const auto dirs = random_directions(spec.dimension(), pts.size(), mix(opts.seed, 2));
    struct Row {
        double kx, factor;
        MetricEstimate kl, ko;
    };
    std::vector<Row> rows(pts.size());
    parallel_for(pts.size(), [&](std::size_t i) {
        Row& row = rows[i];
        row.kl = royden_estimate(local, pts[i], dirs[i], opts.search);
        row.ko = royden_estimate(spec, pts[i], dirs[i], opts.search);
        row.kx = point_set_distance_lower(spec, pts[i], U);
        row.factor = sarkar_factor(C, row.kx);
    });

    const std::size_t n = spec.dimension();
    Table t;
    t.columns = {"index"};
    point_columns(t.columns, "x", n);
    point_columns(t.columns, "v", n);
    for (const char* c : {"k_exit_lower", "factor_upper", "kappa_local_lower", "kappa_local_upper",
                          "kappa_lower", "kappa_upper", "margin_upper", "slack_lower"})
        t.columns.emplace_back(c);
    InequalityTally tally;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& row = rows[i];
        const double sound = row.factor * row.ko.upper - row.kl.lower;
        const double certified = row.factor * row.ko.lower - row.kl.upper;
        tally.add(sound, certified, opts.slack_budget);
        std::vector<std::string> cells{std::to_string(i)};
        point_cells(cells, pts[i]);
        point_cells(cells, dirs[i]);
        for (double x : {row.kx, row.factor, row.kl.lower, row.kl.upper, row.ko.lower, row.ko.upper, sound,
                         certified})
            cells.push_back(fmt_num(x));
        t.rows.push_back(std::move(cells));
    }
    r.samples = pts.size();
    r.tables.push_back(std::move(t));
    r.verdict = tally.verdict();
    r.statistics["strict"] = tally.strict;
    r.statistics["strict_fraction"] = json_num(pts.empty() ? 0.0 : double(tally.strict) / pts.size());
    r.statistics["sound_violations"] = tally.sound_violations;
    r.statistics["worst_margin_upper"] = json_num(tally.worst_margin);
    return r;
}

std::vector<ComplexPoint> survey_points(const MetricGraph& local, const Neighborhood& V, double spacing) {
    const DomainSpec& omega = local.parent_spec ? *local.parent_spec : local.spec;
    std::vector<ComplexPoint> out;
    for (const auto& z : local.nodes) {
        if (!V.contains(z)) continue;
        if (spacing > 0.0) {
            bool on = true;
            for (const auto& c : z.coords)
                for (double x : {c.real(), c.imag()}) on = on && std::abs(x / spacing - std::round(x / spacing)) < 1e-6;
            if (!on || omega.boundary_distance(z) < local.params.margin * spacing) continue;
        }
        out.push_back(z);
    }
    return out;
}

namespace {

struct SurveyData {
    std::vector<ComplexPoint> pts;
    std::vector<Pair> pairs;
    std::vector<double> full, local;
    std::vector<int> stratum;
};

SurveyData run_survey(const DomainSpec& spec, const Neighborhood& V, const MetricGraph& full,
                      const MetricGraph& local, const SurveyOptions& opts) {
    SurveyData s;
    s.pts = survey_points(local, V, opts.sample_spacing);
    s.pairs = draw_pairs(s.pts.size(), opts.pairs, mix(opts.seed, 3));
    resolve_near_pairs(s.pairs, s.pts);
    s.full = pair_distances(full, s.pts, s.pairs);
    s.local = pair_distances(local, s.pts, s.pairs);
    for (const auto& pr : s.pairs) {
        const double d = std::min(spec.boundary_distance(s.pts[pr.i]), spec.boundary_distance(s.pts[pr.j]));
        s.stratum.push_back(stratum_of(d, opts.stratum_base));
    }
    return s;
}

std::vector<std::string> pair_columns(std::size_t n) {
    std::vector<std::string> c{"pair_id"};
    point_columns(c, "z", n);
    point_columns(c, "w", n);
    return c;
}

Json survey_params(const DomainSpec& spec, const ComplexPoint& p, const Neighborhood& U,
                   const Neighborhood& V, const MetricGraph& full, const SurveyOptions& opts) {
    return {{"domain", spec.name()}, {"p", json_point(p)}, {"U", nb_json(U)}, {"V", nb_json(V)},
            {"h", json_num(full.params.h)}, {"m", full.params.m}, {"pairs", opts.pairs},
            {"seed", opts.seed}, {"sample_spacing", json_num(opts.sample_spacing)},
            {"stratum_base", json_num(opts.stratum_base)}};
}

}  // namespace

ExperimentReport additive_gap_survey(const DomainSpec& spec, const ComplexPoint& p, const Neighborhood& U,
                                     const Neighborhood& V, const MetricGraph& full,
                                     const MetricGraph& local, const SurveyOptions& opts) {
    require_boundary_point(spec, p);
    require_nesting(U, V);
    const auto s = run_survey(spec, V, full, local, opts);
    ExperimentReport r;
    r.name = "additive";
    r.slack_budget = opts.slack_budget;
    r.parameters = survey_params(spec, p, U, V, full, opts);

    Table t;
    t.columns = pair_columns(spec.dimension());
    for (const char* c : {"dist_full_upper", "dist_local_upper", "graph_gap", "stratum_lower"})
        t.columns.emplace_back(c);
    std::map<int, std::pair<std::size_t, double>> strata;
    std::size_t excluded = 0, used = 0;
    double sup = -kInfinity, inf = kInfinity;
    for (std::size_t k = 0; k < s.pairs.size(); ++k) {
        const auto& pr = s.pairs[k];
        std::vector<std::string> row{std::to_string(k)};
        point_cells(row, s.pts[pr.i]);
        point_cells(row, s.pts[pr.j]);
        const double gap = s.local[k] - s.full[k];
        row.push_back(fmt_num(s.full[k]));
        row.push_back(fmt_num(s.local[k]));
        row.push_back(fmt_num(std::isfinite(gap) ? gap : kInfinity));
        row.push_back(fmt_num(stratum_lower(s.stratum[k], opts.stratum_base)));
        t.rows.push_back(std::move(row));
        if (!std::isfinite(s.local[k]) || !std::isfinite(s.full[k])) {
            ++excluded;
            continue;
        }
        ++used;
        sup = std::max(sup, gap);
        inf = std::min(inf, gap);
        auto& st = strata[s.stratum[k]];
        st.first++;
        st.second = std::max(st.first == 1 ? -kInfinity : st.second, gap);
    }
    r.samples = used;
    r.tables.push_back(std::move(t));
    std::map<int, double> sups;
    for (const auto& [k, cv] : strata) sups[k] = cv.second;
    const bool div = diverging(sups, 0.1);
    r.statistics = {{"sup_gap", json_num(sup)},  {"min_gap", json_num(inf)},
                    {"points", s.pts.size()},    {"excluded_disconnected", excluded},
                    {"diverging", div},          {"strata", strata_json(strata, opts.stratum_base, "sup_gap")}};
    if (used == 0)
        r.verdict = verdict::inconclusive;
    else if (inf < -opts.slack_budget)
        r.verdict = verdict::violated;
    else
        r.verdict = div ? verdict::inconclusive : verdict::holds;
    return r;
}

ExperimentReport multiplicative_ratio_survey(const DomainSpec& spec, const ComplexPoint& p,
                                             const Neighborhood& U, const Neighborhood& V,
                                             const MetricGraph& full, const MetricGraph& local,
                                             const SurveyOptions& opts) {
    require_boundary_point(spec, p);
    require_nesting(U, V);
    const auto s = run_survey(spec, V, full, local, opts);
    ExperimentReport r;
    r.name = "multiplicative";
    r.slack_budget = opts.slack_budget;
    r.parameters = survey_params(spec, p, U, V, full, opts);
    r.parameters["ratio_floor"] = json_num(opts.ratio_floor);

    Table t;
    t.columns = pair_columns(spec.dimension());
    for (const char* c : {"dist_full_upper", "dist_local_upper", "graph_ratio", "below_floor", "stratum_lower"})
        t.columns.emplace_back(c);
    std::map<int, std::pair<std::size_t, double>> strata;
    std::size_t excluded = 0, below = 0, used = 0;
    double sup = -kInfinity, inf = kInfinity, min_full = kInfinity;
    for (std::size_t k = 0; k < s.pairs.size(); ++k) {
        const auto& pr = s.pairs[k];
        const bool small = s.full[k] < opts.ratio_floor;
        const double ratio = small ? kInfinity : s.local[k] / s.full[k];
        std::vector<std::string> row{std::to_string(k)};
        point_cells(row, s.pts[pr.i]);
        point_cells(row, s.pts[pr.j]);
        row.push_back(fmt_num(s.full[k]));
        row.push_back(fmt_num(s.local[k]));
        row.push_back(fmt_num(ratio));
        row.push_back(small ? "1" : "0");
        row.push_back(fmt_num(stratum_lower(s.stratum[k], opts.stratum_base)));
        t.rows.push_back(std::move(row));
        if (!std::isfinite(s.local[k]) || !std::isfinite(s.full[k])) {
            ++excluded;
            continue;
        }
        if (small) {
            ++below;
            continue;
        }
        ++used;
        min_full = std::min(min_full, s.full[k]);
        sup = std::max(sup, ratio);
        inf = std::min(inf, ratio);
        auto& st = strata[s.stratum[k]];
        st.first++;
        st.second = std::max(st.first == 1 ? -kInfinity : st.second, ratio);
    }
    r.samples = used;
    r.tables.push_back(std::move(t));
    std::map<int, double> sups;
    for (const auto& [k, cv] : strata) sups[k] = cv.second;
    const bool div = diverging(sups, 0.1);
    r.statistics = {{"sup_ratio", json_num(sup)},
                    {"min_ratio", json_num(inf)},
                    {"min_dist_full_upper", json_num(min_full)},
                    {"points", s.pts.size()},
                    {"excluded_disconnected", excluded},
                    {"excluded_below_floor", below},
                    {"diverging", div},
                    {"strata", strata_json(strata, opts.stratum_base, "sup_ratio")}};
    if (used == 0)
        r.verdict = verdict::inconclusive;
    else if (inf < 1.0 - opts.slack_budget)
        r.verdict = verdict::violated;
    else
        r.verdict = div || !std::isfinite(sup) ? verdict::inconclusive : verdict::holds;
    return r;
}

ExperimentReport refinement_comparison(const ExperimentReport& coarse, const ExperimentReport& fine,
                                       const std::string& statistic, double tolerance) {
    ExperimentReport r;
    r.name = coarse.name + "-refinement";
    r.parameters = {{"statistic", statistic}, {"tolerance", json_num(tolerance)},
                    {"coarse", coarse.parameters}, {"fine", fine.parameters}};
    const auto get = [&](const ExperimentReport& e) {
        const auto& v = e.statistics.at(statistic);
        return v.is_number() ? v.get<double>() : kInfinity;
    };
    const double c = get(coarse), f = get(fine);
    const double rel = std::abs(f - c) / std::max(std::abs(c), 1e-300);
    r.statistics = {{"coarse", json_num(c)}, {"fine", json_num(f)}, {"relative_change", json_num(rel)}};
    r.samples = 2;
    r.verdict = std::isfinite(rel) && rel <= tolerance ? verdict::holds : verdict::inconclusive;
    return r;
}

ExperimentReport length_localization_survey(const DomainSpec& spec, const ComplexPoint& p,
                                            const Neighborhood& U, const Neighborhood& V,
                                            const std::vector<Curve>& curves, int m) {
    require_boundary_point(spec, p);
    require_nesting(U, V);
    const auto local = intersect_with_ball(spec, U);
    ExperimentReport r;
    r.name = "length-localization";
    r.parameters = {{"domain", spec.name()}, {"p", json_point(p)}, {"U", nb_json(U)}, {"V", nb_json(V)},
                    {"m", m}, {"curves", curves.size()}};
    std::vector<double> lo(curves.size(), 0.0), ll(curves.size(), 0.0);
    std::vector<char> inside(curves.size(), 1);
    for (std::size_t i = 0; i < curves.size(); ++i)
        for (const auto& v : curves[i].vertices) inside[i] = inside[i] && V.contains(v) && spec.contains(v);
    parallel_for(curves.size(), [&](std::size_t i) {
        if (!inside[i]) return;
        lo[i] = kob_length(spec, curves[i].vertices, m).upper;
        ll[i] = kob_length(local, curves[i].vertices, m).upper;
    });
    Table t;
    t.columns = {"curve", "vertices", "length_full_upper", "length_local_upper", "defect", "excluded"};
    std::size_t excluded = 0, used = 0;
    double sup = -kInfinity, inf = kInfinity;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const double defect = ll[i] - lo[i];
        t.rows.push_back({std::to_string(i), std::to_string(curves[i].vertices.size()), fmt_num(lo[i]),
                          fmt_num(ll[i]), fmt_num(defect), inside[i] ? "0" : "1"});
        if (!inside[i]) {
            ++excluded;
            continue;
        }
        ++used;
        sup = std::max(sup, defect);
        inf = std::min(inf, defect);
    }
    r.samples = used;
    r.tables.push_back(std::move(t));
    r.statistics = {{"sup_defect", json_num(sup)}, {"min_defect", json_num(inf)}, {"excluded_outside_V", excluded}};
    if (used == 0)
        r.verdict = verdict::inconclusive;
    else if (inf < -r.slack_budget)
        r.verdict = verdict::violated;
    else
        r.verdict = std::isfinite(sup) ? verdict::holds : verdict::inconclusive;
    return r;
}

double gromov_product(const MetricGraph& g, CSpan z, CSpan w, CSpan o) {
    const auto dz = graph_distances(g, z, {ComplexPoint(w), ComplexPoint(o)});
    const double dwo = graph_distance(g, w, o);
    if (!std::isfinite(dz[0]) || !std::isfinite(dz[1]))
        throw UnreachableError("gromov_product: points are not connected");
    return std::max(0.0, 0.5 * (dz[1] + dwo - dz[0]));
}

ExperimentReport gromov_property_probe(const MetricGraph& g, const ComplexPoint& p, const ComplexPoint& q,
                                       const ComplexPoint& o, const PointPairs& sequence,
                                       const GromovOptions& opts) {
    if (distance(p, q) == 0.0) throw InputError("gromov: p and q must differ");
    require_boundary_point(g.spec, p);
    require_boundary_point(g.spec, q);
    if (!g.spec.contains(o)) throw InputError("gromov: base point o must lie in the domain");
    const bool oracle = opts.model_oracle && g.spec.is_model();
    std::vector<double> val(sequence.size());
    parallel_for(sequence.size(), [&](std::size_t i) {
        const auto& [z, w] = sequence[i];
        if (!oracle) {
            val[i] = gromov_product(g, z, w, o);
            return;
        }
        const auto d = source_distances(g, true, z, {w, o});
        val[i] = std::max(0.0, 0.5 * (d[1] + distance_oracle(g.spec, w, o) - d[0]));
    });
    ExperimentReport r;
    r.name = "gromov";
    r.parameters = {{"domain", g.spec.name()}, {"p", json_point(p)},           {"q", json_point(q)},
                    {"o", json_point(o)},      {"h", json_num(g.params.h)},    {"terms", sequence.size()},
                    {"growth_threshold", json_num(opts.growth_threshold)},
                    {"distance_source", oracle ? "oracle" : "graph"}};
    const std::size_t n = g.spec.dimension();
    Table t;
    t.columns = {"n"};
    point_columns(t.columns, "z", n);
    point_columns(t.columns, "w", n);
    t.columns.emplace_back("gromov_product_graph");
    t.columns.emplace_back("running_sup");
    double sup = -kInfinity;
    for (std::size_t i = 0; i < sequence.size(); ++i) {
        sup = std::max(sup, val[i]);
        std::vector<std::string> row{std::to_string(i)};
        point_cells(row, sequence[i].first);
        point_cells(row, sequence[i].second);
        row.push_back(fmt_num(val[i]));
        row.push_back(fmt_num(sup));
        t.rows.push_back(std::move(row));
    }
    r.samples = sequence.size();
    r.tables.push_back(std::move(t));
    if (sequence.size() < 2) {
        r.verdict = verdict::inconclusive;
        return r;
    }
    const double growth = val.back() - val.front();
    bool tail_increasing = true;
    for (std::size_t i = std::max<std::size_t>(1, val.size() >= 3 ? val.size() - 2 : 1); i < val.size(); ++i)
        tail_increasing = tail_increasing && val[i] >= val[i - 1] - 1e-9;
    const bool divergence = growth >= opts.growth_threshold && tail_increasing;
    r.statistics = {{"sup", json_num(sup)}, {"first", json_num(val.front())}, {"last", json_num(val.back())},
                    {"growth", json_num(growth)}, {"divergence", divergence}};
    r.verdict = divergence ? verdict::violated : verdict::holds;
    if (divergence) r.notes.push_back("(z_n|w_n)_o grows along the sequence: Gromov property fails at (p, q)");
    return r;
}

ExperimentReport weak_gromov_probe(const MetricGraph& g, const ComplexPoint& p, const ComplexPoint& o,
                                   const std::vector<WeakGromovTarget>& targets, const GromovOptions& opts) {
    require_boundary_point(g.spec, p);
    if (!g.spec.contains(o)) throw InputError("weak-gromov: base point o must lie in the domain");
    for (const auto& t : targets) require_boundary_point(g.spec, t.q);
    ExperimentReport r;
    r.name = "weak-gromov";
    r.parameters = {{"domain", g.spec.name()}, {"p", json_point(p)}, {"o", json_point(o)},
                    {"h", json_num(g.params.h)}, {"targets", targets.size()}};
    const bool oracle = opts.model_oracle && g.spec.is_model();
    r.parameters["distance_source"] = oracle ? "oracle" : "graph";
    const std::size_t n = g.spec.dimension();
    Table t;
    t.columns = {"target", "n"};
    point_columns(t.columns, "z", n);
    point_columns(t.columns, "w", n);
    for (const char* c : {"value_graph", "running_inf", "triangle_floor"}) t.columns.emplace_back(c);
    Json per = Json::array();
    bool ok = true, all_bounded = true;  // ok: triangle floor
    std::size_t total = 0;
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        const auto& seq = targets[ti].sequence;
        std::vector<double> val(seq.size()), floor(seq.size());
        parallel_for(seq.size(), [&](std::size_t i) {
            const auto d = source_distances(g, oracle, seq[i].first, {seq[i].second, o});
            val[i] = d[0] - d[1];
            floor[i] = -source_distances(g, oracle, seq[i].second, {o})[0];
        });
        double inf = kInfinity, first_half = kInfinity, second_half = kInfinity;
        for (std::size_t i = 0; i < seq.size(); ++i) {
            inf = std::min(inf, val[i]);
            double& half = i < seq.size() / 2 ? first_half : second_half;
            half = std::min(half, val[i]);
            ok = ok && val[i] >= floor[i] - 1e-9;
            std::vector<std::string> row{std::to_string(ti), std::to_string(i)};
            point_cells(row, seq[i].first);
            point_cells(row, seq[i].second);
            row.push_back(fmt_num(val[i]));
            row.push_back(fmt_num(inf));
            row.push_back(fmt_num(floor[i]));
            t.rows.push_back(std::move(row));
        }
        total += seq.size();
        const bool bounded = std::isfinite(inf) && !(second_half < first_half - opts.growth_threshold);
        all_bounded = all_bounded && bounded;
        per.push_back({{"q", json_point(targets[ti].q)}, {"c_emp", json_num(inf)}, {"bounded_below", bounded}});
    }
    r.samples = total;
    r.tables.push_back(std::move(t));
    r.statistics = {{"per_target", per}, {"triangle_floor_respected", ok}};
    if (total == 0)
        r.verdict = verdict::inconclusive;
    else if (!ok)
        r.verdict = verdict::violated;
    else
        r.verdict = all_bounded ? verdict::holds : verdict::inconclusive;
    return r;
}

std::vector<ComplexPoint> approach_sequence(const DomainSpec& spec, const ComplexPoint& p,
                                            const ComplexPoint& inward, const std::vector<double>& exponents,
                                            int count, double rate, double t0) {
    if (exponents.size() != p.dim() || inward.dim() != p.dim())
        throw InputError("approach_sequence: dimension mismatch");
    std::vector<ComplexPoint> out;
    for (int k = 0; k < count; ++k) {
        const double t = t0 * std::pow(rate, k);
        ComplexPoint z = p;
        for (std::size_t j = 0; j < p.dim(); ++j) z[j] += std::pow(t, exponents[j]) * inward[j];
        if (!spec.contains(z)) throw DomainError("approach_sequence: point outside the domain");
        out.push_back(std::move(z));
    }
    return out;
}

}  // namespace koblab
