#include <koblab/plan.hpp>

#include <koblab/csv.hpp>
#include <koblab/errors.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace koblab {

namespace {

template <class... F>
struct overloaded : F... {
    using F::operator()...;
};

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ParseError(path, what); }

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void check_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; }))
            fail(join(path, it.key()), "unknown field");
}

const Json* field(const Json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

const Json& required(const Json& obj, const std::string& path, const char* key) {
    const Json* j = field(obj, key);
    if (!j) fail(join(path, key), "missing");
    return *j;
}

double get_num(const Json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) fail(path, "must be finite");
    return x;
}

double get_positive(const Json& j, const std::string& path) {
    const double x = get_num(j, path);
    if (!(x > 0.0)) fail(path, "must be positive");
    return x;
}

std::size_t get_count(const Json& j, const std::string& path) {
    if (!j.is_number_integer() || j.get<long long>() < 0) fail(path, "expected a nonnegative integer");
    return j.get<std::size_t>();
}

std::vector<double> get_nums(const Json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(get_num(j[i], index(path, i)));
    return v;
}

/// [c1, c2, ...] with each coordinate a real number or a [re, im] pair.
ComplexPoint get_point(const Json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of coordinates");
    ComplexPoint z;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto p = index(path, i);
        if (j[i].is_number()) {
            z.coords.emplace_back(get_num(j[i], p), 0.0);
        } else if (j[i].is_array() && j[i].size() == 2) {
            z.coords.emplace_back(get_num(j[i][0], index(p, 0)), get_num(j[i][1], index(p, 1)));
        } else {
            fail(p, "expected a number or a [re, im] pair");
        }
    }
    return z;
}

Json point_json(const ComplexPoint& z) {
    Json a = Json::array();
    for (const auto& c : z.coords) a.push_back(Json::array({c.real(), c.imag()}));
    return a;
}

template <class F>
DomainSpec guarded(const std::string& path, F&& make) {
    try {
        return make();
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        fail(path, e.what());
    }
}

Neighborhood get_ball(const Json& j, const std::string& path) {
    check_keys(j, path, {"center", "radius"});
    return {get_point(required(j, path, "center"), join(path, "center")),
            get_num(required(j, path, "radius"), join(path, "radius"))};
}

const std::set<std::string> kBoundaryExperiments{
    "hyperbolicity", "royden", "sarkar", "additive", "multiplicative", "length-localization", "gromov",
    "weak-gromov", "visibility", "pair-visibility", "transfer", "local-global", "germ"};

struct Needs {
    std::vector<const char*> points;
    bool U = false, V = false, graph = true;
};

Needs needs_of(const std::string& e) {
    if (e == "metric") return {{"z", "v"}, false, false, false};
    if (e == "distance" || e == "geodesic") return {{"z", "w"}};
    if (e == "hyperbolicity") return {{"p"}, true, true};
    if (e == "royden") return {{"p"}, true, false, false};
    if (e == "sarkar") return {{"p"}, true, true, false};
    if (e == "additive" || e == "multiplicative" || e == "length-localization") return {{"p"}, true, true};
    if (e == "gromov") return {{"p", "q", "o"}};
    if (e == "weak-gromov") return {{"p", "o"}};
    if (e == "visibility" || e == "local-global") return {{"p", "q"}, e == "local-global", false};
    if (e == "pair-visibility") return {{"p"}};
    if (e == "transfer") return {{"p", "z", "w"}, true, true};
    if (e == "germ") return {{"p"}, true, false};
    return {};
}

void check_boundary(const DomainSpec& spec, const ComplexPoint& z, const std::string& path) {
    try {
        require_boundary_point(spec, z);
    } catch (const Error& e) {
        fail(path, e.what());
    }
}

void check_inside(const DomainSpec& spec, const ComplexPoint& z, const std::string& path) {
    if (!spec.contains(z)) fail(path, "point is not in the domain");
}

}  // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{
        "metric",     "distance",    "geodesic",        "hyperbolicity", "royden",     "sarkar",
        "additive",   "multiplicative", "length-localization", "gromov", "weak-gromov", "visibility",
        "pair-visibility", "transfer", "local-global",   "germ"};
    return names;
}

DomainSpec domain_from_json(const Json& doc, const std::string& path) {
    check_keys(doc, path, {"kind", "params", "dimension"});
    const Json& kj = required(doc, path, "kind");
    if (!kj.is_string()) fail(join(path, "kind"), "expected a string");
    const std::string k = kj.get<std::string>();
    const Json params = field(doc, "params") ? doc["params"] : Json::object();
    const std::string pp = join(path, "params");
    std::optional<std::size_t> dim;
    if (const Json* d = field(doc, "dimension")) {
        dim = get_count(*d, join(path, "dimension"));
        if (*dim == 0) fail(join(path, "dimension"), "must be positive");
    }
    auto num = [&](const char* key) { return get_num(required(params, pp, key), join(pp, key)); };

    DomainSpec spec = guarded(pp, [&]() -> DomainSpec {
        if (k == "unitdisc") {
            check_keys(params, pp, {});
            return DomainSpec::unit_disc();
        }
        if (k == "discofradius") {
            check_keys(params, pp, {"radius"});
            return DomainSpec::disc(num("radius"));
        }
        if (k == "polydisc") {
            check_keys(params, pp, {"radii"});
            return DomainSpec::polydisc(get_nums(required(params, pp, "radii"), join(pp, "radii")));
        }
        if (k == "ball") {
            check_keys(params, pp, {"center", "radius"});
            return DomainSpec::ball(get_point(required(params, pp, "center"), join(pp, "center")), num("radius"));
        }
        if (k == "annulus") {
            check_keys(params, pp, {"inner", "outer"});
            return DomainSpec::annulus(num("inner"), num("outer"));
        }
        if (k == "halfspaceintersection") {
            check_keys(params, pp, {"faces"});
            const Json& faces = required(params, pp, "faces");
            const std::string fp = join(pp, "faces");
            if (!faces.is_array() || faces.empty()) fail(fp, "expected a nonempty array");
            std::vector<kind::HalfSpace> hs;
            for (std::size_t i = 0; i < faces.size(); ++i) {
                const auto ip = index(fp, i);
                check_keys(faces[i], ip, {"normal", "offset"});
                hs.push_back({get_nums(required(faces[i], ip, "normal"), join(ip, "normal")),
                              get_num(required(faces[i], ip, "offset"), join(ip, "offset"))});
            }
            const std::size_t d = dim.value_or(hs.front().normal.size() / 2);
            return DomainSpec::half_spaces(d, std::move(hs));
        }
        if (k == "product") {
            check_keys(params, pp, {"first", "second"});
            return DomainSpec::product(domain_from_json(required(params, pp, "first"), join(pp, "first")),
                                       domain_from_json(required(params, pp, "second"), join(pp, "second")));
        }
        if (k == "puncturedexample") {
            check_keys(params, pp, {});
            return DomainSpec::punctured_example();
        }
        if (k == "ballintersection") {
            check_keys(params, pp, {"base", "ball"});
            return DomainSpec::ball_intersection(domain_from_json(required(params, pp, "base"), join(pp, "base")),
                                                 get_ball(required(params, pp, "ball"), join(pp, "ball")));
        }
        fail(join(path, "kind"), "unknown domain kind '" + k + "'");
    });
    if (dim && *dim != spec.dimension())
        fail(join(path, "dimension"), "declared " + std::to_string(*dim) + ", kind has " +
                                          std::to_string(spec.dimension()));
    return spec;
}

Json domain_to_json(const DomainSpec& spec) {
    Json params = Json::object();
    const std::string k = std::visit(
        overloaded{
            [&](const kind::UnitDisc&) { return std::string("unitdisc"); },
            [&](const kind::DiscOfRadius& d) {
                params["radius"] = d.radius;
                return std::string("discofradius");
            },
            [&](const kind::Polydisc& p) {
                params["radii"] = p.radii;
                return std::string("polydisc");
            },
            [&](const kind::Ball& b) {
                params["center"] = point_json(b.center);
                params["radius"] = b.radius;
                return std::string("ball");
            },
            [&](const kind::Annulus& a) {
                params["inner"] = a.inner;
                params["outer"] = a.outer;
                return std::string("annulus");
            },
            [&](const kind::HalfSpaceIntersection& h) {
                Json faces = Json::array();
                for (const auto& f : h.faces) faces.push_back(Json{{"normal", f.normal}, {"offset", f.offset}});
                params["faces"] = faces;
                return std::string("halfspaceintersection");
            },
            [&](const kind::Product& p) {
                params["first"] = domain_to_json(*p.first);
                params["second"] = domain_to_json(*p.second);
                return std::string("product");
            },
            [&](const kind::PuncturedExample&) { return std::string("puncturedexample"); },
            [&](const kind::BallIntersection& b) {
                params["base"] = domain_to_json(*b.base);
                params["ball"] = Json{{"center", point_json(b.ball.center)}, {"radius", b.ball.radius}};
                return std::string("ballintersection");
            },
        },
        spec.kind());
    return Json{{"kind", k}, {"params", params}, {"dimension", spec.dimension()}};
}

const ComplexPoint& ExperimentPlan::point(const std::string& key) const {
    const auto it = points.find(key);
    if (it == points.end()) throw InputError("plan has no point '" + key + "'");
    return it->second;
}

GridParams ExperimentPlan::grid_params() const {
    GridParams g;
    g.h = grid.h;
    g.box_radius = grid.box_radius.value_or(0.0);
    g.margin = grid.margin;
    g.m = grid.m;
    g.node_budget = grid.node_budget;
    g.override_budget = grid.override_budget;
    return g;
}

Json ExperimentPlan::to_json() const {
    Json d = domain_to_json(domain);
    if (compare) d["compare"] = domain_to_json(*compare);
    Json pts = Json::object();
    for (const auto& [k, z] : points) pts[k] = point_json(z);
    if (!targets.empty()) {
        Json t = Json::array();
        for (const auto& z : targets) t.push_back(point_json(z));
        pts["targets"] = t;
    }
    Json radii = Json::object();
    if (U) radii["U"] = *U;
    if (V) radii["V"] = *V;
    if (W) radii["W"] = *W;
    Json g{{"h", grid.h}};
    if (grid.box_radius) g["box_radius"] = *grid.box_radius;
    g["margin"] = grid.margin;
    g["m"] = grid.m;
    g["node_budget"] = grid.node_budget;
    g["sample_spacing"] = grid.sample_spacing;
    g["refine"] = grid.refine;
    Json ex = Json::array();
    for (const auto& [z, w] : sequences.explicit_pairs) ex.push_back(Json::array({point_json(z), point_json(w)}));
    Json s{{"count", sequences.count},       {"rate", sequences.rate},     {"t0", sequences.t0},
           {"samples", sequences.samples},   {"pairs", sequences.pairs},   {"pair_budget", sequences.pair_budget},
           {"mesh", sequences.mesh},         {"exponents", sequences.exponents}, {"explicit", ex}};
    return Json{{"domain", d},     {"experiment", experiment}, {"points", pts}, {"radii", radii},
                {"grid", g},       {"sequences", s},           {"lambda", lambda}, {"ladder", ladder},
                {"seed", seed},    {"out", out}};
}

ExperimentPlan parse_plan(std::string_view text, const std::optional<std::string>& experiment) {
    Json doc;
    try {
        doc = Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        fail("$", std::string("malformed JSON: ") + e.what());
    }
    check_keys(doc, "", {"domain", "experiment", "points", "radii", "grid", "sequences", "lambda", "ladder",
                         "seed", "out"});
    ExperimentPlan plan;

    // domain, with the optional germ comparison domain
    {
        Json d = required(doc, "", "domain");
        if (!d.is_object()) fail("domain", "expected an object");
        if (d.contains("compare")) {
            plan.compare = domain_from_json(d["compare"], "domain.compare");
            d.erase("compare");
        }
        plan.domain = domain_from_json(d, "domain");
        if (plan.compare && plan.compare->dimension() != plan.domain.dimension())
            fail("domain.compare", "dimension differs from the domain");
    }
    const std::size_t n = plan.domain.dimension();

    if (const Json* e = field(doc, "experiment")) {
        if (!e->is_string()) fail("experiment", "expected a string");
        plan.experiment = e->get<std::string>();
        if (experiment && *experiment != plan.experiment)
            fail("experiment", "plan names '" + plan.experiment + "' but '" + *experiment + "' was requested");
    } else if (experiment) {
        plan.experiment = *experiment;
    } else {
        fail("experiment", "missing");
    }
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), plan.experiment) == names.end())
        fail("experiment", "unknown experiment '" + plan.experiment + "'");

    const Json& sj = required(doc, "", "seed");
    if (!sj.is_number_unsigned() && !(sj.is_number_integer() && sj.get<long long>() >= 0))
        fail("seed", "expected a nonnegative integer");
    plan.seed = sj.get<std::uint64_t>();

    if (const Json* o = field(doc, "out")) {
        if (!o->is_string() || o->get<std::string>().empty()) fail("out", "expected a nonempty string");
        plan.out = o->get<std::string>();
    } else {
        plan.out = "koblab-out";
    }

    auto dim_point = [&](const Json& j, const std::string& path) {
        auto z = get_point(j, path);
        if (z.dim() != n) fail(path, "expected " + std::to_string(n) + " coordinates, got " + std::to_string(z.dim()));
        return z;
    };

    if (const Json* pj = field(doc, "points")) {
        check_keys(*pj, "points", {"p", "q", "o", "z", "w", "v", "interior", "targets"});
        for (auto it = pj->begin(); it != pj->end(); ++it) {
            const std::string path = "points." + it.key();
            if (it.key() == "targets") {
                if (!it->is_array() || it->empty()) fail(path, "expected a nonempty array of points");
                for (std::size_t i = 0; i < it->size(); ++i) plan.targets.push_back(dim_point((*it)[i], index(path, i)));
            } else {
                plan.points[it.key()] = dim_point(*it, path);
            }
        }
    }

    if (const Json* rj = field(doc, "radii")) {
        check_keys(*rj, "radii", {"U", "V", "W"});
        if (const Json* x = field(*rj, "U")) plan.U = get_positive(*x, "radii.U");
        if (const Json* x = field(*rj, "V")) plan.V = get_positive(*x, "radii.V");
        if (const Json* x = field(*rj, "W")) plan.W = get_positive(*x, "radii.W");
    }
    if (plan.U && plan.V && !(*plan.V < *plan.U)) fail("radii.V", "V must be compactly inside U (radius_V < radius_U)");
    if (plan.V && plan.W && !(*plan.W < *plan.V)) fail("radii.W", "W must be compactly inside V (radius_W < radius_V)");
    if (plan.W && !plan.V) fail("radii.V", "missing (W is declared inside V)");

    plan.grid.h = n == 1 ? 0.02 : 0.08;
    if (const Json* gj = field(doc, "grid")) {
        check_keys(*gj, "grid", {"h", "box_radius", "margin", "m", "node_budget", "sample_spacing", "refine"});
        if (const Json* x = field(*gj, "h")) plan.grid.h = get_positive(*x, "grid.h");
        if (const Json* x = field(*gj, "box_radius")) plan.grid.box_radius = get_positive(*x, "grid.box_radius");
        if (const Json* x = field(*gj, "margin")) {
            plan.grid.margin = get_num(*x, "grid.margin");
            if (plan.grid.margin < 0.0) fail("grid.margin", "must be nonnegative");
        }
        if (const Json* x = field(*gj, "m")) {
            plan.grid.m = static_cast<int>(get_count(*x, "grid.m"));
            if (plan.grid.m < 1) fail("grid.m", "must be at least 1");
        }
        if (const Json* x = field(*gj, "node_budget")) plan.grid.node_budget = get_count(*x, "grid.node_budget");
        if (const Json* x = field(*gj, "sample_spacing")) {
            plan.grid.sample_spacing = get_num(*x, "grid.sample_spacing");
            if (plan.grid.sample_spacing < 0.0) fail("grid.sample_spacing", "must be nonnegative");
        }
        if (const Json* x = field(*gj, "refine")) {
            if (!x->is_boolean()) fail("grid.refine", "expected a boolean");
            plan.grid.refine = x->get<bool>();
        }
    }
    if (plan.grid.sample_spacing == 0.0) plan.grid.sample_spacing = 2.0 * plan.grid.h;

    plan.sequences.exponents.assign(n, 1.0);
    if (const Json* sq = field(doc, "sequences")) {
        check_keys(*sq, "sequences",
                   {"count", "rate", "t0", "samples", "pairs", "pair_budget", "mesh", "exponents", "explicit"});
        auto& s = plan.sequences;
        if (const Json* x = field(*sq, "count")) {
            s.count = static_cast<int>(get_count(*x, "sequences.count"));
            if (s.count < 1) fail("sequences.count", "must be at least 1");
        }
        if (const Json* x = field(*sq, "rate")) {
            s.rate = get_num(*x, "sequences.rate");
            if (!(s.rate > 0.0 && s.rate < 1.0)) fail("sequences.rate", "must lie in (0, 1)");
        }
        if (const Json* x = field(*sq, "t0")) s.t0 = get_positive(*x, "sequences.t0");
        if (const Json* x = field(*sq, "samples")) s.samples = get_count(*x, "sequences.samples");
        if (const Json* x = field(*sq, "pairs")) s.pairs = get_count(*x, "sequences.pairs");
        if (const Json* x = field(*sq, "pair_budget")) s.pair_budget = get_count(*x, "sequences.pair_budget");
        if (const Json* x = field(*sq, "mesh")) s.mesh = get_count(*x, "sequences.mesh");
        if (const Json* x = field(*sq, "exponents")) {
            s.exponents = get_nums(*x, "sequences.exponents");
            if (s.exponents.size() != n) fail("sequences.exponents", "expected one exponent per coordinate");
            for (std::size_t i = 0; i < n; ++i)
                if (!(s.exponents[i] > 0.0)) fail(index("sequences.exponents", i), "must be positive");
        }
        if (const Json* x = field(*sq, "explicit")) {
            if (!x->is_array()) fail("sequences.explicit", "expected an array of [z, w] pairs");
            for (std::size_t i = 0; i < x->size(); ++i) {
                const auto ip = index("sequences.explicit", i);
                if (!(*x)[i].is_array() || (*x)[i].size() != 2) fail(ip, "expected a [z, w] pair");
                auto z = dim_point((*x)[i][0], index(ip, 0));
                auto w = dim_point((*x)[i][1], index(ip, 1));
                check_inside(plan.domain, z, index(ip, 0));
                check_inside(plan.domain, w, index(ip, 1));
                s.explicit_pairs.emplace_back(std::move(z), std::move(w));
            }
        }
    }

    if (const Json* x = field(doc, "lambda")) {
        plan.lambda = get_nums(*x, "lambda");
        if (plan.lambda.empty()) fail("lambda", "must be nonempty");
        for (std::size_t i = 0; i < plan.lambda.size(); ++i)
            if (!(plan.lambda[i] >= 1.0)) fail(index("lambda", i), "must be >= 1");
    }
    if (const Json* x = field(doc, "ladder")) {
        plan.ladder = get_nums(*x, "ladder");
        if (plan.ladder.empty()) fail("ladder", "must be nonempty");
        for (std::size_t i = 0; i < plan.ladder.size(); ++i) {
            if (!(plan.ladder[i] > 0.0)) fail(index("ladder", i), "must be positive");
            if (i > 0 && !(plan.ladder[i] < plan.ladder[i - 1])) fail(index("ladder", i), "must decrease");
        }
    }

    // per-experiment requirements
    const Needs need = needs_of(plan.experiment);
    for (const char* key : need.points)
        if (!plan.points.count(key)) fail(std::string("points.") + key, "missing for experiment " + plan.experiment);
    if (plan.experiment == "weak-gromov" && plan.targets.empty() && !plan.points.count("q"))
        fail("points.targets", "missing (or give points.q)");
    if (need.U && !plan.U) fail("radii.U", "missing for experiment " + plan.experiment);
    if (need.V && !plan.V) fail("radii.V", "missing for experiment " + plan.experiment);
    if (plan.experiment == "germ" && !plan.compare) fail("domain.compare", "missing for experiment germ");

    if (kBoundaryExperiments.count(plan.experiment)) {
        check_boundary(plan.domain, plan.point("p"), "points.p");
        if (plan.compare) check_boundary(*plan.compare, plan.point("p"), "points.p");
        if (plan.points.count("q") && plan.experiment != "hyperbolicity")
            check_boundary(plan.domain, plan.point("q"), "points.q");
        for (std::size_t i = 0; i < plan.targets.size(); ++i)
            check_boundary(plan.domain, plan.targets[i], index("points.targets", i));
    }
    for (const char* key : {"o", "z", "w", "interior"})
        if (plan.points.count(key)) check_inside(plan.domain, plan.point(key), std::string("points.") + key);
    if (plan.points.count("v") && norm(plan.point("v")) == 0.0) fail("points.v", "tangent vector must be nonzero");
    if (plan.experiment == "transfer") {
        const Neighborhood V{plan.point("p"), *plan.V};
        for (const char* key : {"z", "w"})
            if (!V.contains(plan.point(key))) fail(std::string("points.") + key, "must lie in V");
    }

    const bool needs_graph = need.graph || (plan.experiment == "hyperbolicity" && plan.domain.bounded());
    const bool unbounded = !plan.domain.bounded() || (plan.compare && !plan.compare->bounded());
    if (needs_graph && unbounded && !plan.grid.box_radius)
        fail("grid.box_radius", "required: the domain " + plan.domain.name() + " is unbounded");
    if (plan.experiment == "hyperbolicity" && !plan.domain.bounded()) {
        if (!plan.grid.box_radius) fail("grid.box_radius", "required: the domain " + plan.domain.name() + " is unbounded");
        if (plan.sequences.explicit_pairs.empty())
            fail("sequences.explicit", "required: unbounded domains need explicit (z_n, w_n) sequences");
    }
    return plan;
}

ExperimentPlan load_plan(const std::filesystem::path& file, const std::optional<std::string>& experiment) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot read plan file " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_plan(ss.str(), experiment);
}

}  // namespace koblab
