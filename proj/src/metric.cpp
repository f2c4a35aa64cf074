#include <koblab/errors.hpp>
#include <koblab/metric.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>

namespace koblab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double disc_metric(double R, cplx z, cplx v) { return R * std::abs(v) / (R * R - std::norm(z)); }

double disc_pseudo(double R, cplx z, cplx w) {
    return R * std::abs(z - w) / std::abs(R * R - std::conj(z) * w);
}

double ball_metric(const kind::Ball& b, CSpan z, CSpan v) {
    const double R = b.radius;
    double aa = 0.0, vv = 0.0;
    cplx av = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
        const cplx a = (z[j] - b.center[j]) / R;
        const cplx w = v[j] / R;
        aa += std::norm(a);
        vv += std::norm(w);
        av += a * std::conj(w);
    }
    const double d = 1.0 - aa;
    return std::sqrt(vv * d + std::norm(av)) / d;
}

double ball_pseudo(const kind::Ball& b, CSpan z, CSpan w) {
    const double R = b.radius;
    const std::size_t n = z.size();
    double aa = 0.0, bb = 0.0, diff = 0.0, lagrange = 0.0;
    cplx ab = 0.0;
    std::array<cplx, 16> sa{}, sb{};
    std::vector<cplx> ha, hb;
    cplx* a = sa.data();
    cplx* c = sb.data();
    if (n > sa.size()) {
        ha.resize(n);
        hb.resize(n);
        a = ha.data();
        c = hb.data();
    }
    for (std::size_t j = 0; j < n; ++j) {
        a[j] = (z[j] - b.center[j]) / R;
        c[j] = (w[j] - b.center[j]) / R;
        aa += std::norm(a[j]);
        bb += std::norm(c[j]);
        ab += a[j] * std::conj(c[j]);
        diff += std::norm(a[j] - c[j]);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) lagrange += std::norm(a[i] * c[j] - a[j] * c[i]);
    const double num = std::max(0.0, diff - lagrange);
    return std::sqrt(num / std::norm(1.0 - ab));
}

// Minimizes f over the complex plane with a Nelder-Mead simplex.
std::pair<cplx, double> nelder_mead(const std::function<double(cplx)>& f, cplx start, double scale,
                                    int iterations) {
    std::array<cplx, 3> x = {start, start + scale, start + cplx(0.0, scale)};
    std::array<double, 3> fx = {f(x[0]), f(x[1]), f(x[2])};
    for (int it = 0; it < iterations; ++it) {
        std::array<int, 3> o = {0, 1, 2};
        std::sort(o.begin(), o.end(), [&](int i, int j) { return fx[i] < fx[j]; });
        const int best = o[0], mid = o[1], worst = o[2];
        if (std::abs(x[worst] - x[best]) < 1e-12 * (1.0 + std::abs(x[best]))) break;
        const cplx centroid = 0.5 * (x[best] + x[mid]);
        const cplx xr = centroid + (centroid - x[worst]);
        const double fr = f(xr);
        if (fr < fx[best]) {
            const cplx xe = centroid + 2.0 * (centroid - x[worst]);
            const double fe = f(xe);
            if (fe < fr) {
                x[worst] = xe;
                fx[worst] = fe;
            } else {
                x[worst] = xr;
                fx[worst] = fr;
            }
        } else if (fr < fx[mid]) {
            x[worst] = xr;
            fx[worst] = fr;
        } else {
            const cplx xc = centroid + 0.5 * (x[worst] - centroid);
            const double fc = f(xc);
            if (fc < fx[worst]) {
                x[worst] = xc;
                fx[worst] = fc;
            } else {
                for (int i : {mid, worst}) {
                    x[i] = x[best] + 0.5 * (x[i] - x[best]);
                    fx[i] = f(x[i]);
                }
            }
        }
    }
    int b = 0;
    for (int i = 1; i < 3; ++i)
        if (fx[i] < fx[b]) b = i;
    return {x[b], fx[b]};
}

// Candidate centres for searches inside a slice.
std::vector<cplx> slice_starts(const LineSlice& s, double rho0) {
    std::vector<cplx> starts = {0.0};
    for (const auto& d : s.inside) starts.push_back(d.center);
    for (const auto& p : s.planes) starts.push_back(-p.normal / std::abs(p.normal) * rho0);
    for (const auto& d : s.outside) {
        const double m = std::abs(d.center);
        if (m > 0.0) starts.push_back(-d.center / m * rho0);
    }
    return starts;
}

// Largest |phi'(0)| over discs centred in the slice whose image contains s = 0:
// phi = c + rho * Mobius, |phi'(0)| = (rho^2 - |c|^2) / rho.  The inscribed disc is exact,
// the safety factor is applied to the derivative.
double best_slice_derivative(const LineSlice& s, double safety, double target) {
    target /= safety;
    auto g = [&](cplx c) {
        const double rho = s.inscribed_radius(c);
        const double cc = std::norm(c);
        if (!(rho > 0.0) || cc >= rho * rho) return 0.0;
        return (rho * rho - cc) / rho;
    };
    const double rho0 = s.inscribed_radius(0.0);
    cplx best = 0.0;
    double best_g = g(0.0);
    for (const auto& c : slice_starts(s, rho0)) {
        const double v = g(c);
        if (v > best_g) {
            best_g = v;
            best = c;
        }
    }
    if (best_g >= target * (1.0 - 1e-12)) return safety * best_g;
    const auto [arg, val] =
        nelder_mead([&](cplx c) { return -g(c); }, best, 0.25 * std::max(rho0, 1e-12), 120);
    (void)arg;
    return safety * std::max(best_g, -val);
}

// Smallest pseudo-distance |alpha| over discs centred in the slice through s = 0 and s = d.
double best_slice_alpha(const LineSlice& s, double d, double safety) {
    auto alpha = [&](cplx c) {
        const double rho = safety * s.inscribed_radius(c);
        if (!(rho > 0.0)) return 1.0;
        const cplx a = -c / rho;
        const cplx b = (d - c) / rho;
        if (std::norm(a) >= 1.0 || std::norm(b) >= 1.0) return 1.0;
        return std::abs(b - a) / std::abs(1.0 - std::conj(a) * b);
    };
    const double rho0 = safety * s.inscribed_radius(0.0);
    auto starts = slice_starts(s, rho0);
    starts.push_back(0.5 * d);
    starts.push_back(d);
    cplx best = 0.0;
    double best_a = alpha(0.0);
    for (const auto& c : starts) {
        const double v = alpha(c);
        if (v < best_a) {
            best_a = v;
            best = c;
        }
    }
    const auto [arg, val] =
        nelder_mead(alpha, best, 0.25 * std::max({rho0, d, 1e-12}), 120);
    (void)arg;
    return std::min(best_a, val);
}

std::vector<cplx> unit(CSpan v) {
    const double n = norm(v);
    std::vector<cplx> u(v.begin(), v.end());
    for (auto& c : u) c /= n;
    return u;
}

void require_inside(const DomainSpec& spec, CSpan z, const char* what) {
    if (!spec.contains(z)) throw DomainError(std::string(what) + ": point outside the domain");
}

struct UpperResult {
    double value;
    std::string method;
    double slack;
};

// Polynomial disc search: c1 = t u, higher coefficients free; returns the best validated t.
double polynomial_search(const DomainSpec& spec, CSpan z, const std::vector<cplx>& u,
                         const SearchConfig& cfg, double t_start) {
    const std::size_t n = z.size();
    AnalyticDiscCandidate cand;
    cand.angles = cfg.angles;
    cand.radii = cfg.radii;
    cand.safety = cfg.safety;
    cand.coeffs.assign(cfg.degree + 1, std::vector<cplx>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) cand.coeffs[0][j] = z[j];

    const double cap = spec.bounded() ? 2.0 * spec.bounding_radius() : 8.0 * t_start;
    auto set_t = [&](double t) {
        for (std::size_t j = 0; j < n; ++j) cand.coeffs[1][j] = t * u[j];
    };
    // Largest validated t for the current higher coefficients (0 if none).
    auto max_t = [&]() {
        double lo = 0.0, hi = cap;
        set_t(hi);
        if (cand.validate(spec)) return hi;
        set_t(1e-9 * std::max(t_start, 1e-12));
        if (!cand.validate(spec)) return 0.0;
        for (int it = 0; it < 24; ++it) {
            const double mid = 0.5 * (lo + hi);
            set_t(mid);
            (cand.validate(spec) ? lo : hi) = mid;
        }
        return lo;
    };

    std::vector<std::vector<cplx>> best_coeffs(cfg.degree + 1, std::vector<cplx>(n, 0.0));
    double best_t = max_t();
    const double scale0 = 0.25 * std::max(t_start, 1e-6);
    for (int r = 0; r < cfg.restarts; ++r) {
        std::mt19937_64 rng(cfg.seed * 1000003ULL + static_cast<std::uint64_t>(r));
        std::normal_distribution<double> gauss(0.0, 1.0);
        auto current = best_coeffs;
        double current_t = best_t;
        if (r > 0) {
            for (int k = 2; k <= cfg.degree; ++k)
                for (auto& c : current[k]) c += scale0 * cplx(gauss(rng), gauss(rng));
            for (int k = 2; k <= cfg.degree; ++k) cand.coeffs[k] = current[k];
            current_t = max_t();
        }
        double step = scale0;
        for (int it = 0; it < cfg.budget; ++it) {
            auto trial = current;
            for (int k = 2; k <= cfg.degree; ++k)
                for (auto& c : trial[k]) c += step * cplx(gauss(rng), gauss(rng));
            for (int k = 2; k <= cfg.degree; ++k) cand.coeffs[k] = trial[k];
            const double t = max_t();
            if (t > current_t) {
                current = std::move(trial);
                current_t = t;
                step *= 1.5;
            } else {
                step *= 0.7;
            }
        }
        if (current_t > best_t) {
            best_t = current_t;
            best_coeffs = current;
        }
    }
    // The validated disc is zeta -> phi(safety * zeta).
    return best_t * cfg.safety;
}

UpperResult upper_detail(const DomainSpec& spec, CSpan z, CSpan v, const SearchConfig& cfg,
                         double lower_hint) {
    require_inside(spec, z, "royden_upper");
    if (v.size() != z.size()) throw InputError("royden_upper: direction dimension mismatch");
    const double vn = norm(v);
    if (vn == 0.0) throw InputError("royden_upper: zero tangent vector");
    const auto u = unit(v);

    const auto slice = spec.line_slice(z, u);
    double best;
    std::string method = "affine";
    double slack = 0.0;
    if (slice) {
        best = cfg.safety * slice->inscribed_radius(0.0);
    } else {
        LineRadiusOptions lo;
        lo.angles = cfg.angles;
        lo.radii = cfg.radii;
        lo.safety = cfg.safety;
        best = complex_line_radius(spec, z, u, lo);
        slack = 1.0 - std::cos(M_PI / cfg.angles);
    }
    if (!std::isfinite(best)) return {0.0, "affine-line", 0.0};
    if (!(best > 0.0)) throw NumericError("royden_upper: no valid disc candidate");

    const double target = lower_hint > 0.0 ? vn / lower_hint : kInfinity;
    if (slice && cfg.slice_discs && best < cfg.safety * target * (1.0 - 1e-9)) {
        const double g = best_slice_derivative(*slice, cfg.safety, target);
        if (g > best) {
            best = g;
            method = "slice-disc";
        }
    }
    // Validated polynomial discs are shrunk by the safety factor, so they cannot beat
    // safety * target; skip the search once the slice discs reach that.
    if (cfg.polynomial && cfg.degree >= 2 && best < cfg.safety * target * (1.0 - 1e-9)) {
        const double t = polynomial_search(spec, z, u, cfg, best);
        if (t > best) {
            best = t;
            method = "polynomial-disc";
            slack = 1.0 - std::cos(M_PI / cfg.angles);
        }
    }
    return {vn / best, method, slack};
}

std::pair<double, std::string> lower_by_kind(const DomainSpec& spec, CSpan z, CSpan v);

// Omega inside the origin ball of its bounding radius.
std::pair<double, std::string> with_bounding_ball(const DomainSpec& spec, CSpan z, CSpan v,
                                                  std::pair<double, std::string> best) {
    if (!spec.bounded() || spec.is_model()) return best;
    const kind::Ball ball{ComplexPoint(std::vector<cplx>(z.size(), 0.0)), spec.bounding_radius()};
    const double k = ball_metric(ball, z, v);
    if (k > best.first) return {k, "bounding-ball"};
    return best;
}

std::pair<double, std::string> lower_detail(const DomainSpec& spec, CSpan z, CSpan v) {
    if (all_zero(v)) return {0.0, "zero-vector"};
    return with_bounding_ball(spec, z, v, lower_by_kind(spec, z, v));
}

std::pair<double, std::string> lower_by_kind(const DomainSpec& spec, CSpan z, CSpan v) {
    return std::visit(
        overloaded{
            [&](const kind::Annulus& a) -> std::pair<double, std::string> {
                return {disc_metric(a.outer, z[0], v[0]), "enclosing-disc"};
            },
            [&](const kind::HalfSpaceIntersection& h) -> std::pair<double, std::string> {
                double best = 0.0;
                for (const auto& f : h.faces) {
                    cplx lz = 0.0, lv = 0.0;
                    for (std::size_t j = 0; j < z.size(); ++j) {
                        const cplx c = std::conj(cplx(f.normal[2 * j], f.normal[2 * j + 1]));
                        lz += c * z[j];
                        lv += c * v[j];
                    }
                    best = std::max(best, std::abs(lv) / (2.0 * (f.offset - lz.real())));
                }
                return {best, best > 0.0 ? "half-plane" : "none"};
            },
            [&](const kind::Product& p) -> std::pair<double, std::string> {
                const auto k = p.first->dimension();
                const auto a = lower_detail(*p.first, z.subspan(0, k), v.subspan(0, k));
                const auto b = lower_detail(*p.second, z.subspan(k), v.subspan(k));
                return a.first >= b.first ? a : b;
            },
            [&](const kind::PuncturedExample&) -> std::pair<double, std::string> {
                const double r = std::abs(z[0]);
                if (v[0] == cplx(0.0)) return {0.0, "none"};
                return {std::abs(v[0]) / (2.0 * r * std::log(1.0 / r)), "punctured-disc"};
            },
            [&](const kind::BallIntersection& b) -> std::pair<double, std::string> {
                const auto base = lower_detail(*b.base, z, v);
                const kind::Ball ball{b.ball.center, b.ball.radius};
                const double k = ball_metric(ball, z, v);
                return k > base.first ? std::pair<double, std::string>{k, "enclosing-ball"} : base;
            },
            [&](const auto&) -> std::pair<double, std::string> {
                return {royden_oracle(spec, z, v), "oracle"};
            },
        },
        spec.kind());
}

bool ball_covers(const DomainSpec& base, const Neighborhood& nb) {
    return base.bounded() && norm(nb.center) + base.bounding_radius() <= nb.radius;
}

}  // namespace

void AnalyticDiscCandidate::evaluate(cplx zeta, std::vector<cplx>& out) const {
    const std::size_t n = coeffs.front().size();
    out.assign(n, 0.0);
    for (std::size_t k = coeffs.size(); k-- > 0;)
        for (std::size_t j = 0; j < n; ++j) out[j] = out[j] * zeta + coeffs[k][j];
}

bool AnalyticDiscCandidate::validate(const DomainSpec& spec) const {
    std::vector<cplx> w;
    for (int k = 1; k <= radii; ++k) {
        const double r = safety * k / radii;
        for (int a = 0; a < angles; ++a) {
            evaluate(std::polar(r, 2.0 * M_PI * a / angles), w);
            if (!spec.contains(w)) return false;
        }
    }
    return true;
}

double clamped_artanh(double x) {
    if (x >= 1.0 - 1e-12) return kInfinity;
    if (x <= 0.0) return 0.0;
    return std::atanh(x);
}

double tanh_exp_margin(double x) {
    if (x < 0.0) throw InputError("tanh_exp_margin: x must be nonnegative");
    return std::tanh(x) - (1.0 - std::exp(-x));
}

double royden_oracle(const DomainSpec& spec, CSpan z, CSpan v) {
    require_inside(spec, z, "royden_oracle");
    if (v.size() != z.size()) throw InputError("royden_oracle: direction dimension mismatch");
    return std::visit(
        overloaded{
            [&](const kind::UnitDisc&) { return disc_metric(1.0, z[0], v[0]); },
            [&](const kind::DiscOfRadius& d) { return disc_metric(d.radius, z[0], v[0]); },
            [&](const kind::Polydisc& p) {
                double k = 0.0;
                for (std::size_t j = 0; j < z.size(); ++j)
                    k = std::max(k, disc_metric(p.radii[j], z[j], v[j]));
                return k;
            },
            [&](const kind::Ball& b) { return ball_metric(b, z, v); },
            [&](const kind::Product& p) {
                if (!spec.is_model()) throw UnsupportedError("royden_oracle: non-model factor");
                const auto k = p.first->dimension();
                return std::max(royden_oracle(*p.first, z.subspan(0, k), v.subspan(0, k)),
                                royden_oracle(*p.second, z.subspan(k), v.subspan(k)));
            },
            [&](const auto&) -> double {
                throw UnsupportedError("royden_oracle: no closed form for " + spec.name());
            },
        },
        spec.kind());
}

double distance_oracle(const DomainSpec& spec, CSpan z, CSpan w) {
    require_inside(spec, z, "distance_oracle");
    require_inside(spec, w, "distance_oracle");
    return std::visit(
        overloaded{
            [&](const kind::UnitDisc&) { return clamped_artanh(disc_pseudo(1.0, z[0], w[0])); },
            [&](const kind::DiscOfRadius& d) {
                return clamped_artanh(disc_pseudo(d.radius, z[0], w[0]));
            },
            [&](const kind::Polydisc& p) {
                double k = 0.0;
                for (std::size_t j = 0; j < z.size(); ++j)
                    k = std::max(k, clamped_artanh(disc_pseudo(p.radii[j], z[j], w[j])));
                return k;
            },
            [&](const kind::Ball& b) { return clamped_artanh(ball_pseudo(b, z, w)); },
            [&](const kind::Product& p) {
                if (!spec.is_model()) throw UnsupportedError("distance_oracle: non-model factor");
                const auto k = p.first->dimension();
                return std::max(distance_oracle(*p.first, z.subspan(0, k), w.subspan(0, k)),
                                distance_oracle(*p.second, z.subspan(k), w.subspan(k)));
            },
            [&](const auto&) -> double {
                throw UnsupportedError("distance_oracle: no closed form for " + spec.name());
            },
        },
        spec.kind());
}

double royden_upper(const DomainSpec& spec, CSpan z, CSpan v, const SearchConfig& search) {
    require_inside(spec, z, "royden_upper");
    if (v.size() != z.size()) throw InputError("royden_upper: direction dimension mismatch");
    const double hint = all_zero(v) ? 0.0 : lower_detail(spec, z, v).first;
    return upper_detail(spec, z, v, search, hint).value;
}

double royden_lower(const DomainSpec& spec, CSpan z, CSpan v) {
    require_inside(spec, z, "royden_lower");
    if (v.size() != z.size()) throw InputError("royden_lower: direction dimension mismatch");
    return lower_detail(spec, z, v).first;
}

MetricEstimate royden_estimate(const DomainSpec& spec, CSpan z, CSpan v,
                               const SearchConfig& search) {
    require_inside(spec, z, "royden_estimate");
    if (v.size() != z.size()) throw InputError("royden_estimate: direction dimension mismatch");
    if (all_zero(v)) return {0.0, 0.0, "zero-vector", "zero-vector", 0.0};
    if (spec.is_model()) {
        const double k = royden_oracle(spec, z, v);
        return {k, k, "oracle", "oracle", 0.0};
    }
    if (const auto* bi = std::get_if<kind::BallIntersection>(&spec.kind());
        bi && ball_covers(*bi->base, bi->ball)) {
        return royden_estimate(*bi->base, z, v, search);
    }
    if (const auto* p = std::get_if<kind::Product>(&spec.kind())) {
        // The metric of a product is the max of the factor metrics.
        const auto k = p->first->dimension();
        const auto a = royden_estimate(*p->first, z.subspan(0, k), v.subspan(0, k), search);
        const auto b = royden_estimate(*p->second, z.subspan(k), v.subspan(k), search);
        MetricEstimate e;
        const auto& lo = a.lower >= b.lower ? a : b;
        const auto& hi = a.upper >= b.upper ? a : b;
        e.lower = lo.lower;
        e.lower_method = lo.lower_method;
        e.upper = hi.upper;
        e.upper_method = hi.upper_method;
        e.grid_slack = std::max(a.grid_slack, b.grid_slack);
        return e;
    }
    const auto [lower, lower_method] = lower_detail(spec, z, v);
    const auto up = upper_detail(spec, z, v, search, lower);
    MetricEstimate e{lower, std::max(up.value, lower), lower_method, up.method, up.slack};
    return e;
}

double lempert_upper(const DomainSpec& spec, CSpan z, CSpan w, const SearchConfig& search) {
    require_inside(spec, z, "lempert_upper");
    require_inside(spec, w, "lempert_upper");
    if (z.size() != w.size()) throw InputError("lempert_upper: dimension mismatch");
    const double d = distance(z, w);
    if (d == 0.0) return 0.0;

    if (const auto* p = std::get_if<kind::Product>(&spec.kind())) {
        const auto k = p->first->dimension();
        return std::max(lempert_upper(*p->first, z.subspan(0, k), w.subspan(0, k), search),
                        lempert_upper(*p->second, z.subspan(k), w.subspan(k), search));
    }

    std::vector<cplx> u(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) u[j] = (w[j] - z[j]) / d;

    double alpha = 1.0;
    if (const auto slice = spec.line_slice(z, u)) {
        const double rho0 = search.safety * slice->inscribed_radius(0.0);
        if (rho0 > d) alpha = std::min(alpha, d / rho0);
        if (search.slice_discs) alpha = std::min(alpha, best_slice_alpha(*slice, d, search.safety));
    } else {
        LineRadiusOptions lo;
        lo.angles = search.angles;
        lo.radii = search.radii;
        lo.safety = search.safety;
        const double r = complex_line_radius(spec, z, u, lo);
        if (r > d) alpha = std::min(alpha, d / r);
        std::vector<cplx> mid(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) mid[j] = 0.5 * (z[j] + w[j]);
        if (spec.contains(mid)) {
            const double rm = complex_line_radius(spec, mid, u, lo);
            const double x = 0.5 * d / rm;
            if (x < 1.0) alpha = std::min(alpha, 2.0 * x / (1.0 + x * x));
        }
    }

    if (std::holds_alternative<kind::PuncturedExample>(spec.kind()) && z[0] == w[0]) {
        // zeta -> (z1, z2 + zeta T), T = 1/(2|z1|), stays in D while |z1 z2| < 1/2.
        const double a = std::abs(z[0]);
        const double T = 1.0 / (2.0 * a);
        if (a * std::abs(z[1]) + 0.5 < 1.0) alpha = std::min(alpha, std::abs(w[1] - z[1]) / T);
    }

    double l = clamped_artanh(alpha);
    if (spec.is_model()) l = std::min(l, distance_oracle(spec, z, w));
    return l;
}

double distance_lower(const DomainSpec& spec, CSpan z, CSpan w) {
    require_inside(spec, z, "distance_lower");
    require_inside(spec, w, "distance_lower");
    double bound = 0.0;
    if (spec.bounded() && !spec.is_model()) {
        const kind::Ball ball{ComplexPoint(std::vector<cplx>(z.size(), 0.0)), spec.bounding_radius()};
        bound = clamped_artanh(ball_pseudo(ball, z, w));
    }
    return std::max(bound, std::visit(
        overloaded{
            [&](const kind::Annulus& a) {
                return clamped_artanh(disc_pseudo(a.outer, z[0], w[0]));
            },
            [&](const kind::HalfSpaceIntersection& h) {
                double best = 0.0;
                for (const auto& f : h.faces) {
                    cplx lz = 0.0, lw = 0.0;
                    for (std::size_t j = 0; j < z.size(); ++j) {
                        const cplx c = std::conj(cplx(f.normal[2 * j], f.normal[2 * j + 1]));
                        lz += c * z[j];
                        lw += c * w[j];
                    }
                    const cplx x1 = f.offset - lz, x2 = f.offset - lw;
                    best = std::max(best,
                                    clamped_artanh(std::abs(x1 - x2) / std::abs(x1 + std::conj(x2))));
                }
                return best;
            },
            [&](const kind::Product& p) {
                const auto k = p.first->dimension();
                return std::max(distance_lower(*p.first, z.subspan(0, k), w.subspan(0, k)),
                                distance_lower(*p.second, z.subspan(k), w.subspan(k)));
            },
            [&](const kind::PuncturedExample&) {
                return clamped_artanh(disc_pseudo(1.0, z[0], w[0]));
            },
            [&](const kind::BallIntersection& b) {
                const kind::Ball ball{b.ball.center, b.ball.radius};
                return std::max(distance_lower(*b.base, z, w),
                                clamped_artanh(ball_pseudo(ball, z, w)));
            },
            [&](const auto&) { return distance_oracle(spec, z, w); },
        },
        spec.kind()));
}

MetricEstimate kob_length(const DomainSpec& spec, const std::vector<ComplexPoint>& vertices, int m,
                          const SearchConfig& search) {
    if (m < 1) throw InputError("kob_length: quadrature order must be positive");
    MetricEstimate total{0.0, 0.0, "quadrature", "quadrature", 0.0};
    for (const auto& v : vertices)
        if (!spec.contains(v)) throw DomainError("kob_length: curve vertex outside the domain");
    const std::size_t n = spec.dimension();
    std::vector<cplx> mid(n), step(n);
    for (std::size_t s = 0; s + 1 < vertices.size(); ++s) {
        const auto& a = vertices[s];
        const auto& b = vertices[s + 1];
        for (std::size_t j = 0; j < n; ++j) step[j] = (b[j] - a[j]) / static_cast<double>(m);
        if (all_zero(step)) continue;
        for (int k = 0; k < m; ++k) {
            for (std::size_t j = 0; j < n; ++j) mid[j] = a[j] + (k + 0.5) * step[j];
            if (!spec.contains(mid)) throw DomainError("kob_length: segment leaves the domain");
            const auto e = royden_estimate(spec, mid, step, search);
            total.lower += e.lower;
            total.upper += e.upper;
            total.grid_slack = std::max(total.grid_slack, e.grid_slack);
        }
    }
    return total;
}

double segment_upper(const DomainSpec& spec, CSpan a, CSpan b, int m, const SearchConfig& search) {
    if (!spec.contains(a) || !spec.contains(b)) return kInfinity;
    const std::size_t n = a.size();
    std::array<cplx, 8> smid{}, sstep{};
    std::vector<cplx> hmid, hstep;
    std::span<cplx> mid(smid.data(), n), step(sstep.data(), n);
    if (n > smid.size()) {
        hmid.resize(n);
        hstep.resize(n);
        mid = hmid;
        step = hstep;
    }
    for (std::size_t j = 0; j < n; ++j) step[j] = (b[j] - a[j]) / static_cast<double>(m);
    if (all_zero(step)) return 0.0;
    const bool model = spec.is_model();
    double total = 0.0;
    for (int k = 0; k < m; ++k) {
        for (std::size_t j = 0; j < n; ++j) mid[j] = a[j] + (k + 0.5) * step[j];
        if (!spec.contains(mid)) return kInfinity;
        total += model ? royden_oracle(spec, mid, step) : royden_estimate(spec, mid, step, search).upper;
    }
    return total;
}

}  // namespace koblab
