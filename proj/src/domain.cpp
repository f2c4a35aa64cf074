#include <koblab/domain.hpp>
#include <koblab/errors.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace koblab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Euclidean distance in R^2 from (s, t), st < 1, to the hyperbola branch xy = 1.
// Scan in log-coordinates, then golden-section refinement around the best sample.
double hyperbola_distance(double s, double t) {
    auto f = [&](double u) {
        const double x = std::exp(u);
        const double dx = x - s;
        const double dy = 1.0 / x - t;
        return dx * dx + dy * dy;
    };
    constexpr int kSamples = 2000;
    constexpr double kLo = -20.0, kHi = 20.0;
    const double step = (kHi - kLo) / kSamples;
    int best = 0;
    double best_val = f(kLo);
    for (int i = 1; i <= kSamples; ++i) {
        const double v = f(kLo + i * step);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    double a = kLo + (best - 1) * step, b = kLo + (best + 1) * step;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 80; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    return std::sqrt(std::min({best_val, fc, fd}));
}

double face_norm(const kind::HalfSpace& f) {
    double s = 0.0;
    for (double a : f.normal) s += a * a;
    return std::sqrt(s);
}

double face_value(const kind::HalfSpace& f, CSpan z) {
    double s = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j)
        s += f.normal[2 * j] * z[j].real() + f.normal[2 * j + 1] * z[j].imag();
    return s;
}

// l(x) = sum conj(c_j) x_j with c_j = a_{2j} + i a_{2j+1}, so Re l(z) = a . x.
cplx face_functional(const kind::HalfSpace& f, CSpan x) {
    cplx s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j)
        s += std::conj(cplx(f.normal[2 * j], f.normal[2 * j + 1])) * x[j];
    return s;
}

}  // namespace

bool Neighborhood::compactly_inside(const Neighborhood& outer) const {
    return center.dim() == outer.center.dim() && distance(center, outer.center) == 0.0 &&
           radius < outer.radius;
}

double LineSlice::inscribed_radius(cplx s) const {
    if (empty) return 0.0;
    double r = kInf;
    for (const auto& d : inside) r = std::min(r, d.radius - std::abs(s - d.center));
    for (const auto& d : outside) r = std::min(r, std::abs(s - d.center) - d.radius);
    for (const auto& p : planes)
        r = std::min(r, (p.offset - (std::conj(p.normal) * s).real()) / std::abs(p.normal));
    for (const auto& c : punctures) r = std::min(r, std::abs(s - c));
    return std::max(r, 0.0);
}

DomainSpec::DomainSpec(Kind k, std::size_t dim, bool bounded, double bound)
    : kind_(std::make_shared<const Kind>(std::move(k))),
      dim_(dim),
      bounded_(bounded),
      bounding_radius_(bound) {}

DomainSpec DomainSpec::unit_disc() { return DomainSpec(kind::UnitDisc{}, 1, true, 1.0); }

DomainSpec DomainSpec::disc(double radius) {
    if (!(radius > 0.0)) throw InputError("disc radius must be positive");
    return DomainSpec(kind::DiscOfRadius{radius}, 1, true, radius);
}

DomainSpec DomainSpec::polydisc(std::vector<double> radii) {
    if (radii.empty()) throw InputError("polydisc needs at least one radius");
    double s = 0.0;
    for (double r : radii) {
        if (!(r > 0.0)) throw InputError("polydisc radii must be positive");
        s += r * r;
    }
    const auto n = radii.size();
    return DomainSpec(kind::Polydisc{std::move(radii)}, n, true, std::sqrt(s));
}

DomainSpec DomainSpec::ball(ComplexPoint center, double radius) {
    if (!(radius > 0.0)) throw InputError("ball radius must be positive");
    if (!center.finite()) throw InputError("ball center must be finite");
    const auto n = center.dim();
    const double bound = norm(center) + radius;
    return DomainSpec(kind::Ball{std::move(center), radius}, n, true, bound);
}

DomainSpec DomainSpec::annulus(double inner, double outer) {
    if (!(inner >= 0.0 && outer > inner)) throw InputError("annulus needs 0 <= r_in < r_out");
    return DomainSpec(kind::Annulus{inner, outer}, 1, true, outer);
}

DomainSpec DomainSpec::half_spaces(std::size_t dimension, std::vector<kind::HalfSpace> faces) {
    if (dimension == 0) throw InputError("dimension must be positive");
    for (const auto& f : faces) {
        if (f.normal.size() != 2 * dimension)
            throw InputError("half-space normal must have 2n real components");
        if (face_norm(f) == 0.0) throw InputError("half-space normal must be nonzero");
    }
    // Boundedness of a polyhedron is not decided here; treated as unbounded.
    return DomainSpec(kind::HalfSpaceIntersection{dimension, std::move(faces)}, dimension, false,
                      kInf);
}

DomainSpec DomainSpec::product(DomainSpec first, DomainSpec second) {
    const auto n = first.dimension() + second.dimension();
    const bool b = first.bounded() && second.bounded();
    const double bound = b ? std::hypot(first.bounding_radius(), second.bounding_radius()) : kInf;
    return DomainSpec(kind::Product{std::make_shared<const DomainSpec>(std::move(first)),
                                    std::make_shared<const DomainSpec>(std::move(second))},
                      n, b, bound);
}

DomainSpec DomainSpec::punctured_example() {
    return DomainSpec(kind::PuncturedExample{}, 2, false, kInf);
}

DomainSpec DomainSpec::ball_intersection(DomainSpec base, Neighborhood ball) {
    if (ball.center.dim() != base.dimension())
        throw InputError("neighborhood dimension does not match domain");
    if (!(ball.radius > 0.0)) throw InputError("neighborhood radius must be positive");
    const double bound = std::min(base.bounding_radius(), norm(ball.center) + ball.radius);
    const auto n = base.dimension();
    return DomainSpec(
        kind::BallIntersection{std::make_shared<const DomainSpec>(std::move(base)), std::move(ball)},
        n, true, bound);
}

bool DomainSpec::is_model() const {
    return std::visit(overloaded{
                          [](const kind::UnitDisc&) { return true; },
                          [](const kind::DiscOfRadius&) { return true; },
                          [](const kind::Polydisc&) { return true; },
                          [](const kind::Ball&) { return true; },
                          [](const kind::Product& p) {
                              return p.first->is_model() && p.second->is_model();
                          },
                          [](const auto&) { return false; },
                      },
                      *kind_);
}

std::string DomainSpec::name() const {
    return std::visit(overloaded{
                          [](const kind::UnitDisc&) -> std::string { return "unitdisc"; },
                          [](const kind::DiscOfRadius&) -> std::string { return "discofradius"; },
                          [](const kind::Polydisc&) -> std::string { return "polydisc"; },
                          [](const kind::Ball&) -> std::string { return "ball"; },
                          [](const kind::Annulus&) -> std::string { return "annulus"; },
                          [](const kind::HalfSpaceIntersection&) -> std::string {
                              return "halfspaceintersection";
                          },
                          [](const kind::Product& p) -> std::string {
                              return "product(" + p.first->name() + "," + p.second->name() + ")";
                          },
                          [](const kind::PuncturedExample&) -> std::string {
                              return "puncturedexample";
                          },
                          [](const kind::BallIntersection& b) -> std::string {
                              return "ballintersection(" + b.base->name() + ")";
                          },
                      },
                      *kind_);
}

void DomainSpec::check_dim(CSpan z) const {
    if (z.size() != dim_) {
        std::ostringstream os;
        os << "dimension mismatch: point has " << z.size() << " coordinates, domain has " << dim_;
        throw InputError(os.str());
    }
}

double DomainSpec::gap(CSpan z) const {
    check_dim(z);
    return std::visit(
        overloaded{
            [&](const kind::UnitDisc&) { return std::abs(z[0]) - 1.0; },
            [&](const kind::DiscOfRadius& d) { return std::abs(z[0]) - d.radius; },
            [&](const kind::Polydisc& p) {
                double g = -kInf;
                for (std::size_t j = 0; j < dim_; ++j) g = std::max(g, std::abs(z[j]) - p.radii[j]);
                return g;
            },
            [&](const kind::Ball& b) { return distance(z, b.center) - b.radius; },
            [&](const kind::Annulus& a) {
                const double r = std::abs(z[0]);
                return std::max(a.inner - r, r - a.outer);
            },
            [&](const kind::HalfSpaceIntersection& h) {
                double g = -kInf;
                for (const auto& f : h.faces)
                    g = std::max(g, (face_value(f, z) - f.offset) / face_norm(f));
                return g;
            },
            [&](const kind::Product& p) {
                const auto k = p.first->dimension();
                return std::max(p.first->gap(z.subspan(0, k)), p.second->gap(z.subspan(k)));
            },
            [&](const kind::PuncturedExample&) {
                const double a = std::abs(z[0]);
                return std::max({-a, a - 1.0, a * std::abs(z[1]) - 1.0});
            },
            [&](const kind::BallIntersection& b) {
                return std::max(b.base->gap(z), distance(z, b.ball.center) - b.ball.radius);
            },
        },
        *kind_);
}

bool DomainSpec::contains_unchecked(CSpan z) const { return gap(z) < 0.0; }

bool DomainSpec::contains(CSpan z) const {
    check_dim(z);
    return contains_unchecked(z);
}

double DomainSpec::distance_unchecked(CSpan z) const {
    return std::visit(
        overloaded{
            [&](const kind::Product& p) {
                const auto k = p.first->dimension();
                return std::min(p.first->distance_unchecked(z.subspan(0, k)),
                                p.second->distance_unchecked(z.subspan(k)));
            },
            [&](const kind::PuncturedExample&) {
                const double a = std::abs(z[0]);
                const double b = std::abs(z[1]);
                return std::min({a, 1.0 - a, hyperbola_distance(a, b)});
            },
            [&](const kind::BallIntersection& bi) {
                return std::min(bi.base->distance_unchecked(z),
                                bi.ball.radius - distance(z, bi.ball.center));
            },
            // Remaining kinds: the complement is a union of sets whose distances are the
            // negated per-constraint gaps, so -gap is exact.
            [&](const auto&) { return -gap(z); },
        },
        *kind_);
}

double DomainSpec::boundary_distance(CSpan z) const {
    check_dim(z);
    if (!contains_unchecked(z)) throw DomainError("boundary_distance: point outside the domain");
    return distance_unchecked(z);
}

double DomainSpec::hole_limit(CSpan z, CSpan dir) const {
    check_dim(z);
    return std::visit(overloaded{
                          [&](const kind::Annulus& a) {
                              const double u = std::abs(dir[0]);
                              return u == 0.0 ? kInf : (std::abs(z[0]) - a.inner) / u;
                          },
                          [&](const kind::PuncturedExample&) {
                              const double u = std::abs(dir[0]);
                              return u == 0.0 ? kInf : std::abs(z[0]) / u;
                          },
                          [&](const kind::Product& p) {
                              const auto k = p.first->dimension();
                              return std::min(
                                  p.first->hole_limit(z.subspan(0, k), dir.subspan(0, k)),
                                  p.second->hole_limit(z.subspan(k), dir.subspan(k)));
                          },
                          [&](const kind::BallIntersection& b) { return b.base->hole_limit(z, dir); },
                          [&](const auto&) { return kInf; },
                      },
                      *kind_);
}

namespace {

// |z + s d| < R for scalar z, d.
void slice_disc(cplx z, cplx d, double R, LineSlice& out) {
    if (d == cplx(0.0)) {
        if (!(std::abs(z) < R)) out.empty = true;
        return;
    }
    out.inside.push_back({-z / d, R / std::abs(d)});
}

void slice_ball(CSpan z, CSpan d, const ComplexPoint& c, double R, LineSlice& out) {
    double ww = 0.0, dd = 0.0;
    cplx p = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
        const cplx w = z[j] - c[j];
        ww += std::norm(w);
        dd += std::norm(d[j]);
        p += w * std::conj(d[j]);
    }
    if (dd == 0.0) {
        if (!(std::sqrt(ww) < R)) out.empty = true;
        return;
    }
    const double r2 = (R * R - ww + std::norm(p) / dd) / dd;
    if (!(r2 > 0.0)) {
        out.empty = true;
        return;
    }
    out.inside.push_back({-p / dd, std::sqrt(r2)});
}

}  // namespace

bool DomainSpec::slice_into(CSpan z, CSpan d, LineSlice& out) const {
    return std::visit(
        overloaded{
            [&](const kind::UnitDisc&) {
                slice_disc(z[0], d[0], 1.0, out);
                return true;
            },
            [&](const kind::DiscOfRadius& k) {
                slice_disc(z[0], d[0], k.radius, out);
                return true;
            },
            [&](const kind::Polydisc& k) {
                for (std::size_t j = 0; j < dim_; ++j) slice_disc(z[j], d[j], k.radii[j], out);
                return true;
            },
            [&](const kind::Ball& k) {
                slice_ball(z, d, k.center, k.radius, out);
                return true;
            },
            [&](const kind::Annulus& k) {
                slice_disc(z[0], d[0], k.outer, out);
                if (d[0] == cplx(0.0)) {
                    if (!(std::abs(z[0]) > k.inner)) out.empty = true;
                } else {
                    out.outside.push_back({-z[0] / d[0], k.inner / std::abs(d[0])});
                }
                return true;
            },
            [&](const kind::HalfSpaceIntersection& k) {
                for (const auto& f : k.faces) {
                    const cplx ld = face_functional(f, d);
                    const double beta = f.offset - face_value(f, z);
                    if (ld == cplx(0.0)) {
                        if (!(beta > 0.0)) out.empty = true;
                        continue;
                    }
                    out.planes.push_back({std::conj(ld), beta});
                }
                return true;
            },
            [&](const kind::Product& k) {
                const auto n1 = k.first->dimension();
                return k.first->slice_into(z.subspan(0, n1), d.subspan(0, n1), out) &&
                       k.second->slice_into(z.subspan(n1), d.subspan(n1), out);
            },
            [&](const kind::PuncturedExample&) {
                if (d[0] != cplx(0.0)) return false;
                const double a = std::abs(z[0]);
                if (!(a > 0.0 && a < 1.0)) {
                    out.empty = true;
                    return true;
                }
                slice_disc(z[1], d[1], 1.0 / a, out);
                return true;
            },
            [&](const kind::BallIntersection& k) {
                if (!k.base->slice_into(z, d, out)) return false;
                slice_ball(z, d, k.ball.center, k.ball.radius, out);
                return true;
            },
        },
        *kind_);
}

std::optional<LineSlice> DomainSpec::line_slice(CSpan z, CSpan dir) const {
    check_dim(z);
    check_dim(dir);
    LineSlice s;
    if (!slice_into(z, dir, s)) return std::nullopt;
    return s;
}

bool CompactSlice::contains(CSpan z) const {
    return owner.contains(z) && owner.boundary_distance(z) >= floor && norm(z) <= box_radius;
}

bool contains(const DomainSpec& spec, CSpan z) { return spec.contains(z); }

double boundary_distance(const DomainSpec& spec, CSpan z) { return spec.boundary_distance(z); }

double complex_line_radius(const DomainSpec& spec, CSpan z, CSpan v,
                           const LineRadiusOptions& opts) {
    if (!spec.contains(z)) throw DomainError("complex_line_radius: base point outside the domain");
    if (v.size() != z.size()) throw InputError("complex_line_radius: direction dimension mismatch");
    const double vn = norm(v);
    if (vn == 0.0) throw InputError("complex_line_radius: zero direction");

    const std::size_t n = z.size();
    std::vector<cplx> u(n), w(n);
    for (std::size_t j = 0; j < n; ++j) u[j] = v[j] / vn;

    std::vector<cplx> unit_circle(opts.angles);
    for (int a = 0; a < opts.angles; ++a)
        unit_circle[a] = std::polar(1.0, 2.0 * M_PI * a / opts.angles);

    auto valid = [&](double r) {
        for (int k = 1; k <= opts.radii; ++k) {
            const double rho = r * k / opts.radii;
            for (const auto& e : unit_circle) {
                for (std::size_t j = 0; j < n; ++j) w[j] = z[j] + rho * e * u[j];
                if (!spec.contains(w)) return false;
            }
        }
        return true;
    };

    const double holes = spec.hole_limit(z, u);
    double lo = 0.0, hi = spec.bounded() ? 2.0 * spec.bounding_radius() : 1.0;
    int it = 0;
    while (valid(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12 || hi > holes * 4.0) {
            if (hi > 1e12) return std::min(holes, kInf) * opts.safety;
            break;
        }
        if (++it > opts.max_iterations) throw NumericError("complex_line_radius: bracket failed");
    }
    it = 0;
    while (hi - lo > opts.tolerance * std::max(1.0, lo)) {
        const double mid = 0.5 * (lo + hi);
        (valid(mid) ? lo : hi) = mid;
        if (++it > opts.max_iterations)
            throw NumericError("complex_line_radius: bisection did not converge");
    }
    return std::min(lo, holes) * opts.safety;
}

ComplexPoint from_real(std::span<const double> x) {
    ComplexPoint z;
    z.coords.resize(x.size() / 2);
    for (std::size_t j = 0; j < z.dim(); ++j) z[j] = cplx(x[2 * j], x[2 * j + 1]);
    return z;
}

std::vector<double> to_real(CSpan z) {
    std::vector<double> x(2 * z.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
        x[2 * j] = z[j].real();
        x[2 * j + 1] = z[j].imag();
    }
    return x;
}

std::vector<ComplexPoint> sample_interior(const DomainSpec& spec, double h, double margin,
                                          double box_radius) {
    if (!(h > 0.0)) throw InputError("sample_interior: spacing must be positive");
    if (!(box_radius > 0.0)) throw InputError("sample_interior: box radius must be positive");
    const std::size_t D = 2 * spec.dimension();
    const long K = static_cast<long>(std::floor(box_radius / h + 1e-9));
    std::vector<long> idx(D, -K);
    std::vector<double> x(D);
    std::vector<ComplexPoint> out;
    while (true) {
        for (std::size_t i = 0; i < D; ++i) x[i] = idx[i] * h;
        const ComplexPoint z = from_real(x);
        if (spec.contains(z) && spec.boundary_distance(z) >= margin * h) out.push_back(z);
        std::size_t i = D;
        while (i > 0 && idx[i - 1] == K) {
            idx[i - 1] = -K;
            --i;
        }
        if (i == 0) break;
        ++idx[i - 1];
    }
    if (out.empty()) {
        std::ostringstream os;
        os << "sample_interior: no lattice points (h=" << h << ", margin=" << margin
           << ", box=" << box_radius << ") inside " << spec.name();
        throw DegenerateGridError(os.str());
    }
    return out;
}

std::vector<ComplexPoint> boundary_approach(const DomainSpec& spec, const ComplexPoint& p,
                                            const ComplexPoint& inward, int count, double rate,
                                            double t0) {
    if (p.dim() != spec.dimension() || inward.dim() != spec.dimension())
        throw InputError("boundary_approach: dimension mismatch");
    if (count < 1) throw InputError("boundary_approach: count must be positive");
    if (!(rate > 0.0 && rate < 1.0)) throw InputError("boundary_approach: rate must lie in (0,1)");
    if (!(t0 > 0.0)) throw InputError("boundary_approach: t0 must be positive");
    std::vector<ComplexPoint> out;
    double t = t0;
    for (int k = 0; k < count; ++k, t *= rate) {
        ComplexPoint z = p + cplx(t) * inward;
        if (!spec.contains(z))
            throw DomainError("boundary_approach: direction is not inward (point left the domain)");
        out.push_back(std::move(z));
    }
    return out;
}

DomainSpec intersect_with_ball(const DomainSpec& spec, const Neighborhood& nb) {
    return DomainSpec::ball_intersection(spec, nb);
}

void require_boundary_point(const DomainSpec& spec, CSpan p, double tol) {
    const double g = spec.gap(p);
    if (!(std::abs(g) <= tol)) {
        std::ostringstream os;
        os << "point is not on the boundary (defining function " << g << ")";
        throw DomainError(os.str());
    }
}

}  // namespace koblab
