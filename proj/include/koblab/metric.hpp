#pragma once

// Certified bounds for the Kobayashi-Royden metric, the Lempert function and
// Kobayashi lengths of polygonal curves.

#include <koblab/domain.hpp>

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace koblab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Interval [lower, upper] for a metric quantity, with the methods that produced each side.
struct MetricEstimate {
    double lower = 0.0;
    double upper = kInfinity;
    std::string lower_method = "none";
    std::string upper_method = "none";
    /// Relative containment-grid slack affecting the upper side.
    double grid_slack = 0.0;

    bool is_point() const { return lower == upper; }
    bool brackets(double value, double rel_tol = 0.0) const {
        const double tol = rel_tol * std::abs(value);
        return lower <= value + tol && value - tol <= upper;
    }
};

/// Holomorphic disc zeta -> sum_k coeffs[k] zeta^k, coeffs[0] pinned to the base point.
struct AnalyticDiscCandidate {
    std::vector<std::vector<cplx>> coeffs;
    int angles = 64;
    int radii = 8;
    double safety = 0.999;

    void evaluate(cplx zeta, std::vector<cplx>& out) const;
    /// Checks the image of the safety-shrunk polar grid.
    bool validate(const DomainSpec& spec) const;
};

struct SearchConfig {
    int degree = 3;
    int restarts = 8;
    int budget = 16;            // local-search iterations per restart
    std::uint64_t seed = 0;
    bool polynomial = true;     // run the polynomial disc search
    bool slice_discs = true;    // off-centre discs in the complex line
    int angles = 64;
    int radii = 8;
    double safety = 0.999;

    /// Affine and slice discs only; used for graph edge weights.
    static SearchConfig fast() {
        SearchConfig c;
        c.polynomial = false;
        return c;
    }
};

/// Closed-form metric on model kinds (discs, polydiscs, balls, their products).
double royden_oracle(const DomainSpec& spec, CSpan z, CSpan v);
/// Closed-form Kobayashi distance on model kinds.
double distance_oracle(const DomainSpec& spec, CSpan z, CSpan w);

double royden_upper(const DomainSpec& spec, CSpan z, CSpan v, const SearchConfig& search = {});
double royden_lower(const DomainSpec& spec, CSpan z, CSpan v);
MetricEstimate royden_estimate(const DomainSpec& spec, CSpan z, CSpan v,
                               const SearchConfig& search = {});

/// Upper bound of the Lempert function l = artanh(l~); +inf when no disc connects z and w.
double lempert_upper(const DomainSpec& spec, CSpan z, CSpan w, const SearchConfig& search = {});
/// Lower bound of the Kobayashi distance from an enclosing model domain; 0 if none applies.
double distance_lower(const DomainSpec& spec, CSpan z, CSpan w);

/// Kobayashi-Royden length of the polygon through `vertices`, composite midpoint rule with m
/// sub-segments per edge.
MetricEstimate kob_length(const DomainSpec& spec, const std::vector<ComplexPoint>& vertices,
                          int m = 4, const SearchConfig& search = SearchConfig::fast());

/// Upper bound for the length of the segment a -> b with m midpoint sub-segments; +inf when a
/// sub-midpoint or endpoint lies outside the domain.
double segment_upper(const DomainSpec& spec, CSpan a, CSpan b, int m,
                     const SearchConfig& search = SearchConfig::fast());

/// artanh clamped: arguments >= 1 - 1e-12 map to +inf.
double clamped_artanh(double x);

/// tanh(x) >= 1 - e^{-x} for x >= 0; returns the (nonnegative) difference.
double tanh_exp_margin(double x);

}  // namespace koblab
