#pragma once

// Localization experiments: hyperbolicity at a boundary point, Royden's lemma, Sarkar's
// infinitesimal estimate, additive/multiplicative/length localization and Gromov products.

#include <koblab/report.hpp>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace koblab {

using PointPairs = std::vector<std::pair<ComplexPoint, ComplexPoint>>;

/// Deterministic uniform samples of spec ∩ nb (rejection sampling).
std::vector<ComplexPoint> sample_in_ball(const DomainSpec& spec, const Neighborhood& nb,
                                         std::size_t count, std::uint64_t seed);
/// Unit direction with i.i.d. complex Gaussian components.
std::vector<ComplexPoint> random_directions(std::size_t n, std::size_t count, std::uint64_t seed);

/// Euclidean lower bound for k_Omega(Omega ∩ V, Omega \ U): (r_U - r_V) / R for Omega in B(0, R);
/// +inf when U contains Omega; 0 for unbounded domains.
double set_distance_lower(const DomainSpec& spec, const Neighborhood& U, const Neighborhood& V);
/// Same bound for a single point x: (r_U - |x - c_U|) / R.
double point_set_distance_lower(const DomainSpec& spec, CSpan x, const Neighborhood& U);

struct HyperbolicityOptions {
    PointPairs sequences;        // (z_n, w_n) for unbounded domains
    double box_radius = 0.0;     // points beyond it count as escaped
    double decay_ratio = 0.5;    // last/first Lempert bound below this with monotone decay -> violated
};

ExperimentReport hyperbolicity_probe(const DomainSpec& spec, const ComplexPoint& p,
                                     const Neighborhood& U, const Neighborhood& V,
                                     const MetricGraph* graph, const HyperbolicityOptions& opts = {});

struct CheckOptions {
    std::size_t samples = 100;
    std::uint64_t seed = 0;
    double slack_budget = 0.0;
    SearchConfig search = SearchConfig::fast();  // slice discs only; the polynomial family is ~100x slower
    int boundary_probes = 64;   // points on the sphere of the neighbourhood for l~ upper bounds
};

/// l~_Omega(z, Omega \ D) * kappa_{Omega ∩ D}(z; v) <= kappa_Omega(z; v).
ExperimentReport check_royden_lemma(const DomainSpec& spec, const Neighborhood& D,
                                    const CheckOptions& opts = {});
/// Royden check at explicit samples (z, v).
ExperimentReport check_royden_lemma_at(const DomainSpec& spec, const Neighborhood& D,
                                       const std::vector<TangentVector>& samples,
                                       const CheckOptions& opts = {});

/// coth(k) for a set-distance lower bound k > 0 (1 at k = +inf).
double sarkar_constant(double set_distance_lower);
/// 1 + C e^{-k}.
double sarkar_factor(double C, double k);

/// kappa_{Omega ∩ U}(x; v) <= (1 + C e^{-k_Omega(x, Omega \ U)}) kappa_Omega(x; v), x in V,
/// C = coth(lower bound of k_Omega(Omega ∩ V, Omega \ U)).
ExperimentReport check_sarkar_estimate(const DomainSpec& spec, const ComplexPoint& p,
                                       const Neighborhood& U, const Neighborhood& V,
                                       const MetricGraph* graph, const CheckOptions& opts = {});

struct SurveyOptions {
    std::size_t pairs = 400;
    std::uint64_t seed = 0;
    double sample_spacing = 0.0;  // restrict sample points to this lattice (0: every local node)
    double ratio_floor = 1e-6;
    double slack_budget = 0.0;
    double stratum_base = 0.01;   // strata [base 2^k, base 2^{k+1}) of boundary distance
};

/// Sample points: local-graph nodes inside V (optionally on the coarser sample lattice).
std::vector<ComplexPoint> survey_points(const MetricGraph& local, const Neighborhood& V,
                                        double sample_spacing);

ExperimentReport additive_gap_survey(const DomainSpec& spec, const ComplexPoint& p,
                                     const Neighborhood& U, const Neighborhood& V,
                                     const MetricGraph& full, const MetricGraph& local,
                                     const SurveyOptions& opts = {});

ExperimentReport multiplicative_ratio_survey(const DomainSpec& spec, const ComplexPoint& p,
                                             const Neighborhood& U, const Neighborhood& V,
                                             const MetricGraph& full, const MetricGraph& local,
                                             const SurveyOptions& opts = {});

/// Compares sup statistics of two runs of the same survey at different h.
ExperimentReport refinement_comparison(const ExperimentReport& coarse, const ExperimentReport& fine,
                                       const std::string& statistic, double tolerance);

ExperimentReport length_localization_survey(const DomainSpec& spec, const ComplexPoint& p,
                                            const Neighborhood& U, const Neighborhood& V,
                                            const std::vector<Curve>& curves, int m = 4);

/// (z|w)_o from graph distances; rounding-level negatives are clamped to 0.
double gromov_product(const MetricGraph& g, CSpan z, CSpan w, CSpan o);

struct GromovOptions {
    double growth_threshold = 0.25;  // growth of (z_n|w_n)_o over the sequence that flags divergence
    bool model_oracle = true;        // model domains: exact distances instead of graph distances
};

ExperimentReport gromov_property_probe(const MetricGraph& g, const ComplexPoint& p,
                                       const ComplexPoint& q, const ComplexPoint& o,
                                       const PointPairs& sequence, const GromovOptions& opts = {});

struct WeakGromovTarget {
    ComplexPoint q;
    PointPairs sequence;
};

ExperimentReport weak_gromov_probe(const MetricGraph& g, const ComplexPoint& p, const ComplexPoint& o,
                                   const std::vector<WeakGromovTarget>& targets, const GromovOptions& opts = {});

/// z_n = p + t_n^{e_j} * inward_j coordinate-wise, t_n = t0 rate^n: different approach rates per
/// coordinate (e = all ones gives boundary_approach).
std::vector<ComplexPoint> approach_sequence(const DomainSpec& spec, const ComplexPoint& p,
                                            const ComplexPoint& inward, const std::vector<double>& exponents,
                                            int count, double rate, double t0);

}  // namespace koblab
