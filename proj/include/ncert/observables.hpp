#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ncert/certification.hpp"
#include "ncert/interval.hpp"
#include "ncert/map_model.hpp"

namespace ncert {

// |∫ H v| <= (sup H - inf H) / 2 * ||v||_1 for v with zero average.
Interval zero_average_bound(const Interval& H_sup, const Interval& H_inf, const Interval& v_l1);

enum class BzPoint { Singular0125, CutLeft, CutRight };

// Enclosures of ∫ log|T'| for the BZ map with parameters (a, c):
//   Singular0125: over (u, v) with 0.125 - 2^-6 < u <= 0.125 <= v < 0.125 + 2^-6
//   CutLeft:      over (u, 0.3) with 0.2 < u <= 0.3 (v ignored)
//   CutRight:     over (0.3, v) with 0.3 <= v < 0.303 (u ignored)
// Throws DomainError outside these windows.
Interval l1_log_bounds_bz(BzPoint p, const Interval& u, const Interval& v, const Interval& a = bz_a(),
                          const Interval& c = bz_c());

// A point where h = log|T'| is unbounded, with a provider for
// ||h||_{L1([u, v])} on neighborhoods x - left <= u <= x <= v <= x + right.
struct SingularPoint {
    Interval x;
    double max_left = 0;   // admissible neighborhood radii (exclusive)
    double max_right = 0;
    std::function<double(double u, double v)> l1;  // empty: numeric fallback
};

struct ObservableSpec {
    std::string name = "log|T'|";
    std::vector<SingularPoint> singular;
    // E ladder: radii 2^-r for r in [min_log2_radius, max_log2_radius].
    int min_log2_radius = 6;
    int max_log2_radius = 16;

    // Closed forms for the BZ map, numeric fallback for other maps.
    static ObservableSpec for_map(const MapModel& m);
};

enum class Verdict { Negative, Positive, Indeterminate };
const char* verdict_name(Verdict v);

struct LyapunovEnclosure {
    Interval lambda{0.0};
    Verdict verdict = Verdict::Indeterminate;
    std::vector<Interval> E;  // excluded neighborhoods
    Interval main{0.0};       // sum over X \ E of f~ ∫ H, plus c (1 - mass)
    double e_term = 0;        // ||H||_{L1(E)} ||f||_{L^inf(E)}
    double l1_term = 0;       // error of the zero-average part on X \ E
    double mass_term = 0;     // |c| times the L1 error carried by E
    int candidates = 0;       // number of E tried

    double width() const { return lambda.hi - lambda.lo; }
};

// λ = ∫ log|T'| f_ξ. Tries the E ladder and keeps the tightest enclosure.
LyapunovEnclosure estimate_lyapunov(const MapModel& m, const NoiseKernel& kernel, const DensityEnclosure& d,
                                    const ObservableSpec& spec);

std::string lyapunov_to_json(const LyapunovEnclosure& e);

}  // namespace ncert
