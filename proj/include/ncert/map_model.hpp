#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ncert/expr.hpp"
#include "ncert/interval.hpp"

namespace ncert {

enum class Monotonicity { Increasing, Decreasing, Constant };

// One monotone branch. Domain endpoints are enclosures of the true cut points
// (e.g. 0.3 is not a binary number); the expression must stay evaluable on
// [lo_end.lo, hi_end.hi].
struct BranchSpec {
    Interval lo_end{0.0};
    Interval hi_end{1.0};
    Monotonicity mono = Monotonicity::Increasing;
    std::string formula;               // source text (kept for serialization)
    std::vector<Interval> singular;    // points where T'' / T'^2 blows up
};

struct DerivativeBounds {
    double inf_abs_d1 = 0;     // certified lower bound of inf |T'|
    double sup_abs_d1 = 0;     // certified upper bound of sup |T'|
    double sup_distortion = 0; // certified upper bound of sup |T''/T'^2|
    bool unbounded = false;    // some piece had no finite enclosure
};

class MapModel {
public:
    MapModel(std::string id, ParamMap params, std::vector<BranchSpec> branches,
             std::vector<Interval> critical_points = {});

    const std::string& id() const { return id_; }
    const ParamMap& params() const { return params_; }
    size_t branch_count() const { return branches_.size(); }
    const BranchSpec& branch(size_t i) const { return branches_[i].spec; }
    // Points where |T'| is 0 or infinite (log|T'| singular).
    const std::vector<Interval>& critical_points() const { return critical_; }

    Interval outer_domain(size_t i) const;
    Interval inner_domain(size_t i) const;  // may be empty-ish for tiny branches

    // Derivative order 0..3 of branch i evaluated on x (caller keeps x inside
    // the branch's outer domain). Throws DomainError at singularities.
    Interval eval(size_t i, const Interval& x, int order = 0) const;
    long double eval_ld(size_t i, long double x, int order = 0) const;
    // T evaluated on x, taking the hull over all branches x meets.
    Interval operator()(const Interval& x) const;
    size_t branch_of(double x) const;

    // Enclosure of the branch image T_i(dom_i).
    Interval branch_image(size_t i) const;
    // Enclosure of T([0,1]); pieces only matter for constant branches.
    Interval range(int pieces_per_branch = 256) const;

    // Enclosure of the clamped crossing point p(y) of branch i: the set
    // {x in dom_i : T(x) < y} is [d0, p) for increasing and (p, d1] for
    // decreasing branches. Not defined for constant branches.
    Interval crossing(size_t i, double y, double tol = 0x1p-40, int max_iter = 128) const;

    // Enclosure of T_i^{-1}(y ∩ image); nullopt when y misses the image.
    std::optional<Interval> invert_branch(size_t i, const Interval& y, double tol = 0x1p-40,
                                          int max_iter = 128) const;

    // Bounds over I (clipped to [0,1]); I is subdivided at branch cuts and
    // singular points, and uniformly into `pieces` parts.
    DerivativeBounds derivative_bounds(const Interval& I, int pieces = 64) const;
    // Same on a single branch.
    DerivativeBounds derivative_bounds(size_t branch, const Interval& I, int pieces = 64) const;

    std::string to_json() const;
    static MapModel from_json(const std::string& text);
    // Stable hash of the definition, used for operator caches.
    std::string content_hash() const;

private:
    struct Compiled {
        BranchSpec spec;
        Tape d[4];
    };
    std::string id_;
    ParamMap params_;
    std::vector<Compiled> branches_;
    std::vector<Interval> critical_;
};

MapModel make_bz_map();
MapModel make_bz_map(const Interval& a, const Interval& b, const Interval& c);
MapModel make_toy_map(const Interval& epsilon);
MapModel make_doubling_map();
MapModel make_tent_map();
MapModel make_identity_map();
MapModel make_map_by_name(const std::string& name);

// Parameter enclosures of the BZ map.
Interval bz_a();
Interval bz_b();
Interval bz_c();

}  // namespace ncert
