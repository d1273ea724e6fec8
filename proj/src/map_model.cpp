#include "ncert/map_model.hpp"
#include "json_interval.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace ncert {

using nlohmann::json;

namespace {

const char* mono_name(Monotonicity m) {
    switch (m) {
        case Monotonicity::Increasing: return "increasing";
        case Monotonicity::Decreasing: return "decreasing";
        case Monotonicity::Constant: return "constant";
    }
    return "?";
}

Monotonicity mono_from(const std::string& s) {
    if (s == "increasing") return Monotonicity::Increasing;
    if (s == "decreasing") return Monotonicity::Decreasing;
    if (s == "constant") return Monotonicity::Constant;
    throw std::invalid_argument("unknown monotonicity '" + s + "'");
}

using detail::interval_json;
using detail::interval_from;

}  // namespace

MapModel::MapModel(std::string id, ParamMap params, std::vector<BranchSpec> branches,
                   std::vector<Interval> critical_points)
    : id_(std::move(id)), params_(std::move(params)), critical_(std::move(critical_points)) {
    if (branches.empty()) throw std::invalid_argument("map without branches");
    for (auto& spec : branches) {
        Compiled c;
        c.spec = spec;
        Expr e = parse_expr(spec.formula);
        for (int k = 0; k < 4; ++k) {
            c.d[k] = Tape(e, params_);
            if (k < 3) e = derivative(e);
        }
        branches_.push_back(std::move(c));
    }
    if (branches_.front().spec.lo_end.lo > 0.0 || branches_.back().spec.hi_end.hi < 1.0)
        throw std::invalid_argument("branch domains must cover [0,1]");
}

Interval MapModel::outer_domain(size_t i) const {
    const auto& s = branches_[i].spec;
    return {s.lo_end.lo, s.hi_end.hi};
}

Interval MapModel::inner_domain(size_t i) const {
    const auto& s = branches_[i].spec;
    return {s.lo_end.hi, std::max(s.lo_end.hi, s.hi_end.lo)};
}

Interval MapModel::eval(size_t i, const Interval& x, int order) const {
    return branches_[i].d[order].eval(x);
}

long double MapModel::eval_ld(size_t i, long double x, int order) const {
    return branches_[i].d[order].eval_ld(x);
}

size_t MapModel::branch_of(double x) const {
    for (size_t i = 0; i < branches_.size(); ++i)
        if (x <= branches_[i].spec.hi_end.lo) return i;
    return branches_.size() - 1;
}

Interval MapModel::operator()(const Interval& x) const {
    std::optional<Interval> out;
    for (size_t i = 0; i < branches_.size(); ++i) {
        Interval dom = outer_domain(i);
        if (!dom.intersects(x)) continue;
        Interval piece = intersect(dom, x);
        Interval v = eval(i, piece);
        out = out ? hull(*out, v) : v;
    }
    if (!out) throw DomainError("point outside [0,1]");
    return *out;
}

Interval MapModel::branch_image(size_t i) const {
    const auto& s = branches_[i].spec;
    Interval a = eval(i, s.lo_end);
    Interval b = eval(i, s.hi_end);
    return hull(a, b);
}

Interval MapModel::range(int pieces) const {
    std::optional<Interval> out;
    for (size_t i = 0; i < branches_.size(); ++i) {
        const auto& sp = branches_[i].spec;
        if (sp.mono != Monotonicity::Constant) {
            // Monotone: the image is spanned by the end values.
            Interval v = hull(eval(i, sp.lo_end), eval(i, sp.hi_end));
            out = out ? hull(*out, v) : v;
            continue;
        }
        Interval dom = outer_domain(i);
        double h = (dom.hi - dom.lo) / pieces;
        for (int p = 0; p < pieces; ++p) {
            double l = dom.lo + p * h;
            double r = p + 1 == pieces ? dom.hi : dom.lo + (p + 1) * h;
            Interval v = eval(i, Interval(l, r));
            out = out ? hull(*out, v) : v;
        }
    }
    return *out;
}

Interval MapModel::crossing(size_t i, double y, double tol, int max_iter) const {
    const auto& s = branches_[i].spec;
    if (s.mono == Monotonicity::Constant) throw std::logic_error("crossing on a constant branch");
    const bool inc = s.mono == Monotonicity::Increasing;
    Interval t0 = eval(i, s.lo_end);
    Interval t1 = eval(i, s.hi_end);
    // Clamped cases: the crossing is at a domain end.
    if (inc) {
        if (t0.lo >= y) return s.lo_end;
        if (t1.hi < y) return s.hi_end;
    } else {
        if (t0.hi < y) return s.lo_end;
        if (t1.lo >= y) return s.hi_end;
    }
    // m is certainly left of p when T(m) < y (increasing) or T(m) > y
    // (decreasing); certainly right in the opposite strict case.
    auto side = [&](double m) -> int {
        Interval t = eval(i, Interval(m));
        if (inc) {
            if (t.hi < y) return -1;
            if (t.lo >= y) return +1;
        } else {
            if (t.lo > y) return -1;
            if (t.hi <= y) return +1;
        }
        return 0;
    };
    double L = s.lo_end.hi, H = std::max(L, s.hi_end.lo);
    double pl = s.lo_end.lo, ph = s.hi_end.hi;
    // Shrink [pl, ph]; on ambiguity keep bisecting the two flanks separately.
    double aL = L, aH = H;  // search windows for left / right certified points
    double bL = L, bH = H;
    bool split = false;
    for (int it = 0; it < max_iter; ++it) {
        if (!split) {
            if (ph - pl <= tol) break;
            double m = L + 0.5 * (H - L);
            if (m <= L || m >= H) break;
            int sd = side(m);
            if (sd < 0) { L = m; pl = m; }
            else if (sd > 0) { H = m; ph = m; }
            else { split = true; aL = L; aH = m; bL = m; bH = H; }
        } else {
            bool moved = false;
            double m = aL + 0.5 * (aH - aL);
            if (m > aL && m < aH) {
                if (side(m) < 0) { aL = m; pl = std::max(pl, m); } else { aH = m; }
                moved = true;
            }
            m = bL + 0.5 * (bH - bL);
            if (m > bL && m < bH) {
                if (side(m) > 0) { bH = m; ph = std::min(ph, m); } else { bL = m; }
                moved = true;
            }
            if (!moved || (aH - aL <= tol * 0.5 && bH - bL <= tol * 0.5)) break;
        }
    }
    return {pl, ph};
}

std::optional<Interval> MapModel::invert_branch(size_t i, const Interval& y, double tol,
                                                int max_iter) const {
    const auto& s = branches_[i].spec;
    Interval img = branch_image(i);
    if (!img.intersects(y)) return std::nullopt;
    if (s.mono == Monotonicity::Constant) return outer_domain(i);
    Interval yy = intersect(y, img);
    Interval p = crossing(i, yy.lo, tol, max_iter);
    Interval q = crossing(i, yy.hi, tol, max_iter);
    Interval r = hull(p, q);
    // Validate by forward evaluation: the image of the enclosure must meet y.
    if (!eval(i, r).intersects(y)) return std::nullopt;
    return r;
}

DerivativeBounds MapModel::derivative_bounds(size_t b, const Interval& I, int pieces) const {
    DerivativeBounds out;
    out.inf_abs_d1 = std::numeric_limits<double>::infinity();
    Interval dom = outer_domain(b);
    if (!dom.intersects(I)) {
        out.inf_abs_d1 = 0;
        return out;
    }
    Interval J = intersect(dom, I);
    // Cut at singular points so that only the touching pieces are lost.
    std::vector<double> cuts{J.lo};
    for (const auto& sp : branches_[b].spec.singular)
        if (sp.lo > J.lo && sp.hi < J.hi) {
            cuts.push_back(sp.lo);
            cuts.push_back(sp.hi);
        }
    cuts.push_back(J.hi);
    std::sort(cuts.begin(), cuts.end());
    const double width = J.hi - J.lo;
    for (size_t c = 0; c + 1 < cuts.size(); ++c) {
        double l = cuts[c], r = cuts[c + 1];
        int n = std::max(1, static_cast<int>(pieces * ((r - l) / (width > 0 ? width : 1))));
        if (r <= l) n = 1;
        for (int p = 0; p < n; ++p) {
            double pl = p == 0 ? l : l + (r - l) * p / n;
            double pr = p + 1 == n ? r : l + (r - l) * (p + 1) / n;
            Interval x(pl, std::max(pl, pr));
            try {
                Interval d1 = abs(eval(b, x, 1));
                out.inf_abs_d1 = std::min(out.inf_abs_d1, d1.lo);
                out.sup_abs_d1 = std::max(out.sup_abs_d1, d1.hi);
                if (d1.lo <= 0) {
                    out.unbounded = true;
                    out.sup_distortion = std::numeric_limits<double>::infinity();
                    continue;
                }
                Interval d2 = eval(b, x, 2);
                Interval dist = abs(d2 / sqr(eval(b, x, 1)));
                out.sup_distortion = std::max(out.sup_distortion, dist.hi);
            } catch (const DomainError&) {
                out.unbounded = true;
                out.inf_abs_d1 = 0;
                out.sup_abs_d1 = std::numeric_limits<double>::infinity();
                out.sup_distortion = std::numeric_limits<double>::infinity();
            }
        }
    }
    if (branches_[b].spec.mono == Monotonicity::Constant) {
        out.inf_abs_d1 = 0;
        out.unbounded = true;
        out.sup_distortion = std::numeric_limits<double>::infinity();
    }
    return out;
}

DerivativeBounds MapModel::derivative_bounds(const Interval& I, int pieces) const {
    DerivativeBounds out;
    out.inf_abs_d1 = std::numeric_limits<double>::infinity();
    bool any = false;
    for (size_t b = 0; b < branches_.size(); ++b) {
        if (!outer_domain(b).intersects(I)) continue;
        // Skip branches touched only in the uncertainty of a cut point.
        if (inner_domain(b).hi < I.lo || inner_domain(b).lo > I.hi) {
            if (I.width() > 0) continue;
        }
        DerivativeBounds d = derivative_bounds(b, I, pieces);
        out.inf_abs_d1 = std::min(out.inf_abs_d1, d.inf_abs_d1);
        out.sup_abs_d1 = std::max(out.sup_abs_d1, d.sup_abs_d1);
        out.sup_distortion = std::max(out.sup_distortion, d.sup_distortion);
        out.unbounded = out.unbounded || d.unbounded;
        any = true;
    }
    if (!any) throw DomainError("derivative_bounds: interval outside [0,1]");
    return out;
}

std::string MapModel::to_json() const {
    json j;
    j["id"] = id_;
    json p = json::object();
    for (const auto& [k, v] : params_) p[k] = interval_json(v);
    j["params"] = p;
    json br = json::array();
    for (const auto& c : branches_) {
        json sing = json::array();
        for (const auto& s : c.spec.singular) sing.push_back(interval_json(s));
        br.push_back({{"domain", {interval_json(c.spec.lo_end), interval_json(c.spec.hi_end)}},
                      {"monotonicity", mono_name(c.spec.mono)},
                      {"T", c.spec.formula},
                      {"singular", sing}});
    }
    j["branches"] = br;
    json crit = json::array();
    for (const auto& c : critical_) crit.push_back(interval_json(c));
    j["critical_points"] = crit;
    return j.dump(2);
}

MapModel MapModel::from_json(const std::string& text) {
    json j = json::parse(text);
    ParamMap params;
    if (j.contains("params"))
        for (auto& [k, v] : j["params"].items()) params[k] = interval_from(v);
    std::vector<BranchSpec> branches;
    for (const auto& b : j.at("branches")) {
        BranchSpec s;
        s.lo_end = interval_from(b.at("domain")[0]);
        s.hi_end = interval_from(b.at("domain")[1]);
        s.mono = mono_from(b.at("monotonicity").get<std::string>());
        s.formula = b.at("T").get<std::string>();
        if (b.contains("singular"))
            for (const auto& p : b["singular"]) s.singular.push_back(interval_from(p));
        branches.push_back(s);
    }
    std::vector<Interval> crit;
    if (j.contains("critical_points"))
        for (const auto& p : j["critical_points"]) crit.push_back(interval_from(p));
    return MapModel(j.at("id").get<std::string>(), params, branches, crit);
}

std::string MapModel::content_hash() const {
    // FNV-1a over the canonical JSON text.
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : to_json()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ----------------------------------------------------------- built-ins

Interval bz_a() {
    return Interval(19) / Interval(42) * cbrt(Interval(7) / Interval(5));
}

Interval bz_c() {
    Interval three20 = pow_int(Interval(3), 20);  // exact
    return Interval(20) / (three20 * Interval(7)) * cbrt(Interval(7) / Interval(5)) *
           exp(Interval(187) / Interval(10));
}

Interval bz_b() {
    return Interval::parse(
        "0.02328852830307032054478158044023918735669943648088852646123182739831022528158",
        "0.02328852830307032054478158044023918735669943648088852646123182739831022528213");
}

MapModel make_bz_map(const Interval& a, const Interval& b, const Interval& c) {
    Interval cut = Interval::parse("0.3");
    BranchSpec b1{Interval(0.0), cut, Monotonicity::Increasing,
                  "(a + (x - 0.125)^(1/3)) * exp(-x) + b", {Interval(0.125)}};
    BranchSpec b2{cut, Interval(1.0), Monotonicity::Decreasing,
                  "c * (10 * x * exp(-10 * x / 3))^19 + b", {}};
    return MapModel("bz", ParamMap{{"a", a}, {"b", b}, {"c", c}}, {b1, b2},
                    {Interval(0.125), cut});
}

MapModel make_bz_map() { return make_bz_map(bz_a(), bz_b(), bz_c()); }

MapModel make_toy_map(const Interval& epsilon) {
    if (epsilon.lo < 0 || epsilon.hi >= 1) throw std::invalid_argument("toy map needs 0 <= eps < 1");
    BranchSpec b1{Interval(0.0), Interval(0.25), Monotonicity::Increasing, "2 * x", {}};
    BranchSpec b2{Interval(0.25), Interval(0.5), Monotonicity::Decreasing, "-2 * (x - 0.5)", {}};
    BranchSpec b3{Interval(0.5), Interval(1.0), Monotonicity::Constant, "0", {}};
    ParamMap params;
    std::string id = "toy";
    if (!(epsilon.lo == 0 && epsilon.hi == 0)) {
        // Linear stand-in for g: g(1/2) = 0 and |g'| = eps.
        b3.mono = Monotonicity::Increasing;
        b3.formula = "eps * (x - 0.5)";
        params["eps"] = epsilon;
    }
    return MapModel(id, params, {b1, b2, b3});
}

MapModel make_doubling_map() {
    BranchSpec b1{Interval(0.0), Interval(0.5), Monotonicity::Increasing, "2 * x", {}};
    BranchSpec b2{Interval(0.5), Interval(1.0), Monotonicity::Increasing, "2 * x - 1", {}};
    return MapModel("doubling", {}, {b1, b2});
}

MapModel make_tent_map() {
    BranchSpec b1{Interval(0.0), Interval(0.5), Monotonicity::Increasing, "2 * x", {}};
    BranchSpec b2{Interval(0.5), Interval(1.0), Monotonicity::Decreasing, "2 - 2 * x", {}};
    return MapModel("tent", {}, {b1, b2});
}

MapModel make_identity_map() {
    BranchSpec b{Interval(0.0), Interval(1.0), Monotonicity::Increasing, "x", {}};
    return MapModel("identity", {}, {b});
}

MapModel make_map_by_name(const std::string& name) {
    if (name == "bz") return make_bz_map();
    if (name == "doubling") return make_doubling_map();
    if (name == "tent") return make_tent_map();
    if (name == "toy") return make_toy_map(Interval(0.0));
    if (name == "identity") return make_identity_map();
    if (name.rfind("toy:", 0) == 0) return make_toy_map(Interval::parse(name.substr(4)));
    throw std::invalid_argument("unknown map '" + name + "'");
}

}  // namespace ncert
