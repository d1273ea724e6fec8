#include "ncert/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace ncert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// x log x on [0, 1/e], where it is decreasing.
Interval xlogx(const Interval& x) {
    if (x.lo < 0 || x.hi > 0.36) throw DomainError("xlogx: argument outside [0, 0.36]");
    auto at = [](double t) { return t == 0 ? Interval(0.0) : Interval(t) * log(Interval(t)); };
    return {at(x.hi).lo, at(x.lo).hi};
}

Interval clamp_nonneg(const Interval& x) {
    if (x.hi < 0) throw DomainError("negative length");
    return {std::max(0.0, x.lo), x.hi};
}

const Interval& point3() {
    static const Interval v = Interval::parse("0.3");
    return v;
}

struct CellData {
    Interval H{0.0};         // range of log|T'| on the cell
    Interval integral{0.0};  // ∫_cell log|T'|
    bool ok = false;
};

// log|T'| on a piece J of branch b, and its integral by the midpoint rule
// with the H'' remainder.
bool piece_data(const MapModel& m, size_t b, double l, double r, Interval& H, Interval& integral) {
    try {
        Interval J(l, r);
        Interval d1 = m.eval(b, J, 1);
        if (!d1.bounded() || d1.contains_zero()) return false;
        H = log(abs(d1));
        Interval len = Interval(r) - Interval(l);
        Interval mid = (Interval(l) + Interval(r)) / Interval(2.0);
        Interval dm = m.eval(b, mid, 1);
        if (dm.contains_zero()) return false;
        Interval Hm = log(abs(dm));
        Interval d2 = m.eval(b, J, 2), d3 = m.eval(b, J, 3);
        Interval H2 = d3 / d1 - sqr(d2 / d1);
        if (H2.bounded()) {
            integral = len * Hm + H2 * pow_int(len, 3) / Interval(24.0);
        } else {
            integral = len * H;
        }
        return H.bounded() && integral.bounded();
    } catch (const DomainError&) {
        return false;
    }
}

std::vector<CellData> cell_data(const MapModel& m, size_t k) {
    UlamGrid grid(k);
    std::vector<CellData> out(k);
    const size_t nb = m.branch_count();
    for (size_t j = 0; j < k; ++j) {
        double l = grid.left(j), r = grid.right(j);
        std::vector<std::pair<size_t, Interval>> pieces;
        bool ok = true;
        for (size_t b = 0; b < nb; ++b) {
            Interval dom = m.outer_domain(b);
            double a = std::max(l, dom.lo), c = std::min(r, dom.hi);
            if (c <= a) continue;
            const BranchSpec& s = m.branch(b);
            // A cut strictly inside the cell must be exactly representable.
            if ((s.lo_end.hi > l && s.lo_end.lo < r && !s.lo_end.is_point()) ||
                (s.hi_end.hi > l && s.hi_end.lo < r && !s.hi_end.is_point()))
                ok = false;
            pieces.emplace_back(b, Interval(a, c));
        }
        CellData& cd = out[j];
        if (!ok || pieces.empty()) continue;
        bool first = true;
        for (auto& [b, P] : pieces) {
            Interval H, I;
            if (!piece_data(m, b, P.lo, P.hi, H, I)) {
                ok = false;
                break;
            }
            cd.H = first ? H : hull(cd.H, H);
            cd.integral = first ? I : cd.integral + I;
            first = false;
        }
        cd.ok = ok;
    }
    return out;
}

// ||h||_{L1([u, v])} by cell enclosures, for maps without closed forms.
double numeric_l1(const std::vector<CellData>& cells, size_t k, double u, double v) {
    UlamGrid grid(k);
    size_t j0 = grid.cell_of(u), j1 = grid.cell_of(std::nextafter(v, 0.0));
    double s = 0;
    for (size_t j = j0; j <= j1 && j < k; ++j) {
        if (!cells[j].ok) return kInf;
        double sup = std::max(std::fabs(cells[j].H.lo), std::fabs(cells[j].H.hi));
        s = add_up(s, mul_up(sup, grid.delta_d()));
    }
    return s;
}

}  // namespace

Interval zero_average_bound(const Interval& H_sup, const Interval& H_inf, const Interval& v_l1) {
    Interval spread = H_sup - H_inf;
    double s = std::max(0.0, spread.hi);
    Interval r = Interval(s) / Interval(2.0) * Interval(v_l1.hi);
    return {0.0, r.hi};
}

Interval l1_log_bounds_bz(BzPoint p, const Interval& u, const Interval& v, const Interval& a, const Interval& c) {
    const Interval c0(0.125);
    const Interval w = Interval(std::ldexp(1.0, -6));
    switch (p) {
        case BzPoint::Singular0125: {
            if (!(u.lo > (c0 - w).hi && u.hi <= 0.125 && v.lo >= 0.125 && v.hi < (c0 + w).lo))
                throw DomainError("0.125 closed form: endpoints outside validity window");
            Interval A = clamp_nonneg(c0 - u), B = clamp_nonneg(v - c0);
            Interval V = Interval(-2.0) / Interval(3.0) * (xlogx(A) - A + xlogx(B) - B) - (A + B) * log(Interval(3.0)) -
                         (sqr(v) - sqr(u)) / Interval(2.0);
            Interval slack = log(Interval(5.0) / Interval(4.0)) * (A + B);
            return {(V - slack).lo, V.hi};
        }
        case BzPoint::CutLeft: {
            const Interval p2 = Interval::parse("0.2");
            if (!(u.lo > p2.hi && u.hi <= point3().hi)) throw DomainError("left 0.3 closed form: u outside (0.2, 0.3]");
            Interval D = clamp_nonneg(point3() - u);
            if (D.hi == 0) return Interval(0.0);
            Interval s = cbrt(Interval(7.0) / Interval(40.0));  // 0.175^(1/3)
            Interval d1 = Interval(1.0) / Interval(3.0) *
                          (Interval(2.0) / Interval(3.0) / pow_int(s, 5) + Interval(1.0) / sqr(s));
            Interval d2(kInf);
            if (D.lo > 0) {
                Interval t = u - c0;
                Interval r = cbrt(t);
                Interval phi = Interval(1.0) / (Interval(3.0) * sqr(r)) - a - r;
                d2 = phi / D;
            }
            if (!(d2.hi < kInf)) throw DomainError("left 0.3 closed form: u too close to 0.3");
            Interval dd(d1.lo, std::max(d1.hi, d2.hi));
            return log(dd) * D + xlogx(D) - D - (sqr(point3()) - sqr(u)) / Interval(2.0);
        }
        case BzPoint::CutRight: {
            const Interval p303 = Interval::parse("0.303");
            if (!(v.lo >= point3().lo && v.hi < p303.lo)) throw DomainError("right 0.3 closed form: v outside [0.3, 0.303)");
            Interval D = clamp_nonneg(v - point3());
            if (D.hi == 0) return Interval(0.0);
            Interval K = log(c) + log(Interval(19.0)) + Interval(19.0) * log(Interval(10.0)) - Interval(38.0) +
                         log(Interval(10.0) / Interval(3.0));
            Interval xl = v * log(v) - point3() * log(point3());
            return K * D + Interval(18.0) * xl + xlogx(D) - Interval(190.0) / Interval(6.0) * sqr(D);
        }
    }
    throw DomainError("unknown singular point");
}

ObservableSpec ObservableSpec::for_map(const MapModel& m) {
    ObservableSpec s;
    if (m.id() == "bz") {
        Interval a = m.params().at("a"), c = m.params().at("c");
        SingularPoint p1{Interval(0.125), std::ldexp(1.0, -6), std::ldexp(1.0, -6),
                         [a, c](double u, double v) {
                             return l1_log_bounds_bz(BzPoint::Singular0125, Interval(u), Interval(v), a, c).hi;
                         }};
        // log|T'| < 0 on both sides of 0.3.
        SingularPoint p2{point3(), 0.1, 0.003, [a, c](double u, double v) {
                             Interval l = l1_log_bounds_bz(BzPoint::CutLeft, Interval(u), Interval(0.0), a, c);
                             Interval r = l1_log_bounds_bz(BzPoint::CutRight, Interval(0.0), Interval(v), a, c);
                             return add_up(-l.lo, -r.lo);
                         }};
        s.singular = {p1, p2};
    } else {
        for (const Interval& x : m.critical_points()) s.singular.push_back(SingularPoint{x, 0.25, 0.25, {}});
    }
    return s;
}

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Negative: return "negative";
        case Verdict::Positive: return "positive";
        default: return "indeterminate";
    }
}

LyapunovEnclosure estimate_lyapunov(const MapModel& m, const NoiseKernel& kernel, const DensityEnclosure& d,
                                    const ObservableSpec& spec) {
    const size_t k = d.k;
    const UlamGrid grid(k);
    const double delta = grid.delta_d();
    const double err = d.l1_error.hi;
    const std::vector<CellData> cells = cell_data(m, k);

    // Support of f_ξ: fold(T([0,1]) ± ξ/2).
    Interval range = m.range(1024);
    Interval S = fold(Interval(add_down(range.lo, -kernel.half_width.hi), add_up(range.hi, kernel.half_width.hi)));
    std::vector<double> linf(k, 0.0);
    std::vector<char> relevant(k, 0);
    for (size_t j = 0; j < k; ++j) {
        if (grid.cell(j).intersects(S)) linf[j] = d.linf_on(grid.left(j), grid.right(j));
        relevant[j] = linf[j] > 0 || d.f[j] != 0;
    }

    // E ladder.
    struct Nbhd {
        double u, v, l1;
    };
    std::vector<std::vector<Nbhd>> options(spec.singular.size());
    for (size_t s = 0; s < spec.singular.size(); ++s) {
        const SingularPoint& sp = spec.singular[s];
        for (int r = spec.min_log2_radius; r <= spec.max_log2_radius; ++r) {
            double rad = std::ldexp(1.0, -r);
            if (!(rad < sp.max_left && rad < sp.max_right)) continue;
            double u = std::floor(add_down(sp.x.lo, -rad) * k) / k;
            double v = std::ceil(add_up(sp.x.hi, rad) * k) / k;
            u = std::max(u, 0.0);
            v = std::min(v, 1.0);
            double l1;
            try {
                l1 = sp.l1 ? sp.l1(u, v) : numeric_l1(cells, k, u, v);
            } catch (const DomainError&) {
                continue;
            }
            if (std::isfinite(l1)) options[s].push_back({u, v, l1});
        }
        if (options[s].empty()) throw DomainError("no admissible neighborhood of a singular point");
    }

    LyapunovEnclosure best;
    bool have = false;
    std::vector<size_t> idx(spec.singular.size(), 0);
    std::vector<char> inE(k);
    std::vector<std::pair<double, double>> knap;
    knap.reserve(k);
    int tried = 0;
    while (true) {
        ++tried;
        std::fill(inE.begin(), inE.end(), 0);
        std::vector<Interval> E;
        double hl1 = 0, linfE = 0, massE = 0;
        for (size_t s = 0; s < idx.size(); ++s) {
            const Nbhd& n = options[s][idx[s]];
            E.emplace_back(n.u, n.v);
            hl1 = add_up(hl1, n.l1);
            double lE = d.linf_on(n.u, n.v);
            linfE = std::max(linfE, lE);
            size_t j0 = grid.cell_of(n.u), j1 = grid.cell_of(std::nextafter(n.v, 0.0));
            double ft = 0;
            for (size_t j = j0; j <= j1; ++j) {
                inE[j] = 1;
                ft = add_up(ft, d.f[j]);
            }
            massE = add_up(massE, add_up(mul_up(lE, add_up(n.v, -n.u)), mul_up(ft, delta)));
        }

        bool ok = true;
        double hmin = kInf, hmax = -kInf;
        Interval main(0.0);
        for (size_t j = 0; j < k; ++j) {
            if (inE[j] || !relevant[j]) continue;
            if (!cells[j].ok) {
                ok = false;
                break;
            }
            hmin = std::min(hmin, cells[j].H.lo);
            hmax = std::max(hmax, cells[j].H.hi);
            if (d.f[j] != 0) main += Interval(d.f[j]) * cells[j].integral;
        }
        if (ok && hmin <= hmax) {
            double c = 0.5 * hmin + 0.5 * hmax;
            // Worst placement of at most `err` of |f - f~| mass, at most
            // δ (||f||_∞ + f~_j) per cell, against weights |H - c|.
            knap.clear();
            for (size_t j = 0; j < k; ++j) {
                if (inE[j] || !relevant[j]) continue;
                double a = std::max(add_up(cells[j].H.hi, -c), add_up(c, -cells[j].H.lo));
                knap.emplace_back(a, mul_up(add_up(linf[j], d.f[j]), delta));
            }
            std::sort(knap.begin(), knap.end(), [](auto& x, auto& y) { return x.first > y.first; });
            double left = err, l1_term = 0;
            for (auto [a, cap] : knap) {
                if (left <= 0) break;
                double take = std::min(left, cap);
                l1_term = add_up(l1_term, mul_up(a, take));
                left = add_down(left, -take);
            }
            double e_term = mul_up(hl1, linfE);
            double mass_term = mul_up(std::fabs(c), std::min(err, massE));
            Interval center = main + Interval(c) * (Interval(1.0) - d.mass);
            double rad = add_up(add_up(e_term, l1_term), mass_term);
            Interval lam(add_down(center.lo, -rad), add_up(center.hi, rad));
            if (!have || lam.width() < best.lambda.width()) {
                best.lambda = lam;
                best.E = E;
                best.main = center;
                best.e_term = e_term;
                best.l1_term = l1_term;
                best.mass_term = mass_term;
                have = true;
            }
        }
        // Next combination.
        size_t s = 0;
        while (s < idx.size() && ++idx[s] == options[s].size()) idx[s++] = 0;
        if (s == idx.size()) break;
    }
    if (!have) throw DomainError("log|T'| is unbounded outside every candidate E");
    best.candidates = tried;
    best.verdict = best.lambda.hi < 0 ? Verdict::Negative : best.lambda.lo > 0 ? Verdict::Positive
                                                                               : Verdict::Indeterminate;
    return best;
}

std::string lyapunov_to_json(const LyapunovEnclosure& e) {
    nlohmann::json j;
    j["lambda"] = {{"lo", format_down(e.lambda.lo)}, {"hi", format_up(e.lambda.hi)}};
    j["verdict"] = verdict_name(e.verdict);
    j["E"] = nlohmann::json::array();
    for (const Interval& x : e.E) j["E"].push_back({{"lo", format_down(x.lo)}, {"hi", format_up(x.hi)}});
    j["main"] = {{"lo", format_down(e.main.lo)}, {"hi", format_up(e.main.hi)}};
    j["e_term"] = format_up(e.e_term);
    j["l1_term"] = format_up(e.l1_term);
    j["mass_term"] = format_up(e.mass_term);
    j["candidates"] = e.candidates;
    return j.dump(2);
}

}  // namespace ncert
