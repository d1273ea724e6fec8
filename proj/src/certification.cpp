#include "ncert/certification.hpp"
#include "json_interval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace ncert {

using json = nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double uadd(double a, double b) { return add_up(a, b); }
double umul(double a, double b) {
    if (a == 0 || b == 0) return 0;
    return mul_up(a, b);
}
double udiv(double a, double b) { return a == 0 ? 0 : div_up(a, b); }

// Prefix sums of nonnegative terms with lower and upper rounding, so that
// sum_{a <= t < b} is enclosed by [lo[b] - hi[a], hi[b] - lo[a]].
struct Prefix {
    std::vector<double> lo, hi;
    explicit Prefix(const std::vector<double>& v) : lo(v.size() + 1, 0.0), hi(v.size() + 1, 0.0) {
        for (size_t i = 0; i < v.size(); ++i) {
            lo[i + 1] = add_down(lo[i], v[i]);
            hi[i + 1] = add_up(hi[i], v[i]);
        }
    }
    // Upper bound of sum over [a, b).
    double sum(size_t a, size_t b) const { return b <= a ? 0.0 : std::max(0.0, add_up(hi[b], -lo[a])); }
};

using detail::interval_json;

// Pieces of [u, v] ⊂ [-1, 2] folded onto [0, 1].
std::vector<std::pair<double, double>> fold_pieces(double u, double v) {
    std::vector<std::pair<double, double>> out;
    if (v < u) return out;
    if (u < 0) {
        double e = std::min(v, 0.0);
        out.emplace_back(-e, -u);
    }
    if (v > 0 && u < 1) out.emplace_back(std::max(u, 0.0), std::min(v, 1.0));
    if (v > 1) {
        double s = std::max(u, 1.0);
        out.emplace_back(add_down(2.0, -v), add_up(2.0, -s));
    }
    for (auto& p : out) {
        p.first = std::max(p.first, 0.0);
        p.second = std::min(p.second, 1.0);
    }
    return out;
}

}  // namespace

// ------------------------------------------------------------------ fixed point

FixedPointResult fixed_point(const UlamOperator& op, const NoiseKernel& kernel, const ContractionCertificate& cert,
                             double tol, int max_iter, const std::vector<double>& start) {
    const size_t k = op.k();
    const double kd = static_cast<double>(k);
    NoiseStencil noise(kernel, k);
    std::vector<double> x = start.empty() ? std::vector<double>(k, 1.0) : start;
    if (x.size() != k) throw std::invalid_argument("fixed_point: start vector length mismatch");
    std::vector<double> y(k), z(k), scratch(k + 2 * noise.reach() + 1);
    double r = kInf;
    int it = 0;
    for (; it < max_iter; ++it) {
        op.apply_fast(x.data(), y.data());
        noise.apply(y.data(), z.data(), scratch.data());
        double s = 0;
        for (size_t i = 0; i < k; ++i) s += z[i];
        s /= kd;
        r = 0;
        for (size_t i = 0; i < k; ++i) {
            double v = std::max(0.0, z[i] / s);
            r += std::fabs(v - x[i]);
            x[i] = v;
        }
        r /= kd;
        if (r <= tol) break;
    }
    if (r > tol) throw NonConvergenceError("fixed point iteration did not converge", r);

    FixedPointResult out;
    out.iterations = it + 1;
    DensityVector X(x.begin(), x.end());
    DensityVector LX = apply(op, noise, X);
    for (size_t i = 0; i < k; ++i) LX[i] -= X[i];
    out.residual = Interval(0.0, l1_norm(LX).hi);
    out.mass = mass(X);
    // h = f / m is a probability density; ||f_delta - h|| <= amp * ||L h - h||
    // and ||f - h|| = |m - 1|.
    Interval amp = cert.amplification();
    Interval num = amp * Interval(out.residual.hi) / out.mass + abs(out.mass - Interval(1.0));
    out.numerical_error = Interval(0.0, num.hi);
    out.f = std::move(x);
    return out;
}

Interval a_priori_error(const ContractionCertificate& cert, const Interval& delta, const NoiseKernel& kernel) {
    Interval v = (Interval(1.0) + Interval(2.0) * Interval(cert.sum_C.hi)) /
                 (Interval(2.0) * (Interval(1.0) - Interval(cert.alpha.hi))) * delta * kernel.var_rho_xi;
    return Interval(0.0, v.hi);
}

// ------------------------------------------------------------------ ledgers

Ledgers variation_ledgers(const MapModel& m, const NoiseKernel& kernel, const UlamOperator& op,
                          const std::vector<double>& f, size_t k_est) {
    const size_t k = op.k();
    if (f.size() != k) throw std::invalid_argument("ledgers: density length mismatch");
    if (k_est == 0 || k % k_est != 0 || (k_est & (k_est - 1)) != 0)
        throw std::invalid_argument("ledgers: partition must divide the grid");
    if (kernel.is_identity()) throw std::invalid_argument("ledgers need xi > 0");
    const UlamGrid grid(k), pi(k_est);
    const double delta = grid.delta_d();
    const double xi_lo = kernel.xi.lo, half_hi = kernel.half_width.hi, half_lo = kernel.half_width.lo;

    Ledgers L;
    L.k = k;
    L.k_est = k_est;
    const size_t nb = m.branch_count();
    L.var_Lif.assign(nb, std::vector<double>(k_est, 0.0));
    L.l1_Lif.assign(nb, std::vector<double>(k_est, 0.0));

    std::vector<double> fa(k), jumps(k > 0 ? k - 1 : 0);
    for (size_t i = 0; i < k; ++i) fa[i] = std::fabs(f[i]);
    for (size_t i = 0; i + 1 < k; ++i) jumps[i] = add_up(f[i + 1], -f[i]) >= 0 ? add_up(f[i + 1], -f[i])
                                                                                 : add_up(f[i], -f[i + 1]);
    const Prefix PA(fa), PJ(jumps);

    // ||f||_{L1(J)} upper bound.
    auto l1_on = [&](double a, double b) -> double {
        a = std::max(a, 0.0);
        b = std::min(b, 1.0);
        if (b <= a) return 0.0;
        size_t j0 = grid.cell_of(a), j1 = grid.cell_of(b);
        if (j0 == j1) return umul(fa[j0], add_up(b, -a));
        double s = umul(fa[j0], add_up(grid.right(j0), -a));
        s = uadd(s, umul(fa[j1], add_up(b, -grid.left(j1))));
        s = uadd(s, umul(PA.sum(j0 + 1, j1), delta));
        return s;
    };
    // Variation of f over the closed interval [a, b], counting jumps at
    // cell boundaries that touch it.
    auto var_on = [&](double a, double b) -> double {
        a = std::max(a, 0.0);
        b = std::min(b, 1.0);
        size_t j0 = grid.cell_of(a), j1 = grid.cell_of(b);
        if (j0 > 0 && a <= grid.left(j0)) --j0;
        if (j1 + 1 < k && b >= grid.right(j1)) ++j1;
        return PJ.sum(j0, j1);  // jumps j0..j1-1
    };
    auto max_abs_near = [&](const Interval& y) -> double {
        size_t j0 = grid.cell_of(y.lo), j1 = grid.cell_of(y.hi);
        if (j0 > 0) --j0;
        if (j1 + 1 < k) ++j1;
        double mx = 0;
        for (size_t j = j0; j <= j1; ++j) mx = std::max(mx, fa[j]);
        return mx;
    };

    for (size_t b = 0; b < nb; ++b) {
        const BranchSpec& s = m.branch(b);
        const Interval dom = m.outer_domain(b);
        if (s.mono == Monotonicity::Constant) {
            Interval v = m.eval(b, dom);
            double mass_dom = l1_on(dom.lo, dom.hi);
            for (size_t I = 0; I < k_est; ++I) {
                if (!pi.cell(I).intersects(v)) continue;
                L.var_Lif[b][I] = kInf;
                L.l1_Lif[b][I] = mass_dom;
            }
            continue;
        }
        const bool inc = s.mono == Monotonicity::Increasing;
        const Interval img = m.branch_image(b);
        std::vector<Interval> cr(k_est + 1);
        for (size_t t = 0; t <= k_est; ++t) cr[t] = m.crossing(b, static_cast<double>(t) / k_est);
        // Boundary points of the branch domain and their images.
        const Interval ends[2] = {s.lo_end, s.hi_end};
        Interval end_img[2], end_d1[2];
        for (int e = 0; e < 2; ++e) {
            end_img[e] = m.eval(b, ends[e]);
            try {
                end_d1[e] = m.eval(b, ends[e], 1);
            } catch (const DomainError&) {
                end_d1[e] = Interval::entire();
            }
        }
        for (size_t I = 0; I < k_est; ++I) {
            const Interval cellI = pi.cell(I);
            if (!cellI.intersects(img)) continue;
            double ja = inc ? cr[I].lo : cr[I + 1].lo;
            double jb = inc ? cr[I + 1].hi : cr[I].hi;
            ja = std::max(ja, dom.lo);
            jb = std::min(jb, dom.hi);
            if (jb < ja) continue;
            double l1 = l1_on(ja, jb);
            L.l1_Lif[b][I] = l1;
            DerivativeBounds db = m.derivative_bounds(b, Interval(ja, jb), 8);
            double var = kInf;
            if (!db.unbounded && db.inf_abs_d1 > 0 && std::isfinite(db.sup_distortion)) {
                var = uadd(udiv(var_on(ja, jb), db.inf_abs_d1), umul(l1, db.sup_distortion));
                for (int e = 0; e < 2; ++e) {
                    if (!end_img[e].intersects(cellI)) continue;
                    Interval d = abs(end_d1[e]);
                    if (!(d.lo > 0)) {
                        var = kInf;
                        break;
                    }
                    var = uadd(var, udiv(max_abs_near(ends[e]), d.lo));
                }
            }
            L.var_Lif[b][I] = var;
        }
    }

    // Fine-cell masses of L|f| from the upper matrix entries.
    std::vector<double> M(k, 0.0);
    {
        const auto& cp = op.col_ptr();
        const auto& rw = op.rows();
        const auto& hi = op.hi();
        for (size_t j = 0; j < k; ++j) {
            if (fa[j] == 0) continue;
            double fj = umul(fa[j], delta);
            for (uint32_t p = cp[j]; p < cp[j + 1]; ++p) M[rw[p]] = uadd(M[rw[p]], umul(hi[p], fj));
        }
    }
    const Prefix PM(M);
    L.l1_Lf = std::min(PM.sum(0, k), umul(PA.sum(0, k), delta));

    auto mass_hat = [&](double u, double v) -> double {
        double s = 0;
        for (auto [p, q] : fold_pieces(u, v)) {
            size_t j0 = grid.cell_of(p), j1 = grid.cell_of(q);
            if (j0 > 0 && p <= grid.left(j0)) --j0;
            if (j1 + 1 < k && q >= grid.right(j1)) ++j1;
            s = uadd(s, PM.sum(j0, j1 + 1));
        }
        return s;
    };
    // Sum over Pi cells meeting the folded window of sum_i Var_I(L_i f).
    std::vector<double> var_Lf(k_est, 0.0);
    for (size_t I = 0; I < k_est; ++I)
        for (size_t b = 0; b < nb; ++b) var_Lf[I] = uadd(var_Lf[I], L.var_Lif[b][I]);
    auto var_hat = [&](double u, double v) -> double {
        double s = 0;
        for (auto [p, q] : fold_pieces(u, v)) {
            size_t i0 = pi.cell_of(p), i1 = pi.cell_of(q);
            if (i0 > 0 && p <= pi.left(i0)) --i0;
            if (i1 + 1 < k_est && q >= pi.right(i1)) ++i1;
            for (size_t I = i0; I <= i1; ++I) s = uadd(s, var_Lf[I]);
        }
        return s;
    };

    L.var_NLf.assign(k_est, 0.0);
    L.l1_NLf.assign(k_est, 0.0);
    L.tprime.assign(k_est, 0.0);
    const double len_I = pi.delta_d();
    double total = 0;
    for (size_t I = 0; I < k_est; ++I) {
        double a = pi.left(I), b = pi.right(I);
        double alt1 = udiv(uadd(mass_hat(add_down(a, -half_hi), add_up(b, -half_lo)),
                                mass_hat(add_down(a, half_lo), add_up(b, half_hi))),
                           xi_lo);
        double alt2 = udiv(umul(len_I, var_hat(add_down(a, -half_hi), add_up(b, half_hi))), xi_lo);
        L.var_NLf[I] = std::min(alt1, alt2);
        total = uadd(total, L.var_NLf[I]);
        DerivativeBounds db = m.derivative_bounds(pi.cell(I), 16);
        L.tprime[I] = db.unbounded ? kInf : db.sup_abs_d1;
    }
    L.var_NLf_total = std::min(total, umul(kernel.var_rho_xi.hi, L.l1_Lf));

    // ||N L f||_{L1(I)} <= sum_m M_m * max_{y in cell m} (N delta_y)(I).
    for (size_t j = 0; j < k; ++j) {
        if (M[j] == 0) continue;
        for (auto [p, q] : fold_pieces(add_down(grid.left(j), -half_hi), add_up(grid.right(j), half_hi))) {
            size_t i0 = pi.cell_of(p), i1 = pi.cell_of(q);
            for (size_t I = i0; I <= i1; ++I) {
                double ov = std::min(q, pi.right(I)) - std::max(p, pi.left(I));
                if (ov <= 0) continue;
                double frac = std::min(1.0, udiv(add_up(std::min(q, pi.right(I)), -std::max(p, pi.left(I))), xi_lo));
                L.l1_NLf[I] = uadd(L.l1_NLf[I], umul(M[j], frac));
            }
        }
    }
    return L;
}

// ------------------------------------------------------------------ bootstrap

ErrorBudget bootstrap_error(const NoiseKernel& kernel, const ContractionCertificate& cert, const Ledgers& led,
                            const Interval& numerical_error) {
    const Interval delta(1.0 / static_cast<double>(led.k));
    const Interval vr(kernel.var_rho_xi.hi);
    const Interval half_delta = delta / Interval(2.0);
    const Interval d2_8 = sqr(delta) / Interval(8.0);
    const Interval d2_4 = sqr(delta) / Interval(4.0);
    const Interval var_total(led.var_NLf_total);

    ErrorBudget e;
    e.A1 = half_delta * vr;
    e.A2 = half_delta * vr;
    e.A3 = half_delta * vr;
    e.B1 = half_delta * var_total;

    double s2 = 0;
    for (size_t b = 0; b < led.var_Lif.size(); ++b)
        for (size_t I = 0; I < led.k_est; ++I) {
            double v = led.var_Lif[b][I], l = led.l1_Lif[b][I];
            double t1 = std::isfinite(v) ? (d2_8 * Interval(v)).hi : kInf;
            double t2 = (half_delta * Interval(l)).hi;
            s2 = add_up(s2, std::min(t1, t2));
        }
    e.B2 = vr * Interval(s2);

    double s3 = 0;
    for (size_t I = 0; I < led.k_est; ++I) {
        double w = half_delta.hi;
        if (std::isfinite(led.tprime[I])) w = std::min(w, (d2_8 * vr * Interval(led.tprime[I])).hi);
        s3 = add_up(s3, (Interval(w) * Interval(led.var_NLf[I])).hi);
    }
    e.B3 = Interval(s3) + d2_4 * vr * var_total;

    const Interval S(cert.sum_C.hi);
    e.A = e.A1 + (e.A2 + e.A3) * S;
    e.B = e.B1 + (e.B2 + e.B3) * S;
    const Interval one_minus_alpha = Interval(1.0) - Interval(cert.alpha.hi);
    // D multiplies the unknown error, C is additive.
    e.D = e.A / one_minus_alpha;
    e.C = e.B / one_minus_alpha;
    e.numerical_error = Interval(0.0, numerical_error.hi);
    e.a_priori = a_priori_error(cert, delta, kernel);
    Interval fallback = e.a_priori + e.numerical_error;
    if (e.D.hi < 1.0) {
        Interval fin = (e.numerical_error + e.C) / (Interval(1.0) - Interval(e.D.hi));
        e.final_l1 = Interval(0.0, std::min(fin.hi, fallback.hi));
        e.downgraded = fin.hi > fallback.hi;
    } else {
        e.final_l1 = Interval(0.0, fallback.hi);
        e.downgraded = true;
    }
    return e;
}

std::vector<double> local_linf_bounds(const Ledgers& led, double l1_error, const NoiseKernel& kernel) {
    std::vector<double> out(led.k_est);
    const double sup_rho = kernel.sup_rho_xi.hi;
    const double inv_len = static_cast<double>(led.k_est);
    const double err_term = mul_up(l1_error, sup_rho);
    for (size_t I = 0; I < led.k_est; ++I) {
        double v = add_up(add_up(led.var_NLf[I], mul_up(led.l1_NLf[I], inv_len)), err_term);
        out[I] = std::min(v, sup_rho);
    }
    return out;
}

double DensityEnclosure::linf_on(double a, double b) const {
    UlamGrid pi(ledgers.k_est);
    size_t i0 = pi.cell_of(a), i1 = pi.cell_of(b);
    if (i0 > 0 && a <= pi.left(i0)) --i0;
    if (i1 + 1 < pi.k && b >= pi.right(i1)) ++i1;
    double mx = 0;
    for (size_t I = i0; I <= i1; ++I) mx = std::max(mx, linf[I]);
    return mx;
}

DensityEnclosure certify_density(const MapModel& m, const NoiseKernel& kernel, const UlamOperator& op,
                                 const ContractionCertificate& cert, const FixedPointResult& fp, size_t k_est) {
    DensityEnclosure d;
    d.k = op.k();
    d.f = fp.f;
    d.mass = fp.mass;
    d.ledgers = variation_ledgers(m, kernel, op, fp.f, k_est);
    d.budget = bootstrap_error(kernel, cert, d.ledgers, fp.numerical_error);
    d.l1_error = d.budget.final_l1;
    d.linf = local_linf_bounds(d.ledgers, d.l1_error.hi, kernel);
    return d;
}

std::string budget_to_json(const ErrorBudget& b) {
    json j;
    j["A1"] = interval_json(b.A1);
    j["B1"] = interval_json(b.B1);
    j["A2"] = interval_json(b.A2);
    j["B2"] = interval_json(b.B2);
    j["A3"] = interval_json(b.A3);
    j["B3"] = interval_json(b.B3);
    j["A"] = interval_json(b.A);
    j["B"] = interval_json(b.B);
    j["C"] = interval_json(b.C);
    j["D"] = interval_json(b.D);
    j["numerical_error"] = interval_json(b.numerical_error);
    j["a_priori"] = interval_json(b.a_priori);
    j["final_l1"] = interval_json(b.final_l1);
    j["downgraded"] = b.downgraded;
    return j.dump(2);
}

std::string ledgers_to_csv(const DensityEnclosure& d) {
    std::ostringstream os;
    os << "interval,lo,hi,var_NLf,l1_NLf,linf\n";
    UlamGrid pi(d.ledgers.k_est);
    for (size_t I = 0; I < pi.k; ++I) {
        os << I << ',' << format_down(pi.left(I)) << ',' << format_up(pi.right(I)) << ','
           << format_up(d.ledgers.var_NLf[I]) << ',' << format_up(d.ledgers.l1_NLf[I]) << ','
           << format_up(d.linf[I]) << '\n';
    }
    return os.str();
}

}  // namespace ncert
