#include "ncert/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include <json.hpp>

namespace ncert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Interval up(const Interval& x) { return Interval(0.0, std::max(0.0, x.hi)); }

nlohmann::json ij(const Interval& x) { return {{"lo", format_down(x.lo)}, {"hi", format_up(x.hi)}}; }

// Upper bound of |log|T_b'|| on J; inf when not enclosable.
double abs_log_d1(const MapModel& m, size_t b, const Interval& J) {
    try {
        Interval d = abs(m.eval(b, J, 1));
        if (!d.bounded() || d.lo <= 0) return kInf;
        Interval h = log(d);
        return std::max(std::fabs(h.lo), std::fabs(h.hi));
    } catch (const DomainError&) {
        return kInf;
    }
}

double abs_log_d1_point(const MapModel& m, size_t b, double x) {
    try {
        Interval d = abs(m.eval(b, Interval(x), 1));
        if (d.lo <= 0) return 0;
        Interval h = log(d);
        return std::min(std::fabs(h.lo), std::fabs(h.hi));
    } catch (const DomainError&) {
        return 0;
    }
}

// Branch and bound for sup |log|T_b'|| on [lo, hi].
double sup_abs_log(const MapModel& m, size_t b, double lo, double hi, double& lower) {
    struct Node {
        double ub, lo, hi;
        bool operator<(const Node& o) const { return ub < o.ub; }
    };
    std::priority_queue<Node> q;
    q.push({abs_log_d1(m, b, Interval(lo, hi)), lo, hi});
    lower = std::max(lower, abs_log_d1_point(m, b, 0.5 * (lo + hi)));
    for (int it = 0; it < 400000 && !q.empty(); ++it) {
        Node n = q.top();
        if (n.ub <= lower + 1e-6 * std::max(1.0, lower)) return n.ub;
        if (n.hi - n.lo < 1e-14) return n.ub;  // unresolved; keep the enclosure
        q.pop();
        double mid = 0.5 * (n.lo + n.hi);
        lower = std::max(lower, abs_log_d1_point(m, b, mid));
        q.push({abs_log_d1(m, b, Interval(n.lo, mid)), n.lo, mid});
        q.push({abs_log_d1(m, b, Interval(mid, n.hi)), mid, n.hi});
    }
    return q.empty() ? lower : q.top().ub;
}

}  // namespace

ContractionCertificate stub_certificate(double sum_C, double alpha, int n_bar, const Interval& xi) {
    if (n_bar < 1) throw std::invalid_argument("stub certificate needs n_bar >= 1");
    std::vector<Interval> C(n_bar, Interval(1.0));
    if (n_bar > 1) {
        double rest = (sum_C - 1.0) / (n_bar - 1);
        if (rest < 0 || rest > 1) throw std::invalid_argument("stub certificate: sum C inconsistent with n_bar");
        for (int i = 1; i < n_bar; ++i) C[i] = Interval(rest);
    }
    auto c = ContractionCertificate::make(Interval(0.0), xi, C, Interval(alpha));
    c.sum_C = Interval(sum_C);  // keep the given value exactly
    c.chain.push_back("stub: sum C = " + format_up(sum_C) + ", alpha = " + format_up(alpha));
    return c;
}

Interval markov_perturbation_bound(const ContractionCertificate& cert, const Interval& op_distance) {
    return up(cert.amplification() * Interval(op_distance.hi));
}

Interval map_perturbation_l1(const ContractionCertificate& cert, const NoiseKernel& kernel,
                             const Interval& sup_distance) {
    Interval bv = Interval(2.0) / kernel.xi;
    return up(cert.amplification() * Interval(sup_distance.hi) * bv);
}

Interval uniform_kernel_distance(const Interval& xi, const Interval& xi_tilde) {
    if (!(xi_tilde.lo > xi.hi / 2 && xi_tilde.hi < 2 * xi.lo))
        throw DomainError("kernel distance needs xi/2 < xi_tilde < 2 xi");
    return up(Interval(4.0) / xi * abs(xi - xi_tilde));
}

Interval noise_perturbation_l1(const ContractionCertificate& cert, const Interval& xi, const Interval& xi_tilde) {
    return up(cert.amplification() * uniform_kernel_distance(xi, xi_tilde));
}

Interval noise_perturbation_l1_two_sided(const ContractionCertificate& cert, const Interval& xi,
                                         const Interval& xi_hat, const Interval& xi_tilde) {
    Interval top = xi * exp(log(Interval(2.0)) / Interval(static_cast<double>(cert.n_bar)));
    for (const Interval* x : {&xi_hat, &xi_tilde})
        if (!(x->lo >= xi.lo && x->hi < top.lo)) throw DomainError("two-sided window is [xi, 2^(1/n_bar) xi)");
    Interval amp = (Interval(cert.sum_C.hi) + Interval(static_cast<double>(cert.n_bar))) /
                   (Interval(1.0) - Interval(cert.alpha.hi));
    return up(amp * Interval(4.0) / xi * abs(xi_hat - xi_tilde));
}

Interval restricted_linf_map(const StabilityInputs& in, const Interval& l1_dist) {
    if (!(in.K.hi < in.eta.lo)) throw DomainError("restricted L^inf bound needs K < eta");
    const Interval M(static_cast<double>(in.M));
    Interval num = Interval(2.0) + M * in.distortion + M / in.eta + Interval(2.0) * in.kernel.var_rho_xi;
    Interval v = in.kernel.sup_rho_xi * (Interval(l1_dist.hi) + in.K * num / (in.eta - in.K));
    return up(v);
}

Interval restricted_linf_noise(const StabilityInputs& in, const Interval& l1_dist, const Interval& kernel_distance,
                               const Interval& L1_on_Sxi) {
    Interval v = in.kernel.sup_rho_xi *
                 (Interval(l1_dist.hi) + Interval(2.0) * Interval(L1_on_Sxi.hi) * Interval(kernel_distance.hi));
    return up(v);
}

BzMapDistance bz_map_distance(const BzParams& p, const BzParams& q) {
    for (const BzParams* x : {&p, &q}) {
        if (x->a.lo < 0.4 || x->a.hi > 0.58) throw DomainError("bz distance needs a in [0.4, 0.58]");
        if (!(x->c.lo > 0.06)) throw DomainError("bz distance needs c > 0.06");
    }
    Interval da = abs(p.a - q.a), db = abs(p.b - q.b), dc = abs(p.c - q.c);
    BzMapDistance d;
    d.sup = up(da + db + Interval(7.0) * dc);
    d.c1pw = up(Interval(2.0) * da + db + Interval(57.0) * dc);
    Interval minc(std::min(p.c.lo, q.c.lo));
    Interval ta(0.0);
    if (da.hi > 0) {
        // x (3 - 2 log x) is increasing on (0, 1): evaluate at the upper end.
        Interval x(da.hi);
        ta = x * (Interval(3.0) - Interval(2.0) * log(x));
    }
    d.obs_l1 = up(ta + Interval(0.7) * dc / minc);
    return d;
}

RestrictedSetBounds verify_restricted_set(const MapModel& m, const ObservableSpec& spec, const std::vector<Interval>& A,
                               double Xi) {
    RestrictedSetBounds r;
    r.A = A;
    r.Xi = Xi;
    // Monotone C^1 pieces: branches split at their singular points.
    r.M = 0;
    for (size_t b = 0; b < m.branch_count(); ++b) r.M += 1 + static_cast<int>(m.branch(b).singular.size());
    std::vector<Interval> sorted = A;
    std::sort(sorted.begin(), sorted.end(), [](auto& x, auto& y) { return x.lo < y.lo; });

    // sup |log|T'|| on the complement, branch by branch. Only the part inside
    // the support hull of the densities for noise up to Xi matters.
    const Interval range = m.range(1024);
    r.support = fold(Interval(add_down(range.lo, -Xi / 2), add_up(range.hi, Xi / 2)));
    double lower = 0, upper = 0;
    for (size_t b = 0; b < m.branch_count(); ++b) {
        if (!m.outer_domain(b).intersects(r.support)) continue;
        Interval dom(std::max(m.outer_domain(b).lo, r.support.lo), std::min(m.outer_domain(b).hi, r.support.hi));
        double cur = dom.lo;
        std::vector<std::pair<double, double>> parts;
        for (const Interval& a : sorted) {
            if (a.lo > cur) parts.emplace_back(cur, std::min(a.lo, dom.hi));
            cur = std::max(cur, a.hi);
        }
        if (cur < dom.hi) parts.emplace_back(cur, dom.hi);
        for (auto [lo, hi] : parts)
            if (hi > lo) upper = std::max(upper, sup_abs_log(m, b, lo, hi, lower));
    }
    r.H_linf_Ac = upper;

    // ||log|T'|||_{L1(A)}.
    double l1 = 0;
    for (const Interval& a : sorted) {
        const SingularPoint* sp = nullptr;
        for (const auto& s : spec.singular)
            if (a.contains(s.x)) sp = &s;
        double v = kInf;
        if (sp && sp->l1) {
            v = sp->l1(a.lo, a.hi);
        } else {
            const int n = 4096;
            v = 0;
            for (int i = 0; i < n && std::isfinite(v); ++i) {
                double lo = a.lo + (a.hi - a.lo) * i / n, hi = a.lo + (a.hi - a.lo) * (i + 1) / n;
                Interval J(lo, hi);
                double s = 0;
                for (size_t b = 0; b < m.branch_count(); ++b)
                    if (J.intersects(m.outer_domain(b))) {
                        Interval Jb(std::max(lo, m.outer_domain(b).lo), std::min(hi, m.outer_domain(b).hi));
                        s = std::max(s, abs_log_d1(m, b, Jb));
                    }
                v = add_up(v, mul_up(s, add_up(hi, -lo)));
            }
        }
        l1 = add_up(l1, v);
    }
    r.H_l1_A = l1;

    // Preimages of A_Xi.
    const int sub = 256;
    double inv = 0, dist = 0, L1max = 0;
    for (const Interval& a : sorted) {
        double lo = std::max(0.0, add_down(a.lo, -Xi)), hi = std::min(1.0, add_up(a.hi, Xi));
        for (int i = 0; i < sub; ++i) {
            Interval Y(lo + (hi - lo) * i / sub, i + 1 == sub ? hi : lo + (hi - lo) * (i + 1) / sub);
            double L1 = 0;
            for (size_t b = 0; b < m.branch_count(); ++b) {
                if (m.branch(b).mono == Monotonicity::Constant) {
                    if (m.branch_image(b).intersects(Y)) L1 = inv = dist = kInf;
                    continue;
                }
                auto J = m.invert_branch(b, Y);
                if (!J) continue;
                DerivativeBounds db = m.derivative_bounds(b, *J, 16);
                double iv = (db.unbounded || !(db.inf_abs_d1 > 0)) ? kInf : div_up(1.0, db.inf_abs_d1);
                double ds = db.unbounded ? kInf : db.sup_distortion;
                inv = std::max(inv, iv);
                dist = std::max(dist, ds);
                L1 = add_up(L1, iv);
            }
            L1max = std::max(L1max, L1);
        }
    }
    r.inv_tprime = inv;
    r.distortion = dist;
    r.L1_linf = L1max;
    return r;
}

RestrictedSetBounds verify_restricted_set_bz(const MapModel& m) {
    std::vector<Interval> A{Interval(Interval::parse("0.1249").lo, Interval::parse("0.1251").hi),
                            Interval(Interval::parse("0.2999").lo, Interval::parse("0.3001").hi)};
    return verify_restricted_set(m, ObservableSpec::for_map(m), A, 0.01);
}

StabilityReport lyapunov_stability_report(const MapModel& m, const ContractionCertificate& cert,
                                          const NoiseKernel& kernel, const RestrictedSetBounds* s3, double K_max) {
    StabilityReport r;
    const Interval xi = kernel.xi;
    r.amplification = up(cert.amplification());
    r.chain = cert.chain;
    r.map_l1 = map_perturbation_l1(cert, kernel, Interval(1.0));
    r.noise_l1 = up(cert.amplification() * Interval(4.0) / xi);
    Interval amp2 = (Interval(cert.sum_C.hi) + Interval(static_cast<double>(cert.n_bar))) /
                    (Interval(1.0) - Interval(cert.alpha.hi));
    r.noise_l1_two_sided = up(amp2 * Interval(4.0) / xi);
    r.window_log2_denominator = cert.n_bar;

    const bool singular = !ObservableSpec::for_map(m).singular.empty();
    if (!singular) {
        // h = log|T'| bounded everywhere: no restricted set needed.
        double lower = 0, hsup = 0;
        for (size_t b = 0; b < m.branch_count(); ++b) {
            Interval dom = m.outer_domain(b);
            hsup = std::max(hsup, sup_abs_log(m, b, dom.lo, dom.hi, lower));
        }
        Interval H(hsup);
        r.lambda_noise = up(H * r.noise_l1);
        r.lambda_noise_two_sided = up(H * r.noise_l1_two_sided);
        r.lambda_map = up(H * r.map_l1);
        r.chain.push_back("h bounded: ||h||_inf <= " + format_up(hsup));
        return r;
    }
    if (!s3) {
        r.withheld = true;
        r.diagnostic = "log|T'| is singular and no restricted-set verification was supplied";
        return r;
    }
    if (!(std::isfinite(s3->inv_tprime) && std::isfinite(s3->distortion) && std::isfinite(s3->L1_linf) &&
          std::isfinite(s3->H_linf_Ac) && std::isfinite(s3->H_l1_A))) {
        r.withheld = true;
        r.diagnostic = "restricted-set verification produced an unbounded quantity";
        return r;
    }
    StabilityInputs in;
    in.cert = cert;
    in.kernel = kernel;
    in.eta = Interval(div_down(1.0, s3->inv_tprime));
    in.distortion = Interval(s3->distortion);
    in.M = s3->M;
    in.K = Interval(K_max);
    in.L1_on_Sxi = Interval(s3->L1_linf);
    if (!(in.K.hi < in.eta.lo)) {
        r.withheld = true;
        r.diagnostic = "K_max is not below inf |T'| on the preimage of the restricted set";
        return r;
    }
    const Interval Hinf(s3->H_linf_Ac), Hl1(s3->H_l1_A);
    const Interval sup_rho = kernel.sup_rho_xi;
    // Coefficient of K in the restricted bound, valid for K <= K_max.
    const Interval Mi(static_cast<double>(in.M));
    Interval numK = Interval(2.0) + Mi * in.distortion + Mi / in.eta + Interval(2.0) * kernel.var_rho_xi;
    r.linf_map_K = up(sup_rho * numK / (in.eta - in.K));

    const Interval kd = Interval(4.0) / xi;  // kernel distance per unit |xi - xt|
    r.linf_noise = restricted_linf_noise(in, r.noise_l1, kd, in.L1_on_Sxi);
    r.linf_noise_two_sided = restricted_linf_noise(in, r.noise_l1_two_sided, kd, in.L1_on_Sxi);
    r.lambda_noise = up(Hl1 * r.linf_noise + Hinf * r.noise_l1);
    r.lambda_noise_two_sided = up(Hl1 * r.linf_noise_two_sided + Hinf * r.noise_l1_two_sided);

    if (m.id() == "bz") {
        // |dl| <= obs_l1 ||f||_inf + ||h||_{L1(A)} ||df||_{L^inf(A)} + ||h||_{L^inf(A^c)} ||df||_1
        // with ||df||_1 <= S (|da| + |db| + 7|dc|), K = 2|da| + |db| + 57|dc|.
        const Interval S = r.map_l1;
        const Interval R1 = sup_rho;
        const Interval LK = r.linf_map_K;
        Interval minc(m.params().at("c").lo);
        r.has_bz_moduli = true;
        r.Ca_log = up(Interval(2.0) * R1);
        r.Ca = up(Interval(3.0) * R1 + Hl1 * (R1 * S + Interval(2.0) * LK) + Hinf * S);
        r.Cb = up(Hl1 * (R1 * S + LK) + Hinf * S);
        r.Cc = up(Interval(0.7) * R1 / minc + Hl1 * (Interval(7.0) * R1 * S + Interval(57.0) * LK) + Interval(7.0) * Hinf * S);
        r.chain.push_back("map moduli valid for min(c, c') >= " + format_down(minc.lo) +
                          " and C^1_pw distance <= " + format_up(K_max));
    }
    r.chain.push_back("restricted set verified with Xi = " + format_up(s3->Xi));
    return r;
}

std::string stability_to_json(const StabilityReport& r) {
    nlohmann::json j;
    j["withheld"] = r.withheld;
    if (r.withheld) j["diagnostic"] = r.diagnostic;
    j["amplification"] = ij(r.amplification);
    j["map_l1"] = ij(r.map_l1);
    j["noise_l1"] = ij(r.noise_l1);
    j["noise_l1_two_sided"] = ij(r.noise_l1_two_sided);
    j["two_sided_window"] = "[xi, 2^(1/" + std::to_string(r.window_log2_denominator) + ") xi)";
    j["linf_map_K"] = ij(r.linf_map_K);
    j["linf_noise"] = ij(r.linf_noise);
    j["linf_noise_two_sided"] = ij(r.linf_noise_two_sided);
    j["lambda_noise"] = ij(r.lambda_noise);
    j["lambda_noise_two_sided"] = ij(r.lambda_noise_two_sided);
    if (r.has_bz_moduli) {
        j["Ca_log"] = ij(r.Ca_log);
        j["Ca"] = ij(r.Ca);
        j["Cb"] = ij(r.Cb);
        j["Cc"] = ij(r.Cc);
    } else {
        j["lambda_map"] = ij(r.lambda_map);
    }
    j["chain"] = r.chain;
    return j.dump(2);
}

std::string restricted_set_to_json(const RestrictedSetBounds& s) {
    nlohmann::json j;
    j["A"] = nlohmann::json::array();
    for (const Interval& a : s.A) j["A"].push_back(ij(a));
    j["Xi"] = s.Xi;
    j["support"] = ij(s.support);
    j["H_linf_Ac"] = format_up(s.H_linf_Ac);
    j["H_l1_A"] = format_up(s.H_l1_A);
    j["inv_tprime"] = format_up(s.inv_tprime);
    j["distortion"] = format_up(s.distortion);
    j["L1_linf"] = format_up(s.L1_linf);
    j["M"] = s.M;
    return j.dump(2);
}

}  // namespace ncert
