#include "ncert/contraction.hpp"
#include "json_interval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ncert/parallel.hpp"

namespace ncert {

using json = nlohmann::json;

namespace {

constexpr double kU = 0x1p-53;

using detail::interval_json;
using detail::interval_from;

Interval cap1(const Interval& x) { return {std::min(x.lo, 1.0), std::min(x.hi, 1.0)}; }

}  // namespace

// ------------------------------------------------------------ certificate

ContractionCertificate ContractionCertificate::make(Interval delta, Interval xi, std::vector<Interval> C,
                                                    Interval alpha) {
    if (!(alpha.hi < 1.0)) throw NoContractionError("certificate requires alpha < 1");
    if (C.empty()) throw std::invalid_argument("certificate needs C_0");
    ContractionCertificate c;
    c.delta = delta;
    c.xi = xi;
    c.n_bar = static_cast<int>(C.size());
    c.alpha = alpha;
    Interval s(0.0);
    for (auto& ci : C) {
        if (ci.hi > 1.0) ci = cap1(ci);
        s += ci;
    }
    c.C = std::move(C);
    c.sum_C = s;
    return c;
}

Interval ContractionCertificate::amplification() const {
    return Interval(sum_C.hi) / (Interval(1.0) - Interval(alpha.hi));
}

double ContractionCertificate::bound_at(int i) const {
    if (i < 0) throw std::invalid_argument("negative power");
    int q = i / n_bar, r = i % n_bar;
    double b = C[r].hi;
    for (int t = 0; t < q; ++t) b = mul_up(b, alpha.hi);
    return std::min(b, 1.0);
}

std::string ContractionCertificate::to_json() const {
    json j;
    j["delta"] = interval_json(delta);
    j["xi"] = interval_json(xi);
    j["n_bar"] = n_bar;
    j["alpha"] = interval_json(alpha);
    j["C"] = json::array();
    for (const auto& c : C) j["C"].push_back(interval_json(c));
    j["sum_C"] = interval_json(sum_C);
    j["operator_hash"] = op_hash;
    j["chain"] = chain;
    return j.dump(2);
}

ContractionCertificate ContractionCertificate::from_json(const std::string& text) {
    json j = json::parse(text);
    std::vector<Interval> C;
    for (const auto& c : j.at("C")) C.push_back(interval_from(c));
    auto cert = make(interval_from(j.at("delta")), interval_from(j.at("xi")), C, interval_from(j.at("alpha")));
    cert.op_hash = j.value("operator_hash", "");
    cert.chain = j.value("chain", std::vector<std::string>{});
    return cert;
}

// ------------------------------------------------------------ iterate norms

std::vector<double> approximate_fixed_point(const UlamOperator& op, const NoiseStencil& noise, int max_iter,
                                            double tol) {
    const size_t k = op.k();
    std::vector<double> x(k, 1.0), y(k), z(k), scratch(k + 2 * noise.reach() + 1);
    for (int it = 0; it < max_iter; ++it) {
        op.apply_fast(x.data(), y.data());
        noise.apply(y.data(), z.data(), scratch.data());
        double s = 0;
        for (size_t i = 0; i < k; ++i) s += z[i];
        s /= static_cast<double>(k);
        double r = 0;
        for (size_t i = 0; i < k; ++i) {
            double v = z[i] / s;
            r += std::fabs(v - x[i]);
            x[i] = v;
        }
        if (r / static_cast<double>(k) < tol) break;
    }
    return x;
}

namespace {

// Trajectories of e_i/delta - g for i in [b, e), kLanes at a time. Per lane
// this is the same arithmetic as the scalar loop in iterate_norm_bound.
void run_batched(const UlamOperator& op, const NoiseStencil& noise, const std::vector<double>& g, int n,
                 double stop_below, size_t b, size_t e, std::vector<double>& best) {
    const size_t k = op.k();
    const double kd = static_cast<double>(k);
    const double nf = noise.error_factor();
    constexpr size_t L = kLanes;
    std::vector<double> X(k * L), Y(k * L), scratch((k + 2 * noise.reach() + 1) * L);
    double eP[L], ny[L], nx[L], eps[L], prev[L];
    for (size_t i0 = b; i0 < e; i0 += L) {
        size_t idx[L];
        bool done[L];
        for (size_t l = 0; l < L; ++l) {
            idx[l] = std::min(i0 + l, e - 1);
            done[l] = false;
            prev[l] = 1.0;
            eps[l] = mul_up(2 * kU, (kd + std::fabs(g[idx[l]])) / kd);
        }
        for (size_t t = 0; t < k; ++t)
            for (size_t l = 0; l < L; ++l) X[t * L + l] = -g[t];
        for (size_t l = 0; l < L; ++l) X[idx[l] * L + l] += kd;
        size_t live = L;
        for (int s = 0; s < n && live > 0; ++s) {
            op.fast_error_batch(X.data(), eP);
            op.apply_fast_batch(X.data(), Y.data());
            l1_norm_up_batch(Y.data(), k, ny);
            noise.apply_batch(Y.data(), X.data(), scratch.data());
            l1_norm_up_batch(X.data(), k, nx);
            for (size_t l = 0; l < L; ++l) {
                if (done[l]) continue;
                eps[l] = add_up(eps[l], add_up(eP[l], mul_up(nf, ny[l])));
                double bnd = std::min({1.0, prev[l], add_up(nx[l], eps[l])});
                prev[l] = bnd;
                best[s] = std::max(best[s], bnd);
                if (bnd < stop_below) {
                    for (int r = s + 1; r < n; ++r) best[r] = std::max(best[r], bnd);
                    done[l] = true;
                    --live;
                }
            }
        }
    }
}

}  // namespace

std::vector<Interval> iterate_norm_bound(const UlamOperator& op, const NoiseKernel& kernel, int n,
                                         const IterateOptions& opt) {
    if (n < 1) throw std::invalid_argument("iterate_norm_bound: n >= 1 required");
    const size_t k = op.k();
    const double kd = static_cast<double>(k);
    NoiseStencil noise(kernel, k);
    std::vector<double> g = opt.pivot;
    if (g.empty()) g = approximate_fixed_point(op, noise);
    if (g.size() != k) throw std::invalid_argument("pivot length mismatch");
    const double nf = noise.error_factor();

    const int workers = std::max(1, opt.workers);
    std::vector<std::vector<double>> partial(workers, std::vector<double>(n, 0.0));
    const bool batched = opt.batched && opt.audit_every <= 0;
    parallel_for(k, workers, [&](size_t b, size_t e, int w) {
        std::vector<double>& best = partial[w];
        if (batched) {
            run_batched(op, noise, g, n, opt.stop_below, b, e, best);
            return;
        }
        std::vector<double> x(k), y(k), scratch(k + 2 * noise.reach() + 1);
        for (size_t i = b; i < e; ++i) {
            for (size_t t = 0; t < k; ++t) x[t] = -g[t];
            x[i] += kd;
            // Rounding of the one modified entry.
            double eps = mul_up(2 * kU, (kd + std::fabs(g[i])) / kd);
            double prev = 1.0;
            const bool audit = opt.audit_every > 0 && i < b + static_cast<size_t>(opt.audit_vectors);
            DensityVector xa;
            if (audit) {
                xa.resize(k);
                for (size_t t = 0; t < k; ++t) xa[t] = -Interval(g[t]);
                xa[i] += Interval(kd);
            }
            for (int s = 0; s < n; ++s) {
                double eP = op.fast_error(x.data());
                op.apply_fast(x.data(), y.data());
                double ny = l1_norm_up(y.data(), k);
                noise.apply(y.data(), x.data(), scratch.data());
                eps = add_up(eps, add_up(eP, mul_up(nf, ny)));
                double bnd = std::min({1.0, prev, add_up(l1_norm_up(x.data(), k), eps)});
                prev = bnd;
                best[s] = std::max(best[s], bnd);
                if (audit) {
                    xa = noise.apply(op.apply(xa));
                    if ((s + 1) % opt.audit_every == 0) {
                        // The exact iterate lies in xa and within eps of x.
                        double dist = 0;
                        for (size_t t = 0; t < k; ++t) {
                            double v = x[t];
                            if (v < xa[t].lo) dist = add_up(dist, add_up(xa[t].lo, -v));
                            else if (v > xa[t].hi) dist = add_up(dist, add_up(v, -xa[t].hi));
                        }
                        if (dist / kd > eps)
                            throw std::logic_error("iterate_norm_bound: audit mismatch at step " +
                                                   std::to_string(s + 1));
                    }
                }
                if (bnd < opt.stop_below && !audit) {
                    for (int r = s + 1; r < n; ++r) best[r] = std::max(best[r], bnd);
                    break;
                }
            }
        }
    });
    std::vector<Interval> out(n);
    for (int s = 0; s < n; ++s) {
        double m = 0;
        for (const auto& p : partial) m = std::max(m, p[s]);
        out[s] = Interval(m);
    }
    return out;
}

// ------------------------------------------------------------ certificates

ContractionCertificate make_certificate(const std::vector<Interval>& bounds, double target_alpha, Interval delta,
                                        Interval xi) {
    if (bounds.size() < 2) throw NoContractionError("need at least C_0 and C_1");
    int best = -1;
    double best_obj = std::numeric_limits<double>::infinity();
    Interval sum(0.0);
    for (size_t n = 1; n < bounds.size(); ++n) {
        sum += bounds[n - 1];
        const double a = bounds[n].hi;
        if (a <= target_alpha && a < 1.0) {
            double obj = div_up(sum.hi, add_down(1.0, -a));
            if (obj < best_obj) {
                best_obj = obj;
                best = static_cast<int>(n);
            }
        }
    }
    if (best < 0) {
        double m = 1.0;
        for (size_t n = 1; n < bounds.size(); ++n)
            if (bounds[n].hi < m) {
                m = bounds[n].hi;
                best = static_cast<int>(n);
            }
    }
    if (best < 0) throw NoContractionError("no iterate bound below 1");
    std::vector<Interval> C(bounds.begin(), bounds.begin() + best);
    return ContractionCertificate::make(delta, xi, C, bounds[best]);
}

std::vector<Interval> transferred_bounds(const std::vector<Interval>& coarse, const Interval& delta_coarse,
                                         const NoiseKernel& kernel) {
    const Interval K = delta_coarse * kernel.var_rho_xi / Interval(2.0);
    std::vector<Interval> out;
    out.reserve(coarse.size() + 1);
    out.push_back(Interval(1.0));
    Interval sum(0.0);  // sum_{i<n} C_i
    for (size_t n = 0; n < coarse.size(); ++n) {
        Interval c = Interval(coarse[n].hi) + K * (Interval(2.0) * sum + Interval(1.0));
        out.push_back(cap1(Interval(c.hi)));
        sum += Interval(coarse[n].hi);
    }
    return out;
}

namespace {

void check_ratio(const Interval& delta_coarse, const Interval& fine_delta) {
    if (fine_delta.hi == 0.0) return;  // continuum target
    double r = delta_coarse.mid() / fine_delta.mid();
    if (!(r >= 1.0) || r != std::floor(r) || !delta_coarse.is_point() || !fine_delta.is_point())
        throw std::invalid_argument("coarse delta must be an integer multiple of the fine delta");
}

}  // namespace

ContractionCertificate coarse_fine_transfer(const ContractionCertificate& coarse, const Interval& fine_delta,
                                            const NoiseKernel& kernel) {
    check_ratio(coarse.delta, fine_delta);
    std::vector<Interval> seq = coarse.C;
    seq.push_back(coarse.alpha);
    std::vector<Interval> t = transferred_bounds(seq, coarse.delta, kernel);
    Interval alpha = t.back();
    if (!(alpha.hi < 1.0))
        throw TransferFailedError("coarse-fine transfer gives alpha >= 1", alpha.hi);
    t.pop_back();
    auto cert = ContractionCertificate::make(fine_delta, kernel.xi, t, alpha);
    cert.chain = coarse.chain;
    cert.chain.push_back("coarse-fine from delta=" + format_up(coarse.delta.hi));
    cert.op_hash = coarse.op_hash;
    return cert;
}

ContractionCertificate best_transferred_certificate(const std::vector<Interval>& coarse_bounds,
                                                    const Interval& delta_coarse, const Interval& fine_delta,
                                                    const NoiseKernel& kernel) {
    check_ratio(delta_coarse, fine_delta);
    std::vector<Interval> t = transferred_bounds(coarse_bounds, delta_coarse, kernel);
    int best = -1;
    double best_obj = std::numeric_limits<double>::infinity(), min_alpha = 1.0;
    Interval sum(0.0);
    for (size_t n = 1; n < t.size(); ++n) {
        sum += t[n - 1];
        min_alpha = std::min(min_alpha, t[n].hi);
        if (t[n].hi < 1.0) {
            double obj = div_up(sum.hi, add_down(1.0, -t[n].hi));
            if (obj < best_obj) {
                best_obj = obj;
                best = static_cast<int>(n);
            }
        }
    }
    if (best < 0) throw TransferFailedError("coarse-fine transfer gives alpha >= 1 at every index", min_alpha);
    std::vector<Interval> C(t.begin(), t.begin() + best);
    auto cert = ContractionCertificate::make(fine_delta, kernel.xi, C, t[best]);
    cert.chain.push_back("coarse-fine from delta=" + format_up(delta_coarse.hi) + " at coarse n=" +
                         std::to_string(best - 1));
    return cert;
}

Interval noise_monotone_bound(const Interval& C, int i, const Interval& xi, const Interval& xi_hat) {
    // Worst case is the smallest ratio.
    Interval r = Interval(div_down(xi.lo, xi_hat.hi));
    Interval ri = pow_int(r, i);
    Interval v = Interval(C.hi) * ri + (Interval(1.0) - ri);
    return cap1(Interval(v.hi));
}

ContractionCertificate noise_monotonicity(const ContractionCertificate& cert, const NoiseKernel& kernel,
                                          const Interval& xi_hat) {
    if (kernel.kind != KernelKind::Uniform) throw std::invalid_argument("noise monotonicity needs the uniform kernel");
    if (xi_hat.lo < cert.xi.hi) throw std::invalid_argument("noise monotonicity needs xi_hat >= xi");
    std::vector<Interval> C;
    for (int i = 0; i < cert.n_bar; ++i) C.push_back(noise_monotone_bound(cert.C[i], i, cert.xi, xi_hat));
    Interval alpha = noise_monotone_bound(cert.alpha, cert.n_bar, cert.xi, xi_hat);
    auto out = ContractionCertificate::make(cert.delta, xi_hat, C, alpha);
    out.chain = cert.chain;
    out.chain.push_back("noise monotonicity from xi=" + format_up(cert.xi.hi));
    out.op_hash = cert.op_hash;
    return out;
}

MixingVerdict mixing_verdict(const ContractionCertificate& cert) {
    if (cert.alpha.hi < 1.0) return MixingVerdict::Mixing;
    for (const auto& c : cert.C)
        if (c.hi < 1.0) return MixingVerdict::Mixing;
    return MixingVerdict::Indeterminate;
}

}  // namespace ncert
