#include "ncert/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ncert {

namespace {

constexpr double kU = 0x1p-53;

double gamma_up(double n) {
    double nu = n * kU;
    return nu / (1.0 - nu) * (1.0 + 1e-12);
}

// phi(s) = (1/delta^2) * integral_{-inf}^{s delta} max(0, delta - |t|) dt,
// the cumulative overlap profile of two cells at relative offset s.
Interval phi_point(double s) {
    if (s <= -1) return Interval(0.0);
    if (s >= 1) return Interval(1.0);
    Interval p(s);
    if (s <= 0) return sqr(p + Interval(1.0)) / Interval(2.0);
    return Interval(1.0) - sqr(Interval(1.0) - p) / Interval(2.0);
}

Interval phi(const Interval& s) { return {phi_point(s.lo).lo, phi_point(s.hi).hi}; }

}  // namespace

NoiseKernel NoiseKernel::uniform(const Interval& xi) {
    if (xi.lo < 0) throw std::invalid_argument("noise amplitude must be nonnegative");
    if (xi.hi > 1) throw std::invalid_argument("noise amplitude must not exceed 1");
    NoiseKernel k;
    k.kind = KernelKind::Uniform;
    k.xi = xi;
    k.var_rho = Interval(2.0);
    k.half_width = xi / Interval(2.0);
    if (xi.lo > 0) {
        k.var_rho_xi = k.var_rho / xi;
        k.sup_rho_xi = Interval(1.0) / xi;
    } else {
        k.var_rho_xi = Interval(std::numeric_limits<double>::infinity());
        k.sup_rho_xi = Interval(std::numeric_limits<double>::infinity());
    }
    return k;
}

double fold(double x) {
    double r = std::fmod(x, 2.0);
    if (r < 0) r += 2.0;
    return r > 1.0 ? 2.0 - r : r;
}

Interval fold(const Interval& x) {
    if (x.width() >= 2.0) return {0.0, 1.0};
    // Piecewise linear with kinks at the integers.
    double a = fold(x.lo), b = fold(x.hi);
    double lo = std::min(a, b), hi = std::max(a, b);
    for (double n = std::ceil(x.lo); n <= x.hi; n += 1.0) {
        double v = fold(n);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo, hi};
}

KernelNorms kernel_norms(const NoiseKernel& kernel, const Interval& delta) {
    KernelNorms n;
    n.var_rho_xi = kernel.var_rho_xi;
    n.sup_rho_xi = kernel.sup_rho_xi;
    n.l1_to_var = kernel.var_rho_xi;
    n.w_to_l1 = kernel.var_rho_xi;
    Interval composed = delta / Interval(2.0) * kernel.var_rho_xi;
    n.n_one_minus_pi = composed;
    n.one_minus_pi_n = composed;
    return n;
}

NoiseStencil::NoiseStencil(const NoiseKernel& kernel, size_t k) : k_(k) {
    if (k < 2 || (k & (k - 1)) != 0) throw std::invalid_argument("grid size must be a power of two");
    if (kernel.is_identity()) {
        reach_ = 0;
        w_ = {Interval(1.0)};
        w_mid_ = {1.0};
        edge_ = {0};
        err_factor_ = 0;
        return;
    }
    if (kernel.xi.lo <= 0) throw std::invalid_argument("noise amplitude enclosure touches 0");
    const Interval kk(static_cast<double>(k));
    const Interval h = kernel.xi * kk / Interval(2.0);  // half-width in cells
    c_ = Interval(1.0) / (kernel.xi * kk);              // delta / xi
    c_mid_ = c_.mid();
    reach_ = static_cast<int>(std::ceil(h.hi)) + 1;
    if (static_cast<size_t>(reach_) > k) throw std::invalid_argument("noise wider than the domain");
    w_.resize(2 * reach_ + 1);
    w_mid_.resize(w_.size());
    for (int d = -reach_; d <= reach_; ++d) {
        Interval s1 = h - Interval(d);
        Interval s2 = -h - Interval(d);
        Interval w = c_ * (phi(s1) - phi(s2));
        w.lo = std::max(w.lo, 0.0);
        w_[d + reach_] = w;
        w_mid_[d + reach_] = w.mid();
    }
    // Offsets fully inside the kernel support carry exactly delta/xi.
    in_lo_ = reach_ + 1;
    in_hi_ = -reach_ - 1;
    for (int d = -reach_; d <= reach_; ++d) {
        Interval s1 = h - Interval(d), s2 = -h - Interval(d);
        if (s1.lo >= 1.0 && s2.hi <= -1.0) {
            in_lo_ = std::min(in_lo_, d);
            in_hi_ = std::max(in_hi_, d);
        }
    }
    edge_.clear();
    for (int d = -reach_; d <= reach_; ++d) {
        bool interior = d >= in_lo_ && d <= in_hi_;
        if (!interior && w_[d + reach_].hi > 0) edge_.push_back(d);
    }

    // Rounding-error budget of the fast path (see apply()).
    const double n = static_cast<double>(k + 2 * reach_);
    const double m = static_cast<double>(edge_.size() + 2);
    const double n_in = in_hi_ >= in_lo_ ? static_cast<double>(in_hi_ - in_lo_ + 1) : 0.0;
    double wsum = n_in * c_.hi, rsum = n_in * std::max(c_.hi - c_mid_, c_mid_ - c_.lo);
    for (int d : edge_) {
        const Interval& w = w_[d + reach_];
        wsum += w.hi;
        rsum += std::max(w.hi - w_mid_[d + reach_], w_mid_[d + reach_] - w.lo);
    }
    const double gn = gamma_up(n), gm = gamma_up(m + 2);
    double per_sx = static_cast<double>(k) * c_.hi * (2 * gn) * (1 + 4 * gm) + (gm + 2 * kU) * wsum + rsum;
    // Sx <= 3 sum|v|, and scaling by delta turns sums into L1 norms.
    err_factor_ = 3.0 * per_sx * (1.0 + 1e-9);
}

Interval NoiseStencil::weight(int d) const {
    if (d < -reach_ || d > reach_) return Interval(0.0);
    return w_[d + reach_];
}

size_t NoiseStencil::reflect(long e) const {
    const long k = static_cast<long>(k_);
    if (e < 0) return static_cast<size_t>(-1 - e);
    if (e >= k) return static_cast<size_t>(2 * k - 1 - e);
    return static_cast<size_t>(e);
}

void NoiseStencil::apply(const double* v, double* out, double* scratch) const {
    const long k = static_cast<long>(k_);
    const long R = reach_;
    if (R == 0) {
        std::copy(v, v + k, out);
        return;
    }
    // scratch[t] = prefix sum of the reflected extension over e in [-R, t - R).
    double* P = scratch;
    P[0] = 0.0;
    for (long t = 0; t < k + 2 * R; ++t) P[t + 1] = P[t] + v[reflect(t - R)];
    const bool has_in = in_hi_ >= in_lo_;
    for (long i = 0; i < k; ++i) {
        double acc = 0.0;
        if (has_in) acc = c_mid_ * (P[i - in_lo_ + R + 1] - P[i - in_hi_ + R]);
        for (int d : edge_) acc += w_mid_[d + R] * v[reflect(i - d)];
        out[i] = acc;
    }
}

void NoiseStencil::apply_batch(const double* V, double* out, double* scratch) const {
    const long k = static_cast<long>(k_);
    const long R = reach_;
    constexpr long L = static_cast<long>(kLanes);
    if (R == 0) {
        std::copy(V, V + k * L, out);
        return;
    }
    double* P = scratch;
    for (long l = 0; l < L; ++l) P[l] = 0.0;
    for (long t = 0; t < k + 2 * R; ++t) {
        const double* v = V + static_cast<long>(reflect(t - R)) * L;
        for (long l = 0; l < L; ++l) P[(t + 1) * L + l] = P[t * L + l] + v[l];
    }
    const bool has_in = in_hi_ >= in_lo_;
    for (long i = 0; i < k; ++i) {
        double acc[kLanes] = {};
        if (has_in) {
            const double* a = P + (i - in_lo_ + R + 1) * L;
            const double* b = P + (i - in_hi_ + R) * L;
            for (long l = 0; l < L; ++l) acc[l] = c_mid_ * (a[l] - b[l]);
        }
        for (int d : edge_) {
            const double w = w_mid_[d + R];
            const double* v = V + static_cast<long>(reflect(i - d)) * L;
            for (long l = 0; l < L; ++l) acc[l] += w * v[l];
        }
        for (long l = 0; l < L; ++l) out[i * L + l] = acc[l];
    }
}

std::vector<Interval> NoiseStencil::apply(const std::vector<Interval>& v) const {
    const long k = static_cast<long>(k_);
    const long R = reach_;
    if (v.size() != k_) throw std::invalid_argument("noise: vector length mismatch");
    std::vector<Interval> out(k_);
    if (R == 0) return v;
    std::vector<Interval> P(k + 2 * R + 1);
    P[0] = Interval(0.0);
    for (long t = 0; t < k + 2 * R; ++t) P[t + 1] = P[t] + v[reflect(t - R)];
    const bool has_in = in_hi_ >= in_lo_;
    for (long i = 0; i < k; ++i) {
        Interval acc(0.0);
        if (has_in) acc = c_ * (P[i - in_lo_ + R + 1] - P[i - in_hi_ + R]);
        for (int d : edge_) acc += w_[d + R] * v[reflect(i - d)];
        out[i] = acc;
    }
    return out;
}

std::vector<Interval> apply_noise_discrete(const NoiseKernel& kernel, size_t k,
                                           const std::vector<Interval>& v) {
    return NoiseStencil(kernel, k).apply(v);
}

}  // namespace ncert
