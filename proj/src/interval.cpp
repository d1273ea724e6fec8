#include "ncert/interval.hpp"

#include <algorithm>
#include <cfenv>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <string>

#ifdef NCERT_USE_MPFR
#include <mpfr.h>
#endif

#ifndef NCERT_ELEM_ULPS
#define NCERT_ELEM_ULPS 2
#endif

namespace ncert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Below this magnitude error-free transformations may lose exactness
// (subnormal results); we widen unconditionally there.
constexpr double kTiny = 0x1p-960;

bool finite2(double a, double b) { return std::isfinite(a) && std::isfinite(b); }

double widen_up(double x, int n) {
    for (int i = 0; i < n; ++i) x = next_up(x);
    return x;
}
double widen_down(double x, int n) {
    for (int i = 0; i < n; ++i) x = next_down(x);
    return x;
}

double pow_up_nonneg(double a, int n) {
    double r = 1.0;
    double b = a;
    while (n > 0) {
        if (n & 1) r = mul_up(r, b);
        n >>= 1;
        if (n) b = mul_up(b, b);
    }
    return r;
}
double pow_down_nonneg(double a, int n) {
    double r = 1.0;
    double b = a;
    while (n > 0) {
        if (n & 1) r = mul_down(r, b);
        n >>= 1;
        if (n) b = mul_down(b, b);
    }
    return r;
}

bool exact_cube(double c, double x) {
    double c2 = c * c;
    if (std::fma(c, c, -c2) != 0.0) return false;
    double c3 = c2 * c;
    if (std::fma(c2, c, -c3) != 0.0) return false;
    return c3 == x;
}

#ifdef NCERT_USE_MPFR
enum class Fn { Exp, Log, Cbrt };
double mpfr_eval(Fn f, double x, bool up) {
    mpfr_t a, r;
    mpfr_init2(a, 53);
    mpfr_init2(r, 53);
    mpfr_set_d(a, x, MPFR_RNDN);
    mpfr_rnd_t rnd = up ? MPFR_RNDU : MPFR_RNDD;
    switch (f) {
        case Fn::Exp: mpfr_exp(r, a, rnd); break;
        case Fn::Log: mpfr_log(r, a, rnd); break;
        case Fn::Cbrt: mpfr_cbrt(r, a, rnd); break;
    }
    double out = mpfr_get_d(r, rnd);
    mpfr_clear(a);
    mpfr_clear(r);
    return out;
}
#endif

double exp_down(double x) {
    if (x == 0.0) return 1.0;
#ifdef NCERT_USE_MPFR
    return mpfr_eval(Fn::Exp, x, false);
#else
    return std::max(0.0, widen_down(std::exp(x), NCERT_ELEM_ULPS));
#endif
}
double exp_up(double x) {
    if (x == 0.0) return 1.0;
#ifdef NCERT_USE_MPFR
    return mpfr_eval(Fn::Exp, x, true);
#else
    return widen_up(std::exp(x), NCERT_ELEM_ULPS);
#endif
}
double log_down(double x) {
    if (x == 1.0) return 0.0;
    if (x == kInf) return std::numeric_limits<double>::max();
#ifdef NCERT_USE_MPFR
    return mpfr_eval(Fn::Log, x, false);
#else
    return widen_down(std::log(x), NCERT_ELEM_ULPS);
#endif
}
double log_up(double x) {
    if (x == 1.0) return 0.0;
#ifdef NCERT_USE_MPFR
    return mpfr_eval(Fn::Log, x, true);
#else
    return widen_up(std::log(x), NCERT_ELEM_ULPS);
#endif
}
double cbrt_dir(double x, bool up) {
    if (!std::isfinite(x) || x == 0.0) return x;
    double c = std::cbrt(x);
    if (exact_cube(c, x)) return c;
#ifdef NCERT_USE_MPFR
    return mpfr_eval(Fn::Cbrt, x, up);
#else
    // glibc cbrt is off by up to 4 ulp; step until the cube brackets x.
    if (x < 0) return -cbrt_dir(-x, !up);
    if (up) {
        while (pow_down_nonneg(c, 3) < x) c = std::nextafter(c, kInf);
    } else {
        while (pow_up_nonneg(c, 3) > x) c = std::nextafter(c, 0.0);
    }
    return c;
#endif
}

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// strtod honours the current rounding mode in glibc; the mode is thread
// local and restored before returning.
double parse_directed(const std::string& s, int mode) {
    const int saved = std::fegetround();
    std::fesetround(mode);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    std::fesetround(saved);
    if (end == s.c_str() || *end != '\0' || std::isnan(v))
        throw std::invalid_argument("not a decimal literal: '" + s + "'");
    return v;
}

}  // namespace

int elementary_ulp_budget() {
#ifdef NCERT_USE_MPFR
    return 0;
#else
    return NCERT_ELEM_ULPS;
#endif
}

const char* elementary_provider() {
#ifdef NCERT_USE_MPFR
    return "mpfr-correctly-rounded";
#else
    return "libm-widened";
#endif
}

double add_up(double a, double b) {
    double s = a + b;
    if (!finite2(a, b)) return s;
    if (std::isinf(s)) return s > 0 ? s : -std::numeric_limits<double>::max();
    double bb = s - a;
    double err = (a - (s - bb)) + (b - bb);
    return err > 0 ? next_up(s) : s;
}

double add_down(double a, double b) {
    double s = a + b;
    if (!finite2(a, b)) return s;
    if (std::isinf(s)) return s < 0 ? s : std::numeric_limits<double>::max();
    double bb = s - a;
    double err = (a - (s - bb)) + (b - bb);
    return err < 0 ? next_down(s) : s;
}

double mul_up(double a, double b) {
    if (a == 0.0 || b == 0.0) return 0.0;
    double p = a * b;
    if (!finite2(a, b)) return p;
    if (std::isinf(p)) return p > 0 ? p : -std::numeric_limits<double>::max();
    if (std::fabs(p) < kTiny) return next_up(p);
    double e = std::fma(a, b, -p);
    return e > 0 ? next_up(p) : p;
}

double mul_down(double a, double b) {
    if (a == 0.0 || b == 0.0) return 0.0;
    double p = a * b;
    if (!finite2(a, b)) return p;
    if (std::isinf(p)) return p < 0 ? p : std::numeric_limits<double>::max();
    if (std::fabs(p) < kTiny) return next_down(p);
    double e = std::fma(a, b, -p);
    return e < 0 ? next_down(p) : p;
}

double div_up(double a, double b) {
    if (a == 0.0) return 0.0;
    double q = a / b;
    if (!finite2(a, b)) return q;
    if (std::isinf(q)) return q > 0 ? q : -std::numeric_limits<double>::max();
    if (std::fabs(q) < kTiny || std::fabs(a) < kTiny) return next_up(q);
    double r = std::fma(-q, b, a);  // a - q*b, exact
    if (r == 0.0) return q;
    return ((r > 0) == (b > 0)) ? next_up(q) : q;
}

double div_down(double a, double b) {
    if (a == 0.0) return 0.0;
    double q = a / b;
    if (!finite2(a, b)) return q;
    if (std::isinf(q)) return q < 0 ? q : std::numeric_limits<double>::max();
    if (std::fabs(q) < kTiny || std::fabs(a) < kTiny) return next_down(q);
    double r = std::fma(-q, b, a);
    if (r == 0.0) return q;
    return ((r > 0) == (b > 0)) ? q : next_down(q);
}

Interval::Interval(double l, double h) : lo(l), hi(h) {
    if (std::isnan(l) || std::isnan(h)) throw DomainError("interval with NaN endpoint");
    if (l > h) throw DomainError("interval with lo > hi");
}

Interval Interval::parse(std::string_view decimal) {
    std::string s = trim(decimal);
    return {parse_directed(s, FE_DOWNWARD), parse_directed(s, FE_UPWARD)};
}

Interval Interval::parse(std::string_view l, std::string_view h) {
    return hull(parse(l), parse(h));
}

double Interval::mid() const {
    if (lo == -kInf && hi == kInf) return 0.0;
    if (lo == -kInf) return -std::numeric_limits<double>::max();
    if (hi == kInf) return std::numeric_limits<double>::max();
    double m = 0.5 * lo + 0.5 * hi;
    return std::clamp(m, lo, hi);
}

double Interval::width() const { return add_up(hi, -lo); }

double Interval::mig() const {
    if (contains_zero()) return 0.0;
    return std::fmin(std::fabs(lo), std::fabs(hi));
}

Interval& Interval::operator+=(const Interval& y) { return *this = *this + y; }
Interval& Interval::operator-=(const Interval& y) { return *this = *this - y; }
Interval& Interval::operator*=(const Interval& y) { return *this = *this * y; }
Interval& Interval::operator/=(const Interval& y) { return *this = *this / y; }

Interval operator+(const Interval& x, const Interval& y) {
    return {add_down(x.lo, y.lo), add_up(x.hi, y.hi)};
}

Interval operator-(const Interval& x, const Interval& y) {
    return {add_down(x.lo, -y.hi), add_up(x.hi, -y.lo)};
}

Interval operator-(const Interval& x) { return {-x.hi, -x.lo}; }

Interval operator*(const Interval& x, const Interval& y) {
    double lo = std::min({mul_down(x.lo, y.lo), mul_down(x.lo, y.hi), mul_down(x.hi, y.lo),
                          mul_down(x.hi, y.hi)});
    double hi = std::max({mul_up(x.lo, y.lo), mul_up(x.lo, y.hi), mul_up(x.hi, y.lo),
                          mul_up(x.hi, y.hi)});
    return {lo, hi};
}

Interval operator/(const Interval& x, const Interval& y) {
    if (y.contains_zero()) throw DomainError("division by an interval containing 0");
    double lo = std::min({div_down(x.lo, y.lo), div_down(x.lo, y.hi), div_down(x.hi, y.lo),
                          div_down(x.hi, y.hi)});
    double hi = std::max({div_up(x.lo, y.lo), div_up(x.lo, y.hi), div_up(x.hi, y.lo),
                          div_up(x.hi, y.hi)});
    return {lo, hi};
}

Interval hull(const Interval& x, const Interval& y) {
    return {std::min(x.lo, y.lo), std::max(x.hi, y.hi)};
}

Interval intersect(const Interval& x, const Interval& y) {
    if (!x.intersects(y)) throw DomainError("empty intersection");
    return {std::max(x.lo, y.lo), std::min(x.hi, y.hi)};
}

Interval abs(const Interval& x) {
    if (x.lo >= 0) return x;
    if (x.hi <= 0) return -x;
    return {0.0, std::max(-x.lo, x.hi)};
}

Interval sqr(const Interval& x) { return pow_int(x, 2); }

Interval sqrt(const Interval& x) {
    if (x.lo < 0) throw DomainError("sqrt of an interval with negative part");
    auto dir = [](double v, bool up) {
        if (v == 0.0 || std::isinf(v)) return v;
        double s = std::sqrt(v);
        double r = std::fma(-s, s, v);
        if (r == 0.0) return s;
        if (up) return r > 0 ? next_up(s) : s;
        return r < 0 ? next_down(s) : s;
    };
    return {dir(x.lo, false), dir(x.hi, true)};
}

Interval exp(const Interval& x) { return {exp_down(x.lo), exp_up(x.hi)}; }

Interval log(const Interval& x) {
    if (x.lo <= 0) throw DomainError("log of an interval touching 0");
    return {log_down(x.lo), log_up(x.hi)};
}

Interval cbrt(const Interval& x) { return {cbrt_dir(x.lo, false), cbrt_dir(x.hi, true)}; }

Interval pow_int(const Interval& x, int n) {
    if (n == 0) return {1.0, 1.0};
    if (n == 1) return x;
    if (n < 0) return Interval(1.0) / pow_int(x, -n);
    if (n % 2 == 0) {
        Interval a = abs(x);
        return {pow_down_nonneg(a.lo, n), pow_up_nonneg(a.hi, n)};
    }
    double lo = x.lo >= 0 ? pow_down_nonneg(x.lo, n) : -pow_up_nonneg(-x.lo, n);
    double hi = x.hi >= 0 ? pow_up_nonneg(x.hi, n) : -pow_down_nonneg(-x.hi, n);
    return {lo, hi};
}

Interval pow_frac(const Interval& x, int p, int q) {
    if (q <= 0) throw std::invalid_argument("pow_frac: non-positive denominator");
    int g = std::gcd(p, q);
    p /= g;
    q /= g;
    if (q == 1) return pow_int(x, p);
    if (q == 3) {
        if (p < 0 && x.contains_zero()) throw DomainError("negative fractional power at 0");
        return pow_int(cbrt(x), p);
    }
    if (x.lo <= 0) throw DomainError("pow_frac with even/general root of a non-positive interval");
    return exp(Interval(p) / Interval(q) * log(x));
}

Interval min(const Interval& x, const Interval& y) {
    return {std::min(x.lo, y.lo), std::min(x.hi, y.hi)};
}

Interval max(const Interval& x, const Interval& y) {
    return {std::max(x.lo, y.lo), std::max(x.hi, y.hi)};
}

std::string format_down(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    double y = x;
    for (int it = 0; it < 4; ++it) {
        std::snprintf(buf, sizeof buf, "%.17g", y);
        if (parse_directed(buf, FE_UPWARD) <= x) return buf;
        y = next_down(y);
    }
    return buf;
}

std::string format_up(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    double y = x;
    for (int it = 0; it < 4; ++it) {
        std::snprintf(buf, sizeof buf, "%.17g", y);
        if (parse_directed(buf, FE_DOWNWARD) >= x) return buf;
        y = next_up(y);
    }
    return buf;
}

std::string to_string(const Interval& x) {
    return "[" + format_down(x.lo) + ", " + format_up(x.hi) + "]";
}

}  // namespace ncert
