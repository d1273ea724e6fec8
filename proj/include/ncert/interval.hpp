#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ncert {

// Raised on operations outside the mathematical domain (division by an
// interval containing 0, log of a non-positive interval, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

inline double next_up(double x) { return std::nextafter(x, std::numeric_limits<double>::infinity()); }
inline double next_down(double x) { return std::nextafter(x, -std::numeric_limits<double>::infinity()); }

// Closed interval [lo, hi] with outward-rounded endpoints.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    constexpr Interval() = default;
    constexpr Interval(double x) : lo(x), hi(x) {}  // NOLINT: implicit point interval
    Interval(double l, double h);

    static Interval entire() {
        return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    }
    // Enclosure of a decimal literal (smallest machine interval containing it).
    static Interval parse(std::string_view decimal);
    // Parse "lo"/"hi" decimal strings; result is a superset of both literals' hull.
    static Interval parse(std::string_view lo, std::string_view hi);

    double mid() const;
    double width() const;  // rounded up
    double mag() const { return std::fmax(std::fabs(lo), std::fabs(hi)); }
    double mig() const;
    bool is_point() const { return lo == hi; }
    bool contains(double x) const { return lo <= x && x <= hi; }
    bool contains(const Interval& y) const { return lo <= y.lo && y.hi <= hi; }
    bool contains_zero() const { return lo <= 0.0 && 0.0 <= hi; }
    bool intersects(const Interval& y) const { return lo <= y.hi && y.lo <= hi; }
    bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }

    Interval& operator+=(const Interval& y);
    Interval& operator-=(const Interval& y);
    Interval& operator*=(const Interval& y);
    Interval& operator/=(const Interval& y);
};

Interval operator+(const Interval& x, const Interval& y);
Interval operator-(const Interval& x, const Interval& y);
Interval operator*(const Interval& x, const Interval& y);
Interval operator/(const Interval& x, const Interval& y);
Interval operator-(const Interval& x);

inline bool operator==(const Interval& x, const Interval& y) { return x.lo == y.lo && x.hi == y.hi; }

// Certainly-less / certainly-greater comparisons.
inline bool certainly_lt(const Interval& x, const Interval& y) { return x.hi < y.lo; }
inline bool certainly_gt(const Interval& x, const Interval& y) { return x.lo > y.hi; }

Interval hull(const Interval& x, const Interval& y);
Interval intersect(const Interval& x, const Interval& y);  // throws DomainError if disjoint
Interval abs(const Interval& x);
Interval sqr(const Interval& x);
Interval sqrt(const Interval& x);
Interval exp(const Interval& x);
Interval log(const Interval& x);
Interval cbrt(const Interval& x);  // signed real cube root
Interval pow_int(const Interval& x, int n);
// x^(p/q); q must be 1 or 3 for inputs that may be negative (signed cbrt
// semantics); other q require x > 0.
Interval pow_frac(const Interval& x, int p, int q);
Interval min(const Interval& x, const Interval& y);
Interval max(const Interval& x, const Interval& y);

// Directed-rounding helpers on plain doubles.
double add_up(double a, double b);
double add_down(double a, double b);
double mul_up(double a, double b);
double mul_down(double a, double b);
double div_up(double a, double b);
double div_down(double a, double b);

// Number of ulps each elementary function result is widened by on each
// side. Configured at build time.
int elementary_ulp_budget();
const char* elementary_provider();

// Decimal rendering with 17 significant digits; "lo" rounded down and "hi"
// rounded up so that re-parsing yields a superset.
std::string format_down(double x);
std::string format_up(double x);
std::string to_string(const Interval& x);

}  // namespace ncert
