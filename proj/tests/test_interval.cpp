#include <cmath>
#include <random>

#include <doctest.h>

#include "ncert/interval.hpp"

using namespace ncert;

TEST_CASE("interval arithmetic basics") {
    CHECK(Interval(1) + Interval(2) == Interval(3));
    CHECK(Interval(-1, 2) * Interval(3) == Interval(-3, 6));
    CHECK_THROWS_AS(Interval(1, 2) / Interval(0, 1), DomainError);
    CHECK_THROWS(Interval(2, 1));
    CHECK(exp(Interval(0)) == Interval(1));
    CHECK(cbrt(Interval(-8)) == Interval(-2));
    CHECK(pow_int(Interval(-2, 3), 2).lo == 0);
}

TEST_CASE("(3/e)^19 sits in (6.51, 7)") {
    Interval r = pow_int(Interval(3) / exp(Interval(1)), 19);
    CHECK(r.lo > 6.51);
    CHECK(r.hi < 7);
}

TEST_CASE("decimal parsing gives the tightest enclosure") {
    Interval t = Interval::parse("0.1");
    CHECK(t.contains(0.1));
    CHECK(std::nextafter(t.lo, 1.0) >= t.hi);
    CHECK(Interval::parse("0.5") == Interval(0.5));
    Interval s = Interval::parse("-1e-3");
    CHECK(s.hi < 0);
    CHECK(s.width() < 1e-18);
    CHECK_THROWS(Interval::parse("abc"));
}

TEST_CASE("containment fuzzing against long double") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-10, 10), P(1e-3, 10);
    for (int t = 0; t < 10000; ++t) {
        double x = U(rng), y = U(rng), p = P(rng);
        long double X = x, Y = y, Pl = p;
        CHECK((Interval(x) + Interval(y)).contains(static_cast<double>(X + Y)));
        Interval m = Interval(x) * Interval(y);
        CHECK(m.lo <= X * Y);
        CHECK(m.hi >= X * Y);
        if (y != 0) {
            Interval d = Interval(x) / Interval(y);
            CHECK(d.lo <= X / Y);
            CHECK(d.hi >= X / Y);
        }
        Interval e = exp(Interval(x));
        CHECK(e.lo <= std::exp(X));
        CHECK(e.hi >= std::exp(X));
        Interval l = log(Interval(p));
        CHECK(l.lo <= std::log(Pl));
        CHECK(l.hi >= std::log(Pl));
        Interval c = cbrt(Interval(x));
        CHECK(c.lo <= std::cbrt(X));
        CHECK(c.hi >= std::cbrt(X));
        Interval s = sqrt(Interval(p));
        CHECK(s.lo <= std::sqrt(Pl));
        CHECK(s.hi >= std::sqrt(Pl));
        Interval q = pow_frac(Interval(p), 2, 3);
        CHECK(q.lo <= std::pow(Pl, 2.0L / 3));
        CHECK(q.hi >= std::pow(Pl, 2.0L / 3));
    }
}

TEST_CASE("width control for point inputs") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.01, 5);
    const double budget = 2 * elementary_ulp_budget() + 2;
    for (int t = 0; t < 2000; ++t) {
        double x = U(rng);
        for (Interval r : {exp(Interval(x)), log(Interval(x)), cbrt(Interval(x)), sqrt(Interval(x))}) {
            double ulp = std::nextafter(std::fabs(r.mid()), 1e300) - std::fabs(r.mid());
            CHECK(r.width() <= budget * ulp);
        }
    }
}

TEST_CASE("inclusion monotonicity on nested intervals") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-4, 4), W(0, 1);
    for (int t = 0; t < 2000; ++t) {
        double a = U(rng), b = a + W(rng), c = U(rng), d = c + W(rng);
        Interval x(a, b), y(c, d);
        Interval xs(a + (b - a) * 0.25, b - (b - a) * 0.25), ys(c + (d - c) * 0.5, d);
        CHECK((x + y).contains(xs + ys));
        CHECK((x - y).contains(xs - ys));
        CHECK((x * y).contains(xs * ys));
        if (!y.contains_zero()) CHECK((x / y).contains(xs / ys));
        CHECK(exp(x).contains(exp(xs)));
        CHECK(cbrt(x).contains(cbrt(xs)));
        CHECK(pow_int(x, 5).contains(pow_int(xs, 5)));
        CHECK(abs(x).contains(abs(xs)));
        CHECK(sqr(x).contains(sqr(xs)));
    }
}

TEST_CASE("directed rounding helpers") {
    CHECK(add_up(1.0, 0x1p-60) > 1.0);
    CHECK(add_down(1.0, 0x1p-60) == 1.0);
    CHECK(div_up(1.0, 3.0) > div_down(1.0, 3.0));
    CHECK(mul_up(0.1, 3.0) >= mul_down(0.1, 3.0));
    double lo = std::strtod(format_down(1.0 / 3).c_str(), nullptr);
    double hi = std::strtod(format_up(1.0 / 3).c_str(), nullptr);
    CHECK(lo <= 1.0 / 3);
    CHECK(hi >= 1.0 / 3);
}
