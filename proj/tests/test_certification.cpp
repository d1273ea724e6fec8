#include <cmath>
#include <random>

#include <doctest.h>

#include "ncert/certification.hpp"

using namespace ncert;

namespace {

struct Run {
    UlamOperator op;
    ContractionCertificate cert;
    FixedPointResult fp;
    DensityEnclosure d;
};

Run run(const MapModel& m, double xi, size_t k, size_t k_est, int steps = 60) {
    Run r;
    NoiseKernel kern = NoiseKernel::uniform(Interval(xi));
    r.op = assemble(m, UlamGrid(k));
    std::vector<Interval> b{Interval(1.0)};
    for (const Interval& x : iterate_norm_bound(r.op, kern, steps)) b.push_back(x);
    r.cert = make_certificate(b, 0.5, Interval(1.0 / static_cast<double>(k)), kern.xi);
    r.fp = fixed_point(r.op, kern, r.cert, 1e-13);
    r.d = certify_density(m, kern, r.op, r.cert, r.fp, k_est);
    return r;
}

// Forward simulation of x -> fold(T(x) + noise); histogram on `bins` cells.
std::vector<double> histogram(const MapModel& m, double xi, size_t bins, long samples, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0, 1);
    std::vector<double> h(bins, 0.0);
    double x = U(rng);
    for (long t = -1000; t < samples; ++t) {
        size_t i = m.branch_of(x);
        double y = static_cast<double>(m.eval_ld(i, x)) + xi * (U(rng) - 0.5);
        x = fold(y);
        if (t >= 0) h[std::min(bins - 1, static_cast<size_t>(x * bins))] += 1;
    }
    for (auto& v : h) v *= static_cast<double>(bins) / samples;
    return h;
}

}  // namespace

TEST_CASE("a priori error arithmetic") {
    ContractionCertificate c = ContractionCertificate::make(Interval(0.0), Interval(0.1), {Interval(1.0), Interval(1.0)},
                                                            Interval(0.5));
    Interval e = a_priori_error(c, Interval(1e-3), NoiseKernel::uniform(Interval(0.1)));
    CHECK(e.contains(0.1));
    CHECK(e.hi <= 0.1 * (1 + 1e-12));
    Interval half = a_priori_error(c, Interval(0.5e-3), NoiseKernel::uniform(Interval(0.1)));
    CHECK(half.contains(0.05));

    // Reference row: sum C = 29.54, alpha = 0.044, delta = 2^-27, xi = 0.0086.
    std::vector<Interval> C(29, Interval(1.0));
    C.push_back(Interval(0.54));
    ContractionCertificate p = ContractionCertificate::make(Interval(0x1p-27), Interval::parse("0.0086"), C,
                                                            Interval(0.044));
    double v = a_priori_error(p, Interval(0x1p-27), NoiseKernel::uniform(Interval::parse("0.0086"))).hi;
    CHECK(v / 0.445e-4 < 2);
    CHECK(v / 0.445e-4 > 0.5);
}

TEST_CASE("doubling and tent maps have the uniform density") {
    for (const MapModel& m : {make_doubling_map(), make_tent_map()}) {
        Run r = run(m, 0.25, 1024, 64);
        const ErrorBudget& e = r.d.budget;
        for (double x : r.fp.f) CHECK(x == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.fp.residual.contains(0.0));
        CHECK(r.fp.residual.hi < 1e-10);
        // Interior ledger cells of a constant density carry no variation.
        for (size_t b = 0; b < 2; ++b)
            for (size_t I = 4; I + 4 < 32; ++I) CHECK(r.d.ledgers.var_Lif[b][I] < 1e-9);
        CHECK(r.d.l1_error.hi <= (e.numerical_error.hi + e.C.hi) / (1 - e.D.hi) * (1 + 1e-12));
        for (double L : r.d.linf) {
            CHECK(L <= 1 + 1e-6 + r.d.l1_error.hi * 4 + r.d.ledgers.var_NLf_total);
            CHECK(L >= 1);
        }
    }
}

TEST_CASE("toy map mass concentrates below 0.6") {
    Run r = run(make_toy_map(Interval(0.0)), 0.1, 1024, 64);
    double below = 0, total = 0;
    for (size_t i = 0; i < r.fp.f.size(); ++i) {
        total += r.fp.f[i];
        if ((i + 1) / 1024.0 <= 0.6 + 0.05) below += r.fp.f[i];
    }
    CHECK(below >= 0.99 * total);
}

TEST_CASE("certified BZ density") {
    MapModel m = make_bz_map();
    const double xi = 0.1;
    Run r = run(m, xi, 4096, 64);
    const ErrorBudget& e = r.d.budget;
    CHECK(r.d.mass.contains(1.0));
    CHECK(r.d.l1_error.hi >= r.fp.numerical_error.hi);
    CHECK(r.d.l1_error.hi <= e.a_priori.hi + e.numerical_error.hi);
    for (double x : r.fp.f) CHECK(x >= 0);
    for (double L : r.d.linf) CHECK(L <= 1.0 / xi * (1 + 1e-12));
    double s = 0;
    for (double v : r.d.ledgers.var_NLf) s += v;
    CHECK(s <= 2.0 / xi * r.d.ledgers.l1_Lf * (1 + 1e-9) + 1e-12);

    SUBCASE("matches a fine reference within both certified errors") {
        Run fine = run(m, xi, 1 << 14, 64);
        double dist = 0;
        const size_t ratio = fine.fp.f.size() / r.fp.f.size();
        for (size_t i = 0; i < fine.fp.f.size(); ++i) dist += std::fabs(fine.fp.f[i] - r.fp.f[i / ratio]);
        dist /= static_cast<double>(fine.fp.f.size());
        CHECK(dist <= r.d.l1_error.hi + fine.d.l1_error.hi);
        CHECK(fine.d.l1_error.hi <= r.d.l1_error.hi);
    }

    SUBCASE("refining the ledger partition does not increase B2 + B3") {
        NoiseKernel kern = NoiseKernel::uniform(Interval(xi));
        double prev = INFINITY;
        for (size_t ke : {16, 32, 64, 128, 256}) {
            Ledgers L = variation_ledgers(m, kern, r.op, r.fp.f, ke);
            ErrorBudget b = bootstrap_error(kern, r.cert, L, r.fp.numerical_error);
            double v = (b.B2 + b.B3).hi;
            CHECK(v <= prev * (1 + 1e-9));
            prev = v;
        }
    }

    SUBCASE("local L-infinity bounds dominate a simulated histogram") {
        std::vector<double> h = histogram(m, xi, 64, 4000000, 99);
        for (size_t I = 0; I < 64; ++I) CHECK(h[I] <= r.d.linf[I] * 1.05 + 0.05);
    }
}

TEST_CASE("two independent starts agree within certified error") {
    MapModel m = make_bz_map();
    NoiseKernel kern = NoiseKernel::uniform(Interval(0.05));
    UlamOperator op = assemble(m, UlamGrid(2048));
    std::vector<Interval> b{Interval(1.0)};
    for (const Interval& x : iterate_norm_bound(op, kern, 60)) b.push_back(x);
    ContractionCertificate c = make_certificate(b, 0.5, Interval(1.0 / 2048), kern.xi);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0, 1);
    std::vector<double> s(2048);
    for (auto& x : s) x = U(rng);
    FixedPointResult f1 = fixed_point(op, kern, c, 1e-13);
    FixedPointResult f2 = fixed_point(op, kern, c, 1e-13, 200000, s);
    double dist = 0;
    for (size_t i = 0; i < 2048; ++i) dist += std::fabs(f1.f[i] - f2.f[i]) / 2048;
    CHECK(dist <= f1.numerical_error.hi + f2.numerical_error.hi);
}

TEST_CASE("ledger CSV and budget JSON") {
    Run r = run(make_doubling_map(), 0.25, 256, 16);
    std::string csv = ledgers_to_csv(r.d);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);
    CHECK(budget_to_json(r.d.budget).find("final_l1") != std::string::npos);
}
