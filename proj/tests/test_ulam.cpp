#include <filesystem>
#include <random>

#include <doctest.h>

#include "ncert/ulam.hpp"

using namespace ncert;

TEST_CASE("projection") {
    UlamGrid g2(2), g8(8);
    for (const Interval& c : project_primitive(g8, [](const Interval& x) { return x; })) CHECK(c == Interval(1.0));
    DensityVector p = project_primitive(g2, [](const Interval& x) { return sqr(x) / Interval(2); });
    CHECK(p[0] == Interval(0.25));
    CHECK(p[1] == Interval(0.75));
    // pi_delta is idempotent: projecting the step function again changes nothing.
    DensityVector q = project_primitive(g8, [](const Interval& x) { return pow_int(x, 3); });
    DensityVector prim(9);
    prim[0] = Interval(0.0);
    for (size_t i = 0; i < 8; ++i) prim[i + 1] = prim[i] + q[i] * g8.delta();
    DensityVector qq = project_primitive(g8, [&](const Interval& x) {
        size_t i = std::min<size_t>(g8.cell_of(x.lo), 7);
        return prim[i] + q[i] * (x - Interval(g8.left(i)));
    });
    for (size_t i = 0; i < 8; ++i) CHECK(qq[i].intersects(q[i]));
}

TEST_CASE("assembly of small operators") {
    UlamOperator d = assemble(make_doubling_map(), UlamGrid(2));
    for (size_t i = 0; i < 2; ++i)
        for (size_t j = 0; j < 2; ++j) CHECK(d.entry(i, j).contains(0.5));
    UlamOperator t = assemble(make_toy_map(Interval(0.0)), UlamGrid(2));
    CHECK(t.entry(0, 1).contains(1.0));
    CHECK(t.entry(1, 1).contains(0.0));
}

TEST_CASE("BZ columns are stochastic at k = 2^10") {
    UlamOperator op = assemble(make_bz_map(), UlamGrid(1024));
    double worst = 0;
    for (size_t j = 0; j < op.k(); ++j) {
        Interval s = op.column_sum(j);
        CHECK(s.contains(1.0));
        worst = std::max(worst, s.width());
    }
    CHECK(worst <= 1e-8);
    for (size_t n = 0; n < op.nnz(); ++n) {
        CHECK(op.lo()[n] >= 0);
        CHECK(op.hi()[n] <= 1);
    }
}

TEST_CASE("one step of the annealed operator") {
    NoiseKernel kern = NoiseKernel::uniform(Interval::parse("0.1"));
    UlamOperator d = assemble(make_doubling_map(), UlamGrid(64));
    DensityVector one(64, Interval(1.0));
    for (const Interval& c : apply(d, kern, one)) CHECK(c.contains(1.0));

    // Toy map without noise, k = 4: T sends everything into [0, 1/2].
    UlamOperator t = assemble(make_toy_map(Interval(0.0)), UlamGrid(4));
    NoiseKernel none = NoiseKernel::uniform(Interval(0.0));
    DensityVector v(4, Interval(1.0));
    v = apply(t, none, apply(t, none, v));
    CHECK(v[2].contains(0.0));
    CHECK(v[3].contains(0.0));
    CHECK(mass(v).contains(1.0));
    // First step: [1/2,1) -> atom at 0, cells 0,1 each receive 1/4 from the
    // expanding branches; second step pushes cell 0 and 1 mass to [0,1/2].
    CHECK((v[0] + v[1]).contains(4.0));

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(0, 2);
    UlamOperator bz = assemble(make_bz_map(), UlamGrid(256));
    DensityVector w(256);
    for (auto& c : w) c = Interval(U(rng));
    CHECK(mass(apply(bz, kern, w)).intersects(mass(w)));
}

TEST_CASE("projection never increases the L1 norm") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> v(1024);
        for (auto& x : v) x = U(rng);
        std::vector<double> c = coarsen(v, 64);
        CHECK(l1_norm_up(c.data(), 64) <= l1_norm_up(v.data(), 1024) + 1e-12);
    }
}

TEST_CASE("fast path and batched fast path agree bitwise") {
    UlamOperator op = assemble(make_bz_map(), UlamGrid(512));
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> U(-1, 1);
    const size_t k = op.k();
    std::vector<double> X(k * kLanes), Y(k * kLanes), err(kLanes), out(kLanes);
    for (auto& x : X) x = U(rng);
    op.apply_fast_batch(X.data(), Y.data());
    op.fast_error_batch(X.data(), err.data());
    l1_norm_up_batch(X.data(), k, out.data());
    for (size_t l = 0; l < kLanes; ++l) {
        std::vector<double> x(k), y(k);
        for (size_t j = 0; j < k; ++j) x[j] = X[j * kLanes + l];
        op.apply_fast(x.data(), y.data());
        for (size_t j = 0; j < k; ++j) CHECK(Y[j * kLanes + l] == y[j]);
        CHECK(err[l] == op.fast_error(x.data()));
        CHECK(out[l] == l1_norm_up(x.data(), k));
        // The certified error covers the gap to the interval product.
        DensityVector xi(k);
        for (size_t j = 0; j < k; ++j) xi[j] = Interval(x[j]);
        DensityVector ex = op.apply(xi);
        double gap = 0;
        for (size_t j = 0; j < k; ++j) gap += std::max(std::fabs(y[j] - ex[j].lo), std::fabs(y[j] - ex[j].hi)) / k;
        CHECK(gap <= err[l] * 1.0000001 + 1e-14);
    }
}

TEST_CASE("operator cache round trip") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "ncert_test_cache";
    fs::remove_all(dir);
    MapModel bz = make_bz_map();
    UlamOperator a = assemble_cached(bz, UlamGrid(128), dir.string());
    CHECK(!fs::is_empty(dir));
    UlamOperator b = assemble_cached(bz, UlamGrid(128), dir.string());
    CHECK(a == b);
    CHECK(a == assemble(bz, UlamGrid(128)));
    fs::remove_all(dir);
}
