#include <random>

#include <doctest.h>

#include "ncert/contraction.hpp"

using namespace ncert;

namespace {

std::vector<Interval> with_c0(const std::vector<Interval>& b) {
    std::vector<Interval> out{Interval(1.0)};
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

}  // namespace

TEST_CASE("doubling map contracts quickly") {
    UlamOperator op = assemble(make_doubling_map(), UlamGrid(256));
    NoiseKernel kern = NoiseKernel::uniform(Interval(0.25));
    std::vector<Interval> b = iterate_norm_bound(op, kern, 10);
    REQUIRE(b.size() == 10);
    bool below = false;
    for (const auto& x : b) below |= x.hi < 1;
    CHECK(below);
    for (size_t i = 0; i < b.size(); ++i)
        for (size_t j = 0; i + j + 1 < b.size(); ++j) CHECK(b[i + j + 1].hi <= b[i].hi * b[j].hi + 1e-9);
}

TEST_CASE("identity without noise does not contract") {
    UlamOperator op = assemble(make_identity_map(), UlamGrid(32));
    std::vector<Interval> b = iterate_norm_bound(op, NoiseKernel::uniform(Interval(0.0)), 5);
    for (const auto& x : b) CHECK(x.hi >= 1.0);
    CHECK_THROWS_AS(make_certificate(with_c0(b), 0.5), NoContractionError);
}

TEST_CASE("certificate selection") {
    ContractionCertificate c = make_certificate({Interval(1.0), Interval(0.5), Interval(0.1)}, 0.2);
    CHECK(c.n_bar == 2);
    CHECK(c.alpha.hi == 0.1);
    CHECK(c.sum_C.contains(1.5));
    CHECK_THROWS_AS(make_certificate({Interval(1.0), Interval(1.0), Interval(1.0)}, 0.5), NoContractionError);
    ContractionCertificate one = make_certificate({Interval(1.0), Interval(0.044)}, 0.5);
    CHECK(one.n_bar == 1);
    CHECK(one.bound_at(3) <= 0.044 * 0.044 * 0.044 * 1.0001);
    ContractionCertificate back = ContractionCertificate::from_json(c.to_json());
    CHECK(back.n_bar == c.n_bar);
    CHECK(back.alpha.hi == c.alpha.hi);
    CHECK(back.sum_C.hi == c.sum_C.hi);
}

TEST_CASE("coarse-fine transfer arithmetic") {
    NoiseKernel kern = NoiseKernel::uniform(Interval(0.1));
    std::vector<Interval> coarse(5, Interval(1.0));
    coarse.push_back(Interval(0.1));
    std::vector<Interval> t = transferred_bounds(coarse, Interval(1e-4), kern);
    CHECK(t[6].hi >= 0.111);
    CHECK(t[6].hi <= 0.111 + 1e-12);
    CHECK_THROWS_AS(best_transferred_certificate(coarse, Interval(0.1), Interval(0.01), kern), TransferFailedError);
}

TEST_CASE("transferred bounds dominate direct fine bounds (2^6 -> 2^8)") {
    NoiseKernel kern = NoiseKernel::uniform(Interval(0.25));
    MapModel m = make_doubling_map();
    std::vector<Interval> coarse = with_c0(iterate_norm_bound(assemble(m, UlamGrid(64)), kern, 20));
    std::vector<Interval> fine = with_c0(iterate_norm_bound(assemble(m, UlamGrid(256)), kern, 20));
    std::vector<Interval> t = transferred_bounds(coarse, Interval(1.0 / 64), kern);
    for (size_t n = 0; n < fine.size() && n < t.size(); ++n) CHECK(fine[n].hi <= t[n].hi);
}

TEST_CASE("noise monotonicity") {
    CHECK(noise_monotone_bound(Interval(0.5), 2, Interval(0.1), Interval(0.2)).contains(0.875));
    ContractionCertificate c = make_certificate({Interval(1.0), Interval(0.7), Interval(0.3)}, 0.5, Interval(0.0),
                                                Interval(0.1));
    ContractionCertificate same = noise_monotonicity(c, NoiseKernel::uniform(Interval(0.1)), Interval(0.1));
    CHECK(same.alpha.hi >= c.alpha.hi);
    CHECK(same.alpha.hi <= c.alpha.hi + 1e-15);

    NoiseKernel kern = NoiseKernel::uniform(Interval(0.1));
    Interval xi_hat = Interval(0.1) * Interval(1.5);
    MapModel m = make_bz_map();
    UlamOperator op = assemble(m, UlamGrid(256));
    std::vector<Interval> b = iterate_norm_bound(op, kern, 15);
    std::vector<Interval> bh = iterate_norm_bound(op, NoiseKernel::uniform(xi_hat), 15);
    for (size_t i = 0; i < b.size(); ++i)
        CHECK(bh[i].hi <= noise_monotone_bound(b[i], static_cast<int>(i + 1), kern.xi, xi_hat).hi);
}

TEST_CASE("mixing verdict") {
    ContractionCertificate c = make_certificate({Interval(1.0), Interval(0.9), Interval(0.4)}, 0.5);
    CHECK(mixing_verdict(c) == MixingVerdict::Mixing);
}

TEST_CASE("generating set bounds hold for random zero-average vectors") {
    const size_t k = 64;
    NoiseKernel kern = NoiseKernel::uniform(Interval(0.2));
    UlamOperator op = assemble(make_bz_map(), UlamGrid(k));
    std::vector<Interval> b = iterate_norm_bound(op, kern, 6);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> v(k);
        double s = 0;
        for (auto& x : v) s += x = U(rng);
        for (auto& x : v) x -= s / k;
        DensityVector w(k);
        for (size_t i = 0; i < k; ++i) w[i] = Interval(v[i]);
        const double n0 = l1_norm(w).lo;
        for (size_t i = 0; i < b.size(); ++i) {
            w = apply(op, kern, w);
            CHECK(l1_norm(w).lo <= b[i].hi * n0 * (1 + 1e-12));
        }
    }
}

TEST_CASE("audited, scalar and batched paths agree") {
    NoiseKernel kern = NoiseKernel::uniform(Interval(0.05));
    UlamOperator op = assemble(make_bz_map(), UlamGrid(512));
    IterateOptions scalar;
    scalar.batched = false;
    IterateOptions audited;
    audited.audit_every = 4;
    audited.audit_vectors = 3;
    std::vector<Interval> a = iterate_norm_bound(op, kern, 12);
    std::vector<Interval> s = iterate_norm_bound(op, kern, 12, scalar);
    std::vector<Interval> u = iterate_norm_bound(op, kern, 12, audited);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == s[i]);
        CHECK(a[i] == u[i]);
    }
}
