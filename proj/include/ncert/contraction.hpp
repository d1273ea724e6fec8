#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "ncert/interval.hpp"
#include "ncert/noise.hpp"
#include "ncert/ulam.hpp"

namespace ncert {

struct NoContractionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TransferFailedError : std::runtime_error {
    double value;  // the transferred alpha that reached 1
    TransferFailedError(const std::string& what, double v) : std::runtime_error(what), value(v) {}
};

// Upper bounds ||L^i|_V|| <= C_i for i < n_bar and ||L^{n_bar}|_V|| <= alpha < 1.
// Only the upper endpoints of alpha and C_i carry meaning.
struct ContractionCertificate {
    Interval delta{0.0};  // 0 for the continuum operator
    Interval xi{0.0};
    int n_bar = 0;
    Interval alpha{1.0};
    std::vector<Interval> C;  // C_0 .. C_{n_bar-1}, C_0 = 1
    Interval sum_C{0.0};
    std::string op_hash;
    std::vector<std::string> chain;  // how the certificate was obtained

    // Validates alpha < 1 and C_i <= 1, recomputes sum_C.
    static ContractionCertificate make(Interval delta, Interval xi, std::vector<Interval> C, Interval alpha);
    // sum_C / (1 - alpha), rounded up.
    Interval amplification() const;
    // Upper bound on ||L^i|_V|| for any i >= 0 (submultiplicativity past n_bar).
    double bound_at(int i) const;

    std::string to_json() const;
    static ContractionCertificate from_json(const std::string& text);
};

struct IterateOptions {
    int workers = 1;
    // Once a trajectory's bound drops below this value its later bounds are
    // frozen (norms of a Markov operator never grow).
    double stop_below = 1e-3;
    // Reference vector g in the decomposition v = sum_i v_i delta (e_i/delta - g).
    // Empty: use an approximate fixed point computed internally.
    std::vector<double> pivot;
    // Recompute every `audit_every`-th step of the first `audit_vectors`
    // trajectories in interval arithmetic and check the fast bound
    // (0 disables; meant for tests).
    int audit_every = 0;
    int audit_vectors = 0;
    // Interleave kLanes trajectories (ignored when auditing).
    bool batched = true;
};

// Certified upper bounds on ||L^i_{delta,xi}|_V||_{L1} for i = 1..n.
std::vector<Interval> iterate_norm_bound(const UlamOperator& op, const NoiseKernel& kernel, int n,
                                         const IterateOptions& opt = {});

// Approximate fixed point of L_{delta,xi} in plain floating point, unit mass.
std::vector<double> approximate_fixed_point(const UlamOperator& op, const NoiseStencil& noise,
                                            int max_iter = 10000, double tol = 1e-15);

// bounds = C_0, C_1, ... (C_0 = 1). Chooses n_bar minimizing
// sum_{i<n} C_i / (1 - C_n) among C_n <= target_alpha, else the index of the
// smallest C_n.
ContractionCertificate make_certificate(const std::vector<Interval>& bounds, double target_alpha,
                                        Interval delta = Interval(0.0), Interval xi = Interval(0.0));

// Fine-level bounds implied by a coarse sequence (C_0..C_m):
// C'_0 = 1, C'_{n+1} = min(1, C_n + K (2 sum_{i<n} C_i + 1)), K = delta_c Var(rho_xi) / 2.
std::vector<Interval> transferred_bounds(const std::vector<Interval>& coarse, const Interval& delta_coarse,
                                         const NoiseKernel& kernel);

ContractionCertificate coarse_fine_transfer(const ContractionCertificate& coarse, const Interval& fine_delta,
                                            const NoiseKernel& kernel);

// Picks the coarse index so that the transferred certificate minimizes
// sum C' / (1 - alpha'). Throws TransferFailedError if no index works.
ContractionCertificate best_transferred_certificate(const std::vector<Interval>& coarse_bounds,
                                                    const Interval& delta_coarse, const Interval& fine_delta,
                                                    const NoiseKernel& kernel);

// Uniform kernel: C_i -> C_i r^i + 1 - r^i with r = xi / xi_hat.
ContractionCertificate noise_monotonicity(const ContractionCertificate& cert, const NoiseKernel& kernel,
                                          const Interval& xi_hat);
Interval noise_monotone_bound(const Interval& C, int i, const Interval& xi, const Interval& xi_hat);

enum class MixingVerdict { Mixing, NotMixing, Indeterminate };
// A certificate with some C_i < 1 certifies mixing; transferred to xi_hat > xi.
MixingVerdict mixing_verdict(const ContractionCertificate& cert);

}  // namespace ncert
