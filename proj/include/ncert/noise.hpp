#pragma once

#include <cstddef>
#include <vector>

#include "ncert/interval.hpp"

namespace ncert {

// Width of the interleaved batches used by the contraction fast path.
inline constexpr size_t kLanes = 8;

enum class KernelKind { Uniform };

// Rescaled noise kernel rho_xi(x) = xi^{-1} rho(x / xi), supp rho ⊆ [-1/2, 1/2].
// xi = 0 denotes the identity (no noise).
struct NoiseKernel {
    KernelKind kind = KernelKind::Uniform;
    Interval xi{0.0};
    Interval var_rho{2.0};     // Var(rho)
    Interval var_rho_xi{0.0};  // Var(rho_xi) = Var(rho) / xi
    Interval sup_rho_xi{0.0};  // ||rho_xi||_inf
    Interval half_width{0.0};  // xi / 2

    static NoiseKernel uniform(const Interval& xi);
    bool is_identity() const { return xi.hi == 0.0; }
};

// pi(x) = min_i |x - 2i|, folding the line onto [0,1].
double fold(double x);
Interval fold(const Interval& x);

struct KernelNorms {
    Interval var_rho_xi;       // Var(rho_xi)
    Interval sup_rho_xi;       // ||rho_xi||_inf
    Interval l1_to_var;        // ||N||_{L1 -> Var}
    Interval w_to_l1;          // ||N||_{W -> L1}
    Interval n_one_minus_pi;   // ||N (1 - pi_delta)||_{L1 -> L1}
    Interval one_minus_pi_n;   // ||(1 - pi_delta) N||_{L1 -> L1}
};

KernelNorms kernel_norms(const NoiseKernel& kernel, const Interval& delta);

// pi_delta N pi_delta on the uniform grid with k cells (k a power of two),
// applied to cell averages. The operator is translation invariant on the
// reflected extension of the vector, so it is a stencil w(d) over offsets.
class NoiseStencil {
public:
    NoiseStencil() = default;
    NoiseStencil(const NoiseKernel& kernel, size_t k);

    size_t k() const { return k_; }
    int reach() const { return reach_; }
    const std::vector<Interval>& weights() const { return w_; }  // index d + reach
    Interval weight(int d) const;

    // Fast path in round-to-nearest; `scratch` needs size k + 2*reach + 1.
    void apply(const double* v, double* out, double* scratch) const;
    // Certified bound on || apply(v) - exact(v) ||_1 relative to ||v||_1
    // (both in the delta-scaled L1 norm).
    double error_factor() const { return err_factor_; }
    // kLanes interleaved vectors; scratch needs
    // (k + 2*reach + 1) * kLanes entries. Same per-lane operations as apply.
    void apply_batch(const double* V, double* out, double* scratch) const;

    // Certified enclosure of the exact result for interval input.
    std::vector<Interval> apply(const std::vector<Interval>& v) const;

private:
    size_t k_ = 0;
    int reach_ = 0;
    int in_lo_ = 1, in_hi_ = 0;  // interior offsets with weight c_ (empty if in_lo_ > in_hi_)
    Interval c_{0.0};
    double c_mid_ = 0;
    std::vector<Interval> w_;
    std::vector<double> w_mid_;
    std::vector<int> edge_;  // offsets handled individually
    double err_factor_ = 0;

    size_t reflect(long e) const;
};

std::vector<Interval> apply_noise_discrete(const NoiseKernel& kernel, size_t k,
                                           const std::vector<Interval>& v);

}  // namespace ncert
