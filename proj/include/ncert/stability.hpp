#pragma once

#include <string>
#include <vector>

#include "ncert/contraction.hpp"
#include "ncert/interval.hpp"
#include "ncert/map_model.hpp"
#include "ncert/noise.hpp"
#include "ncert/observables.hpp"

namespace ncert {

// Certificate with prescribed sum C_i (C_0 = 1 included), alpha and n_bar,
// for evaluating the stability formulas on reference constants.
ContractionCertificate stub_certificate(double sum_C, double alpha, int n_bar, const Interval& xi);

// ||f_2 - f_1|| <= sum C / (1 - alpha) * ||L_1 - L_2||.
Interval markov_perturbation_bound(const ContractionCertificate& cert, const Interval& op_distance);

// sum C / (1 - alpha) * ||T_1 - T_2||_inf * ||rho_xi||_BV, with ||rho_xi||_BV = 2/xi.
Interval map_perturbation_l1(const ContractionCertificate& cert, const NoiseKernel& kernel,
                             const Interval& sup_distance);

// ||rho_xi - rho_xt||_1 <= (4/xi) |xi - xt| for xi/2 < xt < 2 xi.
Interval uniform_kernel_distance(const Interval& xi, const Interval& xi_tilde);

// sum C / (1 - alpha) * ||rho_xi - rho_xt||_1. Throws DomainError outside
// xi/2 < xt < 2 xi.
Interval noise_perturbation_l1(const ContractionCertificate& cert, const Interval& xi, const Interval& xi_tilde);

// Both noises in [xi, 2^{1/n_bar} xi): the certificate transfers with
// C_i -> (C_i + 1)/2, giving (sum C + n_bar) / (1 - alpha) * (4/xi) |xh - xt|.
Interval noise_perturbation_l1_two_sided(const ContractionCertificate& cert, const Interval& xi,
                                         const Interval& xi_hat, const Interval& xi_tilde);

struct StabilityInputs {
    ContractionCertificate cert;
    NoiseKernel kernel;
    Interval eta{0.0};         // inf |T'| on T^{-1}(S_xi)
    Interval distortion{0.0};  // sup |T''/T'^2| on T^{-1}(S_xi)
    int M = 0;                 // shared monotonicity intervals
    Interval K{0.0};           // ||T_1 - T_2||_{C^1_pw}
    Interval L1_on_Sxi{0.0};   // ||L_T 1||_{L^inf(S_xi)}
};

// ||rho_xi||_inf [ l1_dist + K (2 + M D + M/eta + 2 Var(rho_xi)) / (eta - K) ].
Interval restricted_linf_map(const StabilityInputs& in, const Interval& l1_dist);

// ||rho_xi||_inf [ l1_dist + 2 ||L_T 1||_{L^inf(S_xi)} kernel_distance ].
Interval restricted_linf_noise(const StabilityInputs& in, const Interval& l1_dist, const Interval& kernel_distance,
                               const Interval& L1_on_Sxi);

struct BzParams {
    Interval a = bz_a(), b = bz_b(), c = bz_c();
};

struct BzMapDistance {
    Interval sup{0.0};     // ||T - T'||_inf
    Interval c1pw{0.0};    // ||T - T'||_{C^1_pw}
    Interval obs_l1{0.0};  // ||log|T'| - log|T''| ||_1
};

BzMapDistance bz_map_distance(const BzParams& p, const BzParams& q);

// Computer-checked bounds on the restricted set A and its Xi-neighborhood.
struct RestrictedSetBounds {
    std::vector<Interval> A;
    double Xi = 0;
    Interval support{0.0, 1.0};  // fold(T([0,1]) +- Xi/2)
    double H_linf_Ac = 0;    // ||log|T'|||_{L^inf(A^c ∩ support)}
    double H_l1_A = 0;       // ||log|T'|||_{L1(A)}
    double inv_tprime = 0;   // ||1/T'||_{L^inf(T^{-1}(A_Xi))}
    double distortion = 0;   // ||T''/T'^2||_{L^inf(T^{-1}(A_Xi))}
    double L1_linf = 0;      // ||L 1||_{L^inf(A_Xi)}
    int M = 0;               // monotone branches
};

// A: finite union of intervals, each containing one singular point of spec.
RestrictedSetBounds verify_restricted_set(const MapModel& m, const ObservableSpec& spec, const std::vector<Interval>& A,
                               double Xi);
// A = [0.1249, 0.1251] ∪ [0.2999, 0.3001], Xi = 0.01.
RestrictedSetBounds verify_restricted_set_bz(const MapModel& m);

struct StabilityReport {
    bool withheld = false;
    std::string diagnostic;
    Interval amplification{0.0};
    Interval map_l1{0.0};             // per unit ||T_1 - T_2||_inf
    Interval noise_l1{0.0};           // per unit |xi - xt|
    Interval noise_l1_two_sided{0.0};
    int window_log2_denominator = 0;  // two-sided window [xi, 2^{1/n} xi)
    Interval linf_map_K{0.0};         // restricted L^inf, per unit K (K <= K_max)
    Interval linf_noise{0.0};         // restricted L^inf, per unit |xi - xt|
    Interval linf_noise_two_sided{0.0};
    Interval lambda_noise{0.0};       // |lambda_xi - lambda_xt| per unit |xi - xt|
    Interval lambda_noise_two_sided{0.0};
    // BZ parameters: |dl| <= Ca_log (-|da| log|da|) + Ca |da| + Cb |db| + Cc |dc|.
    bool has_bz_moduli = false;
    Interval Ca_log{0.0}, Ca{0.0}, Cb{0.0}, Cc{0.0};
    // Maps without a log singularity: |dl| <= lambda_map * ||T_1 - T_2||_inf + ||dh||_1 / xi.
    Interval lambda_map{0.0};
    std::vector<std::string> chain;
};

// K_max bounds the admissible C^1_pw perturbation size.
StabilityReport lyapunov_stability_report(const MapModel& m, const ContractionCertificate& cert,
                                          const NoiseKernel& kernel, const RestrictedSetBounds* s3, double K_max = 0.8);

std::string stability_to_json(const StabilityReport& r);
std::string restricted_set_to_json(const RestrictedSetBounds& s);

}  // namespace ncert
