#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "ncert/contraction.hpp"
#include "ncert/interval.hpp"
#include "ncert/map_model.hpp"
#include "ncert/noise.hpp"
#include "ncert/ulam.hpp"

namespace ncert {

struct NonConvergenceError : std::runtime_error {
    double residual;
    NonConvergenceError(const std::string& what, double r) : std::runtime_error(what), residual(r) {}
};

struct FixedPointResult {
    std::vector<double> f;      // cell averages, nonnegative, mass ~ 1
    Interval mass{1.0};         // delta * sum f
    Interval residual{0.0};     // ||L_{delta,xi} f - f||_1
    Interval numerical_error{0.0};  // bound on ||f_{xi,delta} - f||_1
    int iterations = 0;
};

// Power iteration from `start` (uniform when empty) until the float residual
// is below tol; the residual and numerical error are then certified in
// interval arithmetic.
FixedPointResult fixed_point(const UlamOperator& op, const NoiseKernel& kernel, const ContractionCertificate& cert,
                             double tol, int max_iter = 200000, const std::vector<double>& start = {});

// (1 + 2 sum C) / (2 (1 - alpha)) * delta * Var(rho_xi).
Interval a_priori_error(const ContractionCertificate& cert, const Interval& delta, const NoiseKernel& kernel);

// Per-interval bounds on the coarse partition Pi (k_est cells). All entries
// are certified upper bounds; +inf marks an unusable alternative.
struct Ledgers {
    size_t k = 0;      // fine grid
    size_t k_est = 0;  // coarse partition
    std::vector<std::vector<double>> var_Lif;  // [branch][I] Var_I(L_i f)
    std::vector<std::vector<double>> l1_Lif;   // [branch][I] ||L_i f||_{L1(I)}
    std::vector<double> var_NLf;               // Var_I(N L f)
    std::vector<double> l1_NLf;                // ||N L f||_{L1(I)}
    std::vector<double> tprime;                // ||T'||_{L^inf(I)} (inf when unbounded)
    double var_NLf_total = 0;                  // Var(N L f)
    double l1_Lf = 0;                          // ||L f||_1
};

Ledgers variation_ledgers(const MapModel& m, const NoiseKernel& kernel, const UlamOperator& op,
                          const std::vector<double>& f, size_t k_est);

struct ErrorBudget {
    Interval A1, B1, A2, B2, A3, B3, A, B, C, D;
    Interval numerical_error, a_priori, final_l1;
    bool downgraded = false;  // D >= 1: a-priori bound used
};

ErrorBudget bootstrap_error(const NoiseKernel& kernel, const ContractionCertificate& cert, const Ledgers& led,
                            const Interval& numerical_error);

// ||f_xi||_{L^inf(I)} for every I in Pi.
std::vector<double> local_linf_bounds(const Ledgers& led, double l1_error, const NoiseKernel& kernel);

struct DensityEnclosure {
    size_t k = 0;
    std::vector<double> f;
    Interval mass{1.0};
    Interval l1_error{0.0};
    Ledgers ledgers;
    std::vector<double> linf;  // per Pi cell
    ErrorBudget budget;

    double delta() const { return 1.0 / static_cast<double>(k); }
    double linf_on(double a, double b) const;  // max over Pi cells meeting [a,b]
};

DensityEnclosure certify_density(const MapModel& m, const NoiseKernel& kernel, const UlamOperator& op,
                                 const ContractionCertificate& cert, const FixedPointResult& fp, size_t k_est);

std::string budget_to_json(const ErrorBudget& b);
std::string ledgers_to_csv(const DensityEnclosure& d);

}  // namespace ncert
