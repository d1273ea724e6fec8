#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ncert/certification.hpp"
#include "ncert/contraction.hpp"
#include "ncert/observables.hpp"
#include "ncert/stability.hpp"

namespace ncert {

struct ExperimentConfig {
    std::string map = "bz";
    std::map<std::string, std::string> params;  // parameter overrides (decimal strings)
    std::vector<std::string> xi;                // decimal strings, parsed as enclosures
    int log2_delta = 16;
    int log2_delta_contr = 11;
    int log2_delta_est = 10;
    double target_alpha = 0.5;
    // Escalate the contraction grid while the transferred alpha exceeds this
    // (the transfer failing always escalates).
    double max_transfer_alpha = 1.0;
    int contr_steps = 200;
    double stop_below = 1e-3;
    double tol = 1e-13;
    int e_min_log2 = 6;
    int e_max_log2 = 16;
    std::string out_dir = "out";
    std::string cache_dir;
    int workers = 1;
    bool stability = true;

    void validate() const;  // throws std::invalid_argument
};

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& c);

struct ResultRow {
    std::string xi;
    int log2_delta_contr = 0;
    double alpha_contr = 1;
    int n_contr = 0;
    int log2_delta = 0;
    double alpha = 1;
    double sum_C = 0;
    double a_priori_err = 0;
    int log2_delta_est = 0;
    double refined_err = 0;
    double lyap_lo = 0, lyap_hi = 0;
    std::string verdict = "failed";
    double wall_seconds = 0;
    std::string diagnostic;
};

std::string rows_to_csv(const std::vector<ResultRow>& rows);
std::string rows_to_json(const std::vector<ResultRow>& rows);
std::vector<ResultRow> rows_from_json(const std::string& text);
std::string rows_to_plotdata(const std::vector<ResultRow>& rows);

MapModel make_configured_map(const ExperimentConfig& c);

// Everything computed for one noise amplitude.
struct RunArtifacts {
    ResultRow row;
    ContractionCertificate coarse_cert, cert;
    std::vector<Interval> coarse_bounds;
    FixedPointResult fixed;
    DensityEnclosure density;
    LyapunovEnclosure lyapunov;
    StabilityReport stability;
};

// Full pipeline for one xi; failures are reported in the row, not thrown.
RunArtifacts run_one(const ExperimentConfig& c, const MapModel& m, const std::string& xi,
                     const RestrictedSetBounds* s3 = nullptr);

// Runs every xi, writing rows and per-xi reports into out_dir as it goes.
std::vector<ResultRow> run_sweep(const ExperimentConfig& c,
                                 const std::function<void(const std::string&)>& log = {});

}  // namespace ncert
