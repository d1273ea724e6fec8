// Batch runner: one row per noise amplitude.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ncert/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Certified stationary densities and Lyapunov exponents for noisy interval maps"};
    std::string config_path, map;
    std::vector<std::string> xi, params;
    int log2_delta = 0, log2_delta_contr = 0, log2_delta_est = 0, workers = 0;
    double target_alpha = 0, max_transfer_alpha = 0, tol = 0;
    std::string out_dir, cache_dir;
    bool no_stability = false;

    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--map", map, "bz, doubling, tent, toy or toy:<eps>");
    app.add_option("--param", params, "parameter override name=value (repeatable)");
    app.add_option("--xi", xi, "noise amplitude (repeatable)");
    app.add_option("--log2-delta", log2_delta, "fine grid has 2^n cells");
    app.add_option("--log2-delta-contr", log2_delta_contr, "grid for the contraction test");
    app.add_option("--log2-delta-est", log2_delta_est, "partition for the variation ledgers");
    app.add_option("--target-alpha", target_alpha);
    app.add_option("--max-transfer-alpha", max_transfer_alpha, "escalate the contraction grid above this");
    app.add_option("--tol", tol, "fixed-point residual tolerance");
    app.add_option("--out-dir", out_dir);
    app.add_option("--workers", workers);
    app.add_option("--cache-dir", cache_dir, "operator cache");
    app.add_flag("--no-stability", no_stability, "skip the stability constants");
    CLI11_PARSE(app, argc, argv);

    ncert::ExperimentConfig c;
    try {
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            std::stringstream ss;
            ss << f.rdbuf();
            c = ncert::config_from_json(ss.str());
        }
        if (!map.empty()) c.map = map;
        for (const auto& p : params) {
            auto eq = p.find('=');
            if (eq == std::string::npos) throw std::invalid_argument("--param expects name=value, got " + p);
            c.params[p.substr(0, eq)] = p.substr(eq + 1);
        }
        if (!xi.empty()) c.xi = xi;
        if (log2_delta) c.log2_delta = log2_delta;
        if (log2_delta_contr) c.log2_delta_contr = log2_delta_contr;
        if (log2_delta_est) c.log2_delta_est = log2_delta_est;
        if (target_alpha) c.target_alpha = target_alpha;
        if (max_transfer_alpha) c.max_transfer_alpha = max_transfer_alpha;
        if (tol) c.tol = tol;
        if (!out_dir.empty()) c.out_dir = out_dir;
        if (workers) c.workers = workers;
        if (!cache_dir.empty()) c.cache_dir = cache_dir;
        if (no_stability) c.stability = false;
        c.validate();
    } catch (const std::exception& e) {
        std::cerr << "ncert-cli: " << e.what() << '\n';
        return 2;
    }

    std::vector<ncert::ResultRow> rows;
    try {
        rows = ncert::run_sweep(c, [](const std::string& s) { std::cerr << s << '\n'; });
    } catch (const std::exception& e) {
        std::cerr << "ncert-cli: " << e.what() << '\n';
        return 2;
    }
    std::cout << ncert::rows_to_csv(rows);
    for (const auto& r : rows)
        if (r.verdict == "failed") return 1;
    return 0;
}
