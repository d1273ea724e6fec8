#include "ncert/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

namespace ncert {

namespace fs = std::filesystem;

void ExperimentConfig::validate() const {
    if (xi.empty()) throw std::invalid_argument("config: xi list is empty");
    for (const auto& x : xi) {
        Interval v = Interval::parse(x);
        if (!(v.lo > 0) || v.hi > 1) throw std::invalid_argument("config: xi must lie in (0, 1], got " + x);
    }
    if (log2_delta < 1 || log2_delta > 26) throw std::invalid_argument("config: log2_delta out of range");
    if (log2_delta_contr < 1 || log2_delta_contr > log2_delta)
        throw std::invalid_argument("config: delta_contr must be coarser than or equal to delta");
    if (log2_delta_est < 0 || log2_delta_est > log2_delta)
        throw std::invalid_argument("config: delta_est must be coarser than or equal to delta");
    if (!(target_alpha > 0 && target_alpha < 1)) throw std::invalid_argument("config: target_alpha in (0, 1)");
    if (!(tol > 0)) throw std::invalid_argument("config: tol must be positive");
    if (contr_steps < 1) throw std::invalid_argument("config: contr_steps must be positive");
    if (workers < 1) throw std::invalid_argument("config: workers must be positive");
    if (e_min_log2 > e_max_log2) throw std::invalid_argument("config: empty E ladder");
}

MapModel make_configured_map(const ExperimentConfig& c) {
    MapModel m = make_map_by_name(c.map);
    if (c.params.empty()) return m;
    auto get = [&](const std::string& k, Interval def) {
        auto it = c.params.find(k);
        return it == c.params.end() ? def : Interval::parse(it->second);
    };
    for (const auto& kv : c.params) {
        bool known = c.map == "bz" ? (kv.first == "a" || kv.first == "b" || kv.first == "c") : c.map == "toy" && kv.first == "eps";
        if (!known) throw std::invalid_argument("map '" + c.map + "' has no parameter '" + kv.first + "'");
    }
    // Breakpoints and singular points move with the parameters, so rebuild.
    if (c.map == "bz") return make_bz_map(get("a", bz_a()), get("b", bz_b()), get("c", bz_c()));
    return make_toy_map(get("eps", Interval(0.0)));
}

RunArtifacts run_one(const ExperimentConfig& c, const MapModel& m, const std::string& xi, const RestrictedSetBounds* s3) {
    const auto t0 = std::chrono::steady_clock::now();
    RunArtifacts a;
    ResultRow& row = a.row;
    row.xi = xi;
    row.log2_delta = c.log2_delta;
    row.log2_delta_est = c.log2_delta_est;
    row.log2_delta_contr = c.log2_delta_contr;
    try {
        const NoiseKernel kernel = NoiseKernel::uniform(Interval::parse(xi));
        const size_t k = size_t{1} << c.log2_delta;
        const Interval delta(1.0 / static_cast<double>(k));
        UlamOperator op = assemble_cached(m, UlamGrid(k), c.cache_dir);

        IterateOptions opt;
        opt.workers = c.workers;
        opt.stop_below = c.stop_below;
        bool have = false;
        for (int lc = c.log2_delta_contr; lc <= c.log2_delta && !have; ++lc) {
            const size_t kc = size_t{1} << lc;
            const Interval dc(1.0 / static_cast<double>(kc));
            UlamOperator opc = lc == c.log2_delta ? op : assemble_cached(m, UlamGrid(kc), c.cache_dir);
            std::vector<Interval> b = iterate_norm_bound(opc, kernel, c.contr_steps, opt);
            a.coarse_bounds.assign(1, Interval(1.0));
            a.coarse_bounds.insert(a.coarse_bounds.end(), b.begin(), b.end());
            a.coarse_cert = make_certificate(a.coarse_bounds, c.target_alpha, dc, kernel.xi);
            a.coarse_cert.op_hash = opc.map_hash();
            row.log2_delta_contr = lc;
            row.alpha_contr = a.coarse_cert.alpha.hi;
            row.n_contr = a.coarse_cert.n_bar;
            if (lc == c.log2_delta) {
                a.cert = a.coarse_cert;
                a.cert.chain.push_back("direct at delta=2^-" + std::to_string(lc));
                have = true;
                break;
            }
            try {
                a.cert = best_transferred_certificate(a.coarse_bounds, dc, delta, kernel);
                a.cert.op_hash = op.map_hash();
                have = a.cert.alpha.hi <= c.max_transfer_alpha;
                if (!have) row.diagnostic += "transfer from 2^-" + std::to_string(lc) + " gave alpha " +
                                             format_up(a.cert.alpha.hi) + "; escalating. ";
            } catch (const TransferFailedError& e) {
                row.diagnostic += "transfer from 2^-" + std::to_string(lc) + " failed (alpha " + format_up(e.value) +
                                  "); escalating. ";
            }
        }
        row.alpha = a.cert.alpha.hi;
        row.sum_C = a.cert.sum_C.hi;

        a.fixed = fixed_point(op, kernel, a.cert, c.tol);
        a.density = certify_density(m, kernel, op, a.cert, a.fixed, size_t{1} << c.log2_delta_est);
        row.a_priori_err = a.density.budget.a_priori.hi;
        row.refined_err = a.density.l1_error.hi;

        ObservableSpec spec = ObservableSpec::for_map(m);
        spec.min_log2_radius = c.e_min_log2;
        spec.max_log2_radius = c.e_max_log2;
        a.lyapunov = estimate_lyapunov(m, kernel, a.density, spec);
        row.lyap_lo = a.lyapunov.lambda.lo;
        row.lyap_hi = a.lyapunov.lambda.hi;
        row.verdict = verdict_name(a.lyapunov.verdict);

        if (c.stability) {
            // Stability constants concern the continuum operators.
            ContractionCertificate cont = a.cert;
            try {
                cont = best_transferred_certificate(a.coarse_bounds, a.coarse_cert.delta, Interval(0.0), kernel);
            } catch (const TransferFailedError&) {
                cont.chain.push_back("continuum transfer failed; constants use the discrete certificate");
            }
            a.stability = lyapunov_stability_report(m, cont, kernel, s3);
        }
    } catch (const std::exception& e) {
        row.verdict = "failed";
        row.diagnostic += e.what();
    }
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return a;
}

namespace {

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
    if (!f) throw std::runtime_error("write failed for " + p.string());
}

}  // namespace

std::vector<ResultRow> run_sweep(const ExperimentConfig& c, const std::function<void(const std::string&)>& log) {
    c.validate();
    const fs::path out(c.out_dir);
    fs::create_directories(out);
    if (!c.cache_dir.empty()) fs::create_directories(c.cache_dir);
    write_file(out / "config.json", config_to_json(c));
    const MapModel m = make_configured_map(c);

    RestrictedSetBounds s3;
    const RestrictedSetBounds* s3p = nullptr;
    if (c.stability && m.id() == "bz") {
        s3 = verify_restricted_set_bz(m);
        s3p = &s3;
        write_file(out / "restricted_set.json", restricted_set_to_json(s3));
    }

    std::vector<ResultRow> rows;
    for (const std::string& xi : c.xi) {
        if (log) log("xi = " + xi + ": running");
        RunArtifacts a = run_one(c, m, xi, s3p);
        rows.push_back(a.row);
        const std::string tag = "xi_" + xi;
        if (a.row.verdict != "failed") {
            write_file(out / (tag + "_certificate.json"), a.cert.to_json());
            write_file(out / (tag + "_budget.json"), budget_to_json(a.density.budget));
            write_file(out / (tag + "_ledgers.csv"), ledgers_to_csv(a.density));
            write_file(out / (tag + "_lyapunov.json"), lyapunov_to_json(a.lyapunov));
            if (c.stability) write_file(out / (tag + "_stability.json"), stability_to_json(a.stability));
        }
        // Flush the table after every row.
        write_file(out / "results.csv", rows_to_csv(rows));
        write_file(out / "results.json", rows_to_json(rows));
        write_file(out / "plotdata.dat", rows_to_plotdata(rows));
        if (log)
            log("xi = " + xi + ": " + a.row.verdict + " lambda in [" + format_down(a.row.lyap_lo) + ", " +
                format_up(a.row.lyap_hi) + "] (" + std::to_string(a.row.wall_seconds) + " s)" +
                (a.row.diagnostic.empty() ? "" : " " + a.row.diagnostic));
    }
    return rows;
}

}  // namespace ncert
