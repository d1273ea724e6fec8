#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ncert/pipeline.hpp"

namespace ncert {

using json = nlohmann::json;

ExperimentConfig config_from_json(const std::string& text) {
    json j = json::parse(text);
    ExperimentConfig c;
    auto get = [&](const char* key, auto& dst) {
        if (j.contains(key)) j.at(key).get_to(dst);
    };
    get("map", c.map);
    if (j.contains("params"))
        for (auto& [k, v] : j["params"].items()) c.params[k] = v.is_string() ? v.get<std::string>() : v.dump();
    if (j.contains("xi"))
        for (auto& v : j["xi"]) c.xi.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    get("log2_delta", c.log2_delta);
    get("log2_delta_contr", c.log2_delta_contr);
    get("log2_delta_est", c.log2_delta_est);
    get("target_alpha", c.target_alpha);
    get("max_transfer_alpha", c.max_transfer_alpha);
    get("contr_steps", c.contr_steps);
    get("stop_below", c.stop_below);
    get("tol", c.tol);
    get("e_min_log2", c.e_min_log2);
    get("e_max_log2", c.e_max_log2);
    get("out_dir", c.out_dir);
    get("cache_dir", c.cache_dir);
    get("workers", c.workers);
    get("stability", c.stability);
    for (auto& [k, v] : j.items()) {
        static const char* known[] = {"map", "params", "xi", "log2_delta", "log2_delta_contr", "log2_delta_est",
                                      "target_alpha", "max_transfer_alpha", "contr_steps", "stop_below", "tol",
                                      "e_min_log2", "e_max_log2", "out_dir", "cache_dir", "workers", "stability"};
        bool ok = false;
        for (const char* n : known) ok |= k == n;
        if (!ok) throw std::invalid_argument("unknown config key '" + k + "'");
    }
    return c;
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["map"] = c.map;
    j["params"] = c.params;
    j["xi"] = c.xi;
    j["log2_delta"] = c.log2_delta;
    j["log2_delta_contr"] = c.log2_delta_contr;
    j["log2_delta_est"] = c.log2_delta_est;
    j["target_alpha"] = c.target_alpha;
    j["max_transfer_alpha"] = c.max_transfer_alpha;
    j["contr_steps"] = c.contr_steps;
    j["stop_below"] = c.stop_below;
    j["tol"] = c.tol;
    j["e_min_log2"] = c.e_min_log2;
    j["e_max_log2"] = c.e_max_log2;
    j["out_dir"] = c.out_dir;
    j["cache_dir"] = c.cache_dir;
    j["workers"] = c.workers;
    j["stability"] = c.stability;
    return j.dump(2);
}

namespace {

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string hex(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

}  // namespace

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    os << "xi,delta_contr,alpha_contr,n_contr,delta,alpha,sum_Ci,a_priori_err,delta_est,refined_err,"
          "lyapunov_lo,lyapunov_hi,verdict,wall_clock_s\n";
    for (const auto& r : rows) {
        os << r.xi << ",2^-" << r.log2_delta_contr << ',' << num(r.alpha_contr) << ',' << r.n_contr << ",2^-"
           << r.log2_delta << ',' << num(r.alpha) << ',' << num(r.sum_C) << ',' << num(r.a_priori_err) << ",2^-"
           << r.log2_delta_est << ',' << num(r.refined_err) << ',' << format_down(r.lyap_lo) << ','
           << format_up(r.lyap_hi) << ',' << r.verdict << ',' << num(r.wall_seconds) << '\n';
    }
    return os.str();
}

std::string rows_to_json(const std::vector<ResultRow>& rows) {
    json a = json::array();
    for (const auto& r : rows) {
        a.push_back({{"xi", r.xi},
                     {"log2_delta_contr", r.log2_delta_contr},
                     {"alpha_contr", num(r.alpha_contr)},
                     {"n_contr", r.n_contr},
                     {"log2_delta", r.log2_delta},
                     {"alpha", num(r.alpha)},
                     {"sum_C", num(r.sum_C)},
                     {"a_priori_err", num(r.a_priori_err)},
                     {"log2_delta_est", r.log2_delta_est},
                     {"refined_err", num(r.refined_err)},
                     {"lyapunov",
                      {{"lo", format_down(r.lyap_lo)},
                       {"hi", format_up(r.lyap_hi)},
                       {"lo_hex", hex(r.lyap_lo)},
                       {"hi_hex", hex(r.lyap_hi)}}},
                     {"verdict", r.verdict},
                     {"wall_clock_s", num(r.wall_seconds)},
                     {"diagnostic", r.diagnostic}});
    }
    return a.dump(2);
}

std::vector<ResultRow> rows_from_json(const std::string& text) {
    std::vector<ResultRow> out;
    auto d = [](const json& v) { return v.is_string() ? std::stod(v.get<std::string>()) : v.get<double>(); };
    for (const auto& j : json::parse(text)) {
        ResultRow r;
        r.xi = j.at("xi").get<std::string>();
        r.log2_delta_contr = j.at("log2_delta_contr");
        r.alpha_contr = d(j.at("alpha_contr"));
        r.n_contr = j.at("n_contr");
        r.log2_delta = j.at("log2_delta");
        r.alpha = d(j.at("alpha"));
        r.sum_C = d(j.at("sum_C"));
        r.a_priori_err = d(j.at("a_priori_err"));
        r.log2_delta_est = j.at("log2_delta_est");
        r.refined_err = d(j.at("refined_err"));
        const json& l = j.at("lyapunov");
        if (l.contains("lo_hex")) {
            r.lyap_lo = std::strtod(l.at("lo_hex").get<std::string>().c_str(), nullptr);
            r.lyap_hi = std::strtod(l.at("hi_hex").get<std::string>().c_str(), nullptr);
        } else {
            r.lyap_lo = Interval::parse(l.at("lo").get<std::string>()).lo;
            r.lyap_hi = Interval::parse(l.at("hi").get<std::string>()).hi;
        }
        r.verdict = j.at("verdict");
        r.wall_seconds = d(j.at("wall_clock_s"));
        r.diagnostic = j.value("diagnostic", "");
        out.push_back(r);
    }
    return out;
}

std::string rows_to_plotdata(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    os << "# xi lambda_lo lambda_hi\n";
    for (const auto& r : rows) {
        if (r.verdict == "failed") continue;
        os << r.xi << ' ' << format_down(r.lyap_lo) << ' ' << format_up(r.lyap_hi) << '\n';
    }
    return os.str();
}

}  // namespace ncert
