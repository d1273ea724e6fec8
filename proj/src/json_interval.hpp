#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

#include <json.hpp>

#include "ncert/interval.hpp"

namespace ncert::detail {

// Outward decimals for reading, hex for an exact round trip.
inline nlohmann::json interval_json(const Interval& x) {
    char lo[64], hi[64];
    std::snprintf(lo, sizeof lo, "%a", x.lo);
    std::snprintf(hi, sizeof hi, "%a", x.hi);
    return {{"lo", format_down(x.lo)}, {"hi", format_up(x.hi)}, {"lo_hex", lo}, {"hi_hex", hi}};
}

inline Interval interval_from(const nlohmann::json& j) {
    if (j.is_string()) return Interval::parse(j.get<std::string>());
    if (j.is_number()) return Interval(j.get<double>());
    if (j.is_array() && j.size() == 2) return Interval::parse(j[0].get<std::string>(), j[1].get<std::string>());
    if (j.contains("lo_hex") && j.contains("hi_hex"))
        return Interval(std::strtod(j["lo_hex"].get<std::string>().c_str(), nullptr),
                        std::strtod(j["hi_hex"].get<std::string>().c_str(), nullptr));
    return Interval::parse(j.at("lo").get<std::string>(), j.at("hi").get<std::string>());
}

}  // namespace ncert::detail
