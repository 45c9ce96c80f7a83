#pragma once

// JSON I/O for step functions and systems.
//
// Function file:  {"breakpoints": [0, ..., 1], "values": [v, ...]} where each
// v is a real number or a two-element [re, im] array.
// System file:    {"label": str, "normalization": "L1"|"L2"|"none",
//                  "functions": [function objects]} or a bare array of
// function objects.  Functions are placed on a common refinement on load.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "norms.hpp"
#include "step_function.hpp"
#include "systems.hpp"

namespace iunorm::io {

using json = nlohmann::json;

inline json step_to_json(const StepFunction& f) {
    json j;
    j["breakpoints"] = f.breakpoints;
    json vals = json::array();
    for (const cplx& v : f.values) {
        if (v.imag() == 0.0)
            vals.push_back(v.real());
        else
            vals.push_back(json::array({v.real(), v.imag()}));
    }
    j["values"] = vals;
    return j;
}

inline StepFunction step_from_json(const json& j) {
    if (!j.contains("breakpoints") || !j.contains("values"))
        throw std::invalid_argument("function object needs breakpoints and values");
    std::vector<double> bp = j.at("breakpoints").get<std::vector<double>>();
    std::vector<cplx> vals;
    for (const auto& v : j.at("values")) {
        if (v.is_array()) {
            if (v.size() != 2) throw std::invalid_argument("complex value must be [re, im]");
            vals.emplace_back(v[0].get<double>(), v[1].get<double>());
        } else {
            vals.emplace_back(v.get<double>(), 0.0);
        }
    }
    return make_step(std::move(bp), std::move(vals));
}

inline StepFunction load_step(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open " + path);
    json j;
    is >> j;
    return step_from_json(j);
}

inline void save_step(const std::string& path, const StepFunction& f) {
    std::ofstream os(path);
    if (!os) throw std::invalid_argument("cannot open " + path + " for writing");
    os << step_to_json(f).dump(2) << "\n";
}

inline json system_to_json(const FunctionSystem& sys) {
    json j;
    j["label"] = sys.label;
    j["normalization"] = to_string(sys.normalization);
    json fns = json::array();
    for (const auto& f : sys.functions) fns.push_back(step_to_json(f));
    j["functions"] = fns;
    return j;
}

inline FunctionSystem system_from_json(const json& j, const std::string& fallback_label) {
    FunctionSystem sys;
    const json* fns = nullptr;
    if (j.is_array()) {
        fns = &j;
        sys.label = fallback_label;
        sys.normalization = Normalization::none;
    } else {
        if (!j.contains("functions"))
            throw std::invalid_argument("system object needs a functions array");
        fns = &j.at("functions");
        sys.label = j.value("label", fallback_label);
        sys.normalization = normalization_from_string(j.value("normalization", std::string("none")));
    }
    if (!fns->is_array() || fns->empty())
        throw std::invalid_argument("system needs a nonempty function array");
    std::vector<StepFunction> functions;
    for (const auto& fj : *fns) functions.push_back(step_from_json(fj));
    sys.functions = common_refinement(std::move(functions));
    // declared normalizations are verified, not trusted
    for (const auto& f : sys.functions) {
        if (sys.normalization == Normalization::l1 && std::abs(lp_norm(f, 1.0) - 1.0) > 1e-9)
            throw std::invalid_argument("declared L1 normalization violated");
        if (sys.normalization == Normalization::l2 && std::abs(lp_norm(f, 2.0) - 1.0) > 1e-9)
            throw std::invalid_argument("declared L2 normalization violated");
    }
    return sys;
}

inline FunctionSystem load_system(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open " + path);
    json j;
    is >> j;
    return system_from_json(j, path);
}

inline void save_system(const std::string& path, const FunctionSystem& sys) {
    std::ofstream os(path);
    if (!os) throw std::invalid_argument("cannot open " + path + " for writing");
    os << system_to_json(sys).dump(2) << "\n";
}

} // namespace iunorm::io
