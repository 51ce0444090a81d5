#pragma once

// Scenario ingestion and persistence: one JSON document holding the plant,
// network, attack, and design blocks plus run options. Loading validates
// dimensional consistency and the standing assumptions and reports violations
// with field paths. Every output file downstream embeds the scenario hash and
// the semantic settings so experiment artifacts are self-describing.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "crosslayer/lyapunov_design.hpp"
#include "crosslayer/plant.hpp"
#include "crosslayer/sim_harness.hpp"
#include "crosslayer/worst_case_sea.hpp"

namespace crosslayer {

using nlohmann::json;

struct Scenario {
    // system
    std::vector<Subsystem> subsystems;
    // network
    NetworkConfig network;
    // attack
    std::vector<int> duration_caps;
    TracePolicy policy = TracePolicy::UniformSplit;
    std::uint64_t seed = 1;
    int attack_offset = 1;
    std::optional<std::vector<Vector>> explicit_trace;
    // design
    Vector alpha;
    double gain_bound = 100.0;
    std::optional<std::vector<SymMatrix>> p_override; // s matrices
    std::optional<std::vector<Matrix>> k_override;    // s gains
    // options
    BoundaryMode boundary = BoundaryMode::PaperTable;
    Vector initial_state;
    int horizon = 150;
    std::optional<Vector> initial_allocation;
    bool gain_box_active = true;

    PplsSystem system() const { return PplsSystem(subsystems); }
    AttackBudget budget() const { return {duration_caps}; }

    AttackTrace trace(const PplsSystem& sys) const {
        if (explicit_trace) {
            AttackTrace tr;
            tr.flows = *explicit_trace;
            tr.policy = "explicit";
            tr.seed = seed;
            tr.validate(network, budget(), sys);
            return tr;
        }
        AttackTrace tr = generate_trace(network, budget(), sys, policy, seed, horizon,
                                        attack_offset);
        tr.validate(network, budget(), sys);
        return tr;
    }

    LyapunovDesign overridden_design() const {
        if (!p_override) throw InvalidInputError("scenario has no design override");
        LyapunovDesign d;
        d.alpha = alpha;
        const int s = static_cast<int>(p_override->size());
        d.p.resize(s + 1);
        for (int i = 0; i < s; ++i) d.p[i + 1] = (*p_override)[i];
        d.p[0] = d.p[s];
        if (k_override)
            d.k_default = *k_override;
        else
            throw InvalidInputError("design.k: required when design.p is given");
        return d;
    }
};

namespace scenario_detail {

inline Matrix parse_matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw InvalidInputError(path + ": expected a row-major array of arrays");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (static_cast<int>(j[r].size()) != cols)
            throw InvalidInputError(path + ": ragged rows");
        for (int c = 0; c < cols; ++c) {
            if (!j[r][c].is_number())
                throw InvalidInputError(path + "[" + std::to_string(r) + "][" +
                                        std::to_string(c) + "]: expected a number");
            m(r, c) = j[r][c].get<double>();
        }
    }
    if (!m.allFinite()) throw InvalidInputError(path + ": non-finite entries");
    return m;
}

inline Vector parse_vector(const json& j, const std::string& path) {
    if (!j.is_array()) throw InvalidInputError(path + ": expected an array");
    Vector v(j.size());
    for (size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw InvalidInputError(path + "[" + std::to_string(i) + "]: expected a number");
        v(i) = j[i].get<double>();
    }
    return v;
}

inline json dump_matrix(const Matrix& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json dump_vector(const Vector& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

template <class T>
inline T require(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) throw InvalidInputError(path + "." + key + ": missing");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw InvalidInputError(path + "." + std::string(key) + ": wrong type");
    }
}

} // namespace scenario_detail

inline Scenario scenario_from_json(const json& j) {
    using namespace scenario_detail;
    Scenario sc;

    if (!j.contains("system") || !j["system"].contains("subsystems"))
        throw InvalidInputError("system.subsystems: missing");
    for (size_t i = 0; i < j["system"]["subsystems"].size(); ++i) {
        const json& js = j["system"]["subsystems"][i];
        const std::string path = "system.subsystems[" + std::to_string(i) + "]";
        Subsystem sub;
        sub.a = parse_matrix(js.at("a"), path + ".a");
        sub.b = parse_matrix(js.at("b"), path + ".b");
        sub.dwell = require<int>(js, path, "dwell");
        sc.subsystems.push_back(std::move(sub));
    }

    const json& jn = j.at("network");
    sc.network.normal_flow = parse_vector(jn.at("normal_flow"), "network.normal_flow");
    sc.network.buffer = parse_vector(jn.at("buffer"), "network.buffer");
    sc.network.attack_cap = parse_vector(jn.at("attack_cap"), "network.attack_cap");
    sc.network.alloc_delay = require<double>(jn, "network", "alloc_delay");
    sc.network.total_bandwidth = require<double>(jn, "network", "total_bandwidth");
    sc.network.attack_budget = require<double>(jn, "network", "attack_budget");

    const json& ja = j.at("attack");
    sc.duration_caps = require<std::vector<int>>(ja, "attack", "duration_caps");
    if (ja.contains("policy")) {
        const std::string p = ja["policy"].get<std::string>();
        if (p == "uniform-split") sc.policy = TracePolicy::UniformSplit;
        else if (p == "force-one-channel") sc.policy = TracePolicy::ForceOneChannel;
        else if (p == "random-admissible") sc.policy = TracePolicy::RandomAdmissible;
        else throw InvalidInputError("attack.policy: unknown policy '" + p + "'");
    }
    if (ja.contains("seed")) sc.seed = ja["seed"].get<std::uint64_t>();
    if (ja.contains("offset")) sc.attack_offset = ja["offset"].get<int>();
    if (ja.contains("trace") && !ja["trace"].is_null()) {
        std::vector<Vector> flows;
        for (size_t k = 0; k < ja["trace"].size(); ++k)
            flows.push_back(parse_vector(ja["trace"][k], "attack.trace[" + std::to_string(k) + "]"));
        sc.explicit_trace = std::move(flows);
    }

    const json& jd = j.at("design");
    sc.alpha = parse_vector(jd.at("alpha"), "design.alpha");
    sc.gain_bound = require<double>(jd, "design", "gain_bound");
    if (jd.contains("p") && !jd["p"].is_null()) {
        std::vector<SymMatrix> ps;
        for (size_t i = 0; i < jd["p"].size(); ++i) {
            const Matrix m = parse_matrix(jd["p"][i], "design.p[" + std::to_string(i) + "]");
            try {
                ps.emplace_back(m, 1e-6);
            } catch (const InvalidInputError& e) {
                throw InvalidInputError("design.p[" + std::to_string(i) + "]: " + e.what());
            }
        }
        sc.p_override = std::move(ps);
    }
    if (jd.contains("k") && !jd["k"].is_null()) {
        std::vector<Matrix> ks;
        for (size_t i = 0; i < jd["k"].size(); ++i)
            ks.push_back(parse_matrix(jd["k"][i], "design.k[" + std::to_string(i) + "]"));
        sc.k_override = std::move(ks);
    }

    if (j.contains("options")) {
        const json& jo = j["options"];
        if (jo.contains("boundary_mode")) {
            const std::string b = jo["boundary_mode"].get<std::string>();
            if (b == "paper-table") sc.boundary = BoundaryMode::PaperTable;
            else if (b == "formula-nonstrict") sc.boundary = BoundaryMode::FormulaNonstrict;
            else throw InvalidInputError("options.boundary_mode: unknown mode '" + b + "'");
        }
        if (jo.contains("initial_state"))
            sc.initial_state = parse_vector(jo["initial_state"], "options.initial_state");
        if (jo.contains("horizon")) sc.horizon = jo["horizon"].get<int>();
        if (jo.contains("initial_allocation") && !jo["initial_allocation"].is_null())
            sc.initial_allocation =
                parse_vector(jo["initial_allocation"], "options.initial_allocation");
        if (jo.contains("gain_box_active"))
            sc.gain_box_active = jo["gain_box_active"].get<bool>();
    }
    return sc;
}

inline void validate_scenario(const Scenario& sc) {
    PplsSystem sys(sc.subsystems); // checks dimensions and dwell-times
    try {
        sc.network.validate();
    } catch (const InvalidInputError& e) {
        throw InvalidInputError(std::string("network: ") + e.what());
    }
    if (sc.network.n() != sys.n())
        throw InvalidInputError("network: channel count must equal the state dimension");
    AttackBudget b{sc.duration_caps};
    try {
        b.validate(sys);
    } catch (const InvalidInputError& e) {
        throw InvalidInputError(std::string("attack.duration_caps: ") + e.what());
    }
    if (sc.alpha.size() != sys.subsystem_count())
        throw InvalidInputError("design.alpha: one rate per subsystem");
    for (int i = 0; i < sc.alpha.size(); ++i)
        if (!(sc.alpha(i) > 0)) throw InvalidInputError("design.alpha: rates must be positive");
    if (!(sc.gain_bound > 0)) throw InvalidInputError("design.gain_bound: must be positive");
    if (sc.p_override) {
        if (static_cast<int>(sc.p_override->size()) != sys.subsystem_count())
            throw InvalidInputError("design.p: one matrix per subsystem");
        for (size_t i = 0; i < sc.p_override->size(); ++i) {
            if ((*sc.p_override)[i].dim() != sys.n())
                throw InvalidInputError("design.p[" + std::to_string(i) + "]: wrong dimension");
            if (eig_extrema((*sc.p_override)[i]).min_eig <= 0)
                throw InvalidInputError("design.p[" + std::to_string(i) +
                                        "]: not positive definite");
        }
        if (!sc.k_override)
            throw InvalidInputError("design.k: required when design.p is given");
        if (sc.k_override->size() != sc.p_override->size())
            throw InvalidInputError("design.k: one gain per subsystem");
        for (size_t i = 0; i < sc.k_override->size(); ++i)
            if ((*sc.k_override)[i].rows() != sys.nu() ||
                (*sc.k_override)[i].cols() != sys.n())
                throw InvalidInputError("design.k[" + std::to_string(i) + "]: wrong shape");
    }
    if (sc.initial_state.size() != 0 && sc.initial_state.size() != sys.n())
        throw InvalidInputError("options.initial_state: wrong dimension");
    if (sc.horizon <= 0) throw InvalidInputError("options.horizon: must be positive");
    if (sc.initial_allocation) {
        if (sc.initial_allocation->size() != sys.n())
            throw InvalidInputError("options.initial_allocation: wrong dimension");
        if (sc.initial_allocation->minCoeff() < 0 ||
            sc.initial_allocation->sum() > sc.network.total_bandwidth + 1e-12)
            throw InvalidInputError("options.initial_allocation: must be a feasible allocation");
    }
    if (sc.explicit_trace) {
        for (size_t k = 0; k < sc.explicit_trace->size(); ++k)
            if (!admissible(sc.network, (*sc.explicit_trace)[k]))
                throw InvalidInputError("attack.trace[" + std::to_string(k) +
                                        "]: violates the admissibility bounds");
    }
}

inline json scenario_to_json(const Scenario& sc) {
    using namespace scenario_detail;
    json j;
    j["system"]["subsystems"] = json::array();
    for (const auto& sub : sc.subsystems)
        j["system"]["subsystems"].push_back(
            {{"a", dump_matrix(sub.a)}, {"b", dump_matrix(sub.b)}, {"dwell", sub.dwell}});
    j["network"] = {{"normal_flow", dump_vector(sc.network.normal_flow)},
                    {"buffer", dump_vector(sc.network.buffer)},
                    {"attack_cap", dump_vector(sc.network.attack_cap)},
                    {"alloc_delay", sc.network.alloc_delay},
                    {"total_bandwidth", sc.network.total_bandwidth},
                    {"attack_budget", sc.network.attack_budget}};
    j["attack"] = {{"duration_caps", sc.duration_caps},
                   {"policy", to_string(sc.policy)},
                   {"seed", sc.seed},
                   {"offset", sc.attack_offset}};
    if (sc.explicit_trace) {
        json tr = json::array();
        for (const auto& f : *sc.explicit_trace) tr.push_back(dump_vector(f));
        j["attack"]["trace"] = std::move(tr);
    }
    j["design"] = {{"alpha", dump_vector(sc.alpha)}, {"gain_bound", sc.gain_bound}};
    if (sc.p_override) {
        json ps = json::array();
        for (const auto& p : *sc.p_override) ps.push_back(dump_matrix(p.m()));
        j["design"]["p"] = std::move(ps);
    }
    if (sc.k_override) {
        json ks = json::array();
        for (const auto& k : *sc.k_override) ks.push_back(dump_matrix(k));
        j["design"]["k"] = std::move(ks);
    }
    j["options"] = {{"boundary_mode", sc.boundary == BoundaryMode::PaperTable
                                          ? "paper-table"
                                          : "formula-nonstrict"},
                    {"horizon", sc.horizon},
                    {"gain_box_active", sc.gain_box_active}};
    if (sc.initial_state.size())
        j["options"]["initial_state"] = dump_vector(sc.initial_state);
    if (sc.initial_allocation)
        j["options"]["initial_allocation"] = dump_vector(*sc.initial_allocation);
    return j;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("scenario file not found: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InvalidInputError("scenario parse error in " + path + ": " + e.what());
    }
    Scenario sc = scenario_from_json(j);
    validate_scenario(sc);
    return sc;
}

inline void save_scenario(const Scenario& sc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidInputError("cannot write scenario: " + path);
    out << scenario_to_json(sc).dump(2) << "\n";
}

// FNV-1a 64-bit over the canonical serialization.
inline std::string scenario_hash(const Scenario& sc) {
    const std::string dump = scenario_to_json(sc).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Settings that change semantics, embedded in every output artifact.
inline std::string settings_line(const Scenario& sc) {
    std::ostringstream os;
    os << "boundary_mode="
       << (sc.boundary == BoundaryMode::PaperTable ? "paper-table" : "formula-nonstrict")
       << " surplus_policy=equal-share-to-enabled"
       << " unattacked_allocation=equal-split"
       << " gain_box_active=" << (sc.gain_box_active ? "true" : "false")
       << " strict_eps="
       << 1e-9 * (sc.network.total_bandwidth + sc.network.attack_budget)
       << " strict_margin=1e-6";
    return os.str();
}

} // namespace crosslayer
