#pragma once

#include "covisac/common.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace covisac {

// ============================================================
// Scenario: every physical parameter of a simulation instance.
// dB-valued quantities are stored as read from file; linear
// accessors convert on demand.
// ============================================================
struct Scenario {
    int num_slots = 0;       // N
    int cco_slots = 0;       // N_c
    int ccs_slots = 0;       // N_s
    double slot_duration = 0.0;  // seconds
    double max_speed = 0.0;      // m/s
    int antennas = 0;            // M
    double altitude_alice = 0.0;  // m
    double altitude_jack = 0.0;   // m
    double antenna_spacing_ratio = 0.5;  // d_m / lambda

    double pathloss_ref_db = 0.0;   // beta at d0 = 1 m
    double noise_bob_dbm = 0.0;     // sigma_b^2
    double noise_willie_dbm = 0.0;  // sigma_w^2
    double power_alice_dbm = 0.0;   // P_a^max
    double power_jack_dbm = 0.0;    // P_j^max
    double residual_sic_rb_db = 0.0;  // varpi_rb
    double residual_sic_jb_db = 0.0;  // varpi_jb
    double residual_sic_rw_db = 0.0;  // varpi_rw

    double covertness_level = 0.0;     // epsilon
    double sensing_threshold_db = 0.0;  // Gamma

    Vec2 alice_initial = Vec2::Zero();
    Vec2 alice_final = Vec2::Zero();
    Vec2 jack_initial = Vec2::Zero();
    Vec2 jack_final = Vec2::Zero();
    Vec2 bob = Vec2::Zero();
    Vec2 willie = Vec2::Zero();
    std::vector<Vec2> targets;

    double sched_weight_comm = 0.5;   // alpha_1
    double sched_weight_sense = 0.5;  // alpha_2

    // Linear-unit accessors
    double pathloss_ref() const { return db_to_linear(pathloss_ref_db); }
    double noise_bob() const { return dbm_to_watts(noise_bob_dbm); }
    double noise_willie() const { return dbm_to_watts(noise_willie_dbm); }
    double power_alice() const { return dbm_to_watts(power_alice_dbm); }
    double power_jack() const { return dbm_to_watts(power_jack_dbm); }
    double sic_rb() const { return db_to_linear(residual_sic_rb_db); }
    double sic_jb() const { return db_to_linear(residual_sic_jb_db); }
    double sic_rw() const { return db_to_linear(residual_sic_rw_db); }
    double sensing_threshold() const { return db_to_linear(sensing_threshold_db); }

    int num_targets() const { return static_cast<int>(targets.size()); }
    /// Slots allocated to each target in the CCS phase.
    int slots_per_target() const { return ccs_slots / num_targets(); }

    void validate() const;
};

/// Per-slot displacement cap V_max = speed * slot duration.
inline double max_displacement(const Scenario& s) {
    return s.max_speed * s.slot_duration;
}

inline void Scenario::validate() const {
    auto fail = [](const std::string& c) { throw invariant_error("scenario invariant violated: " + c); };
    if (!(1 <= cco_slots && cco_slots < num_slots)) fail("1 <= N_c < N");
    if (!(num_targets() >= 1)) fail("Q >= 1");
    if (!(num_targets() <= ccs_slots && ccs_slots < num_slots)) fail("Q <= N_s < N");
    if (cco_slots + ccs_slots != num_slots) fail("N_c + N_s = N");
    if (ccs_slots % num_targets() != 0) fail("N_s divisible by Q");
    if (!(slot_duration > 0.0)) fail("slot_duration > 0");
    if (!(max_speed > 0.0)) fail("max_speed > 0");
    if (!(antennas >= 1)) fail("M >= 1");
    if (!(altitude_alice > 0.0 && altitude_jack > 0.0)) fail("altitudes > 0");
    if (!(antenna_spacing_ratio > 0.0)) fail("antenna_spacing_ratio > 0");
    if (!(pathloss_ref() > 0.0)) fail("beta > 0");
    if (!(noise_bob() > 0.0 && noise_willie() > 0.0)) fail("noise powers > 0");
    if (!(power_alice() > 0.0 && power_jack() > 0.0)) fail("power budgets > 0");
    for (double w : {sic_rb(), sic_jb(), sic_rw()})
        if (!(w >= 0.0 && w <= 1.0)) fail("residual SIC levels in [0,1]");
    if (!(covertness_level > 0.0 && covertness_level < 1.0)) fail("epsilon in (0,1)");
    if (!(sensing_threshold() >= 0.0)) fail("Gamma >= 0");
    if (!(sched_weight_comm > 0.0 && sched_weight_comm < 1.0)) fail("alpha_1 in (0,1)");
    if (!(sched_weight_sense > 0.0 && sched_weight_sense < 1.0)) fail("alpha_2 in (0,1)");
    if (std::abs(sched_weight_comm + sched_weight_sense - 1.0) > 1e-12) fail("alpha_1 + alpha_2 = 1");
}

// ============================================================
// Algorithm knobs (trust regions, penalties, thresholds)
// ============================================================
struct AlgorithmConfig {
    double trust_init_alice = 0.0;  // psi_a^(0) in meters; 0 = V_max
    double trust_init_jack = 0.0;   // psi_j^(0) in meters; 0 = V_max
    double shrink_alice = 0.9;      // c_a
    double shrink_jack = 0.9;       // c_j
    double penalty_cco = 0.0;       // iota_1 in watts; 0 = 10 * P_a^max
    double penalty_ccs = 0.0;       // iota_2 in watts; 0 = 10 * P_a^max
    int penalty_tightenings = 4;
    double conv_outer = 1e-3;     // phi_0, bits/s/Hz
    double conv_beamform = 1e-3;  // phi_1
    double conv_alice = 1e-3;     // phi_2
    double conv_jack = 1e-3;      // phi_3
    int max_outer_iters = 30;
    int max_beamform_iters = 50;
    int max_traj_iters = 40;
    double rank_one_ratio_min = 0.999;
    double stall_radius = 1e-3;  // meters
    int jobs = 0;                // per-slot solve threads; 0 = hardware

    double trust_init(const Scenario& s, bool alice) const {
        double v = alice ? trust_init_alice : trust_init_jack;
        return v > 0.0 ? v : max_displacement(s);
    }
    double penalty_init(const Scenario& s, bool ccs) const {
        double v = ccs ? penalty_ccs : penalty_cco;
        return v > 0.0 ? v : 10.0 * s.power_alice();
    }

    void validate() const {
        auto fail = [](const std::string& c) { throw invariant_error("config invariant violated: " + c); };
        if (!(shrink_alice > 0.0 && shrink_alice < 1.0)) fail("c_a in (0,1)");
        if (!(shrink_jack > 0.0 && shrink_jack < 1.0)) fail("c_j in (0,1)");
        if (!(conv_outer > 0.0 && conv_beamform > 0.0 && conv_alice > 0.0 && conv_jack > 0.0))
            fail("convergence thresholds > 0");
        if (!(max_outer_iters >= 1 && max_beamform_iters >= 1 && max_traj_iters >= 1))
            fail("max iterations >= 1");
        if (!(rank_one_ratio_min > 0.0 && rank_one_ratio_min <= 1.0)) fail("rank ratio in (0,1]");
        if (!(penalty_cco >= 0.0 && penalty_ccs >= 0.0)) fail("penalty factors >= 0");
    }
};

// ============================================================
// Flat key-value parsing (one `key = value` per line, `x,y`
// for planar positions, repeated `target` lines, # comments)
// ============================================================
namespace detail {

struct KvFile {
    std::map<std::string, std::pair<std::string, int>> scalars;  // value, line
    std::vector<std::pair<std::string, int>> targets;

    static std::string trim(const std::string& s) {
        size_t a = s.find_first_not_of(" \t\r\n");
        size_t b = s.find_last_not_of(" \t\r\n");
        return a == std::string::npos ? "" : s.substr(a, b - a + 1);
    }

    static KvFile parse(std::istream& in, const std::string& name) {
        KvFile kv;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw invariant_error(name + ":" + std::to_string(lineno) + ": expected `key = value`, got `" + line + "`");
            std::string key = trim(line.substr(0, eq));
            std::string val = trim(line.substr(eq + 1));
            if (key.empty() || val.empty())
                throw invariant_error(name + ":" + std::to_string(lineno) + ": empty key or value");
            if (key == "target") {
                kv.targets.emplace_back(val, lineno);
            } else {
                if (kv.scalars.count(key))
                    throw invariant_error(name + ":" + std::to_string(lineno) + ": duplicate key `" + key + "`");
                kv.scalars[key] = {val, lineno};
            }
        }
        return kv;
    }

    double number(const std::string& name, const std::string& key) {
        auto it = scalars.find(key);
        if (it == scalars.end()) throw invariant_error(name + ": missing key `" + key + "`");
        return to_number(name, key, it->second.first, it->second.second);
    }

    static double to_number(const std::string& name, const std::string& key,
                            const std::string& val, int line) {
        if (val == "-inf") return -std::numeric_limits<double>::infinity();
        try {
            size_t pos = 0;
            double x = std::stod(val, &pos);
            if (pos != val.size()) throw std::invalid_argument("");
            return x;
        } catch (const std::exception&) {
            throw invariant_error(name + ":" + std::to_string(line) + ": `" + key + "` is not a number: `" + val + "`");
        }
    }

    static Vec2 to_vec2(const std::string& name, const std::string& key,
                        const std::string& val, int line) {
        auto comma = val.find(',');
        if (comma == std::string::npos)
            throw invariant_error(name + ":" + std::to_string(line) + ": `" + key + "` must be `x,y`");
        Vec2 v;
        v.x() = to_number(name, key, trim(val.substr(0, comma)), line);
        v.y() = to_number(name, key, trim(val.substr(comma + 1)), line);
        return v;
    }

    Vec2 vec2(const std::string& name, const std::string& key) {
        auto it = scalars.find(key);
        if (it == scalars.end()) throw invariant_error(name + ": missing key `" + key + "`");
        return to_vec2(name, key, it->second.first, it->second.second);
    }

    bool has(const std::string& key) const { return scalars.count(key) > 0; }
};

}  // namespace detail

inline Scenario parse_scenario(std::istream& in, const std::string& name) {
    auto kv = detail::KvFile::parse(in, name);
    Scenario s;
    s.num_slots = static_cast<int>(kv.number(name, "num_slots"));
    s.cco_slots = static_cast<int>(kv.number(name, "cco_slots"));
    s.ccs_slots = static_cast<int>(kv.number(name, "ccs_slots"));
    s.slot_duration = kv.number(name, "slot_duration");
    s.max_speed = kv.number(name, "max_speed");
    s.antennas = static_cast<int>(kv.number(name, "antennas"));
    s.altitude_alice = kv.number(name, "altitude_alice");
    s.altitude_jack = kv.number(name, "altitude_jack");
    s.antenna_spacing_ratio = kv.number(name, "antenna_spacing_ratio");
    s.pathloss_ref_db = kv.number(name, "pathloss_ref_db");
    s.noise_bob_dbm = kv.number(name, "noise_bob_dbm");
    s.noise_willie_dbm = kv.number(name, "noise_willie_dbm");
    s.power_alice_dbm = kv.number(name, "power_alice_dbm");
    s.power_jack_dbm = kv.number(name, "power_jack_dbm");
    s.residual_sic_rb_db = kv.number(name, "residual_sic_rb_db");
    s.residual_sic_jb_db = kv.number(name, "residual_sic_jb_db");
    s.residual_sic_rw_db = kv.number(name, "residual_sic_rw_db");
    s.covertness_level = kv.number(name, "covertness_level");
    s.sensing_threshold_db = kv.number(name, "sensing_threshold_db");
    s.alice_initial = kv.vec2(name, "alice_initial");
    s.alice_final = kv.vec2(name, "alice_final");
    s.jack_initial = kv.vec2(name, "jack_initial");
    s.jack_final = kv.vec2(name, "jack_final");
    s.bob = kv.vec2(name, "bob");
    s.willie = kv.vec2(name, "willie");
    for (const auto& [val, line] : kv.targets)
        s.targets.push_back(detail::KvFile::to_vec2(name, "target", val, line));
    s.sched_weight_comm = kv.number(name, "sched_weight_comm");
    s.sched_weight_sense = kv.number(name, "sched_weight_sense");
    s.validate();
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invariant_error("cannot open scenario file: " + path);
    return parse_scenario(in, path);
}

inline std::string serialize_scenario(const Scenario& s) {
    std::ostringstream out;
    out.precision(17);
    auto num = [&](const char* k, double v) { out << k << " = " << v << "\n"; };
    auto vec = [&](const char* k, const Vec2& v) { out << k << " = " << v.x() << "," << v.y() << "\n"; };
    num("num_slots", s.num_slots);
    num("cco_slots", s.cco_slots);
    num("ccs_slots", s.ccs_slots);
    num("slot_duration", s.slot_duration);
    num("max_speed", s.max_speed);
    num("antennas", s.antennas);
    num("altitude_alice", s.altitude_alice);
    num("altitude_jack", s.altitude_jack);
    num("antenna_spacing_ratio", s.antenna_spacing_ratio);
    num("pathloss_ref_db", s.pathloss_ref_db);
    num("noise_bob_dbm", s.noise_bob_dbm);
    num("noise_willie_dbm", s.noise_willie_dbm);
    num("power_alice_dbm", s.power_alice_dbm);
    num("power_jack_dbm", s.power_jack_dbm);
    num("residual_sic_rb_db", s.residual_sic_rb_db);
    num("residual_sic_jb_db", s.residual_sic_jb_db);
    num("residual_sic_rw_db", s.residual_sic_rw_db);
    num("covertness_level", s.covertness_level);
    num("sensing_threshold_db", s.sensing_threshold_db);
    vec("alice_initial", s.alice_initial);
    vec("alice_final", s.alice_final);
    vec("jack_initial", s.jack_initial);
    vec("jack_final", s.jack_final);
    vec("bob", s.bob);
    vec("willie", s.willie);
    for (const auto& t : s.targets) vec("target", t);
    num("sched_weight_comm", s.sched_weight_comm);
    num("sched_weight_sense", s.sched_weight_sense);
    return out.str();
}

inline AlgorithmConfig parse_config(std::istream& in, const std::string& name) {
    auto kv = detail::KvFile::parse(in, name);
    AlgorithmConfig c;
    auto opt = [&](const char* key, auto& field) {
        if (kv.has(key)) field = static_cast<std::decay_t<decltype(field)>>(kv.number(name, key));
    };
    opt("trust_init_alice", c.trust_init_alice);
    opt("trust_init_jack", c.trust_init_jack);
    opt("shrink_alice", c.shrink_alice);
    opt("shrink_jack", c.shrink_jack);
    opt("penalty_cco", c.penalty_cco);
    opt("penalty_ccs", c.penalty_ccs);
    opt("penalty_tightenings", c.penalty_tightenings);
    opt("conv_outer", c.conv_outer);
    opt("conv_beamform", c.conv_beamform);
    opt("conv_alice", c.conv_alice);
    opt("conv_jack", c.conv_jack);
    opt("max_outer_iters", c.max_outer_iters);
    opt("max_beamform_iters", c.max_beamform_iters);
    opt("max_traj_iters", c.max_traj_iters);
    opt("rank_one_ratio_min", c.rank_one_ratio_min);
    opt("stall_radius", c.stall_radius);
    opt("jobs", c.jobs);
    c.validate();
    return c;
}

inline AlgorithmConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invariant_error("cannot open config file: " + path);
    return parse_config(in, path);
}

}  // namespace covisac
