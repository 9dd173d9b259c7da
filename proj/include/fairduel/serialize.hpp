#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairduel/agents.hpp"
#include "fairduel/core.hpp"
#include "fairduel/envgen.hpp"
#include "fairduel/record.hpp"

namespace fairduel {

// All CSV floats carry 17 significant digits so values round-trip exactly.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Instance JSON: {"users": D, "arms": K, "probs": [[[...]]], "winners": [...]}
// probs nests row-major d -> i -> j.

inline nlohmann::json instance_to_json(const Instance& inst) {
    nlohmann::json j;
    j["users"] = inst.tensor.num_users;
    j["arms"] = inst.tensor.num_arms;
    nlohmann::json probs = nlohmann::json::array();
    for (int d = 0; d < inst.tensor.num_users; ++d) {
        nlohmann::json mat = nlohmann::json::array();
        for (int i = 0; i < inst.tensor.num_arms; ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (int k = 0; k < inst.tensor.num_arms; ++k) row.push_back(inst.tensor.at(d, i, k));
            mat.push_back(std::move(row));
        }
        probs.push_back(std::move(mat));
    }
    j["probs"] = std::move(probs);
    j["winners"] = inst.winners.winners;
    return j;
}

inline Instance instance_from_json(const nlohmann::json& j) {
    const int D = j.at("users").get<int>();
    const int K = j.at("arms").get<int>();
    PreferenceTensor t(D, K);
    const auto& probs = j.at("probs");
    if (static_cast<int>(probs.size()) != D)
        throw std::invalid_argument("instance_from_json: probs user dimension mismatch");
    for (int d = 0; d < D; ++d)
        for (int i = 0; i < K; ++i)
            for (int k = 0; k < K; ++k) t.at(d, i, k) = probs.at(d).at(i).at(k).get<double>();

    TensorValidation check = validate_tensor(t);
    if (!check.ok)
        throw std::runtime_error("instance_from_json: tensor violates invariants (" +
                                 std::to_string(check.violations.size()) + " coordinates)");
    Instance inst = make_instance(std::move(t));
    if (j.contains("winners")) {
        const auto stated = j.at("winners").get<std::vector<int>>();
        if (stated != inst.winners.winners)
            throw std::runtime_error("instance_from_json: stated winners disagree with tensor");
    }
    return inst;
}

inline void write_instance_file(const std::string& path, const Instance& inst) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << instance_to_json(inst).dump(1) << "\n";
}

inline Instance read_instance_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    nlohmann::json j;
    in >> j;
    return instance_from_json(j);
}

// ---------------------------------------------------------------------------
// InstanceSpec / AgentConfig JSON (sweep configuration)

inline nlohmann::json instance_spec_to_json(const InstanceSpec& s) {
    nlohmann::json j;
    j["kind"] = instance_kind_name(s.kind);
    j["users"] = s.users;
    j["arms"] = s.arms;
    switch (s.kind) {
        case InstanceKind::random: j["gap"] = s.gap; break;
        case InstanceKind::clustered:
            j["gap"] = s.gap;
            j["rho"] = s.rho;
            break;
        case InstanceKind::hard:
            j["eps"] = s.eps;
            j["eps_prime"] = s.eps_prime;
            j["target_m"] = s.target_m;
            break;
    }
    return j;
}

inline InstanceSpec instance_spec_from_json(const nlohmann::json& j) {
    InstanceSpec s;
    s.kind = parse_instance_kind(j.at("kind").get<std::string>());
    s.users = j.at("users").get<int>();
    s.arms = j.at("arms").get<int>();
    if (j.contains("gap")) s.gap = j.at("gap").get<double>();
    if (j.contains("rho")) s.rho = j.at("rho").get<double>();
    if (j.contains("eps")) s.eps = j.at("eps").get<double>();
    if (j.contains("eps_prime")) s.eps_prime = j.at("eps_prime").get<double>();
    if (j.contains("target_m")) s.target_m = j.at("target_m").get<int>();
    if (j.contains("seed")) s.seed.master_seed = j.at("seed").get<std::uint64_t>();
    return s;
}

inline nlohmann::json agent_config_to_json(const AgentConfig& a) {
    nlohmann::json j;
    j["kind"] = agent_kind_name(a.kind);
    j["delta_hat"] = a.delta_hat;
    j["etc_scale"] = a.etc_scale;
    j["eps_scale"] = a.eps_scale;
    j["recompute_stride"] = a.recompute_stride;
    j["solver"] = {{"max_iterations", a.solver.max_iterations},
                   {"gap_tolerance", a.solver.gap_tolerance},
                   {"utility_floor", a.solver.utility_floor}};
    return j;
}

inline AgentConfig agent_config_from_json(const nlohmann::json& j) {
    AgentConfig a;
    a.kind = parse_agent_kind(j.at("kind").get<std::string>());
    if (j.contains("delta_hat")) a.delta_hat = j.at("delta_hat").get<double>();
    if (j.contains("etc_scale")) a.etc_scale = j.at("etc_scale").get<double>();
    if (j.contains("eps_scale")) a.eps_scale = j.at("eps_scale").get<double>();
    if (j.contains("recompute_stride"))
        a.recompute_stride = j.at("recompute_stride").get<int>();
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        if (s.contains("max_iterations")) a.solver.max_iterations = s.at("max_iterations").get<int>();
        if (s.contains("gap_tolerance")) a.solver.gap_tolerance = s.at("gap_tolerance").get<double>();
        if (s.contains("utility_floor")) a.solver.utility_floor = s.at("utility_floor").get<double>();
    }
    return a;
}

// ---------------------------------------------------------------------------
// Trace CSV: t, phase, arm_i, arm_j, regret_inst, regret_cum

inline void write_trace_csv(const std::string& path, const RunRecord& record) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "t,phase,arm_i,arm_j,regret_inst,regret_cum\n";
    double cum = 0.0;
    std::int64_t t = 0;
    std::string line;
    for (const StepEntry& s : record.steps) {
        cum += s.regret;
        ++t;
        line.clear();
        line += std::to_string(t);
        line += ',';
        line += phase_name(s.phase);
        line += ',';
        line += std::to_string(s.arm_i);
        line += ',';
        line += std::to_string(s.arm_j);
        line += ',';
        line += fmt_double(s.regret);
        line += ',';
        line += fmt_double(cum);
        line += '\n';
        out << line;
    }
}

// Lean view of a persisted trace, enough to replay metrics.
struct TraceData {
    std::vector<StepEntry> steps;
    double regret_cum_final = 0.0;
};

inline TraceData read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    TraceData trace;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        StepEntry e{};
        std::getline(ss, field, ','); // t
        std::getline(ss, field, ',');
        e.phase = parse_phase(field);
        std::getline(ss, field, ',');
        e.arm_i = std::stoi(field);
        std::getline(ss, field, ',');
        e.arm_j = std::stoi(field);
        std::getline(ss, field, ',');
        e.regret = std::strtod(field.c_str(), nullptr);
        std::getline(ss, field, ',');
        trace.regret_cum_final = std::strtod(field.c_str(), nullptr);
        trace.steps.push_back(e);
    }
    return trace;
}

} // namespace fairduel
