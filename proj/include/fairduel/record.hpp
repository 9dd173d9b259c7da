#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairduel/core.hpp"

namespace fairduel {

enum class Phase : std::uint8_t { identify, explore, exploit };

inline const char* phase_name(Phase p) {
    switch (p) {
        case Phase::identify: return "identify";
        case Phase::explore: return "explore";
        case Phase::exploit: return "exploit";
    }
    return "?";
}

inline Phase parse_phase(const std::string& s) {
    if (s == "identify") return Phase::identify;
    if (s == "explore") return Phase::explore;
    if (s == "exploit") return Phase::exploit;
    throw std::invalid_argument("unknown phase: " + s);
}

struct StepEntry {
    Phase phase;
    std::int32_t arm_i;
    std::int32_t arm_j;
    double regret; // instantaneous NSW regret of this step
};

struct Checkpoint {
    std::int64_t t;
    double regret_cum;
    std::vector<double> utilities; // cumulative per-user utilities at t
};

// Full trace of one agent run: one entry per time step (exactly horizon
// entries unless the run aborted), checkpointed cumulative utilities, the
// final policy, and phase accounting.
struct RunRecord {
    std::int64_t horizon = 0;
    std::vector<StepEntry> steps;
    std::vector<Checkpoint> checkpoints;
    std::vector<double> final_utilities;
    double regret_cum_final = 0.0;
    Policy final_policy;

    std::int64_t identify_steps = 0;
    std::int64_t explore_steps = 0;
    std::int64_t exploit_steps = 0;
    std::vector<std::int64_t> identify_steps_per_user;

    // Set when the horizon ran out before the corresponding phase completed.
    bool truncated_identify = false;
    bool truncated_explore = false;

    double optimal_value = 0.0; // NSW optimum on true scores used for regret
    double optimal_gap = 0.0;   // duality gap certified for optimal_value
    bool solver_degenerate = false;
    double wall_seconds = 0.0;
};

} // namespace fairduel
