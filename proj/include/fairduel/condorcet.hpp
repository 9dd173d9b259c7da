#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairduel/core.hpp"

namespace fairduel {

// Round-r schedule of the DKW comparison: confidence width h_r = 2^-(r+1),
// adjusted confidence delta_r = 6*delta'/(pi^2 r^2), and sample count
// N_r = ceil(8 * ln(4/delta_r) / h_r^2). Natural logarithm throughout.
struct RoundParams {
    double width = 0.0;
    double confidence = 0.0;
    std::int64_t samples = 0;
};

inline RoundParams round_params(int round, double delta_prime) {
    if (round < 1) throw std::invalid_argument("round_params: round must be >= 1");
    if (!(delta_prime > 0.0) || delta_prime >= 1.0)
        throw std::invalid_argument("round_params: delta' must lie in (0, 1)");
    RoundParams p;
    p.width = std::ldexp(1.0, -(round + 1));
    p.confidence = 6.0 * delta_prime /
                   (std::numbers::pi * std::numbers::pi * static_cast<double>(round) * round);
    p.samples = static_cast<std::int64_t>(
        std::ceil(8.0 * std::log(4.0 / p.confidence) / (p.width * p.width)));
    return p;
}

// Source of duel feedback: called with an ordered pair of arms, returns one
// outcome vector over all users.
using DuelSource = std::function<FeedbackVector(int, int)>;

// Shared state of the multi-user tournament: per-user candidate sets, the
// global per-pair round trackers, and the accumulated duel statistics.
// Every duel of a pair is recorded for every user, so all users share the
// same sample count per pair; candidate sets only shrink.
class TournamentState {
public:
    TournamentState(int num_arms, int num_users)
        : K_(num_arms), D_(num_users),
          candidates_(num_users), round_(static_cast<std::size_t>(num_arms) * num_arms, 1),
          wins_(static_cast<std::size_t>(num_users) * num_arms * num_arms, 0),
          totals_(static_cast<std::size_t>(num_arms) * num_arms, 0),
          resolved_at_(num_users, -1) {
        for (auto& s : candidates_) {
            s.resize(num_arms);
            for (int a = 0; a < num_arms; ++a) s[a] = a;
        }
        if (num_arms == 1)
            for (int d = 0; d < D_; ++d) resolved_at_[d] = 0;
    }

    int num_arms() const { return K_; }
    int num_users() const { return D_; }

    const std::vector<int>& candidates(int d) const { return candidates_[d]; }

    bool holds(int d, int a) const {
        const auto& s = candidates_[d];
        return std::binary_search(s.begin(), s.end(), a);
    }

    bool holds_pair(int d, int i, int j) const { return holds(d, i) && holds(d, j); }

    void remove_arm(int d, int a) {
        auto& s = candidates_[d];
        auto it = std::lower_bound(s.begin(), s.end(), a);
        if (it != s.end() && *it == a) s.erase(it);
        if (s.size() == 1 && resolved_at_[d] < 0) resolved_at_[d] = steps_used_;
    }

    int round(int i, int j) const { return round_[pair_index(i, j)]; }
    void set_round(int i, int j, int r) {
        round_[pair_index(i, j)] = r;
        round_[pair_index(j, i)] = r;
    }

    void record_duel(int i, int j, const FeedbackVector& y) {
        for (int d = 0; d < D_; ++d) {
            wins_[win_index(d, i, j)] += y.outcomes[d];
            wins_[win_index(d, j, i)] += 1 - y.outcomes[d];
        }
        ++totals_[pair_index(i, j)];
        ++totals_[pair_index(j, i)];
        ++steps_used_;
    }

    std::int64_t wins(int d, int i, int j) const { return wins_[win_index(d, i, j)]; }
    std::int64_t total(int i, int j) const { return totals_[pair_index(i, j)]; }

    double empirical_prob(int d, int i, int j) const {
        return static_cast<double>(wins(d, i, j)) / static_cast<double>(total(i, j));
    }

    std::int64_t steps_used() const { return steps_used_; }

    // steps_used at the moment user d's candidate set became a singleton.
    const std::vector<std::int64_t>& resolved_at() const { return resolved_at_; }

private:
    std::size_t pair_index(int i, int j) const {
        return static_cast<std::size_t>(i) * K_ + j;
    }
    std::size_t win_index(int d, int i, int j) const {
        return (static_cast<std::size_t>(d) * K_ + i) * K_ + j;
    }

    int K_;
    int D_;
    std::vector<std::vector<int>> candidates_; // sorted
    std::vector<int> round_;
    std::vector<std::int64_t> wins_;
    std::vector<std::int64_t> totals_;
    std::int64_t steps_used_ = 0;
    std::vector<std::int64_t> resolved_at_;
};

struct TournamentBudgetError : std::runtime_error {
    explicit TournamentBudgetError(const std::string& what) : std::runtime_error(what) {}
};

// Duel budget guard for pathological instances. With a known minimum gap the
// DKWT sample complexity is far below 50 K^2 D / gap^2.
inline std::int64_t default_step_budget(int K, int D, std::optional<double> gap = {}) {
    if (gap && *gap > 0.0) {
        const double b = 50.0 * K * static_cast<double>(K) * D / (*gap * *gap);
        return static_cast<std::int64_t>(std::ceil(b));
    }
    return 100'000'000;
}

// DKW-Compare: resolves arms (i, j) for calling user d at confidence delta'.
// Rounds resume from the pair's global tracker. Each round plays N_r duels,
// records them for all users, and eliminates the loser for every user still
// holding both arms whose cumulative empirical probability clears the
// round-r width. Loops until the calling user no longer holds both arms.
inline void dkw_compare(int i, int j, int d, double delta_prime, TournamentState& state,
                        const DuelSource& sampler, std::int64_t step_budget = 100'000'000) {
    if (i == j) throw std::invalid_argument("dkw_compare: arms must be distinct");
    if (!state.holds_pair(d, i, j))
        throw std::invalid_argument("dkw_compare: calling user no longer holds both arms");

    int r = state.round(i, j);
    while (state.holds_pair(d, i, j)) {
        const RoundParams rp = round_params(r, delta_prime);
        for (std::int64_t n = 0; n < rp.samples; ++n) {
            if (state.steps_used() >= step_budget) {
                std::ostringstream oss;
                oss << "dkw_compare: step budget " << step_budget << " exhausted at pair (" << i
                    << "," << j << ") round " << r << ", user " << d
                    << ", |S_d| = " << state.candidates(d).size();
                throw TournamentBudgetError(oss.str());
            }
            state.record_duel(i, j, sampler(i, j));
        }
        for (int d2 = 0; d2 < state.num_users(); ++d2) {
            if (!state.holds_pair(d2, i, j)) continue;
            const double p_hat = state.empirical_prob(d2, i, j);
            if (std::abs(p_hat - 0.5) > 0.5 * rp.width)
                state.remove_arm(d2, p_hat > 0.5 ? j : i);
        }
        ++r;
        state.set_round(i, j, r);
    }
}

struct TournamentResult {
    WinnerSet winners;
    std::int64_t steps_used = 0;
    std::vector<std::int64_t> per_user_steps; // steps_used when each user resolved
};

// Modified DKWT for multiple users. Candidate sets start at [K]; while some
// user holds more than one candidate, that user (taken in index order)
// compares its two lowest-indexed candidates at per-pair confidence delta/K.
// Shared recording lets one comparison shrink many users' sets at once.
inline TournamentResult dkwt(int K, int D, double delta, const DuelSource& sampler,
                             std::int64_t step_budget = 100'000'000) {
    if (K < 1 || D < 1) throw std::invalid_argument("dkwt: need K >= 1, D >= 1");
    if (!(delta > 0.0) || delta > 1.0) throw std::invalid_argument("dkwt: delta must lie in (0, 1]");

    TournamentState state(K, D);
    const double delta_prime = delta / K;
    for (int d = 0; d < D; ++d) {
        while (state.candidates(d).size() > 1) {
            const int i = state.candidates(d)[0];
            const int j = state.candidates(d)[1];
            dkw_compare(i, j, d, delta_prime, state, sampler, step_budget);
        }
    }

    std::vector<int> winners(D);
    for (int d = 0; d < D; ++d) winners[d] = state.candidates(d)[0];
    TournamentResult result;
    result.winners = make_winner_set(std::move(winners));
    result.steps_used = state.steps_used();
    result.per_user_steps = state.resolved_at();
    return result;
}

} // namespace fairduel
