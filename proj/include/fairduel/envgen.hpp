#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairduel/core.hpp"
#include "fairduel/rng.hpp"

namespace fairduel {

enum class InstanceKind { random, clustered, hard };

inline const char* instance_kind_name(InstanceKind k) {
    switch (k) {
        case InstanceKind::random: return "random";
        case InstanceKind::clustered: return "clustered";
        case InstanceKind::hard: return "hard";
    }
    return "?";
}

inline InstanceKind parse_instance_kind(const std::string& s) {
    if (s == "random") return InstanceKind::random;
    if (s == "clustered") return InstanceKind::clustered;
    if (s == "hard") return InstanceKind::hard;
    throw std::invalid_argument("unknown instance kind: " + s);
}

struct InstanceSpec {
    InstanceKind kind = InstanceKind::random;
    int users = 1;
    int arms = 2;
    double gap = 0.1;        // minimum preference gap (random, clustered)
    double rho = 1.0;        // majority fraction (clustered)
    double eps = 0.1;        // good-winner perturbation (hard)
    double eps_prime = 0.01; // dominance margin (hard)
    int target_m = 0;        // distinguished good winner, arm index (hard)
    RngSeed seed;
};

// Ground-truth environment bundle. winners and scores are always consistent
// with the tensor. spec is absent for instances loaded from external files.
struct Instance {
    PreferenceTensor tensor;
    WinnerSet winners;
    ScoreMatrix scores;
    std::optional<InstanceSpec> spec;
};

inline Instance make_instance(PreferenceTensor tensor, std::optional<InstanceSpec> spec = {}) {
    WinnerSearch search = find_true_winners(tensor);
    if (!search.all_found()) {
        std::string users;
        for (int d : search.users_without) users += " " + std::to_string(d);
        throw std::runtime_error("make_instance: no Condorcet winner for user(s)" + users);
    }
    Instance inst;
    inst.winners = search.winner_set();
    inst.scores = derive_scores(tensor, inst.winners);
    inst.tensor = std::move(tensor);
    inst.spec = std::move(spec);
    return inst;
}

namespace detail {

// Fills user d's off-diagonal entries: the winner row is drawn from
// [0.5+gap, 1], every other pair from the two-interval support
// [0, 0.5-gap] u [0.5+gap, 1] with a fair coin choosing the interval.
// The winner row forces every other arm to lose to w, so w is the unique
// Condorcet winner by construction.
inline void fill_user_rows(PreferenceTensor& t, int d, int w, double gap, Rng& rng) {
    const int K = t.num_arms;
    for (int j = 0; j < K; ++j) {
        if (j == w) continue;
        const double p = rng.uniform(0.5 + gap, 1.0);
        t.at(d, w, j) = p;
        t.at(d, j, w) = 1.0 - p;
    }
    for (int i = 0; i < K; ++i) {
        for (int j = i + 1; j < K; ++j) {
            if (i == w || j == w) continue;
            const double p = rng.bernoulli(0.5) ? rng.uniform(0.0, 0.5 - gap)
                                                : rng.uniform(0.5 + gap, 1.0);
            t.at(d, i, j) = p;
            t.at(d, j, i) = 1.0 - p;
        }
    }
}

inline void check_gap(double gap) {
    if (!(gap > 0.0) || gap >= 0.5)
        throw std::invalid_argument("gap must lie in (0, 0.5)");
}

// Generates rows for all users with the given intended winners, verifying
// that the intended winner is recovered and resampling a user on mismatch.
inline Instance build_from_winners(const InstanceSpec& spec, const std::vector<int>& winners,
                                   Rng& rng) {
    PreferenceTensor t(spec.users, spec.arms);
    for (int d = 0; d < spec.users; ++d)
        fill_user_rows(t, d, winners[d], spec.gap, rng);

    constexpr int kMaxRetries = 100;
    for (int attempt = 0;; ++attempt) {
        WinnerSearch found = find_true_winners(t);
        bool ok = found.all_found();
        if (ok) {
            for (int d = 0; d < spec.users; ++d)
                if (found.winners[d] != winners[d]) { ok = false; break; }
        }
        if (ok) break;
        if (attempt >= kMaxRetries)
            throw std::runtime_error("envgen: could not realize intended winners");
        for (int d = 0; d < spec.users; ++d)
            if (found.winners[d] != winners[d]) fill_user_rows(t, d, winners[d], spec.gap, rng);
    }

    Instance inst;
    inst.winners = make_winner_set(winners);
    inst.scores = derive_scores(t, inst.winners);
    inst.tensor = std::move(t);
    inst.spec = spec;
    return inst;
}

} // namespace detail

// Random environment: each user's winner is uniform over arms, winner-row
// probabilities uniform in [0.5+gap, 1], everything else on the two-interval
// support that keeps every pair at least `gap` away from 0.5.
inline Instance gen_random(const InstanceSpec& spec) {
    if (spec.kind != InstanceKind::random)
        throw std::invalid_argument("gen_random: spec.kind mismatch");
    detail::check_gap(spec.gap);
    Rng rng(spec.seed);
    std::vector<int> winners(spec.users);
    for (int d = 0; d < spec.users; ++d) winners[d] = rng.uniform_int(spec.arms);
    return detail::build_from_winners(spec, winners, rng);
}

// Clustered environment: the first ceil(rho * D) users share one winner w,
// the rest get winners != w. Minority users automatically satisfy
// s_d(w) <= 1 - 2*gap because w loses to their own winner by at least gap.
inline Instance gen_clustered(const InstanceSpec& spec) {
    if (spec.kind != InstanceKind::clustered)
        throw std::invalid_argument("gen_clustered: spec.kind mismatch");
    detail::check_gap(spec.gap);
    if (!(spec.rho > 0.0) || spec.rho > 1.0)
        throw std::invalid_argument("gen_clustered: rho must lie in (0, 1]");
    const int majority = static_cast<int>(std::ceil(spec.rho * spec.users));
    if (majority < 1) throw std::invalid_argument("gen_clustered: rho * D must be >= 1");
    if (majority < spec.users && spec.arms < 2)
        throw std::invalid_argument("gen_clustered: need at least 2 arms for minority winners");

    Rng rng(spec.seed);
    const int w = rng.uniform_int(spec.arms);
    std::vector<int> winners(spec.users, w);
    for (int d = majority; d < spec.users; ++d) {
        const int r = rng.uniform_int(spec.arms - 1);
        winners[d] = r < w ? r : r + 1; // uniform over arms != w
    }
    return detail::build_from_winners(spec, winners, rng);
}

// Hard environment: winners a*_d = d mod K; the winner set splits into good
// (lower-index half) and bad winners. All pairwise preferences are fixed by
// the class structure; target_m is the distinguished good winner that bad
// users rate eps above the other good winners.
inline Instance gen_hard(const InstanceSpec& spec) {
    if (spec.kind != InstanceKind::hard)
        throw std::invalid_argument("gen_hard: spec.kind mismatch");
    const int D = spec.users, K = spec.arms;
    if (D < 4 || K < 4 || D % 2 != 0 || K % 2 != 0)
        throw std::invalid_argument("gen_hard: K and D must be even and >= 4");
    if (!(spec.eps > 0.0) || spec.eps >= 0.2)
        throw std::invalid_argument("gen_hard: eps must lie in (0, 0.2)");
    if (!(spec.eps_prime > 0.0) || spec.eps_prime >= 0.05)
        throw std::invalid_argument("gen_hard: eps_prime must lie in (0, 0.05)");

    const int num_winners = std::min(K, D); // arms 0..num_winners-1
    const int good_count = num_winners / 2; // good winners: arms 0..good_count-1
    if (spec.target_m < 0 || spec.target_m >= good_count)
        throw std::invalid_argument("gen_hard: target_m must be a good-winner arm index");

    // 0 = good winner, 1 = bad winner, 2 = not a winner
    auto cls = [&](int a) { return a < good_count ? 0 : (a < num_winners ? 1 : 2); };

    const double ep = spec.eps_prime;
    const double e = spec.eps;
    PreferenceTensor t(D, K);
    for (int d = 0; d < D; ++d) {
        const int w = d % K;
        for (int i = 0; i < K; ++i) {
            for (int j = i + 1; j < K; ++j) {
                double p; // P_d(i beats j)
                if (i == w || j == w) {
                    const int other = (i == w) ? j : i;
                    double pw; // P_d(w beats other)
                    if (cls(w) == 0) {
                        pw = (cls(other) == 0) ? 0.5 + ep : 1.0;
                    } else { // w is a bad winner
                        if (cls(other) == 0)
                            pw = (other == spec.target_m) ? 0.5 + ep : 0.5 + ep + e;
                        else
                            pw = 1.0;
                    }
                    p = (i == w) ? pw : 1.0 - pw;
                } else if (cls(i) != cls(j)) {
                    p = cls(i) < cls(j) ? 1.0 : 0.0; // good > bad > non-winner
                } else if (cls(i) == 0) {
                    p = (i < j) ? 0.5 + ep : 0.5 - ep; // ties inside the good set stay close
                } else {
                    p = (i < j) ? 1.0 : 0.0; // deterministic order elsewhere
                }
                t.at(d, i, j) = p;
                t.at(d, j, i) = 1.0 - p;
            }
        }
    }

    std::vector<int> winners(D);
    for (int d = 0; d < D; ++d) winners[d] = d % K;
    Instance inst;
    inst.winners = make_winner_set(winners);
    inst.scores = derive_scores(t, inst.winners);
    inst.tensor = std::move(t);
    inst.spec = spec;
    return inst;
}

inline Instance generate(const InstanceSpec& spec) {
    switch (spec.kind) {
        case InstanceKind::random: return gen_random(spec);
        case InstanceKind::clustered: return gen_clustered(spec);
        case InstanceKind::hard: return gen_hard(spec);
    }
    throw std::invalid_argument("generate: unknown kind");
}

// One duel of (arm_i, arm_j): outcomes[d] ~ Bernoulli(P(d, arm_i, arm_j))
// independently per user.
inline FeedbackVector sample_duel(const Instance& inst, int arm_i, int arm_j, Rng& rng) {
    FeedbackVector y;
    y.outcomes.resize(inst.tensor.num_users);
    for (int d = 0; d < inst.tensor.num_users; ++d)
        y.outcomes[d] = rng.bernoulli(inst.tensor.at(d, arm_i, arm_j)) ? 1 : 0;
    return y;
}

inline FeedbackVector sample_duel(const Instance& inst, int arm_i, int arm_j, RngSeed stream) {
    Rng rng(stream);
    return sample_duel(inst, arm_i, arm_j, rng);
}

} // namespace fairduel
