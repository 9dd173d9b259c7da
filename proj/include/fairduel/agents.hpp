#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fairduel/condorcet.hpp"
#include "fairduel/core.hpp"
#include "fairduel/envgen.hpp"
#include "fairduel/record.hpp"
#include "fairduel/rng.hpp"
#include "fairduel/welfare.hpp"

namespace fairduel {

enum class AgentKind { fair_etc, fair_eps, util_etc, util_eps, uniform_users };

inline const char* agent_kind_name(AgentKind k) {
    switch (k) {
        case AgentKind::fair_etc: return "fair-etc";
        case AgentKind::fair_eps: return "fair-eps";
        case AgentKind::util_etc: return "util-etc";
        case AgentKind::util_eps: return "util-eps";
        case AgentKind::uniform_users: return "uniform-users";
    }
    return "?";
}

inline AgentKind parse_agent_kind(const std::string& s) {
    if (s == "fair-etc") return AgentKind::fair_etc;
    if (s == "fair-eps") return AgentKind::fair_eps;
    if (s == "util-etc") return AgentKind::util_etc;
    if (s == "util-eps") return AgentKind::util_eps;
    if (s == "uniform-users") return AgentKind::uniform_users;
    throw std::invalid_argument("unknown agent kind: " + s);
}

struct AgentConfig {
    AgentKind kind = AgentKind::fair_etc;
    std::int64_t horizon = 10000;
    double delta_hat = 0.0025; // confidence knob for the DKWT schedule
    double etc_scale = 0.25;   // multiplier on the exploration length L
    double eps_scale = 0.1;    // multiplier on the exploration rate eps_t
    int recompute_stride = 1;  // solve cadence on exploitation steps
    SolverSettings solver;
    RngSeed seed;
};

// ---------------------------------------------------------------------------
// Hyperparameter schedules

// delta = min(1, K ln(K/2) / (2 delta_hat T)), clamped into (0, 1]. The
// formula is nonpositive for K <= 2, where identification is statistically
// trivial; those cases clamp to 1.
inline double compute_delta(int K, std::int64_t T, double delta_hat) {
    if (T < 1) throw std::invalid_argument("compute_delta: T must be >= 1");
    if (!(delta_hat > 0.0) || delta_hat >= 1.0)
        throw std::invalid_argument("compute_delta: delta_hat must lie in (0, 1)");
    const double raw = K * std::log(K / 2.0) / (2.0 * delta_hat * static_cast<double>(T));
    if (!(raw > 0.0) || raw > 1.0) return 1.0;
    return raw;
}

// L = max(1, ceil(scale * K^-2/3 |A*|^-2/3 D^2/3 T^2/3 ln(DKT)^1/3)).
inline std::int64_t compute_L(int K, int D, int num_winners, std::int64_t T, double scale) {
    if (num_winners < 1) throw std::invalid_argument("compute_L: need at least one winner");
    if (!(scale > 0.0)) throw std::invalid_argument("compute_L: scale must be positive");
    const double raw = scale * std::pow(static_cast<double>(K), -2.0 / 3.0) *
                       std::pow(static_cast<double>(num_winners), -2.0 / 3.0) *
                       std::pow(static_cast<double>(D), 2.0 / 3.0) *
                       std::pow(static_cast<double>(T), 2.0 / 3.0) *
                       std::cbrt(std::log(static_cast<double>(D) * K * T));
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(raw)));
}

// eps_t = min(1, scale * D^2/3 K^1/3 |A*|^1/3 (t-T0)^-1/3 ln(DK(t-T0))^1/3)
// for t > T0. At t - T0 = 1 the log term is floored at 1 so the very first
// step keeps a positive exploration rate.
inline double compute_eps_t(int D, int K, int num_winners, std::int64_t t, std::int64_t t0,
                            double scale) {
    if (t <= t0) throw std::invalid_argument("compute_eps_t: t must exceed T0");
    const double n = static_cast<double>(t - t0);
    const double log_term =
        (t - t0 == 1) ? std::max(std::log(static_cast<double>(D) * K), 1.0)
                      : std::log(static_cast<double>(D) * K * n);
    const double raw = scale * std::pow(static_cast<double>(D), 2.0 / 3.0) *
                       std::cbrt(static_cast<double>(K)) *
                       std::cbrt(static_cast<double>(num_winners)) * std::pow(n, -1.0 / 3.0) *
                       std::cbrt(log_term);
    return std::min(1.0, raw);
}

// ---------------------------------------------------------------------------
// Score estimation

// Empirical win statistics of every arm against each user's estimated
// Condorcet winner. A played pair (i, j) informs user d's entry only when it
// contains that user's winner; plays with the winner in the first slot fold
// in reversed. The winner's own score is definitional, never estimated.
class EstimatedScores {
public:
    EstimatedScores(int num_users, int num_arms, std::vector<int> winners)
        : D_(num_users), K_(num_arms), winners_(std::move(winners)),
          wins_(static_cast<std::size_t>(num_users) * num_arms, 0),
          counts_(static_cast<std::size_t>(num_users) * num_arms, 0) {}

    void record_duel(int i, int j, const FeedbackVector& y) {
        for (int d = 0; d < D_; ++d) {
            const int w = winners_[d];
            if (j == w && i != w) {
                wins_[idx(d, i)] += y.outcomes[d];
                ++counts_[idx(d, i)];
            } else if (i == w && j != w) {
                wins_[idx(d, j)] += 1 - y.outcomes[d];
                ++counts_[idx(d, j)];
            }
        }
    }

    std::int64_t count(int d, int a) const { return counts_[idx(d, a)]; }
    std::int64_t wins(int d, int a) const { return wins_[idx(d, a)]; }
    const std::vector<int>& winners() const { return winners_; }

    // s_hat_d(a) = clamp(2 * wins/count, 0, 1); 1 for the winner itself,
    // 0 for never-sampled arms.
    double score(int d, int a) const {
        if (a == winners_[d]) return 1.0;
        const std::int64_t c = counts_[idx(d, a)];
        if (c == 0) return 0.0;
        return std::clamp(2.0 * static_cast<double>(wins_[idx(d, a)]) / static_cast<double>(c),
                          0.0, 1.0);
    }

    ScoreMatrix to_score_matrix() const {
        ScoreMatrix s(D_, K_);
        for (int d = 0; d < D_; ++d)
            for (int a = 0; a < K_; ++a) s.at(d, a) = score(d, a);
        return s;
    }

private:
    std::size_t idx(int d, int a) const { return static_cast<std::size_t>(d) * K_ + a; }

    int D_;
    int K_;
    std::vector<int> winners_;
    std::vector<std::int64_t> wins_;
    std::vector<std::int64_t> counts_;
};

// ---------------------------------------------------------------------------
// Run context and the shared trace machinery

// Per-instance quantities shared by all agent runs: the reference NSW
// optimum on the true scores and the per-arm true NSW products used to price
// deterministic plays.
struct RunContext {
    double optimal_value = 0.0;
    double optimal_gap = 0.0;
    std::vector<double> arm_nsw; // arm_nsw[a] = prod_d s_d(a)
    std::int64_t checkpoint_stride = 100;
};

inline RunContext make_run_context(const Instance& inst, std::int64_t checkpoint_stride = 100,
                                   SolverSettings reference_solver = {20000, 1e-10, 1e-12}) {
    RunContext ctx;
    NswSolveResult opt = maximize_nsw(inst.scores, reference_solver);
    ctx.optimal_value = opt.value;
    ctx.optimal_gap = opt.gap;
    ctx.checkpoint_stride = checkpoint_stride;
    ctx.arm_nsw.resize(inst.tensor.num_arms);
    for (int a = 0; a < inst.tensor.num_arms; ++a) {
        double p = 1.0;
        for (int d = 0; d < inst.tensor.num_users; ++d) p *= inst.scores.at(d, a);
        ctx.arm_nsw[a] = p;
    }
    return ctx;
}

namespace detail {

struct HorizonReached {};

// Plays duels, prices their regret, and accumulates the trace. Throws
// HorizonReached when asked to play past the horizon.
class RunTracer {
public:
    RunTracer(const Instance& inst, const RunContext& ctx, std::int64_t horizon, Rng duel_rng)
        : inst_(inst), ctx_(ctx), duel_rng_(std::move(duel_rng)),
          utilities_(inst.tensor.num_users, 0.0) {
        record_.horizon = horizon;
        record_.steps.reserve(static_cast<std::size_t>(horizon));
        record_.optimal_value = ctx.optimal_value;
        record_.optimal_gap = ctx.optimal_gap;
    }

    std::int64_t t() const { return static_cast<std::int64_t>(record_.steps.size()); }
    RunRecord& record() { return record_; }

    double point_regret(int i, int j) const {
        return ctx_.optimal_value - 0.5 * (ctx_.arm_nsw[i] + ctx_.arm_nsw[j]);
    }

    double policy_regret(const Policy& pi) const {
        return ctx_.optimal_value - nsw_value(pi, inst_.scores);
    }

    FeedbackVector play(int i, int j, Phase phase, double regret) {
        if (t() >= record_.horizon) throw HorizonReached{};
        FeedbackVector y = sample_duel(inst_, i, j, duel_rng_);
        regret_cum_ += regret;
        for (int d = 0; d < inst_.tensor.num_users; ++d)
            utilities_[d] += 0.5 * (inst_.scores.at(d, i) + inst_.scores.at(d, j));
        record_.steps.push_back({phase, i, j, regret});
        const std::int64_t now = t();
        if (now % ctx_.checkpoint_stride == 0 || now == record_.horizon)
            record_.checkpoints.push_back({now, regret_cum_, utilities_});
        return y;
    }

    RunRecord finish(Policy final_policy) {
        record_.final_policy = std::move(final_policy);
        record_.final_utilities = utilities_;
        record_.regret_cum_final = regret_cum_;
        record_.identify_steps = record_.explore_steps = record_.exploit_steps = 0;
        for (const StepEntry& s : record_.steps) {
            switch (s.phase) {
                case Phase::identify: ++record_.identify_steps; break;
                case Phase::explore: ++record_.explore_steps; break;
                case Phase::exploit: ++record_.exploit_steps; break;
            }
        }
        return std::move(record_);
    }

private:
    const Instance& inst_;
    const RunContext& ctx_;
    Rng duel_rng_;
    RunRecord record_;
    std::vector<double> utilities_;
    double regret_cum_ = 0.0;
};

inline int sample_arm(const Policy& pi, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t a = 0; a + 1 < pi.weights.size(); ++a) {
        acc += pi.weights[a];
        if (u < acc) return static_cast<int>(a);
    }
    return static_cast<int>(pi.weights.size()) - 1;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Agent runs

// Runs the configured agent for exactly horizon duels. Identification and
// exploration count against the horizon; a horizon that ends inside
// identification or inside the ETC exploration block truncates the run and
// sets the corresponding flag.
inline RunRecord run_agent(const Instance& inst, const AgentConfig& cfg, const RunContext& ctx) {
    const auto start = std::chrono::steady_clock::now();
    const int D = inst.tensor.num_users;
    const int K = inst.tensor.num_arms;
    const std::int64_t T = cfg.horizon;
    if (T < 1) throw std::invalid_argument("run_agent: horizon must be >= 1");

    Rng duel_rng{substream(cfg.seed, 0x6475656cULL)};  // duel stream
    Rng agent_rng{substream(cfg.seed, 0x6167656eULL)}; // agent's own randomness
    detail::RunTracer tracer(inst, ctx, T, std::move(duel_rng));
    RunRecord& rec = tracer.record();

    const bool fair = cfg.kind == AgentKind::fair_etc || cfg.kind == AgentKind::fair_eps;
    auto solve_policy = [&](const ScoreMatrix& s) {
        if (fair) {
            NswSolveResult r = maximize_nsw(s, cfg.solver);
            rec.solver_degenerate = rec.solver_degenerate || r.degenerate;
            return r.policy;
        }
        return maximize_utilitarian(s).policy;
    };

    std::optional<double> known_gap;
    if (inst.spec)
        known_gap = inst.spec->kind == InstanceKind::hard ? inst.spec->eps_prime : inst.spec->gap;

    Policy final_policy = uniform_policy(K);
    enum class Stage { identify, etc_explore, main } stage = Stage::identify;

    try {
        // Phase 1: Condorcet winner identification at confidence delta / D.
        const double delta = compute_delta(K, T, cfg.delta_hat);
        DuelSource src = [&](int i, int j) {
            return tracer.play(i, j, Phase::identify, tracer.point_regret(i, j));
        };
        TournamentResult tournament =
            dkwt(K, D, delta / D, src, default_step_budget(K, D, known_gap));
        rec.identify_steps_per_user = tournament.per_user_steps;
        stage = Stage::main;

        const std::vector<int>& est_winners = tournament.winners.winners;
        const std::vector<int>& distinct = tournament.winners.distinct;
        EstimatedScores est(D, K, est_winners);

        if (cfg.kind == AgentKind::uniform_users) {
            Policy pi_u;
            pi_u.weights.assign(K, 0.0);
            for (int d = 0; d < D; ++d) pi_u.weights[est_winners[d]] += 1.0 / D;
            final_policy = pi_u;
            const double r = tracer.policy_regret(pi_u);
            while (true) {
                const int a = detail::sample_arm(pi_u, agent_rng);
                const int b = detail::sample_arm(pi_u, agent_rng);
                tracer.play(a, b, Phase::exploit, r);
            }
        } else if (cfg.kind == AgentKind::fair_etc || cfg.kind == AgentKind::util_etc) {
            // Phase 2: L duels of (a, a*) for every estimated winner and arm.
            stage = Stage::etc_explore;
            const std::int64_t L =
                compute_L(K, D, static_cast<int>(distinct.size()), T, cfg.etc_scale);
            for (int w : distinct)
                for (int a = 0; a < K; ++a)
                    for (std::int64_t l = 0; l < L; ++l)
                        est.record_duel(a, w,
                                        tracer.play(a, w, Phase::explore,
                                                    tracer.point_regret(a, w)));
            stage = Stage::main;

            // Phase 3: commit to the welfare maximizer of the estimates.
            const Policy pi_hat = solve_policy(est.to_score_matrix());
            final_policy = pi_hat;
            const double r = tracer.policy_regret(pi_hat);
            while (true) {
                const int a = detail::sample_arm(pi_hat, agent_rng);
                const int b = detail::sample_arm(pi_hat, agent_rng);
                tracer.play(a, b, Phase::exploit, r);
            }
        } else {
            // Fair/utilitarian epsilon-greedy main loop.
            const std::int64_t t0 = tracer.t();
            std::vector<std::pair<int, int>> schedule;
            for (int w : distinct)
                for (int a = 0; a < K; ++a)
                    if (a != w) schedule.emplace_back(a, w);
            std::size_t cursor = 0;
            std::int64_t exploit_count = 0;
            double policy_regret = 0.0;
            bool have_policy = false;

            while (true) {
                const double eps_t = compute_eps_t(D, K, static_cast<int>(distinct.size()),
                                                   tracer.t() + 1, t0, cfg.eps_scale);
                if (!schedule.empty() && agent_rng.uniform() <= eps_t) {
                    const auto [a, w] = schedule[cursor % schedule.size()];
                    ++cursor;
                    est.record_duel(a, w,
                                    tracer.play(a, w, Phase::explore, tracer.point_regret(a, w)));
                } else {
                    if (!have_policy || exploit_count % cfg.recompute_stride == 0) {
                        final_policy = solve_policy(est.to_score_matrix());
                        policy_regret = tracer.policy_regret(final_policy);
                        have_policy = true;
                    }
                    ++exploit_count;
                    const int a = detail::sample_arm(final_policy, agent_rng);
                    const int b = detail::sample_arm(final_policy, agent_rng);
                    est.record_duel(a, b, tracer.play(a, b, Phase::exploit, policy_regret));
                }
            }
        }
    } catch (const detail::HorizonReached&) {
        rec.truncated_identify = stage == Stage::identify;
        rec.truncated_explore = stage == Stage::etc_explore;
    }

    RunRecord out = tracer.finish(std::move(final_policy));
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

} // namespace fairduel
