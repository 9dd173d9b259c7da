#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "fairduel/condorcet.hpp"
#include "fairduel/envgen.hpp"
#include "fairduel/rng.hpp"

using namespace fairduel;

namespace {

// Deterministic two-user environment over three arms: user 0 prefers
// 0 > 1 > 2 and user 1 prefers 2 > 1 > 0, all duels decided with certainty.
PreferenceTensor deterministic_tensor() {
    PreferenceTensor t(2, 3);
    auto set = [&](int d, int i, int j, double p) {
        t.at(d, i, j) = p;
        t.at(d, j, i) = 1.0 - p;
    };
    set(0, 0, 1, 1.0);
    set(0, 0, 2, 1.0);
    set(0, 1, 2, 1.0);
    set(1, 0, 1, 0.0);
    set(1, 0, 2, 0.0);
    set(1, 1, 2, 0.0);
    return t;
}

struct CountingSource {
    Instance* inst;
    Rng rng;
    std::int64_t calls = 0;
    FeedbackVector operator()(int i, int j) {
        ++calls;
        return sample_duel(*inst, i, j, rng);
    }
};

} // namespace

TEST_CASE("round_params implements the published schedule") {
    const RoundParams p1 = round_params(1, 0.05);
    CHECK(p1.width == 0.25);
    const double expected_conf = 6.0 * 0.05 / (std::numbers::pi * std::numbers::pi);
    CHECK(p1.confidence == expected_conf);
    CHECK(p1.samples ==
          static_cast<std::int64_t>(std::ceil(8.0 * std::log(4.0 / expected_conf) / (0.25 * 0.25))));
    CHECK(p1.samples == 625);

    CHECK(round_params(2, 0.05).width == 0.125);

    std::int64_t prev = 0;
    for (int r = 1; r <= 20; ++r) {
        const auto p = round_params(r, 0.05);
        REQUIRE(p.samples >= prev);
        prev = p.samples;
    }
}

TEST_CASE("dkw_compare eliminates the certain loser in one round") {
    Instance inst = make_instance(deterministic_tensor());
    TournamentState state(3, 2);
    CountingSource src{&inst, Rng(RngSeed{1, 0})};
    DuelSource sampler = [&](int i, int j) { return src(i, j); };

    dkw_compare(0, 1, 0, 0.05, state, sampler);
    // One round of N_1 = 625 duels resolves the pair for both users at once.
    CHECK(state.steps_used() == 625);
    CHECK(src.calls == 625);
    CHECK_FALSE(state.holds(0, 1)); // user 0 dropped arm 1
    CHECK_FALSE(state.holds(1, 0)); // user 1 dropped arm 0 from the same batch
    CHECK(state.round(0, 1) == 2);
    CHECK(state.round(1, 0) == 2);
    // Shared bookkeeping: both users saw every duel of the pair.
    CHECK(state.total(0, 1) == 625);
    CHECK(state.wins(0, 0, 1) == 625);
    CHECK(state.wins(1, 0, 1) == 0);
}

TEST_CASE("dkw_compare preconditions") {
    TournamentState state(3, 1);
    DuelSource sampler = [](int, int) { return FeedbackVector{{1}}; };
    CHECK_THROWS_AS(dkw_compare(1, 1, 0, 0.05, state, sampler), std::invalid_argument);
    state.remove_arm(0, 1);
    CHECK_THROWS_AS(dkw_compare(0, 1, 0, 0.05, state, sampler), std::invalid_argument);
}

TEST_CASE("true winner survives round one under deterministic feedback") {
    Instance inst = make_instance(deterministic_tensor());
    Rng rng(RngSeed{3, 0});
    DuelSource sampler = [&](int i, int j) { return sample_duel(inst, i, j, rng); };
    const TournamentResult result = dkwt(3, 2, 0.05, sampler);
    CHECK(result.winners.winners == std::vector<int>{0, 2});
    CHECK(result.winners.distinct == std::vector<int>{0, 2});
    CHECK(result.per_user_steps[0] >= 0);
    CHECK(result.per_user_steps[1] <= result.steps_used);
}

TEST_CASE("dkwt with a single arm asks no duels") {
    std::int64_t calls = 0;
    DuelSource sampler = [&](int, int) {
        ++calls;
        return FeedbackVector{{1}};
    };
    const TournamentResult result = dkwt(1, 3, 0.05, sampler);
    CHECK(calls == 0);
    CHECK(result.steps_used == 0);
    CHECK(result.winners.winners == std::vector<int>{0, 0, 0});
}

TEST_CASE("dkwt identifies a wide-margin pair inside round one") {
    PreferenceTensor t(1, 2);
    t.at(0, 0, 1) = 0.9;
    t.at(0, 1, 0) = 0.1;
    Instance inst = make_instance(std::move(t));

    // dkwt runs the single pair at per-pair confidence 0.05 / K
    const std::int64_t round_one = round_params(1, 0.05 / 2).samples;
    int within_budget = 0;
    int correct = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        CountingSource src{&inst, Rng(RngSeed{seed, 17})};
        DuelSource sampler = [&](int i, int j) { return src(i, j); };
        const TournamentResult result = dkwt(2, 1, 0.05, sampler);
        if (result.winners.winners[0] == 0) ++correct;
        if (result.steps_used <= round_one) ++within_budget;
        REQUIRE(result.steps_used == src.calls); // steps audit against the source
    }
    CHECK(correct == 100);
    CHECK(within_budget >= 99);
}

TEST_CASE("dkwt identification on random instances") {
    int correct_users = 0;
    int total_users = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        InstanceSpec spec;
        spec.kind = InstanceKind::random;
        spec.users = 5;
        spec.arms = 5;
        spec.gap = 0.1;
        spec.seed = {seed, 5};
        Instance inst = gen_random(spec);
        Rng rng(RngSeed{seed, 99});
        DuelSource sampler = [&](int i, int j) { return sample_duel(inst, i, j, rng); };
        const TournamentResult result = dkwt(5, 5, 0.05, sampler);
        for (int d = 0; d < 5; ++d) {
            ++total_users;
            if (result.winners.winners[d] == inst.winners.winners[d]) ++correct_users;
        }
    }
    CHECK(correct_users == total_users); // loose bounds make errors very rare
}

TEST_CASE("candidate sets only shrink and stay nonempty") {
    InstanceSpec spec;
    spec.kind = InstanceKind::random;
    spec.users = 3;
    spec.arms = 4;
    spec.gap = 0.2;
    spec.seed = {8, 0};
    Instance inst = gen_random(spec);

    TournamentState state(4, 3);
    Rng rng(RngSeed{8, 1});
    DuelSource sampler = [&](int i, int j) { return sample_duel(inst, i, j, rng); };
    std::vector<std::size_t> sizes = {4, 4, 4};
    for (int d = 0; d < 3; ++d) {
        while (state.candidates(d).size() > 1) {
            const int i = state.candidates(d)[0];
            const int j = state.candidates(d)[1];
            dkw_compare(i, j, d, 0.05 / 4, state, sampler);
            for (int d2 = 0; d2 < 3; ++d2) {
                REQUIRE(state.candidates(d2).size() >= 1);
                REQUIRE(state.candidates(d2).size() <= sizes[d2]);
                sizes[d2] = state.candidates(d2).size();
            }
        }
    }
}

TEST_CASE("an exact tie survives a round with high probability") {
    // For P = 0.5 the empirical deviation after N_1 fair duels stays inside
    // the round-one width essentially always (the DKW-sized batch gives a
    // ~6-sigma margin), so neither arm would be eliminated.
    const RoundParams p = round_params(1, 0.05);
    Rng rng(RngSeed{90, 0});
    for (int rep = 0; rep < 200; ++rep) {
        std::int64_t wins = 0;
        for (std::int64_t n = 0; n < p.samples; ++n) wins += rng.bernoulli(0.5);
        const double p_hat = static_cast<double>(wins) / static_cast<double>(p.samples);
        REQUIRE(std::abs(p_hat - 0.5) <= 0.5 * p.width);
    }
}

TEST_CASE("step budget aborts with a diagnostic") {
    Instance inst = make_instance(deterministic_tensor());
    Rng rng(RngSeed{4, 0});
    DuelSource sampler = [&](int i, int j) { return sample_duel(inst, i, j, rng); };
    CHECK_THROWS_AS(dkwt(3, 2, 0.05, sampler, 100), TournamentBudgetError);
    CHECK(default_step_budget(10, 10, 0.1) == 5000000);
    CHECK(default_step_budget(10, 10) == 100000000);
}
