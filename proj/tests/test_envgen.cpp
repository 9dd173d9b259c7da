#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "fairduel/envgen.hpp"
#include "fairduel/serialize.hpp"

using namespace fairduel;

namespace {

InstanceSpec random_spec(int D, int K, double gap, std::uint64_t seed) {
    InstanceSpec s;
    s.kind = InstanceKind::random;
    s.users = D;
    s.arms = K;
    s.gap = gap;
    s.seed = {seed, 0};
    return s;
}

double min_off_diag_margin(const PreferenceTensor& t) {
    double m = 1.0;
    for (int d = 0; d < t.num_users; ++d)
        for (int i = 0; i < t.num_arms; ++i)
            for (int j = 0; j < t.num_arms; ++j)
                if (i != j) m = std::min(m, std::abs(0.5 - t.at(d, i, j)));
    return m;
}

} // namespace

TEST_CASE("gen_random: single free entry lands in the winner range") {
    Instance inst = gen_random(random_spec(1, 2, 0.1, 7));
    const int w = inst.winners.winners[0];
    const double p = inst.tensor.at(0, w, 1 - w);
    CHECK(p >= 0.6);
    CHECK(p <= 1.0);
}

TEST_CASE("gen_random is deterministic in the seed") {
    const auto spec = random_spec(3, 4, 0.1, 42);
    Instance a = gen_random(spec);
    Instance b = gen_random(spec);
    REQUIRE(a.tensor.probs == b.tensor.probs);
    REQUIRE(a.winners.winners == b.winners.winners);

    Instance c = gen_random(random_spec(3, 4, 0.1, 43));
    CHECK(a.tensor.probs != c.tensor.probs);
}

TEST_CASE("gen_random enforces the minimum gap and intended winners") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        for (double gap : {0.05, 0.2}) {
            Instance inst = gen_random(random_spec(1 + static_cast<int>(seed % 6),
                                                   2 + static_cast<int>(seed % 7), gap, seed));
            REQUIRE(validate_tensor(inst.tensor).ok);
            REQUIRE(min_off_diag_margin(inst.tensor) >= gap);
            const auto found = find_true_winners(inst.tensor);
            REQUIRE(found.all_found());
            REQUIRE(found.winners == inst.winners.winners);
            for (int d = 0; d < inst.tensor.num_users; ++d)
                REQUIRE(inst.scores.at(d, inst.winners.winners[d]) == 1.0);
        }
    }
}

TEST_CASE("gen_random rejects degenerate gaps") {
    CHECK_THROWS_AS(gen_random(random_spec(2, 2, 0.5, 1)), std::invalid_argument);
    CHECK_THROWS_AS(gen_random(random_spec(2, 2, 0.0, 1)), std::invalid_argument);
}

TEST_CASE("gen_clustered: rho=1 shares a single winner") {
    InstanceSpec s;
    s.kind = InstanceKind::clustered;
    s.users = 6;
    s.arms = 4;
    s.gap = 0.1;
    s.rho = 1.0;
    s.seed = {11, 0};
    Instance inst = gen_clustered(s);
    CHECK(inst.winners.distinct.size() == 1);
}

TEST_CASE("gen_clustered: rho=0.7 with D=10 gives exactly 7 majority users") {
    InstanceSpec s;
    s.kind = InstanceKind::clustered;
    s.users = 10;
    s.arms = 10;
    s.gap = 0.1;
    s.rho = 0.7;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        s.seed = {seed, 0};
        Instance inst = gen_clustered(s);
        const int w = inst.winners.winners[0];
        int majority = 0;
        for (int d = 0; d < s.users; ++d)
            if (inst.winners.winners[d] == w) ++majority;
        REQUIRE(majority == 7);
        for (int d = 7; d < s.users; ++d) REQUIRE(inst.winners.winners[d] != w);
        // Minority users score the shared winner at most 1 - 2*gap.
        for (int d = 7; d < s.users; ++d) REQUIRE(inst.scores.at(d, w) <= 1.0 - 2.0 * s.gap);
        REQUIRE(validate_tensor(inst.tensor).ok);
        REQUIRE(find_true_winners(inst.tensor).winners == inst.winners.winners);
    }
}

TEST_CASE("gen_hard winners follow d mod K and inputs are checked") {
    InstanceSpec s;
    s.kind = InstanceKind::hard;
    s.users = 8;
    s.arms = 4;
    s.eps = 0.1;
    s.eps_prime = 0.01;
    s.target_m = 0;
    Instance inst = gen_hard(s);
    for (int d = 0; d < s.users; ++d) REQUIRE(inst.winners.winners[d] == d % s.arms);
    REQUIRE(validate_tensor(inst.tensor).ok);
    REQUIRE(find_true_winners(inst.tensor).winners == inst.winners.winners);

    auto bad = s;
    bad.users = 7;
    CHECK_THROWS_AS(gen_hard(bad), std::invalid_argument);
    bad = s;
    bad.arms = 2;
    CHECK_THROWS_AS(gen_hard(bad), std::invalid_argument);
    bad = s;
    bad.eps = 0.3;
    CHECK_THROWS_AS(gen_hard(bad), std::invalid_argument);
    bad = s;
    bad.eps_prime = 0.06;
    CHECK_THROWS_AS(gen_hard(bad), std::invalid_argument);
    bad = s;
    bad.target_m = 2; // bad-winner arm for |A*|=4
    CHECK_THROWS_AS(gen_hard(bad), std::invalid_argument);
}

TEST_CASE("gen_hard probability relationships") {
    InstanceSpec s;
    s.kind = InstanceKind::hard;
    s.users = 4;
    s.arms = 4;
    s.eps = 0.125;       // dyadic so closed forms are exact
    s.eps_prime = 0.03125;
    s.target_m = 1;
    Instance inst = gen_hard(s);
    // A* = {0,1,2,3}, good = {0,1}, bad = {2,3}; user d's winner is arm d.
    const auto& t = inst.tensor;
    // good winner beats every bad winner with probability 1 under its user
    CHECK(t.at(0, 0, 2) == 1.0);
    CHECK(t.at(0, 0, 3) == 1.0);
    CHECK(t.at(1, 1, 2) == 1.0);
    // good vs good for the row owner: 1/2 + eps'
    CHECK(t.at(0, 0, 1) == 0.5 + s.eps_prime);
    CHECK(t.at(1, 1, 0) == 0.5 + s.eps_prime);
    // bad user's winner vs good winners: 1/2 + eps' + eps, except target m
    CHECK(t.at(2, 2, 0) == 0.5 + s.eps_prime + s.eps);
    CHECK(t.at(2, 2, 1) == 0.5 + s.eps_prime); // arm 1 == target m
    CHECK(t.at(3, 3, 0) == 0.5 + s.eps_prime + s.eps);
    // bad vs bad for the row owner: 1
    CHECK(t.at(2, 2, 3) == 1.0);
    CHECK(t.at(3, 3, 2) == 1.0);
}

TEST_CASE("gen_hard score table for the (4,4) instance") {
    InstanceSpec s;
    s.kind = InstanceKind::hard;
    s.users = 4;
    s.arms = 4;
    s.eps = 0.125;
    s.eps_prime = 0.03125;
    s.target_m = 0;
    Instance inst = gen_hard(s);
    const double one_minus_2ep = 2.0 * (1.0 - (0.5 + s.eps_prime));
    const double one_minus_2epe = 2.0 * (1.0 - (0.5 + s.eps_prime + s.eps));
    // Good users are 0 and 1 (winners 0, 1); bad users 2, 3 (winners 2, 3).
    for (int d : {0, 1}) {
        for (int a : {0, 1}) CHECK(inst.scores.at(d, a) == (a == d ? 1.0 : one_minus_2ep));
        for (int a : {2, 3}) CHECK(inst.scores.at(d, a) == 0.0);
    }
    for (int d : {2, 3}) {
        CHECK(inst.scores.at(d, 0) == one_minus_2ep); // target m
        CHECK(inst.scores.at(d, 1) == one_minus_2epe);
        for (int a : {2, 3}) CHECK(inst.scores.at(d, a) == (a == d ? 1.0 : 0.0));
    }
}

TEST_CASE("sample_duel matches the tensor probabilities") {
    PreferenceTensor t(1, 3);
    t.at(0, 0, 1) = 1.0;
    t.at(0, 1, 0) = 0.0;
    t.at(0, 0, 2) = 0.7;
    t.at(0, 2, 0) = 0.3;
    t.at(0, 1, 2) = 0.3;
    t.at(0, 2, 1) = 0.7;
    Instance inst = make_instance(std::move(t));

    Rng rng(RngSeed{5, 0});
    for (int n = 0; n < 200; ++n) REQUIRE(sample_duel(inst, 0, 1, rng).outcomes[0] == 1);

    // diagonal duels are fair coins
    int ones = 0;
    for (int n = 0; n < 10000; ++n) ones += sample_duel(inst, 2, 2, rng).outcomes[0];
    CHECK(ones > 4600);
    CHECK(ones < 5400);

    // empirical mean over 100000 samples of a 0.7 pair within [0.69, 0.71]
    std::int64_t wins = 0;
    for (int n = 0; n < 100000; ++n) wins += sample_duel(inst, 0, 2, rng).outcomes[0];
    const double mean = static_cast<double>(wins) / 100000.0;
    CHECK(mean >= 0.69);
    CHECK(mean <= 0.71);
}

TEST_CASE("instance serialization round-trips byte-exactly") {
    Instance inst = gen_random(random_spec(3, 4, 0.1, 99));
    const auto j = instance_to_json(inst);
    Instance back = instance_from_json(j);
    REQUIRE(back.tensor.probs == inst.tensor.probs);
    REQUIRE(back.winners.winners == inst.winners.winners);
    REQUIRE(back.scores.scores == inst.scores.scores);

    // byte-for-byte determinism of the serialized form
    Instance again = gen_random(random_spec(3, 4, 0.1, 99));
    CHECK(instance_to_json(again).dump() == j.dump());
}

TEST_CASE("instance_from_json rejects inconsistent winners") {
    Instance inst = gen_random(random_spec(2, 3, 0.1, 1));
    auto j = instance_to_json(inst);
    j["winners"][0] = (inst.winners.winners[0] + 1) % 3;
    CHECK_THROWS(instance_from_json(j));
}

TEST_CASE("instance_from_json derives winners when the field is absent") {
    Instance inst = gen_random(random_spec(2, 3, 0.1, 2));
    auto j = instance_to_json(inst);
    j.erase("winners");
    const Instance back = instance_from_json(j);
    CHECK(back.winners.winners == inst.winners.winners);
}

TEST_CASE("instances without a Condorcet winner are refused") {
    PreferenceTensor t(1, 3);
    t.at(0, 0, 1) = 0.6;
    t.at(0, 1, 0) = 0.4;
    t.at(0, 1, 2) = 0.6;
    t.at(0, 2, 1) = 0.4;
    t.at(0, 2, 0) = 0.6;
    t.at(0, 0, 2) = 0.4;
    CHECK_THROWS_WITH(make_instance(std::move(t)),
                      Catch::Matchers::ContainsSubstring("no Condorcet winner"));
}
