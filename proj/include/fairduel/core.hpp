#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairduel {

// Pairwise win probabilities for D users over K arms. Entry (d, i, j) is the
// probability that user d prefers arm i over arm j. Reciprocal by
// construction: probs(d,i,j) + probs(d,j,i) = 1, diagonal 0.5.
struct PreferenceTensor {
    int num_users = 0;
    int num_arms = 0;
    std::vector<double> probs; // row-major d -> i -> j

    PreferenceTensor() = default;
    PreferenceTensor(int users, int arms)
        : num_users(users), num_arms(arms),
          probs(static_cast<std::size_t>(users) * arms * arms, 0.5) {
        if (users <= 0 || arms <= 0)
            throw std::invalid_argument("PreferenceTensor: users and arms must be positive");
    }

    double at(int d, int i, int j) const {
        return probs[(static_cast<std::size_t>(d) * num_arms + i) * num_arms + j];
    }
    double& at(int d, int i, int j) {
        return probs[(static_cast<std::size_t>(d) * num_arms + i) * num_arms + j];
    }
};

// Per-user Condorcet winners plus the deduplicated winner set.
struct WinnerSet {
    std::vector<int> winners;  // winners[d] = a*_d
    std::vector<int> distinct; // sorted unique winners
};

inline WinnerSet make_winner_set(std::vector<int> winners) {
    WinnerSet ws;
    ws.distinct = winners;
    std::sort(ws.distinct.begin(), ws.distinct.end());
    ws.distinct.erase(std::unique(ws.distinct.begin(), ws.distinct.end()), ws.distinct.end());
    ws.winners = std::move(winners);
    return ws;
}

// D x K utilities, entry (d, a) = s_d(a) in [0, 1].
struct ScoreMatrix {
    int num_users = 0;
    int num_arms = 0;
    std::vector<double> scores;

    ScoreMatrix() = default;
    ScoreMatrix(int users, int arms)
        : num_users(users), num_arms(arms),
          scores(static_cast<std::size_t>(users) * arms, 0.0) {}

    double at(int d, int a) const {
        return scores[static_cast<std::size_t>(d) * num_arms + a];
    }
    double& at(int d, int a) {
        return scores[static_cast<std::size_t>(d) * num_arms + a];
    }
    std::span<const double> row(int d) const {
        return {scores.data() + static_cast<std::size_t>(d) * num_arms,
                static_cast<std::size_t>(num_arms)};
    }
};

// A point on the K-simplex.
struct Policy {
    std::vector<double> weights;
};

inline constexpr double kPolicySumTolerance = 1e-9;

inline bool is_valid_policy(const Policy& pi) {
    double sum = 0.0;
    for (double w : pi.weights) {
        if (!(w >= 0.0)) return false;
        sum += w;
    }
    return std::abs(sum - 1.0) <= kPolicySumTolerance;
}

inline Policy uniform_policy(int arms) {
    Policy pi;
    pi.weights.assign(arms, 1.0 / arms);
    return pi;
}

inline Policy point_mass(int arms, int arm) {
    Policy pi;
    pi.weights.assign(arms, 0.0);
    pi.weights[arm] = 1.0;
    return pi;
}

// One duel's outcome for every user: outcomes[d] = 1 iff user d preferred
// the first arm of the pair.
struct FeedbackVector {
    std::vector<std::uint8_t> outcomes;
};

// ---------------------------------------------------------------------------
// Tensor validation

enum class ViolationKind { reciprocity, diagonal, range };

struct TensorViolation {
    ViolationKind kind;
    int user;
    int arm_i;
    int arm_j;
    double value; // offending sum or entry
};

struct TensorValidation {
    bool ok = true;
    std::vector<TensorViolation> violations;
};

// Checks reciprocity (within one representable unit of 1), the 0.5 diagonal,
// and the [0,1] range. Never throws: every violating coordinate is reported.
inline TensorValidation validate_tensor(const PreferenceTensor& t) {
    TensorValidation result;
    const double eps = std::numeric_limits<double>::epsilon();
    for (int d = 0; d < t.num_users; ++d) {
        for (int i = 0; i < t.num_arms; ++i) {
            const double pii = t.at(d, i, i);
            if (pii != 0.5)
                result.violations.push_back({ViolationKind::diagonal, d, i, i, pii});
            for (int j = 0; j < t.num_arms; ++j) {
                const double p = t.at(d, i, j);
                if (!(p >= 0.0 && p <= 1.0))
                    result.violations.push_back({ViolationKind::range, d, i, j, p});
                if (i < j) {
                    const double sum = p + t.at(d, j, i);
                    if (std::abs(sum - 1.0) > eps)
                        result.violations.push_back({ViolationKind::reciprocity, d, i, j, sum});
                }
            }
        }
    }
    result.ok = result.violations.empty();
    return result;
}

// ---------------------------------------------------------------------------
// Condorcet winners and scores

// Brute-force search for each user's Condorcet winner: the arm beating every
// other arm with probability > 0.5. Users without one are reported, not fatal.
struct WinnerSearch {
    std::vector<int> winners;       // -1 where no winner exists
    std::vector<int> users_without; // users lacking a Condorcet winner

    bool all_found() const { return users_without.empty(); }

    WinnerSet winner_set() const {
        if (!all_found())
            throw std::runtime_error("winner_set: some users have no Condorcet winner");
        return make_winner_set(winners);
    }
};

inline WinnerSearch find_true_winners(const PreferenceTensor& t) {
    WinnerSearch out;
    out.winners.assign(t.num_users, -1);
    for (int d = 0; d < t.num_users; ++d) {
        for (int a = 0; a < t.num_arms; ++a) {
            bool dominant = true;
            for (int j = 0; j < t.num_arms; ++j) {
                if (j != a && !(t.at(d, a, j) > 0.5)) {
                    dominant = false;
                    break;
                }
            }
            if (dominant) {
                out.winners[d] = a;
                break; // unique if it exists
            }
        }
        if (out.winners[d] < 0) out.users_without.push_back(d);
    }
    return out;
}

// s_d(a) = clamp(2 * P(d, a, a*_d), 0, 1); the winner's own score is exactly 1.
// The clamp absorbs floating-point excursions above 1 that the dominance
// structure otherwise forbids.
inline ScoreMatrix derive_scores(const PreferenceTensor& t, const WinnerSet& winners) {
    if (static_cast<int>(winners.winners.size()) != t.num_users)
        throw std::invalid_argument("derive_scores: winner list does not match user count");
    ScoreMatrix s(t.num_users, t.num_arms);
    for (int d = 0; d < t.num_users; ++d) {
        const int w = winners.winners[d];
        if (w < 0 || w >= t.num_arms)
            throw std::invalid_argument("derive_scores: winner index out of range");
        for (int a = 0; a < t.num_arms; ++a)
            s.at(d, a) = std::clamp(2.0 * t.at(d, a, w), 0.0, 1.0);
        s.at(d, w) = 1.0;
    }
    return s;
}

// Expected score of a policy for one user: sum_a pi(a) * s_d(a).
inline double expected_utility(const Policy& pi, std::span<const double> user_scores) {
    if (pi.weights.size() != user_scores.size())
        throw std::invalid_argument("expected_utility: dimension mismatch");
    double u = 0.0;
    for (std::size_t a = 0; a < user_scores.size(); ++a)
        u += pi.weights[a] * user_scores[a];
    return u;
}

} // namespace fairduel
