#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fairduel/core.hpp"

namespace fairduel {

// Frank-Wolfe settings. The gap tolerance applies to the duality gap of the
// log-domain objective sum_d ln(max(<pi, s_d>, floor)); the floor is used
// only inside gradient and objective evaluation, never in reported values.
struct SolverSettings {
    int max_iterations = 2000;
    double gap_tolerance = 1e-8;
    double utility_floor = 1e-12;
};

// Nash social welfare of a policy: product over users of expected scores.
inline double nsw_value(const Policy& pi, const ScoreMatrix& scores) {
    double v = 1.0;
    for (int d = 0; d < scores.num_users; ++d)
        v *= expected_utility(pi, scores.row(d));
    return v;
}

// Utilitarian welfare: sum over users of expected scores.
inline double utilitarian_value(const Policy& pi, const ScoreMatrix& scores) {
    double v = 0.0;
    for (int d = 0; d < scores.num_users; ++d)
        v += expected_utility(pi, scores.row(d));
    return v;
}

// L1 distance between two score matrices; by the NSW Lipschitz property,
// |NSW(pi, s1) - NSW(pi, s2)| never exceeds it.
inline double nsw_lipschitz_bound(const ScoreMatrix& s1, const ScoreMatrix& s2) {
    if (s1.num_users != s2.num_users || s1.num_arms != s2.num_arms)
        throw std::invalid_argument("nsw_lipschitz_bound: dimension mismatch");
    double b = 0.0;
    for (std::size_t k = 0; k < s1.scores.size(); ++k)
        b += std::abs(s1.scores[k] - s2.scores[k]);
    return b;
}

// Log-domain objective g(pi) = sum_d ln(max(<pi, s_d>, floor)).
inline double log_objective(const Policy& pi, const ScoreMatrix& scores, double floor) {
    double g = 0.0;
    for (int d = 0; d < scores.num_users; ++d)
        g += std::log(std::max(expected_utility(pi, scores.row(d)), floor));
    return g;
}

// Analytic gradient dg/dpi_a = sum_d s_d(a) / max(<pi, s_d>, floor).
inline std::vector<double> log_objective_gradient(const Policy& pi, const ScoreMatrix& scores,
                                                  double floor) {
    std::vector<double> grad(scores.num_arms, 0.0);
    for (int d = 0; d < scores.num_users; ++d) {
        const auto row = scores.row(d);
        const double u = std::max(expected_utility(pi, row), floor);
        for (int a = 0; a < scores.num_arms; ++a) grad[a] += row[a] / u;
    }
    return grad;
}

struct NswSolveResult {
    Policy policy;
    double value = 0.0; // nsw_value of the returned policy, never floored
    double gap = 0.0;   // final Frank-Wolfe duality gap on the log objective
    int iterations = 0;
    bool degenerate = false; // all-zero score matrix
};

// Called once per Frank-Wolfe iteration with the log objective and the raw
// NSW value of the current iterate; used by tests to check monotonicity.
using SolveObserver = std::function<void(int iteration, double log_obj, double nsw)>;

// Maximizes the NSW objective over the simplex with Frank-Wolfe (with away
// steps) on the concave log objective. Starts at the uniform policy; the
// linear subproblem picks the largest gradient coordinate (lowest index on
// ties) and the away atom is the worst active coordinate. Away steps are
// required for a face-supported optimum: the plain method zigzags there and
// its gap decays only harmonically, far short of the tolerances used here.
// Steps use an exact line search by 50 bisection steps on the derivative of
// the 1-D restriction; a towards step whose derivative has no sign change in
// [0, 1] falls back to 2/(k+2), an away step moves to the boundary and drops
// the atom. Stops when the Frank-Wolfe duality gap falls below
// gap_tolerance.
inline NswSolveResult maximize_nsw(const ScoreMatrix& scores, const SolverSettings& settings = {},
                                   const SolveObserver& observer = {}) {
    const int D = scores.num_users;
    const int K = scores.num_arms;
    if (D <= 0 || K <= 0) throw std::invalid_argument("maximize_nsw: empty score matrix");
    const double floor = settings.utility_floor;

    NswSolveResult result;
    result.policy = uniform_policy(K);

    const bool all_zero =
        std::all_of(scores.scores.begin(), scores.scores.end(), [](double s) { return s == 0.0; });
    if (all_zero) {
        result.degenerate = true;
        result.value = 0.0;
        return result;
    }

    std::vector<double>& pi = result.policy.weights;
    // Per-user utilities of the current iterate, maintained incrementally.
    std::vector<double> util(D);
    for (int d = 0; d < D; ++d) util[d] = expected_utility(result.policy, scores.row(d));

    std::vector<double> grad(K), dir(D);
    int iter = 0;
    for (; iter < settings.max_iterations; ++iter) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (int d = 0; d < D; ++d) {
            const auto row = scores.row(d);
            const double u = std::max(util[d], floor);
            for (int a = 0; a < K; ++a) grad[a] += row[a] / u;
        }
        double grad_dot_pi = 0.0;
        for (int a = 0; a < K; ++a) grad_dot_pi += grad[a] * pi[a];

        int towards = 0;
        for (int a = 1; a < K; ++a)
            if (grad[a] > grad[towards]) towards = a;
        int away = -1;
        for (int a = 0; a < K; ++a)
            if (pi[a] > 0.0 && (away < 0 || grad[a] < grad[away])) away = a;

        const double fw_gap = grad[towards] - grad_dot_pi;
        const double away_gap = grad_dot_pi - grad[away];
        result.gap = fw_gap;
        if (observer) observer(iter, log_objective(result.policy, scores, floor),
                               nsw_value(result.policy, scores));
        if (fw_gap <= settings.gap_tolerance) break;

        const bool towards_step = fw_gap >= away_gap;
        // Utilities move as util_d + gamma * dir_d along either direction.
        double gamma_max;
        if (towards_step) {
            for (int d = 0; d < D; ++d) dir[d] = scores.at(d, towards) - util[d];
            gamma_max = 1.0;
        } else {
            for (int d = 0; d < D; ++d) dir[d] = util[d] - scores.at(d, away);
            gamma_max = pi[away] / (1.0 - pi[away]);
        }
        auto phi_prime = [&](double gamma) {
            double v = 0.0;
            for (int d = 0; d < D; ++d)
                v += dir[d] / std::max(util[d] + gamma * dir[d], floor);
            return v;
        };

        double gamma;
        if (phi_prime(gamma_max) >= 0.0) {
            gamma = towards_step ? std::min(gamma_max, 2.0 / (iter + 2.0)) : gamma_max;
        } else {
            double lo = 0.0, hi = gamma_max;
            for (int b = 0; b < 50; ++b) {
                const double mid = 0.5 * (lo + hi);
                (phi_prime(mid) > 0.0 ? lo : hi) = mid;
            }
            gamma = 0.5 * (lo + hi);
        }

        if (towards_step) {
            for (int a = 0; a < K; ++a) pi[a] *= (1.0 - gamma);
            pi[towards] += gamma;
        } else {
            // pi <- (1 + gamma) pi - gamma e_away; gamma_max lands exactly on
            // the facet and drops the atom.
            for (int a = 0; a < K; ++a) pi[a] *= (1.0 + gamma);
            pi[away] -= gamma;
            if (gamma >= gamma_max || pi[away] < 1e-16) pi[away] = 0.0;
        }
        for (int d = 0; d < D; ++d) util[d] += gamma * dir[d];
    }
    result.iterations = iter;

    // Exact renormalization so the simplex invariant holds bit-tight.
    double sum = 0.0;
    for (double w : pi) sum += w;
    for (double& w : pi) w /= sum;

    result.value = nsw_value(result.policy, scores);
    return result;
}

struct UtilitarianSolveResult {
    Policy policy;
    double value = 0.0;
    int best_arm = 0;
};

// The utilitarian objective is linear, so a vertex is optimal: point mass on
// the arm with the largest score column sum, lowest index on ties.
inline UtilitarianSolveResult maximize_utilitarian(const ScoreMatrix& scores) {
    if (scores.num_users <= 0 || scores.num_arms <= 0)
        throw std::invalid_argument("maximize_utilitarian: empty score matrix");
    UtilitarianSolveResult result;
    double best_sum = -1.0;
    for (int a = 0; a < scores.num_arms; ++a) {
        double col = 0.0;
        for (int d = 0; d < scores.num_users; ++d) col += scores.at(d, a);
        if (col > best_sum) {
            best_sum = col;
            result.best_arm = a;
        }
    }
    result.policy = point_mass(scores.num_arms, result.best_arm);
    result.value = best_sum;
    return result;
}

} // namespace fairduel
