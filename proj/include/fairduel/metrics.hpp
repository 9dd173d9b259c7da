#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairduel/core.hpp"
#include "fairduel/record.hpp"
#include "fairduel/welfare.hpp"

namespace fairduel {

// Instantaneous NSW regret of one step given the precomputed optimum:
// r_t = opt - (NSW(pi) + NSW(pi')) / 2.
inline double instantaneous_regret(const ScoreMatrix& true_scores, double optimal_value,
                                   const Policy& pi, const Policy& pi_prime) {
    return optimal_value - 0.5 * (nsw_value(pi, true_scores) + nsw_value(pi_prime, true_scores));
}

// Replays a trace against the true scores:
// u_d(T) = sum_t 0.5 * (s_d(i_t) + s_d(j_t)).
inline std::vector<double> cumulative_utilities(const RunRecord& record,
                                                const ScoreMatrix& true_scores) {
    std::vector<double> u(true_scores.num_users, 0.0);
    for (const StepEntry& s : record.steps)
        for (int d = 0; d < true_scores.num_users; ++d)
            u[d] += 0.5 * (true_scores.at(d, s.arm_i) + true_scores.at(d, s.arm_j));
    return u;
}

// Gini coefficient G = sum_ij |u_i - u_j| / (2 D sum_k u_k); all-zero
// utilities are reported as 0 with the flag set.
inline double gini(const std::vector<double>& utilities, bool* all_zero = nullptr) {
    if (utilities.empty()) throw std::invalid_argument("gini: empty utility vector");
    double total = 0.0;
    for (double u : utilities) {
        if (u < 0.0) throw std::invalid_argument("gini: utilities must be nonnegative");
        total += u;
    }
    if (all_zero) *all_zero = total == 0.0;
    if (total == 0.0) return 0.0;
    double abs_diff = 0.0;
    for (double ui : utilities)
        for (double uj : utilities) abs_diff += std::abs(ui - uj);
    return abs_diff / (2.0 * static_cast<double>(utilities.size()) * total);
}

// Geometric mean of cumulative utilities; 0 if any user ended at 0.
inline double nsw_of_utilities(const std::vector<double>& utilities) {
    double log_sum = 0.0;
    for (double u : utilities) {
        if (u == 0.0) return 0.0;
        log_sum += std::log(u);
    }
    return std::exp(log_sum / static_cast<double>(utilities.size()));
}

struct RunMetrics {
    double cumulative_regret = 0.0;
    double nsw = 0.0; // geometric mean of final utilities
    double min_welfare = 0.0;
    double gini = 0.0;
    double utilitarian_welfare = 0.0;
    bool truncated = false;
};

inline RunMetrics run_metrics_from(const std::vector<double>& utilities, double cumulative_regret,
                                   bool truncated = false) {
    RunMetrics m;
    m.cumulative_regret = cumulative_regret;
    m.nsw = nsw_of_utilities(utilities);
    m.min_welfare = *std::min_element(utilities.begin(), utilities.end());
    m.gini = gini(utilities);
    m.utilitarian_welfare = 0.0;
    for (double u : utilities) m.utilitarian_welfare += u;
    m.truncated = truncated;
    return m;
}

inline RunMetrics run_metrics(const RunRecord& record) {
    return run_metrics_from(record.final_utilities, record.regret_cum_final,
                            record.truncated_identify || record.truncated_explore);
}

struct MetricStat {
    double mean = 0.0;
    double ci95 = 0.0; // 1.96 * sd / sqrt(n); 0 for a single run
};

inline MetricStat summarize_values(const std::vector<double>& values) {
    MetricStat s;
    const std::size_t n = values.size();
    if (n == 0) return s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(n);
    if (n < 2) return s;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    s.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(n));
    return s;
}

inline const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names = {
        "cumulative_regret", "nsw", "min_welfare", "gini", "utilitarian_welfare"};
    return names;
}

// Mean and 95% normal-approximation confidence interval of every metric over
// a set of runs of one (instance, agent) cell.
struct SummaryCell {
    std::string instance_id;
    std::string agent;
    int runs = 0;
    int truncated_runs = 0;
    std::map<std::string, MetricStat> metrics;
};

inline SummaryCell summarize_runs(std::string instance_id, std::string agent,
                                  const std::vector<RunMetrics>& runs) {
    if (runs.empty()) throw std::invalid_argument("summarize_runs: need at least one run");
    SummaryCell cell;
    cell.instance_id = std::move(instance_id);
    cell.agent = std::move(agent);
    cell.runs = static_cast<int>(runs.size());
    std::vector<double> v(runs.size());
    auto fill = [&](auto getter) {
        for (std::size_t i = 0; i < runs.size(); ++i) v[i] = getter(runs[i]);
        return summarize_values(v);
    };
    cell.metrics["cumulative_regret"] = fill([](const RunMetrics& m) { return m.cumulative_regret; });
    cell.metrics["nsw"] = fill([](const RunMetrics& m) { return m.nsw; });
    cell.metrics["min_welfare"] = fill([](const RunMetrics& m) { return m.min_welfare; });
    cell.metrics["gini"] = fill([](const RunMetrics& m) { return m.gini; });
    cell.metrics["utilitarian_welfare"] =
        fill([](const RunMetrics& m) { return m.utilitarian_welfare; });
    for (const RunMetrics& m : runs) cell.truncated_runs += m.truncated ? 1 : 0;
    return cell;
}

} // namespace fairduel
