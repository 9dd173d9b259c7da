#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fairduel/agents.hpp"
#include "fairduel/metrics.hpp"
#include "fairduel/serialize.hpp"

namespace fairduel {

// A sweep: every (instance spec, agent, repetition) cell runs once. Each
// repetition draws a fresh environment from the instance spec; all agents of
// one repetition face the same environment so comparisons are paired.
struct ExperimentConfig {
    std::vector<InstanceSpec> instances;
    std::vector<AgentConfig> agents;
    int repetitions = 30;
    std::int64_t horizon = 10000;
    std::uint64_t master_seed = 0;
    std::int64_t checkpoint_stride = 100;
};

inline nlohmann::json experiment_config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["instances"] = nlohmann::json::array();
    for (const auto& s : c.instances) j["instances"].push_back(instance_spec_to_json(s));
    j["agents"] = nlohmann::json::array();
    for (const auto& a : c.agents) j["agents"].push_back(agent_config_to_json(a));
    j["repetitions"] = c.repetitions;
    j["horizon"] = c.horizon;
    j["master_seed"] = c.master_seed;
    j["checkpoint_stride"] = c.checkpoint_stride;
    return j;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    for (const auto& s : j.at("instances")) c.instances.push_back(instance_spec_from_json(s));
    for (const auto& a : j.at("agents")) c.agents.push_back(agent_config_from_json(a));
    c.repetitions = j.at("repetitions").get<int>();
    c.horizon = j.at("horizon").get<std::int64_t>();
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("checkpoint_stride"))
        c.checkpoint_stride = j.at("checkpoint_stride").get<std::int64_t>();
    return c;
}

inline ExperimentConfig read_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    nlohmann::json j;
    in >> j;
    return experiment_config_from_json(j);
}

inline std::string instance_id(const InstanceSpec& s, int index) {
    std::ostringstream oss;
    oss << "i" << index << "_" << instance_kind_name(s.kind) << "_D" << s.users << "_K" << s.arms;
    if (s.kind == InstanceKind::clustered) oss << "_rho" << s.rho;
    if (s.kind != InstanceKind::hard) oss << "_gap" << s.gap;
    return oss.str();
}

// Seed derivation: every repetition's environment and every agent's run own
// an independent stream of the master seed.
inline RngSeed instance_stream(std::uint64_t master, int inst_idx, int rep) {
    std::uint64_t tag = hash_combine(0x696e7374ULL, static_cast<std::uint64_t>(inst_idx));
    tag = hash_combine(tag, static_cast<std::uint64_t>(rep));
    return RngSeed{master, tag};
}

inline RngSeed agent_stream(std::uint64_t master, int inst_idx, int agent_idx, int rep) {
    std::uint64_t tag = hash_combine(0x6167656eULL, static_cast<std::uint64_t>(inst_idx));
    tag = hash_combine(tag, static_cast<std::uint64_t>(agent_idx));
    tag = hash_combine(tag, static_cast<std::uint64_t>(rep));
    return RngSeed{master, tag};
}

struct SweepRunInfo {
    std::string instance_id;
    std::string instance_file;
    std::string agent;
    int repetition = 0;
    std::string trace_file;
    std::string status = "ok"; // "ok" or the error message
    bool truncated_identify = false;
    bool truncated_explore = false;
    std::int64_t identify_steps = 0;
    std::int64_t explore_steps = 0;
    std::int64_t exploit_steps = 0;
    std::vector<std::int64_t> identify_steps_per_user;
    double optimal_value = 0.0;
    double wall_seconds = 0.0;
};

struct SweepResult {
    std::vector<SummaryCell> cells;
    std::vector<SweepRunInfo> runs;
    int failed_runs = 0;
};

namespace detail {

inline void write_summary_csv(const std::string& path, const std::vector<SummaryCell>& cells) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "instance_id,agent,metric,mean,ci95\n";
    for (const SummaryCell& cell : cells) {
        for (const std::string& name : metric_names()) {
            const MetricStat& s = cell.metrics.at(name);
            out << cell.instance_id << ',' << cell.agent << ',' << name << ','
                << fmt_double(s.mean) << ',' << fmt_double(s.ci95) << '\n';
        }
        out << cell.instance_id << ',' << cell.agent << ",truncated_runs,"
            << cell.truncated_runs << ",0\n";
    }
}

inline nlohmann::json summary_to_json(const std::vector<SummaryCell>& cells) {
    nlohmann::json arr = nlohmann::json::array();
    for (const SummaryCell& cell : cells) {
        nlohmann::json c;
        c["instance_id"] = cell.instance_id;
        c["agent"] = cell.agent;
        c["runs"] = cell.runs;
        c["truncated_runs"] = cell.truncated_runs;
        for (const auto& [name, stat] : cell.metrics)
            c["metrics"][name] = {{"mean", stat.mean}, {"ci95", stat.ci95}};
        arr.push_back(std::move(c));
    }
    return arr;
}

} // namespace detail

// Executes the sweep and persists instances, per-run traces, a manifest, and
// the metric summary (CSV + JSON) under out_dir. Deterministic for a fixed
// config and master seed regardless of the worker count.
inline SweepResult run_experiment(const ExperimentConfig& config, const std::string& out_dir,
                                  int jobs = 1) {
    namespace fs = std::filesystem;
    if (config.repetitions < 1) throw std::invalid_argument("run_experiment: repetitions >= 1");
    if (config.instances.empty() || config.agents.empty())
        throw std::invalid_argument("run_experiment: need at least one instance and agent");
    fs::create_directories(out_dir);
    fs::create_directories(fs::path(out_dir) / "instances");
    fs::create_directories(fs::path(out_dir) / "traces");

    struct Task {
        int inst_idx;
        int rep;
    };
    std::vector<Task> tasks;
    for (int i = 0; i < static_cast<int>(config.instances.size()); ++i)
        for (int r = 0; r < config.repetitions; ++r) tasks.push_back({i, r});

    const int num_agents = static_cast<int>(config.agents.size());
    // metrics[inst][agent][rep]
    std::vector<std::vector<std::vector<RunMetrics>>> metrics(
        config.instances.size(),
        std::vector<std::vector<RunMetrics>>(num_agents,
                                             std::vector<RunMetrics>(config.repetitions)));
    std::vector<std::vector<std::vector<SweepRunInfo>>> infos(
        config.instances.size(),
        std::vector<std::vector<SweepRunInfo>>(num_agents,
                                               std::vector<SweepRunInfo>(config.repetitions)));
    std::vector<std::vector<char>> ok(config.instances.size(),
                                      std::vector<char>(static_cast<std::size_t>(num_agents) *
                                                            config.repetitions,
                                                        0));

    std::atomic<std::size_t> next_task{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t k = next_task.fetch_add(1);
            if (k >= tasks.size()) return;
            const auto [i, rep] = tasks[k];
            const std::string id = instance_id(config.instances[i], i);
            const std::string inst_file =
                (fs::path(out_dir) / "instances" /
                 ("i" + std::to_string(i) + "_rep" + std::to_string(rep) + ".json"))
                    .string();

            Instance inst;
            RunContext ctx;
            bool inst_ok = true;
            std::string inst_error;
            try {
                InstanceSpec spec = config.instances[i];
                spec.seed = instance_stream(config.master_seed, i, rep);
                inst = generate(spec);
                write_instance_file(inst_file, inst);
                ctx = make_run_context(inst, config.checkpoint_stride);
            } catch (const std::exception& e) {
                inst_ok = false;
                inst_error = e.what();
            }

            for (int a = 0; a < num_agents; ++a) {
                SweepRunInfo& info = infos[i][a][rep];
                info.instance_id = id;
                info.instance_file = inst_file;
                info.agent = agent_kind_name(config.agents[a].kind);
                info.repetition = rep;
                const std::string trace_file =
                    (fs::path(out_dir) / "traces" /
                     ("i" + std::to_string(i) + "__" + info.agent + "__rep" +
                      std::to_string(rep) + ".csv"))
                        .string();
                info.trace_file = trace_file;
                if (!inst_ok) {
                    info.status = "instance generation failed: " + inst_error;
                    continue;
                }
                try {
                    AgentConfig cfg = config.agents[a];
                    cfg.horizon = config.horizon;
                    cfg.seed = agent_stream(config.master_seed, i, a, rep);
                    RunRecord record = run_agent(inst, cfg, ctx);
                    write_trace_csv(trace_file, record);
                    metrics[i][a][rep] = run_metrics(record);
                    info.truncated_identify = record.truncated_identify;
                    info.truncated_explore = record.truncated_explore;
                    info.identify_steps = record.identify_steps;
                    info.explore_steps = record.explore_steps;
                    info.exploit_steps = record.exploit_steps;
                    info.identify_steps_per_user = record.identify_steps_per_user;
                    info.optimal_value = record.optimal_value;
                    info.wall_seconds = record.wall_seconds;
                    ok[i][static_cast<std::size_t>(a) * config.repetitions + rep] = 1;
                } catch (const std::exception& e) {
                    info.status = std::string("run failed: ") + e.what();
                }
            }
        }
    };

    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    SweepResult result;
    for (int i = 0; i < static_cast<int>(config.instances.size()); ++i) {
        const std::string id = instance_id(config.instances[i], i);
        for (int a = 0; a < num_agents; ++a) {
            std::vector<RunMetrics> cell_runs;
            for (int r = 0; r < config.repetitions; ++r) {
                if (ok[i][static_cast<std::size_t>(a) * config.repetitions + r])
                    cell_runs.push_back(metrics[i][a][r]);
                else
                    ++result.failed_runs;
                result.runs.push_back(infos[i][a][r]);
            }
            if (!cell_runs.empty())
                result.cells.push_back(
                    summarize_runs(id, agent_kind_name(config.agents[a].kind), cell_runs));
        }
    }

    detail::write_summary_csv((fs::path(out_dir) / "summary.csv").string(), result.cells);
    {
        std::ofstream out(fs::path(out_dir) / "summary.json");
        out << detail::summary_to_json(result.cells).dump(1) << "\n";
    }
    {
        nlohmann::json manifest;
        manifest["config"] = experiment_config_to_json(config);
        manifest["runs"] = nlohmann::json::array();
        for (const SweepRunInfo& info : result.runs) {
            manifest["runs"].push_back({{"instance_id", info.instance_id},
                                        {"instance_file", info.instance_file},
                                        {"agent", info.agent},
                                        {"repetition", info.repetition},
                                        {"trace_file", info.trace_file},
                                        {"status", info.status},
                                        {"truncated_identify", info.truncated_identify},
                                        {"truncated_explore", info.truncated_explore},
                                        {"identify_steps", info.identify_steps},
                                        {"explore_steps", info.explore_steps},
                                        {"exploit_steps", info.exploit_steps},
                                        {"identify_steps_per_user", info.identify_steps_per_user},
                                        {"optimal_value", info.optimal_value},
                                        {"wall_seconds", info.wall_seconds}});
        }
        std::ofstream out(fs::path(out_dir) / "manifest.json");
        out << manifest.dump(1) << "\n";
    }
    return result;
}

// Rebuilds the summary from persisted traces (replay) and emits the tidy
// summary CSV plus per-checkpoint mean regret curves. The curves file lands
// next to out_csv with a "_curves.csv" suffix.
inline void report_from_dir(const std::string& in_dir, const std::string& out_csv) {
    namespace fs = std::filesystem;
    std::ifstream mf(fs::path(in_dir) / "manifest.json");
    if (!mf) throw std::runtime_error("report: no manifest.json under " + in_dir);
    nlohmann::json manifest;
    mf >> manifest;
    const std::int64_t stride = manifest.at("config").value("checkpoint_stride", std::int64_t{100});

    struct Key {
        std::string instance_id;
        std::string agent;
        bool operator<(const Key& o) const {
            return instance_id != o.instance_id ? instance_id < o.instance_id : agent < o.agent;
        }
    };
    std::map<Key, std::vector<RunMetrics>> groups;
    std::map<Key, std::map<std::int64_t, std::vector<double>>> curves;
    std::vector<Key> order;
    std::map<std::string, Instance> instances;

    for (const auto& run : manifest.at("runs")) {
        if (run.at("status").get<std::string>() != "ok") continue;
        const Key key{run.at("instance_id").get<std::string>(),
                      run.at("agent").get<std::string>()};
        const std::string inst_file = run.at("instance_file").get<std::string>();
        if (!instances.count(inst_file)) instances.emplace(inst_file, read_instance_file(inst_file));
        const Instance& inst = instances.at(inst_file);

        TraceData trace = read_trace_csv(run.at("trace_file").get<std::string>());
        RunRecord replayed;
        replayed.steps = std::move(trace.steps);
        const std::vector<double> utilities = cumulative_utilities(replayed, inst.scores);
        const bool truncated = run.at("truncated_identify").get<bool>() ||
                               run.at("truncated_explore").get<bool>();
        if (!groups.count(key)) order.push_back(key);
        groups[key].push_back(run_metrics_from(utilities, trace.regret_cum_final, truncated));

        double cum = 0.0;
        std::int64_t t = 0;
        for (const StepEntry& s : replayed.steps) {
            cum += s.regret;
            ++t;
            if (t % stride == 0 || t == static_cast<std::int64_t>(replayed.steps.size()))
                curves[key][t].push_back(cum);
        }
    }

    std::vector<SummaryCell> cells;
    for (const Key& key : order)
        cells.push_back(summarize_runs(key.instance_id, key.agent, groups.at(key)));
    detail::write_summary_csv(out_csv, cells);

    std::string curves_path = out_csv;
    const std::size_t dot = curves_path.rfind(".csv");
    if (dot != std::string::npos)
        curves_path = curves_path.substr(0, dot) + "_curves.csv";
    else
        curves_path += "_curves.csv";
    std::ofstream out(curves_path);
    if (!out) throw std::runtime_error("cannot open for writing: " + curves_path);
    out << "instance_id,agent,t,mean_regret_cum,ci95\n";
    for (const Key& key : order) {
        for (const auto& [t, values] : curves.at(key)) {
            const MetricStat s = summarize_values(values);
            out << key.instance_id << ',' << key.agent << ',' << t << ',' << fmt_double(s.mean)
                << ',' << fmt_double(s.ci95) << '\n';
        }
    }
}

} // namespace fairduel
