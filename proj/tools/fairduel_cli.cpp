// Command-line front end: generate environments, run single agent episodes,
// execute sweeps, and rebuild reports from persisted traces.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fairduel/agents.hpp"
#include "fairduel/experiment.hpp"
#include "fairduel/serialize.hpp"

using namespace fairduel;

int main(int argc, char** argv) {
    CLI::App app{"fair multi-user dueling bandit simulator"};
    app.require_subcommand(1);

    // --- gen ---------------------------------------------------------------
    std::string gen_kind = "random", gen_out;
    InstanceSpec spec;
    std::uint64_t gen_seed = 0;
    auto* gen = app.add_subcommand("gen", "generate a preference-tensor environment");
    gen->add_option("--kind", gen_kind, "random|clustered|hard")->required();
    gen->add_option("--users", spec.users, "number of users D")->required();
    gen->add_option("--arms", spec.arms, "number of arms K")->required();
    gen->add_option("--gap", spec.gap, "minimum preference gap (random, clustered)");
    gen->add_option("--rho", spec.rho, "majority fraction (clustered)");
    gen->add_option("--eps", spec.eps, "perturbation eps (hard)");
    gen->add_option("--eps-prime", spec.eps_prime, "margin eps' (hard)");
    gen->add_option("--target-m", spec.target_m, "distinguished good winner arm (hard)");
    gen->add_option("--seed", gen_seed, "master seed");
    gen->add_option("--out", gen_out, "output instance JSON path")->required();

    // --- run ---------------------------------------------------------------
    std::string run_env, run_agent_name, run_out;
    AgentConfig agent_cfg;
    std::uint64_t run_seed = 0;
    std::int64_t run_horizon = 0;
    auto* run = app.add_subcommand("run", "run one agent on an environment");
    run->add_option("--env", run_env, "instance JSON path")->required();
    run->add_option("--agent", run_agent_name,
                    "fair-etc|fair-eps|util-etc|util-eps|uniform-users")
        ->required();
    run->add_option("--horizon", run_horizon, "time horizon T")->required();
    run->add_option("--delta-hat", agent_cfg.delta_hat, "confidence knob (default 0.0025)");
    run->add_option("--etc-scale", agent_cfg.etc_scale, "scale on L (default 0.25)");
    run->add_option("--eps-scale", agent_cfg.eps_scale, "scale on eps_t (default 0.1)");
    run->add_option("--seed", run_seed, "run seed");
    run->add_option("--out", run_out, "output trace CSV path")->required();

    // --- sweep -------------------------------------------------------------
    std::string sweep_config, sweep_out;
    int sweep_jobs = 1;
    auto* sweep = app.add_subcommand("sweep", "run a full experiment grid");
    sweep->add_option("--config", sweep_config, "experiment config JSON")->required();
    sweep->add_option("--jobs", sweep_jobs, "worker threads (default 1)");
    sweep->add_option("--out", sweep_out, "output directory")->required();

    // --- report ------------------------------------------------------------
    std::string report_in, report_out;
    auto* report = app.add_subcommand("report", "summarize a sweep directory from its traces");
    report->add_option("--in", report_in, "sweep output directory")->required();
    report->add_option("--out", report_out, "summary CSV path (curves land at *_curves.csv)")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            spec.kind = parse_instance_kind(gen_kind);
            spec.seed = RngSeed{gen_seed, 0};
            const Instance inst = generate(spec);
            write_instance_file(gen_out, inst);
            std::cout << "wrote " << gen_out << " (D=" << spec.users << ", K=" << spec.arms
                      << ", kind=" << gen_kind << ")\n";
        } else if (run->parsed()) {
            const Instance inst = read_instance_file(run_env);
            agent_cfg.kind = parse_agent_kind(run_agent_name);
            agent_cfg.horizon = run_horizon;
            agent_cfg.seed = RngSeed{run_seed, 0};
            const RunContext ctx = make_run_context(inst);
            const RunRecord record = run_agent(inst, agent_cfg, ctx);
            write_trace_csv(run_out, record);
            const RunMetrics m = run_metrics(record);
            std::cout << "agent=" << run_agent_name << " T=" << record.steps.size()
                      << " regret=" << m.cumulative_regret << " nsw=" << m.nsw
                      << " min_welfare=" << m.min_welfare << " gini=" << m.gini
                      << " util=" << m.utilitarian_welfare
                      << (record.truncated_identify ? " [truncated in identify]" : "")
                      << (record.truncated_explore ? " [truncated in explore]" : "") << "\n";
            std::cout << "wrote " << run_out << "\n";
        } else if (sweep->parsed()) {
            const ExperimentConfig config = read_experiment_config(sweep_config);
            const SweepResult result = run_experiment(config, sweep_out, sweep_jobs);
            std::cout << "sweep complete: " << result.runs.size() << " runs, "
                      << result.failed_runs << " failed; summary at " << sweep_out
                      << "/summary.csv\n";
            if (result.failed_runs > 0) {
                for (const auto& info : result.runs)
                    if (info.status != "ok")
                        std::cerr << info.instance_id << " " << info.agent << " rep"
                                  << info.repetition << ": " << info.status << "\n";
                return 1;
            }
        } else if (report->parsed()) {
            report_from_dir(report_in, report_out);
            std::cout << "wrote " << report_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
