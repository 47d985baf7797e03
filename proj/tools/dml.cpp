// Command-line frontend: batch experiments, energy-trace export,
// significance reports over error matrices, synthetic data generation.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dml/dml.hpp"

namespace {

void add_solver_flags(CLI::App* cmd, dml::OptimizerConfig& solver, std::string& schedule,
                      std::string& proposal, std::string& init) {
    cmd->add_option("--schedule", schedule, "annealing | quench | fixed")
        ->default_val("annealing");
    cmd->add_option("--t0", solver.schedule.t0, "initial temperature")->default_val(0.1);
    cmd->add_option("--alpha", solver.schedule.alpha, "annealing decay factor")->default_val(0.9);
    cmd->add_option("--fixed-t", solver.schedule.fixed_t, "temperature for the fixed schedule");
    cmd->add_option("--proposal", proposal, "single | full")->default_val("single");
    cmd->add_option("--step", solver.proposal.step_scale, "uniform proposal half-width")
        ->default_val(1.0);
    cmd->add_option("--max-sweeps", solver.max_sweeps, "sweep budget")->default_val(2000);
    cmd->add_option("--epsilon", solver.epsilon, "convergence tolerance")->default_val(1e-5);
    cmd->add_option("--patience", solver.patience, "sweeps the tolerance is measured over")
        ->default_val(50);
    cmd->add_option("--init", init, "uniform | identity")->default_val("uniform");
}

void apply_solver_strings(dml::OptimizerConfig& solver, const std::string& schedule,
                          const std::string& proposal, const std::string& init) {
    if (schedule == "annealing") solver.schedule.kind = dml::TemperatureSchedule::Kind::Annealing;
    else if (schedule == "quench") solver.schedule.kind = dml::TemperatureSchedule::Kind::Quench;
    else if (schedule == "fixed") solver.schedule.kind = dml::TemperatureSchedule::Kind::Fixed;
    else throw CLI::ValidationError("--schedule must be annealing, quench or fixed");
    if (proposal == "single") solver.proposal.kind = dml::ProposalPolicy::Kind::SingleElement;
    else if (proposal == "full") solver.proposal.kind = dml::ProposalPolicy::Kind::FullMatrix;
    else throw CLI::ValidationError("--proposal must be single or full");
    if (init == "uniform") solver.init = dml::InitMode::Uniform01;
    else if (init == "identity") solver.init = dml::InitMode::Identity;
    else throw CLI::ValidationError("--init must be uniform or identity");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distance metric learning by Metropolis Monte Carlo"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "execute a config-driven experiment");
    std::string config_path;
    run->add_option("--config", config_path, "experiment config file")->required();

    // trace
    auto* trace = app.add_subcommand("trace", "export annealing and quench energy traces");
    dml::TraceOptions trace_options;
    std::string trace_schedule, trace_proposal, trace_init;
    trace->add_option("--data", trace_options.dataset,
                      "builtin name, synthetic kind, or dataset path")
        ->required();
    trace->add_option("--out", trace_options.output_dir, "output directory")->required();
    trace->add_option("--restarts", trace_options.restarts, "number of quench runs")
        ->default_val(20);
    trace->add_option("--seed", trace_options.seed, "base seed")->default_val(0);
    trace->add_option("--n", trace_options.synthetic_n, "size of generated synthetic data")
        ->default_val(60);
    trace->add_option("--snapshot-interval", trace_options.snapshot_interval,
                      "sweeps between 2-D snapshots")
        ->default_val(50);
    add_solver_flags(trace, trace_options.solver, trace_schedule, trace_proposal, trace_init);

    // stats
    auto* stats = app.add_subcommand("stats", "rank methods and run significance tests");
    std::string matrix_path, control = "DMLFE", stats_out;
    stats->add_option("--matrix", matrix_path, "error-matrix CSV (rows datasets, cols methods)")
        ->required();
    stats->add_option("--control", control, "control method name")->required();
    stats->add_option("--out", stats_out, "optional directory for report files");

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    std::string gen_kind;
    std::size_t gen_n = 60;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    gen->add_option("--kind", gen_kind, "two-gaussians | three-class-rings | xor")->required();
    gen->add_option("--n", gen_n, "pattern count")->default_val(60);
    gen->add_option("--seed", gen_seed, "generator seed")->default_val(0);
    gen->add_option("--out", gen_out, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const dml::ExperimentConfig config = dml::parse_experiment_config(config_path);
            return dml::command_run(config);
        }
        if (trace->parsed()) {
            apply_solver_strings(trace_options.solver, trace_schedule, trace_proposal, trace_init);
            return dml::command_trace(trace_options);
        }
        if (stats->parsed()) return dml::command_stats(matrix_path, control, stats_out);
        if (gen->parsed()) return dml::command_gen(gen_kind, gen_n, gen_seed, gen_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
