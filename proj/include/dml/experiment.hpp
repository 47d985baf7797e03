#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dml/cross_validation.hpp"
#include "dml/dataset.hpp"
#include "dml/error_matrix.hpp"
#include "dml/io.hpp"
#include "dml/parallel.hpp"
#include "dml/solver.hpp"
#include "dml/stats.hpp"
#include "dml/synthetic.hpp"

namespace dml {

/// Everything a batch experiment needs, parsed from a flat
/// "key = value" config file ('#' starts a comment). Unknown keys are
/// rejected so that validation is total.
struct ExperimentConfig {
    std::vector<std::string> datasets;
    std::vector<std::string> methods;
    std::string output_dir = "results";
    std::uint64_t seed = 0;
    std::size_t workers = 0;  // 0 = resolve from DML_WORKERS / hardware
    std::string control = "dmlfe";
    std::optional<std::size_t> label_column;  // nullopt = last

    CvPlan cv;
    OptimizerConfig solver;
    std::size_t quench_restarts = 20;
    GradientConfig gradient;
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    for (const std::string& item : split(value, ','))
        if (!item.empty()) items.push_back(item);
    return items;
}

inline double to_double(const std::string& key, const std::string& value) {
    double out;
    if (!parse_double(value, out))
        throw std::invalid_argument("config: bad numeric value for " + key + ": '" + value + "'");
    return out;
}

inline std::size_t to_count(const std::string& key, const std::string& value) {
    const double v = to_double(key, value);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw std::invalid_argument("config: " + key + " must be a non-negative integer");
    return static_cast<std::size_t>(v);
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error(path + ": cannot open config file");

    ExperimentConfig config;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        std::string_view content = detail::trim(line);
        if (const std::size_t hash = content.find('#'); hash != std::string_view::npos)
            content = detail::trim(content.substr(0, hash));
        if (content.empty()) continue;
        const std::size_t eq = content.find('=');
        if (eq == std::string_view::npos)
            throw parse_error(path + ": line " + std::to_string(line_number) +
                              ": expected 'key = value'");
        const std::string key{detail::trim(content.substr(0, eq))};
        const std::string value{detail::trim(content.substr(eq + 1))};

        if (key == "datasets") config.datasets = detail::split_list(value);
        else if (key == "methods") config.methods = detail::split_list(value);
        else if (key == "out") config.output_dir = value;
        else if (key == "seed") config.seed = static_cast<std::uint64_t>(detail::to_count(key, value));
        else if (key == "workers") config.workers = detail::to_count(key, value);
        else if (key == "control") config.control = value;
        else if (key == "label_column") {
            if (value == "last") config.label_column.reset();
            else config.label_column = detail::to_count(key, value);
        } else if (key == "scaling") {
            if (value == "per-fold") config.cv.global_scaling = false;
            else if (value == "global") config.cv.global_scaling = true;
            else throw parse_error(path + ": scaling must be per-fold or global");
        } else if (key == "cv.runs") config.cv.runs = detail::to_count(key, value);
        else if (key == "cv.folds") config.cv.folds = detail::to_count(key, value);
        else if (key == "cv.kmax") config.cv.kmax = detail::to_count(key, value);
        else if (key == "cv.k_selection") {
            if (value == "average") config.cv.k_selection = KSelection::DatasetAverage;
            else if (value == "per-fold") config.cv.k_selection = KSelection::PerFold;
            else throw parse_error(path + ": cv.k_selection must be average or per-fold");
        } else if (key == "solver.schedule") {
            if (value == "annealing") config.solver.schedule.kind = TemperatureSchedule::Kind::Annealing;
            else if (value == "quench") config.solver.schedule.kind = TemperatureSchedule::Kind::Quench;
            else if (value == "fixed") config.solver.schedule.kind = TemperatureSchedule::Kind::Fixed;
            else throw parse_error(path + ": solver.schedule must be annealing, quench or fixed");
        } else if (key == "solver.t0") config.solver.schedule.t0 = detail::to_double(key, value);
        else if (key == "solver.alpha") config.solver.schedule.alpha = detail::to_double(key, value);
        else if (key == "solver.fixed_t") config.solver.schedule.fixed_t = detail::to_double(key, value);
        else if (key == "solver.proposal") {
            if (value == "single") config.solver.proposal.kind = ProposalPolicy::Kind::SingleElement;
            else if (value == "full") config.solver.proposal.kind = ProposalPolicy::Kind::FullMatrix;
            else throw parse_error(path + ": solver.proposal must be single or full");
        } else if (key == "solver.step") config.solver.proposal.step_scale = detail::to_double(key, value);
        else if (key == "solver.max_sweeps") config.solver.max_sweeps = detail::to_count(key, value);
        else if (key == "solver.epsilon") config.solver.epsilon = detail::to_double(key, value);
        else if (key == "solver.patience") config.solver.patience = detail::to_count(key, value);
        else if (key == "solver.init") {
            if (value == "uniform") config.solver.init = InitMode::Uniform01;
            else if (value == "identity") config.solver.init = InitMode::Identity;
            else throw parse_error(path + ": solver.init must be uniform or identity");
        } else if (key == "solver.restarts") config.quench_restarts = detail::to_count(key, value);
        else if (key == "gd.learning_rate") config.gradient.learning_rate = detail::to_double(key, value);
        else if (key == "gd.max_iters") config.gradient.max_iters = detail::to_count(key, value);
        else if (key == "gd.tolerance") config.gradient.tolerance = detail::to_double(key, value);
        else if (key == "gd.patience") config.gradient.patience = detail::to_count(key, value);
        else throw parse_error(path + ": line " + std::to_string(line_number) + ": unknown key '" +
                               key + "'");
    }
    return config;
}

/// Resolves a dataset reference: builtin name, synthetic kind (with a
/// default size), or file path (sparse when the first line carries
/// index:value tokens).
inline Dataset resolve_dataset(const std::string& ref,
                               std::optional<std::size_t> label_column = std::nullopt,
                               std::size_t synthetic_n = 60, std::uint64_t synthetic_seed = 1) {
    if (is_builtin_dataset(ref)) return builtin_dataset(ref);
    if (ref == "two-gaussians" || ref == "three-class-rings" || ref == "xor")
        return generate_synthetic(parse_synthetic_kind(ref), synthetic_n, synthetic_seed);
    std::ifstream probe(ref, std::ios::binary);
    if (!probe) throw parse_error(ref + ": not a builtin dataset and cannot open as file");
    std::string first_line;
    std::getline(probe, first_line);
    probe.close();
    if (first_line.find(':') != std::string::npos) return load_sparse(ref);
    return load_dense_csv(ref, label_column);
}

inline MetricMethod make_method(const std::string& name, const ExperimentConfig& config) {
    if (name == "euclidean")
        return MetricMethod{name, [](const Dataset& train, std::uint64_t) {
                                return TransformMatrix::identity(train.dim());
                            }};
    if (name == "dmlfe")
        return MetricMethod{name, [config](const Dataset& train, std::uint64_t seed) {
                                OptimizerConfig solver = config.solver;
                                solver.seed = seed;
                                return fit_dmlfe(train, EnergyModel{}, solver).best_transform;
                            }};
    if (name == "dmlfe-quench")
        return MetricMethod{name, [config](const Dataset& train, std::uint64_t seed) {
                                OptimizerConfig solver = config.solver;
                                solver.seed = seed;
                                return multi_quench(train, EnergyModel{}, solver,
                                                    config.quench_restarts)
                                    .best()
                                    .best_transform;
                            }};
    if (name == "nca-gd")
        return MetricMethod{name, [config](const Dataset& train, std::uint64_t seed) {
                                GradientConfig gd = config.gradient;
                                gd.seed = seed;
                                return fit_nca_gradient(train, gd).best_transform;
                            }};
    throw std::invalid_argument("unknown method: " + name +
                                " (expected euclidean, dmlfe, dmlfe-quench or nca-gd)");
}

namespace detail {

inline void write_results_csv(const std::vector<ExperimentResult>& results,
                              const std::string& path) {
    std::ofstream out = open_output(path);
    out << "method,dataset,mean_error,best_k\n";
    for (const ExperimentResult& r : results)
        out << r.method << ',' << r.dataset << ',' << format_double(r.mean_error_percent) << ','
            << r.best_k << '\n';
}

inline void write_results_json(const std::vector<ExperimentResult>& results, const ErrorMatrix& em,
                               std::uint64_t seed, const std::string& path) {
    nlohmann::json doc;
    doc["seed"] = seed;
    doc["methods"] = em.methods;
    doc["datasets"] = em.datasets;
    doc["results"] = nlohmann::json::array();
    for (const ExperimentResult& r : results) {
        nlohmann::json item;
        item["method"] = r.method;
        item["dataset"] = r.dataset;
        item["mean_error_percent"] = r.mean_error_percent;
        item["best_k"] = r.best_k;
        item["per_evaluation_errors"] = r.per_evaluation_errors;
        item["warnings"] = r.warnings;
        doc["results"].push_back(item);
    }
    nlohmann::json matrix;
    matrix["methods"] = em.methods;
    matrix["datasets"] = em.datasets;
    auto rows = nlohmann::json::array();
    for (std::size_t m = 0; m < em.methods.size(); ++m) {
        auto row = nlohmann::json::array();
        for (std::size_t d = 0; d < em.datasets.size(); ++d) row.push_back(em.errors(m, d));
        rows.push_back(row);
    }
    matrix["errors"] = rows;
    doc["error_matrix"] = matrix;
    std::ofstream out = open_output(path);
    out << doc.dump(2) << '\n';
}

inline void write_ranks_csv(const ErrorMatrix& em, const std::vector<double>& ranks,
                            const std::string& path) {
    std::ofstream out = open_output(path);
    out << "method,avg_rank\n";
    for (std::size_t m = 0; m < em.methods.size(); ++m)
        out << em.methods[m] << ',' << format_double(ranks[m]) << '\n';
}

/// Table-style significance report against the control method.
inline void write_stats_report_csv(const ErrorMatrix& em, const std::string& control,
                                   const std::string& path) {
    const std::size_t control_index = em.method_index(control);
    const PostHocOutcome nemenyi = post_hoc(em, control, PostHocKind::Nemenyi);
    const PostHocOutcome dunn = post_hoc(em, control, PostHocKind::BonferroniDunn);

    std::ofstream out = open_output(path);
    out << "method,wilcoxon,nemenyi,bonferroni_dunn\n";
    std::vector<double> control_errors(em.datasets.size());
    for (std::size_t d = 0; d < em.datasets.size(); ++d)
        control_errors[d] = em.errors(control_index, d);
    for (std::size_t m = 0; m < em.methods.size(); ++m) {
        if (m == control_index) continue;
        std::string wilcoxon = "n/a";
        try {
            std::vector<double> method_errors(em.datasets.size());
            for (std::size_t d = 0; d < em.datasets.size(); ++d)
                method_errors[d] = em.errors(m, d);
            const TestOutcome outcome = wilcoxon_signed_rank(method_errors, control_errors);
            wilcoxon = outcome.rejected ? "Rejected" : "Accepted";
        } catch (const insufficient_data_error&) {
        }
        out << em.methods[m] << ',' << wilcoxon << ','
            << (nemenyi.rejected[m] ? "Rejected" : "Accepted") << ','
            << (dunn.rejected[m] ? "Rejected" : "Accepted") << '\n';
    }
}

inline void write_stats_summary_json(const ErrorMatrix& em, const std::string& path) {
    nlohmann::json doc;
    const TestOutcome friedman = friedman_test(em);
    doc["friedman"] = {{"statistic", friedman.statistic},
                       {"p_value", friedman.p_value},
                       {"rejected", friedman.rejected}};
    doc["critical_difference"] = {
        {"nemenyi", critical_difference(PostHocKind::Nemenyi, em.methods.size(), em.datasets.size())},
        {"bonferroni_dunn",
         critical_difference(PostHocKind::BonferroniDunn, em.methods.size(), em.datasets.size())}};
    std::ofstream out = open_output(path);
    out << doc.dump(2) << '\n';
}

inline std::string sanitize_file_component(std::string name) {
    for (char& c : name)
        if (c == '/' || c == '\\' || c == ' ') c = '_';
    return name;
}

}  // namespace detail

/// Batch experiment: every dataset x method CV cell, then the error
/// matrix, ranks, significance report, per-pair transforms (fit on the
/// full scaled dataset) and a JSON mirror, all under config.output_dir.
/// Validates everything before any compute starts.
inline int command_run(const ExperimentConfig& config, std::ostream& log = std::cout) {
    if (config.datasets.empty()) throw std::invalid_argument("config: no datasets given");
    if (config.methods.empty()) throw std::invalid_argument("config: no methods given");
    config.cv.validate();
    config.solver.validate();
    config.gradient.validate();

    // resolve everything up front; a bad reference must fail before any job runs
    std::vector<Dataset> datasets;
    for (const std::string& ref : config.datasets)
        datasets.push_back(resolve_dataset(ref, config.label_column, 60, config.seed));
    std::vector<MetricMethod> methods;
    for (const std::string& name : config.methods) methods.push_back(make_method(name, config));

    const std::size_t workers = resolve_workers(config.workers);

    std::vector<ExperimentResult> results;
    std::vector<std::pair<std::string, TransformMatrix>> transforms;  // file stem -> matrix
    for (const Dataset& ds : datasets) {
        for (const MetricMethod& method : methods) {
            CvPlan plan = config.cv;
            plan.seed = config.seed;
            log << "cv: " << ds.name << " x " << method.name << "..." << std::flush;
            ExperimentResult result = run_cv(ds, method, plan, workers);
            log << " mean error " << detail::format_double(result.mean_error_percent)
                << "% (best k " << result.best_k << ")\n";
            results.push_back(std::move(result));

            const Dataset full = apply_scaler(fit_scaler(ds), ds);
            const std::uint64_t final_seed =
                SeedSequence(config.seed).with(ds.name).with(method.name).with("final").seed();
            transforms.emplace_back(
                detail::sanitize_file_component("transform_" + ds.name + "_" + method.name),
                method.fit(full, final_seed));
        }
    }

    const ErrorMatrix em = collect_error_matrix(results);

    namespace fs = std::filesystem;
    fs::create_directories(config.output_dir);
    const std::string dir = config.output_dir + "/";
    detail::write_results_csv(results, dir + "results.csv");
    detail::write_results_json(results, em, config.seed, dir + "results.json");
    write_error_matrix_csv(em, dir + "error_matrix.csv");
    detail::write_ranks_csv(em, rank_methods(em), dir + "ranks.csv");
    for (const auto& [stem, matrix] : transforms) write_transform(matrix, dir + stem + ".txt");
    if (em.methods.size() >= 2) {
        const std::string control =
            std::find(em.methods.begin(), em.methods.end(), config.control) != em.methods.end()
                ? config.control
                : em.methods.front();
        detail::write_stats_report_csv(em, control, dir + "stats_report.csv");
        if (em.datasets.size() >= 2)
            detail::write_stats_summary_json(em, dir + "stats_summary.json");
    }
    return 0;
}

struct TraceOptions {
    std::string dataset;  // builtin, synthetic kind, or path
    std::string output_dir = "traces";
    OptimizerConfig solver;
    std::size_t restarts = 20;
    std::size_t snapshot_interval = 50;
    std::size_t synthetic_n = 60;
    std::uint64_t seed = 0;
};

/// Energy-trace export: one annealing run plus `restarts` quench runs on
/// the [0,1]-scaled dataset, and 2-D projection snapshots when d = 2.
inline int command_trace(const TraceOptions& options, std::ostream& log = std::cout) {
    OptimizerConfig annealing_config = options.solver;
    annealing_config.validate();
    Dataset raw = resolve_dataset(options.dataset, std::nullopt, options.synthetic_n, options.seed);
    const Dataset ds = apply_scaler(fit_scaler(raw), raw);

    namespace fs = std::filesystem;
    fs::create_directories(options.output_dir);
    const std::string dir = options.output_dir + "/";

    annealing_config.schedule.kind = TemperatureSchedule::Kind::Annealing;
    annealing_config.seed = SeedSequence(options.seed).with("anneal").seed();

    std::vector<std::pair<std::size_t, TransformMatrix>> snapshots;
    SweepObserver observer;
    if (ds.dim() == 2) {
        observer = [&](std::size_t sweep, const TransformMatrix& a) {
            if (sweep % options.snapshot_interval == 0) snapshots.emplace_back(sweep, a);
        };
    }
    const FitResult annealed = fit_dmlfe(ds, EnergyModel{}, annealing_config, observer);
    write_trace_csv(annealed.trace, dir + "trace_annealing.csv");
    log << "annealing: best energy " << detail::format_double(annealed.best_energy) << " after "
        << annealed.sweeps_run << " sweeps\n";

    OptimizerConfig quench_config = options.solver;
    quench_config.seed = options.seed;
    const MultiQuenchResult quenches = multi_quench(ds, EnergyModel{}, quench_config, options.restarts);
    for (std::size_t j = 0; j < quenches.runs.size(); ++j) {
        std::string index = std::to_string(j);
        if (index.size() < 2) index = "0" + index;
        write_trace_csv(quenches.runs[j].trace, dir + "trace_quench_" + index + ".csv");
    }
    log << "quench x" << options.restarts << ": best energy "
        << detail::format_double(quenches.best().best_energy) << "\n";

    if (ds.dim() == 2) {
        for (const auto& [sweep, matrix] : snapshots)
            write_snapshot_csv(ds, matrix, dir + "snapshot_sweep_" + std::to_string(sweep) + ".csv");
        write_snapshot_csv(ds, annealed.best_transform, dir + "snapshot_final.csv");
    }
    return 0;
}

/// Rank + significance report for an existing error-matrix CSV.
inline int command_stats(const std::string& matrix_path, const std::string& control,
                         const std::string& output_dir, std::ostream& out = std::cout) {
    const ErrorMatrix em = read_error_matrix_csv(matrix_path);
    const std::vector<double> ranks = rank_methods(em);

    out << "method,avg_rank\n";
    for (std::size_t m = 0; m < em.methods.size(); ++m)
        out << em.methods[m] << ',' << detail::format_double(ranks[m]) << '\n';

    if (em.datasets.size() >= 2) {
        const TestOutcome friedman = friedman_test(em);
        out << "\nfriedman_statistic," << detail::format_double(friedman.statistic) << '\n';
        out << "friedman_p," << detail::format_double(friedman.p_value) << '\n';
    }
    out << "nemenyi_cd,"
        << detail::format_double(
               critical_difference(PostHocKind::Nemenyi, em.methods.size(), em.datasets.size()))
        << '\n';
    out << "bonferroni_dunn_cd,"
        << detail::format_double(critical_difference(PostHocKind::BonferroniDunn, em.methods.size(),
                                                     em.datasets.size()))
        << '\n';

    const PostHocOutcome nemenyi = post_hoc(em, control, PostHocKind::Nemenyi);
    const PostHocOutcome dunn = post_hoc(em, control, PostHocKind::BonferroniDunn);
    const std::size_t control_index = em.method_index(control);
    std::vector<double> control_errors(em.datasets.size());
    for (std::size_t d = 0; d < em.datasets.size(); ++d)
        control_errors[d] = em.errors(control_index, d);

    out << "\nmethod,wilcoxon,nemenyi,bonferroni_dunn\n";
    for (std::size_t m = 0; m < em.methods.size(); ++m) {
        if (m == control_index) continue;
        std::string wilcoxon = "n/a";
        try {
            std::vector<double> method_errors(em.datasets.size());
            for (std::size_t d = 0; d < em.datasets.size(); ++d)
                method_errors[d] = em.errors(m, d);
            wilcoxon = wilcoxon_signed_rank(method_errors, control_errors).rejected ? "Rejected"
                                                                                    : "Accepted";
        } catch (const insufficient_data_error&) {
        }
        out << em.methods[m] << ',' << wilcoxon << ','
            << (nemenyi.rejected[m] ? "Rejected" : "Accepted") << ','
            << (dunn.rejected[m] ? "Rejected" : "Accepted") << '\n';
    }

    if (!output_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(output_dir);
        detail::write_ranks_csv(em, ranks, output_dir + "/ranks.csv");
        detail::write_stats_report_csv(em, control, output_dir + "/stats_report.csv");
        if (em.datasets.size() >= 2)
            detail::write_stats_summary_json(em, output_dir + "/stats_summary.json");
    }
    return 0;
}

inline int command_gen(const std::string& kind, std::size_t n, std::uint64_t seed,
                       const std::string& out_path) {
    const Dataset ds = generate_synthetic(parse_synthetic_kind(kind), n, seed);
    save_dense_csv(ds, out_path);
    return 0;
}

}  // namespace dml
