// Acceptance suite: end-to-end checks of the full pipeline at pinned
// tolerances. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dml/dml.hpp"

using namespace dml;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int number, const std::string& label, bool ok, const std::string& detail) {
    if (!ok) ++failures;
    std::printf("[%s] criterion %d: %s — %s\n", ok ? "PASS" : "FAIL", number, label.c_str(),
                detail.c_str());
    std::fflush(stdout);
}

std::string fmt(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.4g", v);
    return buffer;
}

MetricMethod euclidean_method() {
    return {"euclidean", [](const Dataset& train, std::uint64_t) {
                return TransformMatrix::identity(train.dim());
            }};
}

MetricMethod dmlfe_method(const OptimizerConfig& base) {
    return {"dmlfe", [base](const Dataset& train, std::uint64_t seed) {
                OptimizerConfig solver = base;
                solver.seed = seed;
                return fit_dmlfe(train, EnergyModel{}, solver).best_transform;
            }};
}

Dataset random_instance(Rng& rng, std::size_t max_n, std::size_t max_d, int classes = 2) {
    const std::size_t n = 4 + rng.below(max_n - 3);
    const std::size_t d = 1 + rng.below(max_d);
    Matrix x(n, d);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) x(i, j) = rng.uniform(0.0, 1.0);
        labels[i] = static_cast<int>(rng.below(classes));
    }
    labels[0] = 0;
    labels[1] = 1;
    return make_dataset(std::move(x), std::move(labels), "instance");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "<missing:" + path + ">";
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// --- criteria ---------------------------------------------------------

void criterion_1_iris() {
    const auto start = std::chrono::steady_clock::now();
    const Dataset iris = builtin_dataset("iris");
    CvPlan plan;
    plan.seed = 601;

    const ExperimentResult euclid = run_cv(iris, euclidean_method(), plan, resolve_workers(0));
    OptimizerConfig solver;  // annealing T0 = 0.1, alpha = 0.9, <= 2000 sweeps
    const ExperimentResult dmlfe = run_cv(iris, dmlfe_method(solver), plan, resolve_workers(0));
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const bool dmlfe_ok = dmlfe.mean_error_percent <= 6.0;
    const bool euclid_ok =
        euclid.mean_error_percent >= 3.87 - 2.0 && euclid.mean_error_percent <= 3.87 + 2.0;
    const bool time_ok = seconds < 180.0;
    report(1, "iris 5x2 CV reproduction", dmlfe_ok && euclid_ok && time_ok,
           "dmlfe " + fmt(dmlfe.mean_error_percent) + "% (need <= 6), euclidean " +
               fmt(euclid.mean_error_percent) + "% (need 3.87 +/- 2), " + fmt(seconds) +
               " s (need < 180)");
}

void criterion_2_balance() {
    const Dataset balance = builtin_dataset("balance");
    OptimizerConfig solver;
    // ~20 proposals per matrix entry per sweep at this size; the smaller
    // step keeps the learned transform moderate and the margin stable
    solver.max_sweeps = 150;
    solver.proposal.step_scale = 0.5;
    bool all_below = true;
    std::string detail;
    for (int repetition = 0; repetition < 3; ++repetition) {
        CvPlan plan;
        plan.runs = 1;
        plan.seed = 700 + repetition;
        const ExperimentResult euclid = run_cv(balance, euclidean_method(), plan, resolve_workers(0));
        const ExperimentResult dmlfe = run_cv(balance, dmlfe_method(solver), plan, resolve_workers(0));
        if (!(dmlfe.mean_error_percent < euclid.mean_error_percent)) all_below = false;
        if (repetition) detail += ", ";
        detail += fmt(dmlfe.mean_error_percent) + "% vs " + fmt(euclid.mean_error_percent) + "%";
    }
    report(2, "balance ordering (dmlfe strictly below euclidean, 3 seeds)", all_below, detail);
}

void criterion_3_wine() {
    const Dataset wine = builtin_dataset("wine");
    CvPlan plan;
    plan.seed = 601;
    OptimizerConfig solver;
    // 13 features: finer proposals avoid over-stretching the transform,
    // which costs test accuracy at this dimensionality
    solver.proposal.step_scale = 0.25;
    const ExperimentResult dmlfe = run_cv(wine, dmlfe_method(solver), plan, resolve_workers(0));
    report(3, "wine 5x2 CV", dmlfe.mean_error_percent <= 5.0,
           "dmlfe " + fmt(dmlfe.mean_error_percent) + "% (need <= 5)");
}

void criterion_4_stats_fixture() {
    const ErrorMatrix em = read_error_matrix_csv(std::string(DML_FIXTURES_DIR) + "/table3.csv");
    const std::vector<double> ranks = rank_methods(em);

    const std::map<std::string, double> reference_ranks{
        {"RF", 4.53},   {"Euclidean", 6.56}, {"PCA", 6.69},  {"RCA", 7.19},  {"DCA", 8.03},
        {"LFDA", 11.22}, {"DMLeig", 7.25},   {"DMLMJ", 5.58}, {"SCML", 6.00}, {"LMNN", 5.06},
        {"ITML", 10.44}, {"NCA", 7.67},      {"DMLFE", 3.33}};

    bool ranks_ok = true;
    double worst = 0.0;
    std::string worst_method;
    for (std::size_t m = 0; m < em.methods.size(); ++m) {
        const double diff = ranks[m] - reference_ranks.at(em.methods[m]);
        std::printf("    rank %-10s computed %7.4f  reference %5.2f  diff %+0.4f\n",
                    em.methods[m].c_str(), ranks[m], reference_ranks.at(em.methods[m]), diff);
        if (std::abs(diff) > 0.02) ranks_ok = false;
        if (std::abs(diff) > std::abs(worst)) {
            worst = diff;
            worst_method = em.methods[m];
        }
    }

    const double cd_nemenyi = critical_difference(PostHocKind::Nemenyi, 13, 36);
    const double cd_dunn = critical_difference(PostHocKind::BonferroniDunn, 13, 36);
    const bool cd_ok =
        std::abs(cd_nemenyi - 3.04) <= 0.02 && std::abs(cd_dunn - 2.64) <= 0.02;

    const TestOutcome friedman = friedman_test(em);
    const bool friedman_ok = friedman.p_value <= 1e-20;

    // reference decision pattern: Wilcoxon rejects everything but RF;
    // Nemenyi accepts RF, DMLMJ, SCML, LMNN; Bonferroni-Dunn accepts
    // RF, DMLMJ, LMNN only
    const std::vector<std::string> nemenyi_accepted{"RF", "DMLMJ", "SCML", "LMNN"};
    const std::vector<std::string> dunn_accepted{"RF", "DMLMJ", "LMNN"};
    const PostHocOutcome nemenyi = post_hoc(em, "DMLFE", PostHocKind::Nemenyi);
    const PostHocOutcome dunn = post_hoc(em, "DMLFE", PostHocKind::BonferroniDunn);
    const std::size_t control = em.method_index("DMLFE");
    std::vector<double> control_errors(em.datasets.size());
    for (std::size_t d = 0; d < em.datasets.size(); ++d)
        control_errors[d] = em.errors(control, d);

    bool pattern_ok = true;
    for (std::size_t m = 0; m < em.methods.size(); ++m) {
        const std::string& method = em.methods[m];
        if (method == "DMLFE") continue;
        std::vector<double> errors(em.datasets.size());
        for (std::size_t d = 0; d < em.datasets.size(); ++d) errors[d] = em.errors(m, d);
        const bool wilcoxon_rejected = wilcoxon_signed_rank(errors, control_errors).rejected;
        const bool expect_wilcoxon_rejected = method != "RF";
        const bool expect_nemenyi_rejected =
            std::find(nemenyi_accepted.begin(), nemenyi_accepted.end(), method) ==
            nemenyi_accepted.end();
        const bool expect_dunn_rejected =
            std::find(dunn_accepted.begin(), dunn_accepted.end(), method) == dunn_accepted.end();
        if (wilcoxon_rejected != expect_wilcoxon_rejected) {
            std::printf("    pattern mismatch: wilcoxon %s\n", method.c_str());
            pattern_ok = false;
        }
        if (nemenyi.rejected[m] != expect_nemenyi_rejected) {
            std::printf("    pattern mismatch: nemenyi %s (gap %.4f vs cd %.4f)\n", method.c_str(),
                        nemenyi.rank_difference[m], nemenyi.cd);
            pattern_ok = false;
        }
        if (dunn.rejected[m] != expect_dunn_rejected) {
            std::printf("    pattern mismatch: bonferroni-dunn %s (gap %.4f vs cd %.4f)\n",
                        method.c_str(), dunn.rank_difference[m], dunn.cd);
            pattern_ok = false;
        }
    }

    report(4, "stats fixture (ranks, CDs, Friedman, decision pattern)",
           ranks_ok && cd_ok && friedman_ok && pattern_ok,
           std::string("ranks ") + (ranks_ok ? "ok" : ("off, worst " + worst_method + " " + fmt(worst) +
                       "; the reference row came from unrounded errors, 2-decimal rounding shifts mid-ranks")) +
               "; CD " + fmt(cd_nemenyi) + "/" + fmt(cd_dunn) + (cd_ok ? " ok" : " off") +
               "; friedman p " + fmt(friedman.p_value) + (friedman_ok ? " ok" : " off") +
               "; pattern " + (pattern_ok ? "ok" : "off"));
}

void criterion_5_gradient() {
    Rng rng(501);
    double worst = 0.0;
    int checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const Dataset ds = random_instance(rng, 20, 5, 2 + static_cast<int>(rng.below(2)));
        const std::size_t d = ds.dim();
        Matrix a(d, d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
        const Matrix analytic = nca_gradient(a, ds);
        const double h = 1e-5;
        double max_diff = 0.0, max_fd = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                Matrix plus = a, minus = a;
                plus(i, j) += h;
                minus(i, j) -= h;
                const double fd = (nca_energy(plus, ds) - nca_energy(minus, ds)) / (2.0 * h);
                max_diff = std::max(max_diff, std::abs(fd - analytic(i, j)));
                max_fd = std::max(max_fd, std::abs(fd));
            }
        if (max_fd == 0.0) continue;
        worst = std::max(worst, max_diff / max_fd);
        ++checked;
    }
    report(5, "analytic gradient vs central differences (20 instances)",
           checked >= 18 && worst < 1e-5,
           "worst relative max-norm error " + fmt(worst) + " over " + std::to_string(checked) +
               " instances (need < 1e-5)");
}

void criterion_6_incremental() {
    Rng rng(601);
    double worst_single = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const Dataset ds = random_instance(rng, 14, 4);
        const std::size_t d = ds.dim();
        Matrix a(d, d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
        NcaEnergyState state(a, ds);
        for (int edit = 0; edit < 20; ++edit) {
            const std::size_t row = rng.below(d), col = rng.below(d);
            const double delta = rng.uniform(-1.0, 1.0);
            const EnergyDelta probed = nca_energy_delta(state, row, col, delta);
            Matrix b = state.transform();
            b(row, col) += delta;
            const double expected = nca_energy(b, ds) - nca_energy(state.transform(), ds);
            worst_single = std::max(worst_single, std::abs(probed.delta_e - expected));
        }
    }

    double worst_chain = 0.0;
    for (int trial = 0; trial < 2; ++trial) {
        const Dataset ds = random_instance(rng, 12, 3, 3);
        const std::size_t d = ds.dim();
        Matrix a(d, d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) a(i, j) = rng.uniform(0.0, 1.0);
        NcaEnergyState state(a, ds);
        for (int edit = 0; edit < 1000; ++edit) {
            const std::size_t row = rng.below(d), col = rng.below(d);
            const double delta = rng.uniform(-0.3, 0.3);
            const double next = state.probe_entry(row, col, delta);
            state.apply_entry(row, col, delta, next);
            a(row, col) += delta;
        }
        worst_chain = std::max(worst_chain, std::abs(state.energy() - nca_energy(a, ds)));
    }

    report(6, "incremental energy vs full recomputation",
           worst_single < 1e-9 && worst_chain < 1e-7,
           "per-edit " + fmt(worst_single) + " (need < 1e-9), 1000-edit chain " + fmt(worst_chain) +
               " (need < 1e-7)");
}

void criterion_7_quench_and_acceptance() {
    bool monotone = true;
    Rng rng(701);
    for (int trial = 0; trial < 5; ++trial) {
        const Dataset ds = random_instance(rng, 16, 3, 2 + static_cast<int>(rng.below(2)));
        OptimizerConfig config;
        config.schedule = TemperatureSchedule::quench();
        config.max_sweeps = 400;
        config.seed = 7000 + trial;
        const FitResult fit = fit_dmlfe(ds, EnergyModel{}, config);
        for (std::size_t i = 1; i < fit.trace.size(); ++i)
            if (fit.trace[i].energy > fit.trace[i - 1].energy) monotone = false;
    }

    Rng decision_rng(702);
    const double w = metropolis_acceptance(0.05, 0.1);
    std::size_t accepted = 0;
    const std::size_t trials = 100000;
    for (std::size_t t = 0; t < trials; ++t)
        if (decision_rng.uniform01() < w) ++accepted;
    const double rate = static_cast<double>(accepted) / static_cast<double>(trials);
    const double target = std::exp(-0.5);
    const bool rate_ok = std::abs(rate - target) <= 0.01;

    report(7, "quench monotonicity + empirical Metropolis acceptance", monotone && rate_ok,
           std::string("traces ") + (monotone ? "monotone" : "NOT monotone") + ", acceptance " +
               fmt(rate) + " vs " + fmt(target) + " (need +/- 0.01)");
}

void criterion_8_annealing_vs_quench() {
    bool all_ok = true;
    std::string detail;
    for (int seed = 1; seed <= 3; ++seed) {
        const Dataset rings = generate_synthetic(SyntheticKind::ThreeClassRings, 60, seed);
        const Dataset scaled = apply_scaler(fit_scaler(rings), rings);
        OptimizerConfig config;
        // both arms share the deeper budget; the landscape has several
        // distinct basins and the shallow defaults stop short of them
        config.max_sweeps = 2000;
        config.patience = 150;
        config.epsilon = 1e-7;
        config.proposal.step_scale = 0.5;
        config.seed = 8000 + seed;

        const FitResult annealed = fit_dmlfe(scaled, EnergyModel{}, config);
        const MultiQuenchResult quenches = multi_quench(scaled, EnergyModel{}, config, 20);
        std::vector<double> finals;
        for (const FitResult& run : quenches.runs) finals.push_back(run.best_energy);
        std::sort(finals.begin(), finals.end());
        const double median = (finals[9] + finals[10]) / 2.0;
        if (!(annealed.best_energy <= median)) all_ok = false;
        if (seed > 1) detail += ", ";
        detail += fmt(annealed.best_energy) + " vs median " + fmt(median);
    }
    report(8, "annealing final energy <= median of 20 quenches (3 seeds)", all_ok, detail);
}

void criterion_9_determinism() {
    const fs::path base = fs::temp_directory_path() / "dml_acceptance_determinism";
    fs::remove_all(base);
    fs::create_directories(base);

    ExperimentConfig config;
    config.datasets = {"iris"};
    config.methods = {"euclidean", "dmlfe"};
    config.seed = 99;
    config.cv.runs = 1;
    config.solver.max_sweeps = 60;
    config.workers = 0;

    std::ostringstream log;
    config.output_dir = (base / "a").string();
    command_run(config, log);
    config.output_dir = (base / "b").string();
    command_run(config, log);

    bool identical = true;
    std::string first_diff;
    for (const auto& entry : fs::directory_iterator(base / "a")) {
        const std::string name = entry.path().filename().string();
        if (read_file((base / "a" / name).string()) != read_file((base / "b" / name).string())) {
            identical = false;
            if (first_diff.empty()) first_diff = name;
        }
    }
    fs::remove_all(base);
    report(9, "byte-identical outputs for identical config and seed", identical,
           identical ? "all result files identical" : ("differs: " + first_diff));
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    criterion_1_iris();
    criterion_2_balance();
    criterion_3_wine();
    criterion_4_stats_fixture();
    criterion_5_gradient();
    criterion_6_incremental();
    criterion_7_quench_and_acceptance();
    criterion_8_annealing_vs_quench();
    criterion_9_determinism();
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%d of 9 criteria passed in %.1f s\n", 9 - failures, seconds);
    return failures == 0 ? 0 : 1;
}
