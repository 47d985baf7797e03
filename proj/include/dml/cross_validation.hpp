#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dml/dataset.hpp"
#include "dml/knn.hpp"
#include "dml/matrix.hpp"
#include "dml/parallel.hpp"
#include "dml/rng.hpp"

namespace dml {

/// How the reported k is selected: minimize the error curve averaged
/// over all run x fold evaluations (default), or take each fold's own
/// best k.
enum class KSelection { DatasetAverage, PerFold };

struct CvPlan {
    std::size_t runs = 5;
    std::size_t folds = 2;
    std::uint64_t seed = 0;
    std::size_t kmax = 40;
    KSelection k_selection = KSelection::DatasetAverage;
    bool global_scaling = false;  // strict-reproduction mode: scale once on the full data

    void validate() const {
        if (runs < 1) throw std::invalid_argument("CvPlan: runs must be >= 1");
        if (folds < 2) throw std::invalid_argument("CvPlan: folds must be >= 2");
        if (kmax < 1) throw std::invalid_argument("CvPlan: kmax must be >= 1");
    }
};

/// A named procedure producing a transform from a scaled training fold.
struct MetricMethod {
    std::string name;
    std::function<TransformMatrix(const Dataset& scaled_train, std::uint64_t seed)> fit;
};

struct ExperimentResult {
    std::string method;
    std::string dataset;
    double mean_error_percent = 0.0;
    std::vector<double> per_evaluation_errors;
    std::size_t best_k = 1;
    std::vector<std::string> warnings;
};

namespace detail {

/// Assigns each pattern to a fold. Stratified (per-class round-robin
/// deal after a seeded shuffle) unless some class has fewer members than
/// folds, in which case the whole split falls back to an unstratified
/// deal and *stratified is cleared.
inline std::vector<int> assign_folds(const std::vector<int>& labels, std::size_t folds, Rng& rng,
                                     bool* stratified) {
    const std::size_t n = labels.size();
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);

    bool can_stratify = true;
    for (const auto& [label, members] : by_class)
        if (members.size() < folds) can_stratify = false;
    if (stratified) *stratified = can_stratify;

    std::vector<int> fold_of(n, 0);
    auto shuffle = [&rng](std::vector<std::size_t>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
    };

    if (can_stratify) {
        std::size_t next_start = 0;  // rotates remainders across classes to balance fold sizes
        for (auto& [label, members] : by_class) {
            shuffle(members);
            for (std::size_t t = 0; t < members.size(); ++t)
                fold_of[members[t]] = static_cast<int>((next_start + t) % folds);
            next_start = (next_start + members.size()) % folds;
        }
    } else {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        shuffle(all);
        for (std::size_t t = 0; t < n; ++t) fold_of[all[t]] = static_cast<int>(t % folds);
    }
    return fold_of;
}

inline Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices) {
    Matrix x(indices.size(), ds.dim());
    std::vector<int> labels(indices.size());
    for (std::size_t t = 0; t < indices.size(); ++t) {
        for (std::size_t j = 0; j < ds.dim(); ++j) x(t, j) = ds.patterns(indices[t], j);
        labels[t] = ds.labels[indices[t]];
    }
    return Dataset{std::move(x), std::move(labels), ds.name};
}

}  // namespace detail

/// The evaluation protocol: `runs` independent random splits into
/// `folds` folds; every fold serves once as the test set. Per fold the
/// scaler is fit on the training part only, both parts are scaled, the
/// method learns a transform on the scaled training fold, and the kNN
/// error curve of the test fold is recorded. Reproducible from
/// plan.seed; cells with equal seeds are identical regardless of the
/// worker count.
inline ExperimentResult run_cv(const Dataset& ds, const MetricMethod& method, const CvPlan& plan,
                               std::size_t workers = 1) {
    plan.validate();
    require_supervised(ds);
    if (ds.n() < 2 * plan.folds)
        throw std::invalid_argument("run_cv: dataset too small for the fold count");

    const SeedSequence root = SeedSequence(plan.seed).with(ds.name);

    ExperimentResult result;
    result.method = method.name;
    result.dataset = ds.name;

    // splits are shared by every method under the same plan seed
    std::vector<std::vector<int>> fold_assignments(plan.runs);
    for (std::size_t run = 0; run < plan.runs; ++run) {
        Rng split_rng(root.with("split").with(run).seed());
        bool stratified = true;
        fold_assignments[run] = detail::assign_folds(ds.labels, plan.folds, split_rng, &stratified);
        if (!stratified)
            result.warnings.push_back("run " + std::to_string(run) +
                                      ": class smaller than fold count, unstratified split");
    }

    Dataset globally_scaled = plan.global_scaling ? apply_scaler(fit_scaler(ds), ds) : Dataset{};
    const Dataset& source = plan.global_scaling ? globally_scaled : ds;

    const std::size_t cells = plan.runs * plan.folds;
    std::vector<std::vector<double>> curves(cells);
    std::vector<std::function<void()>> jobs;
    jobs.reserve(cells);
    for (std::size_t run = 0; run < plan.runs; ++run) {
        for (std::size_t fold = 0; fold < plan.folds; ++fold) {
            jobs.push_back([&, run, fold] {
                std::vector<std::size_t> train_idx, test_idx;
                for (std::size_t i = 0; i < source.n(); ++i) {
                    if (fold_assignments[run][i] == static_cast<int>(fold))
                        test_idx.push_back(i);
                    else
                        train_idx.push_back(i);
                }
                Dataset train = detail::subset(source, train_idx);
                Dataset test = detail::subset(source, test_idx);
                if (!plan.global_scaling) {
                    const FeatureScaler scaler = fit_scaler(train);
                    train = apply_scaler(scaler, train);
                    test = apply_scaler(scaler, test);
                }
                const std::uint64_t job_seed =
                    root.with(method.name).with(run).with(fold).seed();
                const TransformMatrix a = method.fit(train, job_seed);
                curves[run * plan.folds + fold] = knn_error_curve(train, test, a, plan.kmax);
            });
        }
    }
    run_jobs(jobs, workers);

    std::size_t common_len = std::numeric_limits<std::size_t>::max();
    for (const auto& curve : curves) common_len = std::min(common_len, curve.size());

    std::vector<double> average(common_len, 0.0);
    for (const auto& curve : curves)
        for (std::size_t k = 0; k < common_len; ++k) average[k] += curve[k];
    for (double& v : average) v /= static_cast<double>(cells);

    std::size_t best_k = 1;
    for (std::size_t k = 2; k <= common_len; ++k)
        if (average[k - 1] < average[best_k - 1]) best_k = k;
    result.best_k = best_k;

    result.per_evaluation_errors.reserve(cells);
    if (plan.k_selection == KSelection::DatasetAverage) {
        for (const auto& curve : curves) result.per_evaluation_errors.push_back(curve[best_k - 1]);
    } else {
        for (const auto& curve : curves)
            result.per_evaluation_errors.push_back(*std::min_element(curve.begin(), curve.end()));
    }
    double total = 0.0;
    for (double e : result.per_evaluation_errors) total += e;
    result.mean_error_percent = total / static_cast<double>(cells);
    return result;
}

}  // namespace dml
