#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dml/dataset.hpp"
#include "dml/matrix.hpp"
#include "dml/metric.hpp"

namespace dml {

/// kNN classifier over transform_distance. Votes are broken
/// deterministically: larger count, then smaller summed squared distance
/// of the tied classes' voters, then smaller class id. Neighbor ties at
/// the k boundary go to the lower training index.
struct KnnModel {
    Dataset train;
    TransformMatrix transform;
    std::size_t k = 1;
};

namespace detail {

inline int vote(const std::vector<std::pair<double, int>>& neighbors, std::size_t k,
                const std::vector<int>& labels, std::vector<int>& counts,
                std::vector<double>& dist_sums) {
    std::fill(counts.begin(), counts.end(), 0);
    std::fill(dist_sums.begin(), dist_sums.end(), 0.0);
    for (std::size_t t = 0; t < k; ++t) {
        const int label = labels[neighbors[t].second];
        counts[label] += 1;
        dist_sums[label] += neighbors[t].first;
    }
    int winner = -1;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) continue;
        if (winner < 0 || counts[c] > counts[winner] ||
            (counts[c] == counts[winner] && dist_sums[c] < dist_sums[winner]))
            winner = static_cast<int>(c);
    }
    return winner;
}

}  // namespace detail

inline int knn_predict(const KnnModel& model, std::span<const double> query) {
    if (query.size() != model.train.dim())
        throw std::invalid_argument("knn_predict: dimension mismatch");
    const std::size_t n = model.train.n();
    const std::size_t k = std::min(model.k, n);
    std::vector<std::pair<double, int>> neighbors(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = model.train.patterns.row_ptr(i);
        neighbors[i] = {transform_distance(model.transform, std::span(row, model.train.dim()), query),
                        static_cast<int>(i)};
    }
    std::partial_sort(neighbors.begin(), neighbors.begin() + k, neighbors.end());
    const int max_label = *std::max_element(model.train.labels.begin(), model.train.labels.end());
    std::vector<int> counts(max_label + 1);
    std::vector<double> dist_sums(max_label + 1);
    return detail::vote(neighbors, k, model.train.labels, counts, dist_sums);
}

/// Test error (percent) for every k = 1..min(kmax, train size), sharing
/// one neighbor ordering per test point.
inline std::vector<double> knn_error_curve(const Dataset& train, const Dataset& test,
                                           const TransformMatrix& a, std::size_t kmax) {
    if (test.n() == 0) throw std::invalid_argument("knn_error_curve: empty test set");
    if (a.cols() != train.dim() || train.dim() != test.dim())
        throw std::invalid_argument("knn_error_curve: dimension mismatch");
    const std::size_t n_train = train.n();
    const std::size_t k_cap = std::min(kmax, n_train);
    const std::size_t r = a.rows();

    // project both sets once; kNN under transform_distance is Euclidean
    // in the projected space
    auto project_rows = [&](const Dataset& ds) {
        Matrix z(ds.n(), r);
        for (std::size_t i = 0; i < ds.n(); ++i)
            for (std::size_t out = 0; out < r; ++out) {
                double acc = 0.0;
                const double* arow = a.row_ptr(out);
                const double* x = ds.patterns.row_ptr(i);
                for (std::size_t j = 0; j < ds.dim(); ++j) acc += arow[j] * x[j];
                z(i, out) = acc;
            }
        return z;
    };
    const Matrix z_train = project_rows(train);
    const Matrix z_test = project_rows(test);

    const int max_label = *std::max_element(train.labels.begin(), train.labels.end());
    std::vector<int> counts(max_label + 1);
    std::vector<double> dist_sums(max_label + 1);
    std::vector<std::size_t> wrong(k_cap, 0);
    std::vector<std::pair<double, int>> neighbors(n_train);

    for (std::size_t q = 0; q < test.n(); ++q) {
        const double* zq = z_test.row_ptr(q);
        for (std::size_t i = 0; i < n_train; ++i) {
            const double* zi = z_train.row_ptr(i);
            double acc = 0.0;
            for (std::size_t out = 0; out < r; ++out) {
                const double diff = zi[out] - zq[out];
                acc += diff * diff;
            }
            neighbors[i] = {acc, static_cast<int>(i)};
        }
        std::partial_sort(neighbors.begin(), neighbors.begin() + k_cap, neighbors.end());

        std::fill(counts.begin(), counts.end(), 0);
        std::fill(dist_sums.begin(), dist_sums.end(), 0.0);
        int winner = -1;
        for (std::size_t k = 1; k <= k_cap; ++k) {
            const int label = train.labels[neighbors[k - 1].second];
            counts[label] += 1;
            dist_sums[label] += neighbors[k - 1].first;
            winner = -1;
            for (int c = 0; c <= max_label; ++c) {
                if (counts[c] == 0) continue;
                if (winner < 0 || counts[c] > counts[winner] ||
                    (counts[c] == counts[winner] && dist_sums[c] < dist_sums[winner]))
                    winner = c;
            }
            if (winner != test.labels[q]) wrong[k - 1] += 1;
        }
    }

    std::vector<double> curve(k_cap);
    for (std::size_t k = 0; k < k_cap; ++k)
        curve[k] = 100.0 * static_cast<double>(wrong[k]) / static_cast<double>(test.n());
    return curve;
}

struct BestK {
    std::size_t best_k = 1;
    double error_percent = 0.0;
};

/// Minimum test error over k = 1..min(kmax, train size); the smallest k
/// attaining it.
inline BestK best_k_error(const Dataset& train, const Dataset& test, const TransformMatrix& a,
                          std::size_t kmax) {
    if (kmax < 1) throw std::invalid_argument("best_k_error: kmax must be >= 1");
    const std::vector<double> curve = knn_error_curve(train, test, a, kmax);
    BestK out{1, curve[0]};
    for (std::size_t k = 2; k <= curve.size(); ++k) {
        if (curve[k - 1] < out.error_percent) {
            out.error_percent = curve[k - 1];
            out.best_k = k;
        }
    }
    return out;
}

}  // namespace dml
