#pragma once

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dml/builtin_data.hpp"
#include "dml/matrix.hpp"

namespace dml {

/// A labeled pattern set: N x d feature matrix plus dense integer class
/// ids. Immutable after construction by convention; all pipeline steps
/// produce new datasets.
struct Dataset {
    Matrix patterns;           // N x d
    std::vector<int> labels;   // length N, small non-negative ids
    std::string name;

    std::size_t n() const { return patterns.rows(); }
    std::size_t dim() const { return patterns.cols(); }

    std::size_t class_count() const {
        std::set<int> distinct(labels.begin(), labels.end());
        return distinct.size();
    }
};

inline Dataset make_dataset(Matrix patterns, std::vector<int> labels, std::string name) {
    if (patterns.rows() < 2)
        throw std::invalid_argument("Dataset: need at least 2 patterns");
    if (patterns.cols() < 1)
        throw std::invalid_argument("Dataset: need at least 1 feature");
    if (labels.size() != patterns.rows())
        throw std::invalid_argument("Dataset: label count does not match pattern count");
    if (!patterns.all_finite())
        throw std::invalid_argument("Dataset: non-finite feature value");
    for (int label : labels)
        if (label < 0) throw std::invalid_argument("Dataset: negative class id");
    return Dataset{std::move(patterns), std::move(labels), std::move(name)};
}

/// Throws unless the dataset is usable for supervised learning
/// (at least two distinct classes).
inline void require_supervised(const Dataset& ds) {
    if (ds.class_count() < 2)
        throw std::invalid_argument("Dataset '" + ds.name + "': supervised operation needs >= 2 classes");
}

/// Per-feature min/max learned from training data; maps features
/// affinely onto [0, 1]. Test data transformed with training statistics
/// may fall outside [0, 1] and is deliberately not clamped.
struct FeatureScaler {
    std::vector<double> minimum;
    std::vector<double> maximum;

    std::size_t dim() const { return minimum.size(); }
};

inline FeatureScaler fit_scaler(const Dataset& ds) {
    FeatureScaler s;
    s.minimum.assign(ds.dim(), 0.0);
    s.maximum.assign(ds.dim(), 0.0);
    for (std::size_t j = 0; j < ds.dim(); ++j) {
        double lo = ds.patterns(0, j), hi = ds.patterns(0, j);
        for (std::size_t i = 1; i < ds.n(); ++i) {
            lo = std::min(lo, ds.patterns(i, j));
            hi = std::max(hi, ds.patterns(i, j));
        }
        s.minimum[j] = lo;
        s.maximum[j] = hi;
    }
    return s;
}

inline Dataset apply_scaler(const FeatureScaler& s, const Dataset& ds) {
    if (s.dim() != ds.dim())
        throw std::invalid_argument("apply_scaler: scaler dimension does not match dataset");
    Matrix scaled(ds.n(), ds.dim());
    for (std::size_t j = 0; j < ds.dim(); ++j) {
        const double span = s.maximum[j] - s.minimum[j];
        for (std::size_t i = 0; i < ds.n(); ++i) {
            // constant training columns are metrically inert; map them to 0
            scaled(i, j) = span > 0.0 ? (ds.patterns(i, j) - s.minimum[j]) / span : 0.0;
        }
    }
    return Dataset{std::move(scaled), ds.labels, ds.name};
}

inline bool is_builtin_dataset(const std::string& name) {
    return name == "iris" || name == "wine" || name == "balance";
}

/// Materializes one of the named builtin datasets ("iris", "wine",
/// "balance").
inline Dataset builtin_dataset(const std::string& name) {
    using namespace builtin;
    if (name == "iris") {
        Matrix x(kIrisRows, kIrisCols);
        std::copy(kIrisFeatures, kIrisFeatures + kIrisRows * kIrisCols, x.data());
        return Dataset{std::move(x), std::vector<int>(kIrisLabels, kIrisLabels + kIrisRows), "iris"};
    }
    if (name == "wine") {
        Matrix x(kWineRows, kWineCols);
        std::copy(kWineFeatures, kWineFeatures + kWineRows * kWineCols, x.data());
        return Dataset{std::move(x), std::vector<int>(kWineLabels, kWineLabels + kWineRows), "wine"};
    }
    if (name == "balance") {
        // full factorial of (left weight, left distance, right weight,
        // right distance) in 1..5; class decided by torque comparison
        Matrix x(625, 4);
        std::vector<int> labels(625);
        std::vector<int> id_of(3, -1);  // tilt (-1,0,+1) -> dense id by first appearance
        int next_id = 0;
        std::size_t row = 0;
        for (int lw = 1; lw <= 5; ++lw)
            for (int ld = 1; ld <= 5; ++ld)
                for (int rw = 1; rw <= 5; ++rw)
                    for (int rd = 1; rd <= 5; ++rd) {
                        x(row, 0) = lw;
                        x(row, 1) = ld;
                        x(row, 2) = rw;
                        x(row, 3) = rd;
                        const int torque = lw * ld - rw * rd;
                        const int tilt = torque == 0 ? 0 : (torque < 0 ? 1 : 2);
                        if (id_of[tilt] < 0) id_of[tilt] = next_id++;
                        labels[row] = id_of[tilt];
                        ++row;
                    }
        return Dataset{std::move(x), std::move(labels), "balance"};
    }
    throw std::invalid_argument("unknown builtin dataset: " + name);
}

}  // namespace dml
