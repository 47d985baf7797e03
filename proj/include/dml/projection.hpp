#pragma once

#include <stdexcept>
#include <utility>

#include "dml/dataset.hpp"
#include "dml/matrix.hpp"

namespace dml {

/// Cache of the projected patterns Z = A X^T and all pairwise squared
/// distances under the current transform. Owned by exactly one
/// optimizer run at a time; supports O(N + N^2) single-entry updates
/// instead of O(N^2 d) re-projection.
class ProjectedDataset {
public:
    ProjectedDataset() = default;

    ProjectedDataset(TransformMatrix transform, Dataset source)
        : transform_(std::move(transform)), source_(std::move(source)) {
        if (transform_.cols() != source_.dim())
            throw std::invalid_argument("project: transform columns do not match feature count");
        coords_ = Matrix(transform_.rows(), source_.n());
        sqd_ = Matrix(source_.n(), source_.n());
        recompute();
    }

    std::size_t n() const { return source_.n(); }
    std::size_t out_dim() const { return transform_.rows(); }
    const Dataset& source() const { return source_; }
    const TransformMatrix& transform() const { return transform_; }

    /// Coordinate k of projected pattern i.
    double projected(std::size_t i, std::size_t k) const { return coords_(k, i); }
    const double* coordinate_row(std::size_t k) const { return coords_.row_ptr(k); }

    double sq_distance(std::size_t i, std::size_t j) const { return sqd_(i, j); }
    const double* sq_distance_row(std::size_t i) const { return sqd_.row_ptr(i); }

    /// Shifts transform entry (row, col) by delta and updates the cache
    /// incrementally: only output coordinate `row` moves, by
    /// delta * x[col] per pattern.
    void apply_entry_update(std::size_t row, std::size_t col, double delta) {
        if (row >= transform_.rows() || col >= transform_.cols())
            throw std::invalid_argument("apply_entry_update: index out of range");
        if (!std::isfinite(delta))
            throw std::invalid_argument("apply_entry_update: non-finite delta");
        const std::size_t count = n();
        double* coord = coords_.row_ptr(row);
        scratch_.assign(count, 0.0);
        for (std::size_t i = 0; i < count; ++i) {
            scratch_[i] = coord[i];                       // old coordinate
            coord[i] += delta * source_.patterns(i, col);  // new coordinate
        }
        for (std::size_t i = 0; i < count; ++i) {
            double* row_i = sqd_.row_ptr(i);
            const double ai = coord[i], bi = scratch_[i];
            for (std::size_t j = i + 1; j < count; ++j) {
                const double da = ai - coord[j];
                const double db = bi - scratch_[j];
                row_i[j] += da * da - db * db;
                sqd_(j, i) = row_i[j];
            }
        }
        transform_(row, col) += delta;
    }

    /// Replaces the transform and rebuilds the cache from scratch.
    void set_transform(TransformMatrix transform) {
        if (transform.cols() != source_.dim() || transform.rows() != coords_.rows())
            throw std::invalid_argument("set_transform: shape mismatch");
        transform_ = std::move(transform);
        recompute();
    }

    /// Full re-projection from the current transform; removes any drift
    /// accumulated by incremental updates.
    void recompute() {
        const std::size_t count = n();
        const std::size_t d = source_.dim();
        for (std::size_t k = 0; k < transform_.rows(); ++k) {
            double* coord = coords_.row_ptr(k);
            const double* arow = transform_.row_ptr(k);
            for (std::size_t i = 0; i < count; ++i) {
                const double* x = source_.patterns.row_ptr(i);
                double acc = 0.0;
                for (std::size_t j = 0; j < d; ++j) acc += arow[j] * x[j];
                coord[i] = acc;
            }
        }
        for (std::size_t i = 0; i < count; ++i) {
            sqd_(i, i) = 0.0;
            for (std::size_t j = i + 1; j < count; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < coords_.rows(); ++k) {
                    const double diff = coords_(k, i) - coords_(k, j);
                    acc += diff * diff;
                }
                sqd_(i, j) = acc;
                sqd_(j, i) = acc;
            }
        }
    }

private:
    TransformMatrix transform_;  // r x d
    Dataset source_;
    Matrix coords_;  // r x N; coordinate k of every pattern is contiguous
    Matrix sqd_;     // N x N symmetric, zero diagonal
    std::vector<double> scratch_;
};

inline ProjectedDataset project(const TransformMatrix& a, const Dataset& ds) {
    return ProjectedDataset(a, ds);
}

inline void update_projection_entry(ProjectedDataset& pd, std::size_t row, std::size_t col,
                                    double delta) {
    pd.apply_entry_update(row, col, delta);
}

}  // namespace dml
