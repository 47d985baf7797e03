#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "dml/matrix.hpp"

namespace dml {

/// Quadratic-form distance (u-v)^T M (u-v). Non-negative whenever M is
/// positive semidefinite.
inline double mahalanobis_distance(const Matrix& m, std::span<const double> u,
                                   std::span<const double> v) {
    const std::size_t d = u.size();
    if (v.size() != d || m.rows() != d || m.cols() != d)
        throw std::invalid_argument("mahalanobis_distance: dimension mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double di = u[i] - v[i];
        const double* row = m.row_ptr(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += row[j] * (u[j] - v[j]);
        total += di * acc;
    }
    return total;
}

/// Squared Euclidean distance after the linear transform: ||A(u-v)||^2.
/// Equals mahalanobis_distance(A^T A, u, v).
inline double transform_distance(const TransformMatrix& a, std::span<const double> u,
                                 std::span<const double> v) {
    const std::size_t d = u.size();
    if (v.size() != d || a.cols() != d)
        throw std::invalid_argument("transform_distance: dimension mismatch");
    double total = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* row = a.row_ptr(r);
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += row[j] * (u[j] - v[j]);
        total += acc * acc;
    }
    return total;
}

/// 2-D scaling-plus-rotation parameterization of a candidate transform.
struct ScaleRotation2D {
    double tx = 1.0;
    double ty = 1.0;
    double theta = 0.0;  // radians
};

inline TransformMatrix compose_scale_rotation(const ScaleRotation2D& sr) {
    const double c = std::cos(sr.theta), s = std::sin(sr.theta);
    return TransformMatrix(2, 2, {sr.tx * c, -sr.ty * s, sr.tx * s, sr.ty * c});
}

/// M = A^T A, the (symmetric PSD) quadratic form of the transform.
inline Matrix to_quadratic(const TransformMatrix& a) {
    Matrix m(a.cols(), a.cols());
    for (std::size_t i = 0; i < a.cols(); ++i)
        for (std::size_t j = i; j < a.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < a.rows(); ++r) acc += a(r, i) * a(r, j);
            m(i, j) = acc;
            m(j, i) = acc;
        }
    return m;
}

}  // namespace dml
