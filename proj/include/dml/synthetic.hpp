#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dml/dataset.hpp"
#include "dml/rng.hpp"

namespace dml {

enum class SyntheticKind { TwoGaussians, ThreeClassRings, Xor };

inline SyntheticKind parse_synthetic_kind(const std::string& name) {
    if (name == "two-gaussians") return SyntheticKind::TwoGaussians;
    if (name == "three-class-rings") return SyntheticKind::ThreeClassRings;
    if (name == "xor") return SyntheticKind::Xor;
    throw std::invalid_argument("unknown synthetic dataset kind: " + name);
}

/// Deterministic 2-D toy datasets with classes balanced within one
/// pattern. Rings are concentric and noisy enough that identity-metric
/// 1-NN makes occasional mistakes.
inline Dataset generate_synthetic(SyntheticKind kind, std::size_t n, std::uint64_t seed) {
    if (n < 4) throw std::invalid_argument("generate_synthetic: need n >= 4");
    Rng rng(seed);
    Matrix x(n, 2);
    std::vector<int> labels(n);

    switch (kind) {
        case SyntheticKind::TwoGaussians: {
            for (std::size_t i = 0; i < n; ++i) {
                const int cls = static_cast<int>(i % 2);
                const double cx = cls == 0 ? 0.0 : 5.0;
                const double cy = cls == 0 ? 0.0 : 5.0;
                x(i, 0) = cx + rng.normal();
                x(i, 1) = cy + rng.normal();
                labels[i] = cls;
            }
            break;
        }
        case SyntheticKind::ThreeClassRings: {
            constexpr double radii[3] = {1.0, 1.5, 2.0};
            for (std::size_t i = 0; i < n; ++i) {
                const int cls = static_cast<int>(i % 3);
                const double angle = rng.uniform(0.0, 2.0 * 3.141592653589793238462643383279502884);
                const double radius = radii[cls] + 0.15 * rng.normal();
                x(i, 0) = radius * std::cos(angle);
                x(i, 1) = radius * std::sin(angle);
                labels[i] = cls;
            }
            break;
        }
        case SyntheticKind::Xor: {
            for (std::size_t i = 0; i < n; ++i) {
                const int corner = static_cast<int>(i % 4);
                const double cx = (corner == 1 || corner == 3) ? 1.0 : 0.0;
                const double cy = (corner == 2 || corner == 3) ? 1.0 : 0.0;
                x(i, 0) = cx + 0.15 * rng.normal();
                x(i, 1) = cy + 0.15 * rng.normal();
                labels[i] = (corner == 0 || corner == 3) ? 0 : 1;
            }
            break;
        }
    }

    std::string name;
    switch (kind) {
        case SyntheticKind::TwoGaussians: name = "two-gaussians"; break;
        case SyntheticKind::ThreeClassRings: name = "three-class-rings"; break;
        case SyntheticKind::Xor: name = "xor"; break;
    }
    return make_dataset(std::move(x), std::move(labels), std::move(name));
}

}  // namespace dml
