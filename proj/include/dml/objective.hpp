#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dml/dataset.hpp"
#include "dml/matrix.hpp"
#include "dml/metric.hpp"
#include "dml/projection.hpp"

namespace dml {

// Softmax terms whose distance exceeds the row minimum by more than this
// are dropped: each skipped term is below exp(-60) ~ 8.8e-27 relative to
// the retained maximum, far under every tolerance in use.
inline constexpr double kSoftmaxSkip = 60.0;

/// y[i][j] = 1 iff patterns i and j share a class. Symmetric, diagonal 1.
struct SameClassIndicator {
    std::size_t n = 0;
    std::vector<std::uint8_t> same;

    static SameClassIndicator from(const Dataset& ds) {
        SameClassIndicator ind;
        ind.n = ds.n();
        ind.same.assign(ind.n * ind.n, 0);
        for (std::size_t i = 0; i < ind.n; ++i)
            for (std::size_t j = 0; j < ind.n; ++j)
                ind.same[i * ind.n + j] = ds.labels[i] == ds.labels[j] ? 1 : 0;
        return ind;
    }

    bool operator()(std::size_t i, std::size_t j) const { return same[i * n + j] != 0; }
};

/// Row-stochastic matrix of neighbor-pick probabilities
/// p_ij = exp(-d_ij) / sum_{k != i} exp(-d_ik), zero diagonal.
struct NeighborProbabilities {
    Matrix p;
};

namespace detail {

/// Same-class probability mass of row i: sum_j p_ij y_ij with the row
/// softmax stabilized by subtracting the row minimum distance before
/// exponentiation. `row` holds squared distances from pattern i.
inline double nca_row_same_mass(const double* row, std::size_t count, std::size_t i,
                                const int* labels) {
    double row_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < count; ++j) {
        if (j == i) continue;
        row_min = std::min(row_min, row[j]);
    }
    double sum_all = 0.0, sum_same = 0.0;
    const int label_i = labels[i];
    for (std::size_t j = 0; j < count; ++j) {
        if (j == i) continue;
        const double t = row[j] - row_min;
        if (t > kSoftmaxSkip) continue;
        const double e = std::exp(-t);
        sum_all += e;
        if (labels[j] == label_i) sum_same += e;
    }
    return sum_same / sum_all;  // sum_all >= 1: the row minimum contributes exp(0)
}

inline double nca_energy_of_projection(const ProjectedDataset& pd) {
    const std::size_t count = pd.n();
    const int* labels = pd.source().labels.data();
    double mass = 0.0;
    for (std::size_t i = 0; i < count; ++i)
        mass += nca_row_same_mass(pd.sq_distance_row(i), count, i, labels);
    return 1.0 - mass / static_cast<double>(count);
}

}  // namespace detail

inline NeighborProbabilities stochastic_neighbor_probs(const ProjectedDataset& pd) {
    const std::size_t count = pd.n();
    if (count < 2)
        throw std::invalid_argument("stochastic_neighbor_probs: need at least 2 patterns");
    NeighborProbabilities np{Matrix(count, count)};
    for (std::size_t i = 0; i < count; ++i) {
        const double* row = pd.sq_distance_row(i);
        double row_min = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < count; ++j)
            if (j != i) row_min = std::min(row_min, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < count; ++j) {
            if (j == i) continue;
            const double t = row[j] - row_min;
            np.p(i, j) = t > kSoftmaxSkip ? 0.0 : std::exp(-t);
            sum += np.p(i, j);
        }
        for (std::size_t j = 0; j < count; ++j)
            if (j != i) np.p(i, j) /= sum;
    }
    return np;
}

/// Expected leave-one-out misclassification under stochastic neighbor
/// assignment; always in [0, 1].
inline double nca_energy(const TransformMatrix& a, const Dataset& ds) {
    if (a.cols() != ds.dim())
        throw std::invalid_argument("nca_energy: dimension mismatch");
    return detail::nca_energy_of_projection(project(a, ds));
}

/// Index sets of each pattern's k nearest same-class neighbors under the
/// input-space Euclidean metric. Fixed once; never updated during
/// optimization.
struct TargetNeighborSets {
    std::vector<std::vector<int>> sets;
};

inline TargetNeighborSets target_neighbors(const Dataset& ds, int k) {
    if (k < 1) throw std::invalid_argument("target_neighbors: k must be >= 1");
    const std::size_t count = ds.n();
    TargetNeighborSets out;
    out.sets.resize(count);
    std::vector<std::pair<double, int>> candidates;
    for (std::size_t i = 0; i < count; ++i) {
        candidates.clear();
        const double* xi = ds.patterns.row_ptr(i);
        for (std::size_t j = 0; j < count; ++j) {
            if (j == i || ds.labels[j] != ds.labels[i]) continue;
            const double* xj = ds.patterns.row_ptr(j);
            double dist = 0.0;
            for (std::size_t f = 0; f < ds.dim(); ++f) {
                const double diff = xi[f] - xj[f];
                dist += diff * diff;
            }
            candidates.emplace_back(dist, static_cast<int>(j));
        }
        std::sort(candidates.begin(), candidates.end());
        const std::size_t take = std::min<std::size_t>(k, candidates.size());
        for (std::size_t t = 0; t < take; ++t) out.sets[i].push_back(candidates[t].second);
    }
    return out;
}

namespace detail {

template <class DistFn>
double lmnn_energy_impl(const Dataset& ds, const TargetNeighborSets& targets, DistFn&& dist) {
    const std::size_t count = ds.n();
    double energy = 0.0;
    std::vector<double> target_dist;
    for (std::size_t i = 0; i < count; ++i) {
        const auto& set = targets.sets[i];
        if (set.empty()) continue;
        target_dist.clear();
        for (int j : set) {
            const double dij = dist(i, static_cast<std::size_t>(j));
            target_dist.push_back(dij);
            energy += dij;  // pull term
        }
        for (std::size_t l = 0; l < count; ++l) {
            if (ds.labels[l] == ds.labels[i]) continue;  // (1 - y_il) factor
            const double dil = dist(i, l);
            for (double dij : target_dist) {
                const double hinge = 1.0 + dij - dil;
                if (hinge > 0.0) energy += hinge;
            }
        }
    }
    return energy;
}

}  // namespace detail

/// Large-margin hinge energy: pull term over target-neighbor pairs plus
/// unit-margin violations by differently-labeled patterns.
inline double lmnn_energy(const TransformMatrix& a, const Dataset& ds,
                          const TargetNeighborSets& targets) {
    if (a.cols() != ds.dim())
        throw std::invalid_argument("lmnn_energy: dimension mismatch");
    ProjectedDataset pd = project(a, ds);
    return detail::lmnn_energy_impl(ds, targets,
                                    [&](std::size_t i, std::size_t j) { return pd.sq_distance(i, j); });
}

/// Exact gradient of nca_energy with respect to every transform entry.
inline Matrix nca_gradient(const TransformMatrix& a, const Dataset& ds) {
    if (a.cols() != ds.dim())
        throw std::invalid_argument("nca_gradient: dimension mismatch");
    const std::size_t count = ds.n();
    const std::size_t d = ds.dim();
    ProjectedDataset pd = project(a, ds);
    NeighborProbabilities np = stochastic_neighbor_probs(pd);

    std::vector<double> same_mass(count, 0.0);
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = 0; j < count; ++j)
            if (ds.labels[i] == ds.labels[j]) same_mass[i] += np.p(i, j);

    // G = sum_ij p_ij (rho_i - y_ij) (x_i - x_j)(x_i - x_j)^T
    Matrix g(d, d);
    std::vector<double> diff(d);
    for (std::size_t i = 0; i < count; ++i) {
        const double* xi = ds.patterns.row_ptr(i);
        for (std::size_t j = 0; j < count; ++j) {
            if (j == i) continue;
            const double y = ds.labels[i] == ds.labels[j] ? 1.0 : 0.0;
            const double w = np.p(i, j) * (same_mass[i] - y);
            if (w == 0.0) continue;
            const double* xj = ds.patterns.row_ptr(j);
            for (std::size_t f = 0; f < d; ++f) diff[f] = xi[f] - xj[f];
            for (std::size_t f = 0; f < d; ++f) {
                double* grow = g.row_ptr(f);
                const double wf = w * diff[f];
                for (std::size_t h = 0; h < d; ++h) grow[h] += wf * diff[h];
            }
        }
    }

    Matrix grad(a.rows(), d);
    const double scale = -2.0 / static_cast<double>(count);
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t f = 0; f < d; ++f) {
            double acc = 0.0;
            for (std::size_t h = 0; h < d; ++h) acc += a(r, h) * g(h, f);
            grad(r, f) = scale * acc;
        }
    return grad;
}

/// Which objective the optimizer minimizes. The LMNN variant carries the
/// target-neighbor count (margin is fixed at 1).
struct EnergyModel {
    enum class Kind { Nca, Lmnn };
    Kind kind = Kind::Nca;
    int target_neighbor_count = 3;
};

/// Mutable per-run evaluation state: current transform, cached
/// projection, cached energy. probe_entry computes the energy of a
/// single-entry edit without committing anything; apply_entry commits
/// using the incremental projection update.
class EnergyState {
public:
    virtual ~EnergyState() = default;

    double energy() const { return energy_; }
    const TransformMatrix& transform() const { return pd().transform(); }
    std::size_t pattern_count() const { return pd().n(); }

    virtual double probe_entry(std::size_t row, std::size_t col, double delta) const = 0;

    void apply_entry(std::size_t row, std::size_t col, double delta, double new_energy) {
        mutable_pd().apply_entry_update(row, col, delta);
        energy_ = new_energy;
    }

    /// Energy a full-matrix replacement would have.
    virtual double probe_matrix(const TransformMatrix& b) const = 0;

    void adopt_matrix(const TransformMatrix& b, double new_energy) {
        mutable_pd().set_transform(b);
        energy_ = new_energy;
    }

    /// Rebuilds the projection cache from the current transform. The
    /// cached energy is kept unless it drifted past `tolerance`, so that
    /// recorded energy streams stay exactly monotone under quenching.
    void resync(double tolerance = 1e-10) {
        mutable_pd().recompute();
        const double exact = compute_energy();
        if (std::abs(exact - energy_) > tolerance) energy_ = exact;
    }

protected:
    virtual const ProjectedDataset& pd() const = 0;
    virtual ProjectedDataset& mutable_pd() = 0;
    virtual double compute_energy() const = 0;

    double energy_ = 0.0;
};

class NcaEnergyState final : public EnergyState {
public:
    NcaEnergyState(TransformMatrix a, Dataset ds) : pd_(std::move(a), std::move(ds)) {
        energy_ = compute_energy();
        adjusted_.assign(pd_.n(), 0.0);
        new_coord_.assign(pd_.n(), 0.0);
    }

    double probe_entry(std::size_t row, std::size_t col, double delta) const override {
        const std::size_t count = pd_.n();
        if (row >= pd_.out_dim() || col >= pd_.source().dim())
            throw std::invalid_argument("probe_entry: index out of range");
        const double* old_coord = pd_.coordinate_row(row);
        const Dataset& src = pd_.source();
        for (std::size_t i = 0; i < count; ++i)
            new_coord_[i] = old_coord[i] + delta * src.patterns(i, col);

        const int* labels = src.labels.data();
        double mass = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const double* dist_row = pd_.sq_distance_row(i);
            const double ai = new_coord_[i], bi = old_coord[i];
            for (std::size_t j = 0; j < count; ++j) {
                const double da = ai - new_coord_[j];
                const double db = bi - old_coord[j];
                adjusted_[j] = dist_row[j] + da * da - db * db;
            }
            mass += detail::nca_row_same_mass(adjusted_.data(), count, i, labels);
        }
        return 1.0 - mass / static_cast<double>(count);
    }

    double probe_matrix(const TransformMatrix& b) const override {
        return nca_energy(b, pd_.source());
    }

protected:
    const ProjectedDataset& pd() const override { return pd_; }
    ProjectedDataset& mutable_pd() override { return pd_; }
    double compute_energy() const override { return detail::nca_energy_of_projection(pd_); }

private:
    ProjectedDataset pd_;
    mutable std::vector<double> adjusted_;
    mutable std::vector<double> new_coord_;
};

class LmnnEnergyState final : public EnergyState {
public:
    LmnnEnergyState(TransformMatrix a, Dataset ds, int target_k)
        : targets_(target_neighbors(ds, target_k)), pd_(std::move(a), std::move(ds)) {
        energy_ = compute_energy();
        new_coord_.assign(pd_.n(), 0.0);
    }

    double probe_entry(std::size_t row, std::size_t col, double delta) const override {
        const std::size_t count = pd_.n();
        if (row >= pd_.out_dim() || col >= pd_.source().dim())
            throw std::invalid_argument("probe_entry: index out of range");
        const double* old_coord = pd_.coordinate_row(row);
        const Dataset& src = pd_.source();
        for (std::size_t i = 0; i < count; ++i)
            new_coord_[i] = old_coord[i] + delta * src.patterns(i, col);
        auto adjusted = [&](std::size_t i, std::size_t j) {
            const double da = new_coord_[i] - new_coord_[j];
            const double db = old_coord[i] - old_coord[j];
            return pd_.sq_distance(i, j) + da * da - db * db;
        };
        return detail::lmnn_energy_impl(src, targets_, adjusted);
    }

    double probe_matrix(const TransformMatrix& b) const override {
        return dml::lmnn_energy(b, pd_.source(), targets_);
    }

    const TargetNeighborSets& targets() const { return targets_; }

protected:
    const ProjectedDataset& pd() const override { return pd_; }
    ProjectedDataset& mutable_pd() override { return pd_; }
    double compute_energy() const override {
        return detail::lmnn_energy_impl(pd_.source(), targets_, [&](std::size_t i, std::size_t j) {
            return pd_.sq_distance(i, j);
        });
    }

private:
    TargetNeighborSets targets_;
    ProjectedDataset pd_;
    mutable std::vector<double> new_coord_;
};

inline std::unique_ptr<EnergyState> make_energy_state(const EnergyModel& model, TransformMatrix a,
                                                      Dataset ds) {
    if (model.kind == EnergyModel::Kind::Nca)
        return std::make_unique<NcaEnergyState>(std::move(a), std::move(ds));
    return std::make_unique<LmnnEnergyState>(std::move(a), std::move(ds),
                                             model.target_neighbor_count);
}

/// Energy difference a single-entry edit would cause, plus the absolute
/// energy after the edit. Does not modify the state.
struct EnergyDelta {
    double delta_e;
    double new_energy;
};

inline EnergyDelta nca_energy_delta(const EnergyState& state, std::size_t row, std::size_t col,
                                    double delta) {
    const double next = state.probe_entry(row, col, delta);
    return EnergyDelta{next - state.energy(), next};
}

}  // namespace dml
