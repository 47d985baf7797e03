#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dml/dataset.hpp"
#include "dml/matrix.hpp"
#include "dml/objective.hpp"
#include "dml/rng.hpp"

namespace dml {

// Energies at or below this are treated as the objective's floor
// (both objectives are non-negative).
inline constexpr double kEnergyFloor = 1e-15;

/// Temperature as a function of the sweep index. Annealing decays
/// geometrically, T_k = alpha^k * T0; quenching is the T = 0 limit.
struct TemperatureSchedule {
    enum class Kind { Annealing, Quench, Fixed };
    Kind kind = Kind::Annealing;
    double t0 = 0.1;
    double alpha = 0.9;
    double fixed_t = 0.0;

    static TemperatureSchedule annealing(double t0, double alpha) {
        return {Kind::Annealing, t0, alpha, 0.0};
    }
    static TemperatureSchedule quench() { return {Kind::Quench, 0.0, 0.0, 0.0}; }
    static TemperatureSchedule fixed(double t) { return {Kind::Fixed, 0.0, 0.0, t}; }

    double at(std::size_t sweep) const {
        switch (kind) {
            case Kind::Annealing: return std::pow(alpha, static_cast<double>(sweep)) * t0;
            case Kind::Quench: return 0.0;
            case Kind::Fixed: return fixed_t;
        }
        return 0.0;
    }
};

/// How candidate transforms are drawn: either one uniformly chosen entry
/// is displaced by U(-step, step), or every entry is displaced
/// independently.
struct ProposalPolicy {
    enum class Kind { SingleElement, FullMatrix };
    Kind kind = Kind::SingleElement;
    double step_scale = 1.0;
};

enum class InitMode { Identity, Uniform01 };

struct OptimizerConfig {
    TemperatureSchedule schedule = TemperatureSchedule::annealing(0.1, 0.9);
    ProposalPolicy proposal;
    std::size_t max_sweeps = 2000;
    double epsilon = 1e-5;      // convergence tolerance on best-energy improvement
    std::size_t patience = 50;  // sweeps the improvement is measured over
    std::uint64_t seed = 0;
    InitMode init = InitMode::Uniform01;
    std::size_t resync_interval = 100;  // full re-projection cadence, bounds drift

    void validate() const {
        if (max_sweeps < 1) throw std::invalid_argument("OptimizerConfig: max_sweeps must be >= 1");
        if (!(epsilon > 0.0)) throw std::invalid_argument("OptimizerConfig: epsilon must be > 0");
        if (patience < 1) throw std::invalid_argument("OptimizerConfig: patience must be >= 1");
        if (resync_interval < 1)
            throw std::invalid_argument("OptimizerConfig: resync_interval must be >= 1");
        if (proposal.step_scale < 0.0)
            throw std::invalid_argument("OptimizerConfig: step_scale must be >= 0");
        if (schedule.kind == TemperatureSchedule::Kind::Annealing &&
            (!(schedule.t0 > 0.0) || !(schedule.alpha > 0.0) || !(schedule.alpha < 1.0)))
            throw std::invalid_argument("OptimizerConfig: annealing needs t0 > 0 and alpha in (0,1)");
        if (schedule.kind == TemperatureSchedule::Kind::Fixed && schedule.fixed_t < 0.0)
            throw std::invalid_argument("OptimizerConfig: fixed temperature must be >= 0");
    }
};

struct TraceRecord {
    std::size_t sweep;
    double temperature;
    double energy;
    std::size_t accepted;
};

using EnergyTrace = std::vector<TraceRecord>;

enum class Termination { Converged, MaxSweeps };

struct FitResult {
    TransformMatrix best_transform;
    double best_energy = 0.0;
    EnergyTrace trace;
    std::size_t sweeps_run = 0;
    Termination termination = Termination::Converged;
};

/// Metropolis choice: min[1, exp(-deltaE / T)]; at T = 0 the quench
/// limit, accepting exactly the non-increasing moves.
inline double metropolis_acceptance(double delta_e, double temperature) {
    if (temperature <= 0.0) return delta_e <= 0.0 ? 1.0 : 0.0;
    if (delta_e <= 0.0) return 1.0;
    return std::exp(-delta_e / temperature);
}

struct Proposal {
    TransformMatrix candidate;
    bool single_entry = false;
    std::size_t row = 0;
    std::size_t col = 0;
    double delta = 0.0;
};

/// Draws a candidate transform. The random stream is consumed in the
/// same order as the optimizer's inner loop.
inline Proposal propose(const TransformMatrix& a, const ProposalPolicy& policy, Rng& rng) {
    Proposal p;
    p.candidate = a;
    const double s = policy.step_scale;
    if (policy.kind == ProposalPolicy::Kind::SingleElement) {
        const std::size_t flat = rng.below(a.rows() * a.cols());
        p.single_entry = true;
        p.row = flat / a.cols();
        p.col = flat % a.cols();
        p.delta = rng.uniform(-s, s);
        p.candidate(p.row, p.col) += p.delta;
    } else {
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < a.cols(); ++j)
                p.candidate(i, j) += rng.uniform(-s, s);
    }
    return p;
}

/// Records the lowest-energy transform ever visited; at T > 0 the chain
/// can drift uphill after passing the optimum.
struct BestTracker {
    double energy;
    TransformMatrix transform;

    void offer(double e, const TransformMatrix& a) {
        if (e < energy) {
            energy = e;
            transform = a;
        }
    }
};

/// One Monte Carlo step: N trial moves (N = pattern count), each
/// accepted with the Metropolis probability. Returns the accepted-move
/// count.
inline std::size_t mc_sweep(EnergyState& state, double temperature, const ProposalPolicy& policy,
                            Rng& rng, BestTracker* best = nullptr) {
    const std::size_t moves = state.pattern_count();
    const std::size_t rows = state.transform().rows();
    const std::size_t cols = state.transform().cols();
    std::size_t accepted = 0;
    for (std::size_t m = 0; m < moves; ++m) {
        if (policy.kind == ProposalPolicy::Kind::SingleElement) {
            const std::size_t flat = rng.below(rows * cols);
            const std::size_t r = flat / cols;
            const std::size_t c = flat % cols;
            const double delta = rng.uniform(-policy.step_scale, policy.step_scale);
            const double candidate_energy = state.probe_entry(r, c, delta);
            const double w = metropolis_acceptance(candidate_energy - state.energy(), temperature);
            const double u = rng.uniform01();
            if (u < w) {
                state.apply_entry(r, c, delta, candidate_energy);
                ++accepted;
                if (best) best->offer(state.energy(), state.transform());
            }
        } else {
            TransformMatrix b = state.transform();
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < cols; ++j)
                    b(i, j) += rng.uniform(-policy.step_scale, policy.step_scale);
            const double candidate_energy = state.probe_matrix(b);
            const double w = metropolis_acceptance(candidate_energy - state.energy(), temperature);
            const double u = rng.uniform01();
            if (u < w) {
                state.adopt_matrix(b, candidate_energy);
                ++accepted;
                if (best) best->offer(state.energy(), state.transform());
            }
        }
    }
    return accepted;
}

/// Called at the start of selected sweeps with the current transform;
/// used to export 2-D projection snapshots.
using SweepObserver = std::function<void(std::size_t sweep, const TransformMatrix&)>;

/// Metropolis Monte Carlo minimization of the model energy over the
/// transform entries, under the configured temperature schedule.
/// Fully reproducible from config.seed.
inline FitResult fit_dmlfe(const Dataset& ds, const EnergyModel& model,
                           const OptimizerConfig& config, const SweepObserver& observer = {}) {
    config.validate();
    Rng rng(config.seed);
    const std::size_t d = ds.dim();

    TransformMatrix a0;
    if (config.init == InitMode::Identity) {
        a0 = TransformMatrix::identity(d);
    } else {
        a0 = TransformMatrix(d, d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) a0(i, j) = rng.uniform01();
    }

    auto state = make_energy_state(model, a0, ds);
    BestTracker best{state->energy(), state->transform()};

    FitResult result;
    result.termination = Termination::MaxSweeps;
    result.sweeps_run = 0;

    std::vector<double> best_history;
    best_history.reserve(config.max_sweeps);

    if (best.energy > kEnergyFloor) {
        for (std::size_t k = 0; k < config.max_sweeps; ++k) {
            if (observer) observer(k, state->transform());
            if (k > 0 && k % config.resync_interval == 0) state->resync();
            const double temperature = config.schedule.at(k);
            const std::size_t accepted = mc_sweep(*state, temperature, config.proposal, rng, &best);
            result.trace.push_back({k, temperature, state->energy(), accepted});
            best_history.push_back(best.energy);
            result.sweeps_run = k + 1;
            if (best.energy <= kEnergyFloor) {
                result.termination = Termination::Converged;
                break;
            }
            if (k >= config.patience &&
                best_history[k - config.patience] - best_history[k] < config.epsilon) {
                result.termination = Termination::Converged;
                break;
            }
        }
    } else {
        result.termination = Termination::Converged;
    }

    result.best_transform = std::move(best.transform);
    result.best_energy = best.energy;
    return result;
}

struct MultiQuenchResult {
    std::vector<FitResult> runs;
    std::size_t best_index = 0;

    const FitResult& best() const { return runs[best_index]; }
};

/// Independent T = 0 runs from distinct uniform initializations; the
/// lowest-energy run wins. All traces are retained for export.
inline MultiQuenchResult multi_quench(const Dataset& ds, const EnergyModel& model,
                                      const OptimizerConfig& config, std::size_t restarts) {
    if (restarts < 1) throw std::invalid_argument("multi_quench: restarts must be >= 1");
    MultiQuenchResult result;
    result.runs.reserve(restarts);
    const SeedSequence base = SeedSequence(config.seed).with("quench");
    for (std::size_t j = 0; j < restarts; ++j) {
        OptimizerConfig run_config = config;
        run_config.schedule = TemperatureSchedule::quench();
        run_config.init = InitMode::Uniform01;
        run_config.seed = base.with(j).seed();
        result.runs.push_back(fit_dmlfe(ds, model, run_config));
        if (result.runs[j].best_energy < result.runs[result.best_index].best_energy)
            result.best_index = j;
    }
    return result;
}

struct GradientConfig {
    double learning_rate = 1.0;
    std::size_t max_iters = 500;
    double tolerance = 1e-6;
    std::size_t patience = 10;
    InitMode init = InitMode::Identity;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0))
            throw std::invalid_argument("GradientConfig: learning_rate must be > 0");
        if (max_iters < 1) throw std::invalid_argument("GradientConfig: max_iters must be >= 1");
        if (!(tolerance > 0.0)) throw std::invalid_argument("GradientConfig: tolerance must be > 0");
        if (patience < 1) throw std::invalid_argument("GradientConfig: patience must be >= 1");
    }
};

/// Steepest descent on the NCA energy with backtracking halving; the
/// baseline the Monte Carlo method is compared against. Recorded
/// energies are non-increasing by construction.
inline FitResult fit_nca_gradient(const Dataset& ds, const GradientConfig& config) {
    config.validate();
    Rng rng(config.seed);
    const std::size_t d = ds.dim();

    TransformMatrix a;
    if (config.init == InitMode::Identity) {
        a = TransformMatrix::identity(d);
    } else {
        a = TransformMatrix(d, d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) a(i, j) = rng.uniform01();
    }

    double energy = nca_energy(a, ds);
    FitResult result;
    result.termination = Termination::MaxSweeps;

    std::vector<double> history;
    history.reserve(config.max_iters);

    if (energy > kEnergyFloor) {
        for (std::size_t iter = 0; iter < config.max_iters; ++iter) {
            const Matrix grad = nca_gradient(a, ds);
            double step = config.learning_rate;
            TransformMatrix candidate(a.rows(), a.cols());
            double candidate_energy = energy;
            bool improved = false;
            for (int halving = 0; halving < 60; ++halving) {
                for (std::size_t i = 0; i < a.rows(); ++i)
                    for (std::size_t j = 0; j < a.cols(); ++j)
                        candidate(i, j) = a(i, j) - step * grad(i, j);
                candidate_energy = nca_energy(candidate, ds);
                if (candidate_energy <= energy) {
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!improved) {
                result.termination = Termination::Converged;
                break;
            }
            a = candidate;
            energy = candidate_energy;
            result.trace.push_back({iter, 0.0, energy, 1});
            history.push_back(energy);
            result.sweeps_run = iter + 1;
            if (energy <= kEnergyFloor) {
                result.termination = Termination::Converged;
                break;
            }
            if (iter >= config.patience &&
                history[iter - config.patience] - history[iter] < config.tolerance) {
                result.termination = Termination::Converged;
                break;
            }
        }
    } else {
        result.termination = Termination::Converged;
    }

    result.best_transform = std::move(a);
    result.best_energy = energy;
    return result;
}

}  // namespace dml
