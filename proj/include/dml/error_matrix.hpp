#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dml/cross_validation.hpp"
#include "dml/matrix.hpp"

namespace dml {

/// Methods x datasets table of mean error percentages; the input to the
/// ranking and statistical-test machinery.
struct ErrorMatrix {
    std::vector<std::string> methods;
    std::vector<std::string> datasets;
    Matrix errors;  // methods x datasets, percent

    double error(std::size_t method, std::size_t dataset) const { return errors(method, dataset); }

    std::size_t method_index(const std::string& name) const {
        const auto it = std::find(methods.begin(), methods.end(), name);
        if (it == methods.end())
            throw std::invalid_argument("ErrorMatrix: unknown method '" + name + "'");
        return static_cast<std::size_t>(it - methods.begin());
    }

    void validate() const {
        if (methods.empty() || datasets.empty())
            throw std::invalid_argument("ErrorMatrix: empty");
        if (errors.rows() != methods.size() || errors.cols() != datasets.size())
            throw std::invalid_argument("ErrorMatrix: shape mismatch");
        for (std::size_t m = 0; m < methods.size(); ++m)
            for (std::size_t d = 0; d < datasets.size(); ++d)
                if (!(errors(m, d) >= 0.0 && errors(m, d) <= 100.0))
                    throw std::invalid_argument("ErrorMatrix: entry outside [0, 100]");
    }
};

/// Collects CV results into a dense matrix; every (method, dataset)
/// pair must be present exactly once.
inline ErrorMatrix collect_error_matrix(const std::vector<ExperimentResult>& results) {
    ErrorMatrix em;
    for (const auto& r : results) {
        if (std::find(em.methods.begin(), em.methods.end(), r.method) == em.methods.end())
            em.methods.push_back(r.method);
        if (std::find(em.datasets.begin(), em.datasets.end(), r.dataset) == em.datasets.end())
            em.datasets.push_back(r.dataset);
    }
    em.errors = Matrix(em.methods.size(), em.datasets.size(),
                       std::numeric_limits<double>::quiet_NaN());
    for (const auto& r : results)
        em.errors(em.method_index(r.method),
                  static_cast<std::size_t>(std::find(em.datasets.begin(), em.datasets.end(),
                                                     r.dataset) -
                                           em.datasets.begin())) = r.mean_error_percent;
    for (std::size_t m = 0; m < em.methods.size(); ++m)
        for (std::size_t d = 0; d < em.datasets.size(); ++d)
            if (std::isnan(em.errors(m, d)))
                throw std::invalid_argument("collect_error_matrix: missing cell " + em.methods[m] +
                                            " x " + em.datasets[d]);
    em.validate();
    return em;
}

namespace detail {

/// Mid-ranks of a value vector, rank 1 = smallest; tied values share the
/// average of their rank positions.
inline std::vector<double> midranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = shared;
        i = j + 1;
    }
    return ranks;
}

}  // namespace detail

/// Average rank per method over datasets; rank 1 goes to the lowest
/// error, ties get mid-ranks.
inline std::vector<double> rank_methods(const ErrorMatrix& em) {
    em.validate();
    std::vector<double> average(em.methods.size(), 0.0);
    std::vector<double> column(em.methods.size());
    for (std::size_t d = 0; d < em.datasets.size(); ++d) {
        for (std::size_t m = 0; m < em.methods.size(); ++m) column[m] = em.errors(m, d);
        const std::vector<double> ranks = detail::midranks(column);
        for (std::size_t m = 0; m < em.methods.size(); ++m) average[m] += ranks[m];
    }
    for (double& r : average) r /= static_cast<double>(em.datasets.size());
    return average;
}

}  // namespace dml
