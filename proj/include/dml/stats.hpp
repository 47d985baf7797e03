#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dml/error_matrix.hpp"

namespace dml {

struct insufficient_data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

/// Regularized upper incomplete gamma Q(a, x), series / continued
/// fraction split at x = a + 1 (Lentz). Relative accuracy ~1e-14, valid
/// down to the 1e-30 tails the Friedman check needs.
inline double regularized_gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("regularized_gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    const double log_gamma_a = std::lgamma(a);
    if (x < a + 1.0) {
        // series for P(a, x); Q = 1 - P
        double term = 1.0 / a;
        double sum = term;
        double ap = a;
        for (int i = 0; i < 1000; ++i) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-16) break;
        }
        const double p = sum * std::exp(-x + a * std::log(x) - log_gamma_a);
        return 1.0 - p;
    }
    // Lentz continued fraction for Q(a, x)
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - log_gamma_a);
}

inline double chi_square_sf(double x, double dof) {
    return regularized_gamma_q(dof / 2.0, x / 2.0);
}

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace detail

/// Result of a hypothesis test at significance level alpha; the null is
/// rejected exactly when p < alpha.
struct TestOutcome {
    double statistic = 0.0;
    double p_value = 1.0;
    double alpha = 0.05;
    bool rejected = false;
};

/// Two-sided Wilcoxon signed-rank test via the normal approximation with
/// continuity correction; zero differences dropped, tied absolute
/// differences mid-ranked with the variance tie correction.
inline TestOutcome wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                        double alpha = 0.05) {
    if (a.size() != b.size())
        throw std::invalid_argument("wilcoxon_signed_rank: samples must be paired");
    std::vector<double> abs_diff;
    std::vector<int> sign;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d == 0.0) continue;
        abs_diff.push_back(std::abs(d));
        sign.push_back(d > 0.0 ? 1 : -1);
    }
    const std::size_t n = abs_diff.size();
    if (n < 6)
        throw insufficient_data_error(
            "wilcoxon_signed_rank: fewer than 6 nonzero differences (normal approximation)");

    const std::vector<double> ranks = detail::midranks(abs_diff);
    double w_plus = 0.0, w_minus = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        (sign[i] > 0 ? w_plus : w_minus) += ranks[i];

    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double variance = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    // tie correction: subtract sum(t^3 - t) / 48 over tied groups
    {
        std::vector<double> sorted(abs_diff);
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i + 1);
            variance -= (t * t * t - t) / 48.0;
            i = j + 1;
        }
    }
    const double statistic = std::min(w_plus, w_minus);
    const double se = std::sqrt(variance);
    const double continuity = statistic == mean ? 0.0 : (statistic > mean ? 0.5 : -0.5);
    const double z = (statistic - mean - continuity) / se;
    const double p = std::min(1.0, 2.0 * detail::normal_sf(std::abs(z)));

    return TestOutcome{statistic, p, alpha, p < alpha};
}

/// Friedman chi-square test over the error matrix: mid-rank average
/// ranks, plain chi-square statistic with n_c - 1 degrees of freedom.
inline TestOutcome friedman_test(const ErrorMatrix& em, double alpha = 0.05) {
    if (em.methods.size() < 2 || em.datasets.size() < 2)
        throw std::invalid_argument("friedman_test: need >= 2 methods and >= 2 datasets");
    const std::vector<double> average = rank_methods(em);
    const double n_c = static_cast<double>(em.methods.size());
    const double n_t = static_cast<double>(em.datasets.size());
    const double center = (n_c + 1.0) / 2.0;
    double spread = 0.0;
    for (double r : average) spread += (r - center) * (r - center);
    const double statistic = 12.0 * n_t / (n_c * (n_c + 1.0)) * spread;
    const double p = detail::chi_square_sf(statistic, n_c - 1.0);
    return TestOutcome{statistic, p, alpha, p < alpha};
}

enum class PostHocKind { Nemenyi, BonferroniDunn };

namespace detail {

// alpha = 0.05 critical values, n_c = 2..20.
// Nemenyi: studentized range quantile / sqrt(2);
// Bonferroni-Dunn: two-sided normal quantile at alpha / (n_c - 1).
inline constexpr double kNemenyiQ[] = {1.9600, 2.3437, 2.5690, 2.7278, 2.8497, 2.9483, 3.0309,
                                       3.1017, 3.1637, 3.2187, 3.2680, 3.3127, 3.3536, 3.3912,
                                       3.4260, 3.4584, 3.4887, 3.5171, 3.5438};
inline constexpr double kBonferroniDunnQ[] = {1.9600, 2.2414, 2.3940, 2.4977, 2.5758, 2.6383,
                                              2.6901, 2.7344, 2.7729, 2.8070, 2.8376, 2.8653,
                                              2.8905, 2.9137, 2.9352, 2.9552, 2.9738, 2.9913,
                                              3.0078};

inline double critical_value(PostHocKind kind, std::size_t n_c) {
    if (n_c < 2 || n_c > 20)
        throw std::invalid_argument("critical_value: method count outside tabled range 2..20");
    return kind == PostHocKind::Nemenyi ? kNemenyiQ[n_c - 2] : kBonferroniDunnQ[n_c - 2];
}

}  // namespace detail

/// CD = q_alpha * sqrt(n_c (n_c + 1) / (6 n_t)): the minimum
/// average-rank gap at which two methods differ significantly.
inline double critical_difference(PostHocKind kind, std::size_t n_c, std::size_t n_t) {
    if (n_t < 1) throw std::invalid_argument("critical_difference: n_t must be >= 1");
    const double q = detail::critical_value(kind, n_c);
    const double nc = static_cast<double>(n_c);
    return q * std::sqrt(nc * (nc + 1.0) / (6.0 * static_cast<double>(n_t)));
}

struct PostHocOutcome {
    std::vector<std::string> methods;
    std::vector<double> average_ranks;
    std::vector<double> rank_difference;  // |rank - rank(control)|
    std::vector<bool> rejected;
    double cd = 0.0;
    std::string control;
};

/// Control-vs-all post-hoc comparison: a method differs significantly
/// from the control when their average ranks differ by at least the
/// critical difference.
inline PostHocOutcome post_hoc(const ErrorMatrix& em, const std::string& control, PostHocKind kind,
                               double alpha = 0.05) {
    if (alpha != 0.05)
        throw std::invalid_argument("post_hoc: only alpha = 0.05 is tabled");
    const std::size_t control_index = em.method_index(control);
    const std::vector<double> average = rank_methods(em);
    PostHocOutcome out;
    out.methods = em.methods;
    out.average_ranks = average;
    out.control = control;
    out.cd = critical_difference(kind, em.methods.size(), em.datasets.size());
    out.rank_difference.resize(em.methods.size());
    out.rejected.resize(em.methods.size());
    for (std::size_t m = 0; m < em.methods.size(); ++m) {
        out.rank_difference[m] = std::abs(average[m] - average[control_index]);
        out.rejected[m] = out.rank_difference[m] >= out.cd;
    }
    return out;
}

}  // namespace dml
