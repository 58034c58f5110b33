#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "refactor/matrix.hpp"

namespace refactor {

/// A metric value or the reason it is unavailable.
struct MetricValue {
    double value = 0.0;
    std::string missing_reason;

    bool missing() const { return !missing_reason.empty(); }

    static MetricValue of(double v) { return MetricValue{v, {}}; }
    static MetricValue absent(std::string reason) { return MetricValue{0.0, std::move(reason)}; }
    static MetricValue from(const std::optional<double>& v, const char* reason) {
        return v ? of(*v) : absent(reason);
    }
};

/// Named map of reconstruction metrics (plus any attached traditional
/// indices) for one (dataset, association, mode) evaluation.
struct MetricPanel {
    std::map<std::string, MetricValue> values;
    std::string dataset_id;
    std::string kind;
    std::string mode;
    std::uint64_t seed = 0;

    void set(const std::string& id, MetricValue v) { values[id] = std::move(v); }
    const MetricValue& at(const std::string& id) const { return values.at(id); }
    bool has(const std::string& id) const { return values.count(id) != 0; }
};

/// Clamp applied to calibrated probabilities before taking logs; PAVA
/// can emit exact 0/1 blocks whose logs would diverge.
inline constexpr double kProbabilityClamp = 1e-6;

namespace detail {

/// Flatten the observed cells of x and the matching score cells.
inline void observed_cells(const ResponseMatrix& x, const RealMatrix& scores,
                           std::vector<double>& xs, std::vector<double>& ss) {
    if (scores.rows() != x.rows() || scores.cols() != x.cols())
        throw std::invalid_argument("metric: shape mismatch");
    xs.clear();
    ss.clear();
    xs.reserve(static_cast<std::size_t>(x.rows() * x.cols()));
    ss.reserve(xs.capacity());
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            if (x.observed(i, j)) {
                xs.push_back(x.value(i, j));
                ss.push_back(scores(i, j));
            }
}

/// Merge-sort pass that counts inversions (discordant pairs) in v.
inline std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& buf) {
    const std::size_t n = v.size();
    std::uint64_t inversions = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
            const std::size_t mid = lo + width;
            const std::size_t hi = std::min(lo + 2 * width, n);
            std::size_t a = lo, b = mid, out = lo;
            while (a < mid && b < hi) {
                if (v[b] < v[a]) {
                    inversions += mid - a;
                    buf[out++] = v[b++];
                } else {
                    buf[out++] = v[a++];
                }
            }
            while (a < mid) buf[out++] = v[a++];
            while (b < hi) buf[out++] = v[b++];
            std::copy(buf.begin() + static_cast<long>(lo), buf.begin() + static_cast<long>(hi),
                      v.begin() + static_cast<long>(lo));
        }
    }
    return inversions;
}

inline std::uint64_t tie_pair_count(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::uint64_t ties = 0;
    std::size_t i = 0;
    while (i < v.size()) {
        std::size_t j = i;
        while (j < v.size() && v[j] == v[i]) ++j;
        const std::uint64_t run = j - i;
        ties += run * (run - 1) / 2;
        i = j;
    }
    return ties;
}

}  // namespace detail

/// Rank-sum AUC: probability that a random 1-cell scores above a random
/// 0-cell, ties counted one half. Missing when only one class occurs.
inline std::optional<double> auc(const std::vector<double>& x, const std::vector<double>& scores) {
    if (x.size() != scores.size()) throw std::invalid_argument("auc: length mismatch");
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    std::uint64_t n_pos = 0, n_neg = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (x[order[k]] != 0.0) rank_sum_pos += avg_rank;
        i = j;
    }
    for (std::size_t k = 0; k < n; ++k) (x[k] != 0.0 ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;
    const double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

inline std::optional<double> auc(const ResponseMatrix& x, const RealMatrix& scores) {
    std::vector<double> xs, ss;
    detail::observed_cells(x, scores, xs, ss);
    return auc(xs, ss);
}

/// Kendall tau-b by Knight's O(n log n) method: sort by (x, y), count
/// discordances as merge-sort inversions in y, and correct for ties.
/// Exactly matches quadratic pair counting. Missing when either vector
/// has zero variance.
inline std::optional<double> kendall_tau_b(const std::vector<double>& x,
                                           const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("kendall_tau_b: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("kendall_tau_b: need at least 2 observations");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return y[a] < y[b];
    });

    // pairs tied on x, and tied on both x and y
    std::uint64_t ties_x = 0, ties_xy = 0;
    {
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j < n && x[order[j]] == x[order[i]]) ++j;
            const std::uint64_t run = j - i;
            ties_x += run * (run - 1) / 2;
            std::size_t a = i;
            while (a < j) {
                std::size_t b = a;
                while (b < j && y[order[b]] == y[order[a]]) ++b;
                const std::uint64_t r2 = b - a;
                ties_xy += r2 * (r2 - 1) / 2;
                a = b;
            }
            i = j;
        }
    }

    std::vector<double> ysorted(n), buf(n);
    for (std::size_t i = 0; i < n; ++i) ysorted[i] = y[order[i]];
    const std::uint64_t discordant_swaps = detail::count_inversions(ysorted, buf);
    const std::uint64_t ties_y = detail::tie_pair_count(y);

    const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    if (ties_x == n0 || ties_y == n0) return std::nullopt;  // constant input

    // P - Q = n0 - ties_x - ties_y + ties_xy - 2 * swaps
    const double num = static_cast<double>(n0) - static_cast<double>(ties_x) -
                       static_cast<double>(ties_y) + static_cast<double>(ties_xy) -
                       2.0 * static_cast<double>(discordant_swaps);
    const double den = std::sqrt(static_cast<double>(n0 - ties_x)) *
                       std::sqrt(static_cast<double>(n0 - ties_y));
    return num / den;
}

inline std::optional<double> kendall_tau_b(const ResponseMatrix& x, const RealMatrix& scores) {
    std::vector<double> xs, ss;
    detail::observed_cells(x, scores, xs, ss);
    return kendall_tau_b(xs, ss);
}

/// Frobenius cosine <X, Y> / (|X| |Y|) over observed cells.
inline std::optional<double> matrix_cosine(const ResponseMatrix& x, const RealMatrix& y) {
    std::vector<double> xs, ys;
    detail::observed_cells(x, y, xs, ys);
    double dot = 0, nx = 0, ny = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        dot += xs[i] * ys[i];
        nx += xs[i] * xs[i];
        ny += ys[i] * ys[i];
    }
    if (nx == 0.0 || ny == 0.0) return std::nullopt;
    return dot / (std::sqrt(nx) * std::sqrt(ny));
}

inline std::optional<double> matrix_cosine(const RealMatrix& x, const RealMatrix& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw std::invalid_argument("matrix_cosine: shape mismatch");
    const double nx = x.norm();
    const double ny = y.norm();
    if (nx == 0.0 || ny == 0.0) return std::nullopt;
    return (x.array() * y.array()).sum() / (nx * ny);
}

/// Mean per-cell log-likelihood of the responses under calibrated
/// probabilities, clamped away from 0/1.
inline double mean_log_likelihood(const ResponseMatrix& x, const RealMatrix& probs) {
    if (probs.rows() != x.rows() || probs.cols() != x.cols())
        throw std::invalid_argument("likelihood: shape mismatch");
    double sum = 0.0;
    Eigen::Index cnt = 0;
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            if (x.observed(i, j)) {
                const double p =
                    std::clamp(probs(i, j), kProbabilityClamp, 1.0 - kProbabilityClamp);
                sum += (x.value(i, j) != 0.0) ? std::log(p) : std::log1p(-p);
                ++cnt;
            }
    if (cnt == 0) throw std::invalid_argument("likelihood: all entries masked");
    return sum / static_cast<double>(cnt);
}

/// Geometric mean of the per-cell likelihoods.
inline double geometric_mean_likelihood(const ResponseMatrix& x, const RealMatrix& probs) {
    return std::exp(mean_log_likelihood(x, probs));
}

/// Binary cross-entropy; equals -log geometric_mean_likelihood.
inline double cross_entropy(const ResponseMatrix& x, const RealMatrix& probs) {
    return -mean_log_likelihood(x, probs);
}

}  // namespace refactor
