#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "refactor/matrix.hpp"

namespace refactor {

/// Best monotone (nondecreasing) calibration of a score matrix to the
/// observed responses, least squares over the monotone cone. `fitted`
/// holds the calibrated value per cell (NaN where masked); `knots` is
/// the resulting step function keyed by score; `rss` is the attained
/// minimum.
struct IsotonicFit {
    RealMatrix fitted;
    struct Knot {
        double score;  // upper score of the pooled block
        double value;  // fitted block mean
    };
    std::vector<Knot> knots;
    double rss = 0.0;

    /// Apply the step function to a new score (for inspection; the
    /// in-sample fitted values are already stored).
    double apply(double score) const {
        if (knots.empty()) return std::numeric_limits<double>::quiet_NaN();
        auto it = std::lower_bound(knots.begin(), knots.end(), score,
                                   [](const Knot& k, double s) { return k.score < s; });
        if (it == knots.end()) return knots.back().value;
        return it->value;
    }
};

namespace detail {

struct PavaBlock {
    double sum;
    double count;
    double upper_score;
    double value() const { return sum / count; }
};

/// Weighted pool-adjacent-violators over (score, target) pairs. Ties in
/// score are pre-pooled into a single block so the solution does not
/// depend on the order ties are visited.
inline std::vector<PavaBlock> pava(std::vector<std::pair<double, double>>& pairs) {
    std::sort(pairs.begin(), pairs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<PavaBlock> stack;
    stack.reserve(pairs.size());
    std::size_t i = 0;
    while (i < pairs.size()) {
        double sum = 0.0, count = 0.0;
        const double score = pairs[i].first;
        while (i < pairs.size() && pairs[i].first == score) {
            sum += pairs[i].second;
            count += 1.0;
            ++i;
        }
        stack.push_back(PavaBlock{sum, count, score});
        while (stack.size() > 1 &&
               stack[stack.size() - 2].value() >= stack.back().value()) {
            PavaBlock top = stack.back();
            stack.pop_back();
            stack.back().sum += top.sum;
            stack.back().count += top.count;
            stack.back().upper_score = top.upper_score;
        }
    }
    return stack;
}

}  // namespace detail

/// PAVA calibration of arbitrary scores to a masked response matrix.
/// Masked cells take no part in the fit and receive NaN.
inline IsotonicFit isotonic_calibrate(const ResponseMatrix& x, const RealMatrix& scores) {
    if (scores.rows() != x.rows() || scores.cols() != x.cols())
        throw std::invalid_argument("isotonic_calibrate: shape mismatch");
    require_finite(scores, "isotonic_calibrate");

    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(static_cast<std::size_t>(x.rows() * x.cols()));
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            if (x.observed(i, j)) pairs.emplace_back(scores(i, j), x.value(i, j));
    if (pairs.empty()) throw std::invalid_argument("isotonic_calibrate: all entries masked");

    const std::vector<detail::PavaBlock> blocks = detail::pava(pairs);

    IsotonicFit fit;
    fit.knots.reserve(blocks.size());
    for (const auto& b : blocks) fit.knots.push_back({b.upper_score, b.value()});

    fit.fitted = RealMatrix::Constant(x.rows(), x.cols(),
                                      std::numeric_limits<double>::quiet_NaN());
    double rss = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            if (x.observed(i, j)) {
                const double f = fit.apply(scores(i, j));
                fit.fitted(i, j) = f;
                const double r = x.value(i, j) - f;
                rss += r * r;
            }
    fit.rss = rss;
    return fit;
}

/// Isotonic coefficient of determination 1 - rss / total sum of squares:
/// the largest R^2 any monotone recalibration of the scores can attain.
/// Undefined (nullopt) when the observed responses are constant.
inline std::optional<double> isotonic_r2(const ResponseMatrix& x, const RealMatrix& scores) {
    double sum = 0.0;
    Eigen::Index cnt = 0;
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            if (x.observed(i, j)) {
                sum += x.value(i, j);
                ++cnt;
            }
    if (cnt == 0) throw std::invalid_argument("isotonic_r2: all entries masked");
    const double mean = sum / static_cast<double>(cnt);
    double tss = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            if (x.observed(i, j)) tss += (x.value(i, j) - mean) * (x.value(i, j) - mean);
    if (tss == 0.0) return std::nullopt;
    const IsotonicFit fit = isotonic_calibrate(x, scores);
    return 1.0 - fit.rss / tss;
}

}  // namespace refactor
