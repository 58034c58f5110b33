#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>

#include "refactor/dcor.hpp"
#include "refactor/isotonic.hpp"
#include "refactor/metrics.hpp"
#include "refactor/reconstruct.hpp"
#include "refactor/traditional.hpp"

namespace refactor {

/// The fixed metric id set every panel draws from. Traditional indices
/// are attached under their own ids when a TraditionalPanel is supplied.
inline const std::set<std::string>& reconstruction_metric_ids() {
    static const std::set<std::string> ids = {"auc",          "kendall_tau_b", "cosine",
                                              "gm_likelihood", "cross_entropy", "isotonic_r2",
                                              "dcor2",        "pdcor"};
    return ids;
}

inline const std::set<std::string>& traditional_metric_ids() {
    static const std::set<std::string> ids = {"alpha", "av_r",   "cfi",  "tli",
                                              "rho_c", "tau_rc", "u_rc", "ecv"};
    return ids;
}

namespace detail {

inline bool wants(const std::set<std::string>& requested, const std::string& id) {
    return requested.empty() || requested.count(id) != 0;
}

inline void attach_traditional(MetricPanel& panel, const TraditionalPanel& t,
                               const std::set<std::string>& requested) {
    const auto put = [&](const char* id, const std::optional<double>& v) {
        if (!wants(requested, id)) return;
        if (v) {
            panel.set(id, MetricValue::of(*v));
        } else {
            const auto it = t.missing_reasons.find(id);
            panel.set(id, MetricValue::absent(it == t.missing_reasons.end() ? "undefined"
                                                                            : it->second));
        }
    };
    put("alpha", t.alpha);
    put("av_r", t.av_r);
    put("cfi", t.cfi);
    put("tli", t.tli);
    put("rho_c", t.rho_c);
    put("tau_rc", t.tau_rc);
    put("u_rc", t.u_rc);
    put("ecv", t.ecv);
}

}  // namespace detail

/// Evaluate every requested reconstruction metric of scores against the
/// observed responses. Rank-1 scores carry an arbitrary polarity while
/// the monotone calibration class is one-directional, so the evaluation
/// first orients the scores by the sign of their covariance with the
/// observed cells (the same evaluation-side convention as fitting the
/// calibration on the evaluated pair). Probability-based and dependence
/// metrics then use the isotonic calibration; rank metrics use the
/// oriented raw scores.
inline MetricPanel full_panel(const ResponseMatrix& x, const RealMatrix& raw_scores,
                              const std::set<std::string>& requested = {},
                              const TraditionalPanel* traditional = nullptr) {
    MetricPanel panel;
    const auto wants = [&](const char* id) { return detail::wants(requested, id); };

    double covariance = 0.0;
    {
        std::vector<double> xs, ss;
        detail::observed_cells(x, raw_scores, xs, ss);
        double mx = 0, ms = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i];
            ms += ss[i];
        }
        mx /= static_cast<double>(xs.size());
        ms /= static_cast<double>(ss.size());
        for (std::size_t i = 0; i < xs.size(); ++i) covariance += (xs[i] - mx) * (ss[i] - ms);
    }
    const RealMatrix scores = covariance < 0.0 ? RealMatrix(-raw_scores) : raw_scores;

    std::optional<IsotonicFit> fit;
    const auto calibrated = [&]() -> const RealMatrix& {
        if (!fit) fit = isotonic_calibrate(x, scores);
        return fit->fitted;
    };
    // calibrated probabilities with masked holes replaced by 0.5 so the
    // distance metrics see finite values (masked cells never enter the
    // likelihoods; distances use the mask directly)
    std::optional<RealMatrix> calibrated_filled;
    const auto calibrated_dense = [&]() -> const RealMatrix& {
        if (!calibrated_filled) {
            RealMatrix m = calibrated();
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                for (Eigen::Index i = 0; i < m.rows(); ++i)
                    if (!x.observed(i, j)) m(i, j) = 0.5;
            calibrated_filled = std::move(m);
        }
        return *calibrated_filled;
    };

    const auto guarded = [&](const char* id, const std::function<MetricValue()>& eval) {
        if (!wants(id)) return;
        try {
            panel.set(id, eval());
        } catch (const std::exception& e) {
            panel.set(id, MetricValue::absent(e.what()));
        }
    };

    guarded("auc",
            [&] { return MetricValue::from(auc(x, scores), "single-class data"); });
    guarded("kendall_tau_b",
            [&] { return MetricValue::from(kendall_tau_b(x, scores), "zero variance"); });
    guarded("cosine",
            [&] { return MetricValue::from(matrix_cosine(x, scores), "zero matrix"); });
    guarded("isotonic_r2",
            [&] { return MetricValue::from(isotonic_r2(x, scores), "constant responses"); });
    guarded("gm_likelihood",
            [&] { return MetricValue::of(geometric_mean_likelihood(x, calibrated())); });
    guarded("cross_entropy",
            [&] { return MetricValue::of(cross_entropy(x, calibrated())); });
    guarded("dcor2", [&] {
        std::string flag;
        const auto v = dcor2_bias_corrected(x, calibrated_dense(), &flag);
        return MetricValue::from(v, flag.empty() ? "undefined" : flag.c_str());
    });
    guarded("pdcor", [&] {
        std::string flag;
        const auto v = partial_dcor(x, calibrated_dense(), IndependenceBaseline::from(x), &flag);
        return MetricValue::from(v, flag.empty() ? "undefined" : flag.c_str());
    });
    if (traditional) detail::attach_traditional(panel, *traditional, requested);
    return panel;
}

/// Full in-sample refactor run on one dataset and association kind.
struct RefactorResult {
    RankOneModel model;
    Reconstruction recon;
    MetricPanel panel;
};

/// Fit the rank-1 model from the dual association images, rebuild the
/// score matrix, and score every requested metric on (X, X_hat).
/// Traditional image-based indices ride along in the same panel.
inline RefactorResult refactor_functional(const ResponseMatrix& x, AssociationKind kind,
                                          const std::set<std::string>& metrics = {},
                                          LoadingEstimator estimator =
                                              LoadingEstimator::leading_eigenvector,
                                          int threads = 1, bool with_traditional = true,
                                          int ecv_factors = 3) {
    RefactorResult result;
    result.model = fit_rank_one(x, kind, estimator, threads);
    result.recon = reconstruct(result.model);
    if (with_traditional) {
        const TraditionalPanel trad = traditional_panel(x, kind, ecv_factors, threads);
        result.panel = full_panel(x, result.recon.scores, metrics, &trad);
    } else {
        result.panel = full_panel(x, result.recon.scores, metrics);
    }
    result.panel.kind = to_string(kind);
    result.panel.mode = "refactor";
    return result;
}

}  // namespace refactor
