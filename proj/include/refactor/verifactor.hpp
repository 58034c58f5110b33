#pragma once

#include <Eigen/SVD>
#include <set>
#include <string>
#include <vector>

#include "refactor/partition.hpp"
#include "refactor/refactor_analysis.hpp"

namespace refactor {

enum class BlockPredictor { loading_outer, pseudoinverse };

inline const char* to_string(BlockPredictor p) {
    return p == BlockPredictor::loading_outer ? "loading_outer" : "pseudoinverse";
}

inline BlockPredictor block_predictor_from_string(const std::string& s) {
    if (s == "loading_outer" || s == "loading") return BlockPredictor::loading_outer;
    if (s == "pseudoinverse" || s == "pinv") return BlockPredictor::pseudoinverse;
    throw std::invalid_argument("unknown block predictor: " + s);
}

/// Bi-cross-validation setup: fold counts per axis, the block predictor,
/// the association hypothesis, and the partition seed.
struct BcvConfig {
    int f_rows = 2;
    int f_cols = 2;
    BlockPredictor predictor = BlockPredictor::loading_outer;
    AssociationKind kind = AssociationKind::phi;
    LoadingEstimator estimator = LoadingEstimator::leading_eigenvector;
    RngSpec seed;
    /// Folds whose held-in images exceed this degenerate-variable share
    /// are skipped (binary images on small blocks go degenerate easily).
    double max_degenerate_fraction = 0.3;
};

/// Predicted scores for one held-out block, or the reason the fold was
/// skipped.
struct BlockPrediction {
    RealMatrix scores;
    bool skipped = false;
    std::string reason;

    static BlockPrediction skip(std::string why) {
        BlockPrediction p;
        p.skipped = true;
        p.reason = std::move(why);
        return p;
    }
};

/// Loading-based block prediction: u from the row image of B (shares the
/// held-out rows), v from the column image of C (shares the held-out
/// columns), signs aligned to the held-in marginal means only. The
/// held-out block itself never enters.
inline BlockPrediction predict_block_loading(const ResponseMatrix& b, const ResponseMatrix& c,
                                             AssociationKind kind,
                                             LoadingEstimator estimator =
                                                 LoadingEstimator::leading_eigenvector,
                                             double max_degenerate_fraction = 0.3,
                                             int threads = 1) {
    const auto degenerate_share = [](const AssociationImage& img) {
        if (img.degenerate_flags.empty()) return 1.0;
        double k = 0;
        for (const bool f : img.degenerate_flags) k += f ? 1.0 : 0.0;
        return k / static_cast<double>(img.degenerate_flags.size());
    };

    const AssociationImage row_image = image(b, kind, Axis::rows, threads);
    if (degenerate_share(row_image) > max_degenerate_fraction)
        return BlockPrediction::skip("held-in row image degenerate");
    const AssociationImage col_image = image(c, kind, Axis::columns, threads);
    if (degenerate_share(col_image) > max_degenerate_fraction)
        return BlockPrediction::skip("held-in column image degenerate");

    RealVector u = detail::unit_loadings_of_image(row_image, estimator, nullptr);
    RealVector v = detail::unit_loadings_of_image(col_image, estimator, nullptr);
    if (detail::plain_correlation(u, b.row_means()) < 0.0) u = -u;
    if (detail::plain_correlation(v, c.col_means()) < 0.0) v = -v;

    BlockPrediction p;
    p.scores = u * v.transpose();
    return p;
}

/// Algebraic block prediction A_tilde = B D1^+ C with D1 the best rank-1
/// approximation of D; exact whenever the full matrix and D are both
/// rank 1 (self-consistency of low-rank structure under block holdout).
inline RealMatrix predict_block_pinv(const RealMatrix& b, const RealMatrix& c,
                                     const RealMatrix& d) {
    Eigen::JacobiSVD<RealMatrix> svd(d, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double sigma = svd.singularValues()(0);
    if (sigma <= 0.0)
        throw std::invalid_argument("predict_block_pinv: leading singular value is zero");
    const RealVector u1 = svd.matrixU().col(0);
    const RealVector v1 = svd.matrixV().col(0);
    // pinv(D1) = v1 u1^T / sigma
    return (b * v1) * (u1.transpose() * c) / sigma;
}

struct FoldResult {
    int row_fold = 0;
    int col_fold = 0;
    bool skipped = false;
    std::string skip_reason;
    RealMatrix predicted;
    MetricPanel panel;
};

struct VerifactorResult {
    /// Fold-mean metrics under their plain ids plus whole-matrix metrics
    /// of the assembled reconstruction under "assembled_" ids.
    MetricPanel panel;
    std::vector<FoldResult> folds;
    RealMatrix assembled;
    BlockPartition partition;
    int skipped_folds = 0;
};

/// Bi-cross-validated block prediction over every (row fold, column
/// fold) pair: estimate structure on held-in blocks, predict each
/// held-out block, score per-fold metrics on the (held-out, predicted)
/// pair, and additionally assemble the full out-of-sample reconstruction
/// and score it whole. Folds are independent and run concurrently.
inline VerifactorResult verifactor_functional(const ResponseMatrix& x, const BcvConfig& cfg,
                                              const std::set<std::string>& metrics = {},
                                              int threads = 1) {
    VerifactorResult result;
    result.partition = random_partition(static_cast<int>(x.rows()), static_cast<int>(x.cols()),
                                        cfg.f_rows, cfg.f_cols, cfg.seed);
    const int n_folds = cfg.f_rows * cfg.f_cols;
    result.folds.resize(static_cast<std::size_t>(n_folds));
    result.assembled = RealMatrix::Zero(x.rows(), x.cols());
    BoolMask predicted_mask = BoolMask::Constant(x.rows(), x.cols(), false);

    parallel_for(n_folds, threads, [&](int f) {
        const int i = f / cfg.f_cols;
        const int j = f % cfg.f_cols;
        FoldResult& fold = result.folds[static_cast<std::size_t>(f)];
        fold.row_fold = i;
        fold.col_fold = j;
        const BlockViews views = block_views(x, result.partition, i, j);
        BlockPrediction pred;
        try {
            if (cfg.predictor == BlockPredictor::loading_outer) {
                pred = predict_block_loading(views.b, views.c, cfg.kind, cfg.estimator,
                                             cfg.max_degenerate_fraction, 1);
            } else {
                pred.scores =
                    predict_block_pinv(views.b.values(), views.c.values(), views.d.values());
            }
        } catch (const std::exception& e) {
            pred = BlockPrediction::skip(e.what());
        }
        if (pred.skipped) {
            fold.skipped = true;
            fold.skip_reason = pred.reason;
            return;
        }
        fold.predicted = pred.scores;
        fold.panel = full_panel(views.a, pred.scores, metrics);
        fold.panel.kind = to_string(cfg.kind);
        fold.panel.mode = "verifactor_fold";
        fold.panel.seed = cfg.seed.seed;
    });

    for (int f = 0; f < n_folds; ++f) {
        const FoldResult& fold = result.folds[static_cast<std::size_t>(f)];
        if (fold.skipped) {
            ++result.skipped_folds;
            continue;
        }
        const auto& rows = result.partition.row_folds[static_cast<std::size_t>(fold.row_fold)];
        const auto& cols = result.partition.col_folds[static_cast<std::size_t>(fold.col_fold)];
        for (std::size_t a = 0; a < rows.size(); ++a)
            for (std::size_t b = 0; b < cols.size(); ++b) {
                result.assembled(rows[a], cols[b]) =
                    fold.predicted(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
                predicted_mask(rows[a], cols[b]) = true;
            }
    }
    if (result.skipped_folds == n_folds)
        throw std::runtime_error("verifactor_functional: every fold was skipped");

    // fold means
    MetricPanel agg;
    agg.kind = to_string(cfg.kind);
    agg.mode = "verifactor";
    agg.seed = cfg.seed.seed;
    for (const std::string& id : reconstruction_metric_ids()) {
        if (!detail::wants(metrics, id)) continue;
        double sum = 0.0;
        int cnt = 0;
        for (const FoldResult& fold : result.folds) {
            if (fold.skipped || !fold.panel.has(id)) continue;
            const MetricValue& v = fold.panel.at(id);
            if (v.missing()) continue;
            sum += v.value;
            ++cnt;
        }
        agg.set(id, cnt > 0 ? MetricValue::of(sum / cnt)
                            : MetricValue::absent("no fold produced this metric"));
    }

    // whole-matrix metrics of the assembled reconstruction, restricted
    // to cells a fold actually predicted
    const ResponseMatrix target = x.restricted(predicted_mask);
    const MetricPanel whole = full_panel(target, result.assembled, metrics);
    for (const auto& [id, value] : whole.values) agg.set("assembled_" + id, value);

    result.panel = std::move(agg);
    return result;
}

}  // namespace refactor
