#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "refactor/refactor_analysis.hpp"
#include "refactor/verifactor.hpp"

namespace refactor {

/// Threshold model: a rank-1 latent signal Z = theta lambda^T is
/// dichotomized by item thresholds tau_j and person thresholds eta_k,
/// X_kj = 1{Z_kj > tau_j} 1{Z_kj > eta_k}.
struct SimThresholdConfig {
    int n = 200;
    int p = 36;
    double tau_mean = 0.0;
    double tau_sd = 0.5;
    double eta_mean = 0.0;
    double eta_sd = 1.0;
    RngSpec seed;
};

struct SimThresholdResult {
    ResponseMatrix x;
    RealVector theta;   // person latent, length n
    RealVector lambda;  // item latent, length p
    RealVector tau;     // item thresholds
    RealVector eta;     // person thresholds
    std::vector<int> constant_columns;  // all-0 or all-1 items (allowed, flagged)
    std::vector<int> constant_rows;
};

inline SimThresholdResult sim_threshold(const SimThresholdConfig& cfg) {
    if (cfg.n < 2 || cfg.p < 2) throw std::invalid_argument("sim_threshold: need n, p >= 2");
    if (cfg.tau_sd < 0 || cfg.eta_sd < 0)
        throw std::invalid_argument("sim_threshold: negative threshold sd");
    Pcg32 rng(cfg.seed);
    RealVector theta(cfg.n), eta(cfg.n), lambda(cfg.p), tau(cfg.p);
    for (int k = 0; k < cfg.n; ++k) theta(k) = rng.next_normal();
    for (int j = 0; j < cfg.p; ++j) lambda(j) = rng.next_normal();
    for (int j = 0; j < cfg.p; ++j) tau(j) = cfg.tau_mean + cfg.tau_sd * rng.next_normal();
    for (int k = 0; k < cfg.n; ++k) eta(k) = cfg.eta_mean + cfg.eta_sd * rng.next_normal();

    RealMatrix x(cfg.n, cfg.p);
    for (int k = 0; k < cfg.n; ++k)
        for (int j = 0; j < cfg.p; ++j) {
            const double z = theta(k) * lambda(j);
            x(k, j) = (z > tau(j) && z > eta(k)) ? 1.0 : 0.0;
        }

    SimThresholdResult out{ResponseMatrix::dense(std::move(x)),
                           std::move(theta),
                           std::move(lambda),
                           std::move(tau),
                           std::move(eta),
                           {},
                           {}};
    for (int j = 0; j < cfg.p; ++j) {
        const double m = out.x.col_means()(j);
        if (m == 0.0 || m == 1.0) out.constant_columns.push_back(j);
    }
    for (int k = 0; k < cfg.n; ++k) {
        const double m = out.x.row_means()(k);
        if (m == 0.0 || m == 1.0) out.constant_rows.push_back(k);
    }
    return out;
}

/// Hierarchical model: a general factor g over three group factors whose
/// items load {0.8, 0.7, 0.6} by default, replicated n_factor_blocks
/// times, plus small random "noise" factors; latent scores are sampled
/// from the implied orthogonal decomposition and dichotomized.
struct SimHierConfig {
    int n = 200;
    int n_group_factors = 3;
    int items_per_factor = 3;  // per block
    int n_factor_blocks = 4;   // 3 groups x 3 items x 4 blocks = 36 items
    double g_loading = 0.5;    // gamma, correlation of group factors with g
    std::vector<double> group_loadings = {0.8, 0.7, 0.6};  // cycled within a factor
    int n_minor_factors = 4;
    double minor_magnitude = 0.2;  // loadings drawn from {-m, 0, +m}
    double dichotomize_threshold = 0.0;
    RngSpec seed;

    int n_items() const { return n_group_factors * items_per_factor * n_factor_blocks; }
};

/// General/group/minor loading split of the generating model, plus the
/// dominant-dimension share of total variance.
struct SLDecomposition {
    RealVector general;   // per item
    RealMatrix group;     // items x group factors
    RealMatrix minor;     // items x minor factors
    double r_tilde_sq = 0.0;
};

namespace detail {

inline double dominant_share(const RealVector& general, const RealMatrix& group,
                             const RealMatrix& minor) {
    const double p = static_cast<double>(general.size());
    double best = general.squaredNorm();
    for (Eigen::Index f = 0; f < group.cols(); ++f)
        best = std::max(best, group.col(f).squaredNorm());
    for (Eigen::Index f = 0; f < minor.cols(); ++f)
        best = std::max(best, minor.col(f).squaredNorm());
    return best / p;
}

}  // namespace detail

/// Dominant-dimension share implied by the deterministic part of the
/// configuration (minor factors never dominate, so this matches the
/// sampled decomposition's value).
inline double r_tilde_sq_analytic(const SimHierConfig& cfg) {
    const double gamma = cfg.g_loading;
    const int per_factor = cfg.items_per_factor * cfg.n_factor_blocks;
    double general = 0.0;
    double best_group = 0.0;
    for (int f = 0; f < cfg.n_group_factors; ++f) {
        double sum_sq = 0.0;
        for (int i = 0; i < per_factor; ++i) {
            const double l = cfg.group_loadings[static_cast<std::size_t>(i) %
                                                cfg.group_loadings.size()];
            sum_sq += l * l;
        }
        general += gamma * gamma * sum_sq;
        best_group = std::max(best_group, (1.0 - gamma * gamma) * sum_sq);
    }
    return std::max(general, best_group) / static_cast<double>(cfg.n_items());
}

struct SimHierResult {
    ResponseMatrix x;
    SLDecomposition sl;
    RealMatrix population_correlation;
    RealMatrix latent;  // the pre-dichotomization scores
};

inline SimHierResult sim_hierarchical(const SimHierConfig& cfg) {
    if (cfg.n < 2) throw std::invalid_argument("sim_hierarchical: need n >= 2");
    if (cfg.g_loading < 0.0 || cfg.g_loading > 1.0)
        throw std::invalid_argument("sim_hierarchical: g loading outside [0, 1]");
    for (const double l : cfg.group_loadings)
        if (std::abs(l) > 1.0)
            throw std::invalid_argument("sim_hierarchical: group loading outside [-1, 1]");
    const int p = cfg.n_items();
    if (p < 2) throw std::invalid_argument("sim_hierarchical: need at least 2 items");

    Pcg32 rng(cfg.seed);
    const double gamma = cfg.g_loading;
    const double resid = std::sqrt(std::max(0.0, 1.0 - gamma * gamma));

    SLDecomposition sl;
    sl.general = RealVector::Zero(p);
    sl.group = RealMatrix::Zero(p, cfg.n_group_factors);
    sl.minor = RealMatrix::Zero(p, cfg.n_minor_factors);

    int item = 0;
    for (int block = 0; block < cfg.n_factor_blocks; ++block)
        for (int f = 0; f < cfg.n_group_factors; ++f)
            for (int i = 0; i < cfg.items_per_factor; ++i, ++item) {
                const double l = cfg.group_loadings[static_cast<std::size_t>(i) %
                                                    cfg.group_loadings.size()];
                sl.general(item) = l * gamma;
                sl.group(item, f) = l * resid;
            }

    for (int j = 0; j < p; ++j)
        for (int f = 0; f < cfg.n_minor_factors; ++f) {
            const std::uint32_t pick = rng.next_below(3);  // {-m, 0, +m}
            sl.minor(j, f) = (pick == 0 ? -1.0 : pick == 1 ? 0.0 : 1.0) * cfg.minor_magnitude;
        }

    RealVector communality(p);
    for (int j = 0; j < p; ++j) {
        communality(j) = sl.general(j) * sl.general(j) + sl.group.row(j).squaredNorm() +
                         sl.minor.row(j).squaredNorm();
        if (communality(j) > 1.0)
            throw std::invalid_argument(
                "sim_hierarchical: item communality above 1 (item " + std::to_string(j) +
                "); reduce loadings or minor magnitude");
    }
    sl.r_tilde_sq = detail::dominant_share(sl.general, sl.group, sl.minor);

    RealMatrix corr = sl.general * sl.general.transpose() + sl.group * sl.group.transpose() +
                      sl.minor * sl.minor.transpose();
    corr.diagonal().setOnes();

    // sample latent scores from the orthogonal decomposition directly
    RealMatrix latent(cfg.n, p);
    const int n_factors = 1 + cfg.n_group_factors + cfg.n_minor_factors;
    RealVector f(n_factors);
    for (int k = 0; k < cfg.n; ++k) {
        for (int q = 0; q < n_factors; ++q) f(q) = rng.next_normal();
        for (int j = 0; j < p; ++j) {
            double z = sl.general(j) * f(0);
            for (int g = 0; g < cfg.n_group_factors; ++g) z += sl.group(j, g) * f(1 + g);
            for (int mf = 0; mf < cfg.n_minor_factors; ++mf)
                z += sl.minor(j, mf) * f(1 + cfg.n_group_factors + mf);
            z += std::sqrt(1.0 - communality(j)) * rng.next_normal();
            latent(k, j) = z;
        }
    }

    RealMatrix x(cfg.n, p);
    for (int k = 0; k < cfg.n; ++k)
        for (int j = 0; j < p; ++j)
            x(k, j) = latent(k, j) > cfg.dichotomize_threshold ? 1.0 : 0.0;

    return SimHierResult{ResponseMatrix::dense(std::move(x)), std::move(sl), std::move(corr),
                         std::move(latent)};
}

enum class Study { sim1, sim2 };

inline const char* to_string(Study s) { return s == Study::sim1 ? "sim1" : "sim2"; }

inline Study study_from_string(const std::string& s) {
    if (s == "sim1") return Study::sim1;
    if (s == "sim2") return Study::sim2;
    throw std::invalid_argument("unknown study: " + s);
}

/// One cell of the long-form results table.
struct ResultRow {
    std::string study;
    int rep = 0;
    double grid_value = std::numeric_limits<double>::quiet_NaN();  // gamma for sim2
    std::string kind;
    std::string mode;
    std::string metric;
    double value = 0.0;
    std::string missing_reason;
};

struct ReplicateConfig {
    Study study = Study::sim1;
    int reps = 100;
    std::vector<double> gamma_grid;  // sim2 only; default set below
    std::vector<AssociationKind> kinds = {AssociationKind::phi, AssociationKind::tetrachoric,
                                          AssociationKind::quadrant};
    std::set<std::string> metrics;  // empty = all
    RngSpec master_seed;
    int threads = 1;
    SimThresholdConfig sim1_base;
    SimHierConfig sim2_base;
    int bcv_f_rows = 2;
    int bcv_f_cols = 2;
    BlockPredictor predictor = BlockPredictor::loading_outer;
    LoadingEstimator estimator = LoadingEstimator::leading_eigenvector;
};

namespace detail {

inline void append_panel_rows(std::vector<ResultRow>& rows, const MetricPanel& panel,
                              const std::string& study, int rep, double grid_value) {
    for (const auto& [metric, value] : panel.values) {
        ResultRow r;
        r.study = study;
        r.rep = rep;
        r.grid_value = grid_value;
        r.kind = panel.kind;
        r.mode = panel.mode;
        r.metric = metric;
        r.value = value.missing() ? std::numeric_limits<double>::quiet_NaN() : value.value;
        r.missing_reason = value.missing_reason;
        rows.push_back(std::move(r));
    }
}

}  // namespace detail

/// Run the requested study over reps x grid x association kinds, with a
/// refactor and a verifactor evaluation per combination, one independent
/// RNG stream per (grid point, rep). Per-rep failures are recorded as
/// rows and the run continues. Rows come back sorted by (grid, rep,
/// kind, mode, metric) regardless of thread count.
inline std::vector<ResultRow> replicate(const ReplicateConfig& cfg) {
    std::vector<double> grid = cfg.gamma_grid;
    if (cfg.study == Study::sim1) {
        grid = {std::numeric_limits<double>::quiet_NaN()};
    } else if (grid.empty()) {
        for (int i = 0; i <= 10; ++i) grid.push_back(static_cast<double>(i) / 10.0);
    }
    const int n_cells = static_cast<int>(grid.size()) * cfg.reps;
    std::vector<std::vector<ResultRow>> cell_rows(static_cast<std::size_t>(n_cells));

    parallel_for(n_cells, cfg.threads, [&](int cell) {
        const int g = cell / cfg.reps;
        const int rep = cell % cfg.reps;
        const double grid_value = grid[static_cast<std::size_t>(g)];
        auto& rows = cell_rows[static_cast<std::size_t>(cell)];
        const RngSpec stream = cfg.master_seed.with_stream(
            static_cast<std::uint64_t>(g) * 1000003ULL + static_cast<std::uint64_t>(rep));

        try {
            std::optional<ResponseMatrix> x;
            if (cfg.study == Study::sim1) {
                SimThresholdConfig sc = cfg.sim1_base;
                sc.seed = stream;
                x = sim_threshold(sc).x;
            } else {
                SimHierConfig hc = cfg.sim2_base;
                hc.g_loading = grid_value;
                hc.seed = stream;
                SimHierResult res = sim_hierarchical(hc);
                x = res.x;
                ResultRow truth;
                truth.study = to_string(cfg.study);
                truth.rep = rep;
                truth.grid_value = grid_value;
                truth.kind = "none";
                truth.mode = "truth";
                truth.metric = "r_tilde_sq";
                truth.value = res.sl.r_tilde_sq;
                rows.push_back(std::move(truth));
            }

            for (const AssociationKind kind : cfg.kinds) {
                try {
                    RefactorResult rf =
                        refactor_functional(*x, kind, cfg.metrics, cfg.estimator, 1);
                    rf.panel.seed = stream.seed;
                    detail::append_panel_rows(rows, rf.panel, to_string(cfg.study), rep,
                                              grid_value);

                    BcvConfig bcv;
                    bcv.f_rows = cfg.bcv_f_rows;
                    bcv.f_cols = cfg.bcv_f_cols;
                    bcv.predictor = cfg.predictor;
                    bcv.kind = kind;
                    bcv.estimator = cfg.estimator;
                    bcv.seed = stream;
                    VerifactorResult vf = verifactor_functional(*x, bcv, cfg.metrics, 1);
                    detail::append_panel_rows(rows, vf.panel, to_string(cfg.study), rep,
                                              grid_value);
                } catch (const std::exception& e) {
                    ResultRow fail;
                    fail.study = to_string(cfg.study);
                    fail.rep = rep;
                    fail.grid_value = grid_value;
                    fail.kind = to_string(kind);
                    fail.mode = "error";
                    fail.metric = "failure";
                    fail.value = std::numeric_limits<double>::quiet_NaN();
                    fail.missing_reason = e.what();
                    rows.push_back(std::move(fail));
                }
            }
        } catch (const std::exception& e) {
            ResultRow fail;
            fail.study = to_string(cfg.study);
            fail.rep = rep;
            fail.grid_value = grid_value;
            fail.kind = "none";
            fail.mode = "error";
            fail.metric = "failure";
            fail.value = std::numeric_limits<double>::quiet_NaN();
            fail.missing_reason = e.what();
            rows.push_back(std::move(fail));
        }
    });

    std::vector<ResultRow> out;
    for (auto& rows : cell_rows)
        for (auto& r : rows) out.push_back(std::move(r));
    return out;
}

}  // namespace refactor
