#pragma once

#include "refactor/loadings.hpp"
#include "refactor/matrix.hpp"

namespace refactor {

enum class ReconstructionMode { refactor, verifactor };

inline const char* to_string(ReconstructionMode m) {
    return m == ReconstructionMode::refactor ? "refactor" : "verifactor";
}

/// Dense score matrix predicted for the response matrix. In refactor
/// mode this is the exact rank-1 outer product of the fitted loadings;
/// in verifactor mode it is assembled from per-block predictions.
struct Reconstruction {
    RealMatrix scores;
    ReconstructionMode mode = ReconstructionMode::refactor;
    LoadingEstimator estimator = LoadingEstimator::leading_eigenvector;
    bool image_warning = false;
};

inline Reconstruction reconstruct(const RankOneModel& model) {
    require_finite(RealMatrix(model.u_hat), "reconstruct(u)");
    require_finite(RealMatrix(model.v_hat), "reconstruct(v)");
    Reconstruction r;
    r.scores = model.u_hat * model.v_hat.transpose();
    r.mode = ReconstructionMode::refactor;
    r.estimator = model.estimator;
    r.image_warning = model.image_warning;
    return r;
}

}  // namespace refactor
