#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace refactor {

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using BoolMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Binary n x p response matrix with an explicit observation mask
/// (true = observed). Missingness is carried by the mask rather than a
/// sentinel value so that pairwise-complete statistics stay exact.
/// Immutable after construction.
class ResponseMatrix {
  public:
    ResponseMatrix(RealMatrix values, BoolMask mask,
                   std::vector<std::string> row_labels = {},
                   std::vector<std::string> col_labels = {})
        : values_(std::move(values)),
          mask_(std::move(mask)),
          row_labels_(std::move(row_labels)),
          col_labels_(std::move(col_labels)) {
        validate(true);
    }

    /// Fully observed matrix.
    static ResponseMatrix dense(RealMatrix values) {
        BoolMask mask = BoolMask::Constant(values.rows(), values.cols(), true);
        return ResponseMatrix(std::move(values), std::move(mask));
    }

    Eigen::Index rows() const { return values_.rows(); }
    Eigen::Index cols() const { return values_.cols(); }
    const RealMatrix& values() const { return values_; }
    const BoolMask& mask() const { return mask_; }
    double value(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }
    bool observed(Eigen::Index i, Eigen::Index j) const { return mask_(i, j); }

    const std::vector<std::string>& row_labels() const { return row_labels_; }
    const std::vector<std::string>& col_labels() const { return col_labels_; }

    bool complete() const { return mask_.all(); }

    double missing_rate() const {
        const double total = static_cast<double>(rows() * cols());
        return 1.0 - static_cast<double>(mask_.count()) / total;
    }

    /// Mean of observed entries per row.
    RealVector row_means() const {
        RealVector m(rows());
        for (Eigen::Index i = 0; i < rows(); ++i) {
            double s = 0;
            Eigen::Index c = 0;
            for (Eigen::Index j = 0; j < cols(); ++j)
                if (mask_(i, j)) {
                    s += values_(i, j);
                    ++c;
                }
            m(i) = c > 0 ? s / static_cast<double>(c) : 0.0;
        }
        return m;
    }

    /// Mean of observed entries per column.
    RealVector col_means() const {
        RealVector m(cols());
        for (Eigen::Index j = 0; j < cols(); ++j) {
            double s = 0;
            Eigen::Index c = 0;
            for (Eigen::Index i = 0; i < rows(); ++i)
                if (mask_(i, j)) {
                    s += values_(i, j);
                    ++c;
                }
            m(j) = c > 0 ? s / static_cast<double>(c) : 0.0;
        }
        return m;
    }

    ResponseMatrix transposed() const {
        ResponseMatrix t(internal_tag{});
        t.values_ = values_.transpose();
        t.mask_ = mask_.transpose();
        t.row_labels_ = col_labels_;
        t.col_labels_ = row_labels_;
        return t;
    }

    /// Extract a submatrix by index lists. Blocks of a valid matrix may
    /// legitimately contain fully masked rows or columns, so the strict
    /// shape invariants are not re-checked here.
    ResponseMatrix submatrix(const std::vector<int>& row_idx,
                             const std::vector<int>& col_idx) const {
        ResponseMatrix s(internal_tag{});
        s.values_.resize(static_cast<Eigen::Index>(row_idx.size()),
                         static_cast<Eigen::Index>(col_idx.size()));
        s.mask_.resize(static_cast<Eigen::Index>(row_idx.size()),
                       static_cast<Eigen::Index>(col_idx.size()));
        for (std::size_t a = 0; a < row_idx.size(); ++a)
            for (std::size_t b = 0; b < col_idx.size(); ++b) {
                s.values_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                    values_(row_idx[a], col_idx[b]);
                s.mask_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                    mask_(row_idx[a], col_idx[b]);
            }
        return s;
    }

    /// Same values with the mask restricted by `keep` (logical and).
    /// Used to evaluate partial reconstructions; the strict shape
    /// invariants are not re-checked.
    ResponseMatrix restricted(const BoolMask& keep) const {
        if (keep.rows() != rows() || keep.cols() != cols())
            throw std::invalid_argument("ResponseMatrix::restricted: mask shape mismatch");
        ResponseMatrix r(internal_tag{});
        r.values_ = values_;
        r.mask_ = mask_ && keep;
        r.row_labels_ = row_labels_;
        r.col_labels_ = col_labels_;
        return r;
    }

  private:
    struct internal_tag {};
    explicit ResponseMatrix(internal_tag) {}

    void validate(bool strict) const {
        if (values_.rows() != mask_.rows() || values_.cols() != mask_.cols())
            throw std::invalid_argument("ResponseMatrix: values/mask shape mismatch");
        if (strict && (values_.rows() < 2 || values_.cols() < 2))
            throw std::invalid_argument("ResponseMatrix: need at least 2 rows and 2 columns");
        for (Eigen::Index i = 0; i < values_.rows(); ++i)
            for (Eigen::Index j = 0; j < values_.cols(); ++j)
                if (mask_(i, j)) {
                    const double v = values_(i, j);
                    if (v != 0.0 && v != 1.0)
                        throw std::invalid_argument(
                            "ResponseMatrix: non-binary entry at row " + std::to_string(i) +
                            ", col " + std::to_string(j));
                }
        if (strict) {
            for (Eigen::Index i = 0; i < values_.rows(); ++i)
                if (!mask_.row(i).any())
                    throw std::invalid_argument("ResponseMatrix: row " + std::to_string(i) +
                                                " entirely masked");
            for (Eigen::Index j = 0; j < values_.cols(); ++j)
                if (!mask_.col(j).any())
                    throw std::invalid_argument("ResponseMatrix: column " + std::to_string(j) +
                                                " entirely masked");
        }
    }

    RealMatrix values_;
    BoolMask mask_;
    std::vector<std::string> row_labels_;
    std::vector<std::string> col_labels_;
};

inline void require_finite(const RealMatrix& m, const char* what) {
    if (!m.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

}  // namespace refactor
