#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace refactor {

/// 2x2 cell counts over the jointly observed positions of two binary
/// variables. Sufficient statistic for every pairwise association here.
struct ContingencyTable {
    std::int64_t n11 = 0;  // x=1, y=1
    std::int64_t n10 = 0;  // x=1, y=0
    std::int64_t n01 = 0;  // x=0, y=1
    std::int64_t n00 = 0;  // x=0, y=0

    std::int64_t total() const { return n11 + n10 + n01 + n00; }
    std::int64_t row1() const { return n11 + n10; }  // x=1 margin
    std::int64_t row0() const { return n01 + n00; }
    std::int64_t col1() const { return n11 + n01; }  // y=1 margin
    std::int64_t col0() const { return n10 + n00; }

    bool x_degenerate() const { return row1() == 0 || row0() == 0; }
    bool y_degenerate() const { return col1() == 0 || col0() == 0; }
};

/// Count the 2x2 table of two equal-length binary vectors over positions
/// observed in both. Throws if there is no overlap at all.
inline ContingencyTable contingency(const double* x, const double* y, const bool* mx,
                                    const bool* my, std::size_t len) {
    ContingencyTable t;
    for (std::size_t i = 0; i < len; ++i) {
        if (mx && !mx[i]) continue;
        if (my && !my[i]) continue;
        const bool a = x[i] != 0.0;
        const bool b = y[i] != 0.0;
        if (a && b)
            ++t.n11;
        else if (a)
            ++t.n10;
        else if (b)
            ++t.n01;
        else
            ++t.n00;
    }
    if (t.total() == 0) throw std::invalid_argument("contingency: no jointly observed pairs");
    return t;
}

/// Share of agreeing cells.
inline double agreement(const ContingencyTable& t) {
    if (t.total() <= 0) throw std::invalid_argument("agreement: empty table");
    return static_cast<double>(t.n11 + t.n00) / static_cast<double>(t.total());
}

/// Quadrant correlation q' = Pr(agree) - Pr(disagree), the PABAK
/// identity 2 * agreement - 1. Written through agreement() so the
/// identity holds bit for bit, not just to rounding.
inline double quadrant_q(const ContingencyTable& t) {
    return 2.0 * agreement(t) - 1.0;
}

/// Pearson correlation of the two binary variables. Undefined (nullopt)
/// when either margin is degenerate.
inline std::optional<double> phi(const ContingencyTable& t) {
    if (t.x_degenerate() || t.y_degenerate()) return std::nullopt;
    const double num = static_cast<double>(t.n11) * static_cast<double>(t.n00) -
                       static_cast<double>(t.n10) * static_cast<double>(t.n01);
    const double den = std::sqrt(static_cast<double>(t.row1())) *
                       std::sqrt(static_cast<double>(t.row0())) *
                       std::sqrt(static_cast<double>(t.col1())) *
                       std::sqrt(static_cast<double>(t.col0()));
    return num / den;
}

/// Yule's Q = (ad - bc)/(ad + bc); undefined when both products vanish.
inline std::optional<double> yule_q(const ContingencyTable& t) {
    const double ad = static_cast<double>(t.n11) * static_cast<double>(t.n00);
    const double bc = static_cast<double>(t.n10) * static_cast<double>(t.n01);
    if (ad + bc == 0.0) return std::nullopt;
    return (ad - bc) / (ad + bc);
}

/// Loevinger's H: 1 minus the ratio of observed Guttman errors to the
/// errors expected under margin independence. The error cell is the one
/// where the rarer-positive variable is endorsed while the commoner is
/// not. Undefined when the expected-error term is zero.
inline std::optional<double> loevinger_h(const ContingencyTable& t) {
    const double n = static_cast<double>(t.total());
    if (n <= 0) return std::nullopt;
    const double px = static_cast<double>(t.row1()) / n;
    const double py = static_cast<double>(t.col1()) / n;
    double observed, expected;
    if (px <= py) {
        observed = static_cast<double>(t.n10);
        expected = n * px * (1.0 - py);
    } else {
        observed = static_cast<double>(t.n01);
        expected = n * py * (1.0 - px);
    }
    if (expected <= 0.0) return std::nullopt;
    return 1.0 - observed / expected;
}

enum class AssociationKind { phi, tetrachoric, quadrant, yule_q, loevinger_h, agreement };

inline const char* to_string(AssociationKind k) {
    switch (k) {
        case AssociationKind::phi: return "phi";
        case AssociationKind::tetrachoric: return "tetrachoric";
        case AssociationKind::quadrant: return "quadrant";
        case AssociationKind::yule_q: return "yule_q";
        case AssociationKind::loevinger_h: return "loevinger_h";
        case AssociationKind::agreement: return "agreement";
    }
    return "?";
}

inline AssociationKind association_kind_from_string(const std::string& s) {
    if (s == "phi") return AssociationKind::phi;
    if (s == "tetrachoric") return AssociationKind::tetrachoric;
    if (s == "quadrant") return AssociationKind::quadrant;
    if (s == "yule_q") return AssociationKind::yule_q;
    if (s == "loevinger_h") return AssociationKind::loevinger_h;
    if (s == "agreement") return AssociationKind::agreement;
    throw std::invalid_argument("unknown association kind: " + s);
}

}  // namespace refactor
