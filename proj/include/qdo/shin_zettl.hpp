#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qdo/piecewise.hpp"

namespace qdo {

struct ValidityIssue {
    int row = 0, col = 0; // 1-based, 0 when not entry-specific
    std::string message;
};

// m x m matrix of piecewise coefficients on a common interval, subject to the
// structural conditions: zero above the superdiagonal, superdiagonal nonzero
// a.e., every entry integrable.
class ShinZettlMatrix {
public:
    ShinZettlMatrix(int m, double a, double b) : m_(m), a_(a), b_(b) {
        if (m < 2) fail(errc::parameter, "order m must be at least 2");
        entries_.assign(size_t(m) * m, PiecewiseCoefficient::zero(a, b));
    }

    int order() const { return m_; }
    double lower() const { return a_; }
    double upper() const { return b_; }

    const PiecewiseCoefficient& at(int i, int j) const { return entries_[idx(i, j)]; }

    void set(int i, int j, PiecewiseCoefficient c) {
        if (c.lower() != a_ || c.upper() != b_) fail(errc::domain, "entry lives on a different interval");
        entries_[idx(i, j)] = std::move(c);
    }

    std::vector<ValidityIssue> validate() const {
        std::vector<ValidityIssue> issues;
        for (int i = 0; i < m_; ++i)
            for (int j = 0; j < m_; ++j) {
                const auto& e = at(i, j);
                if (j > i + 1 && !e.is_zero())
                    issues.push_back({i + 1, j + 1, "entry above the superdiagonal must be structurally zero"});
                if (j == i + 1) {
                    for (const auto& p : e.pieces())
                        if (p.terms.empty()) {
                            issues.push_back({i + 1, j + 1,
                                              "superdiagonal entry vanishes identically on [" +
                                                  std::to_string(p.lo) + ", " + std::to_string(p.hi) + "]"});
                            break;
                        }
                }
                try {
                    e.l1_norm();
                } catch (const Error& err) {
                    issues.push_back({i + 1, j + 1, std::string("entry not integrable: ") + err.what()});
                }
            }
        return issues;
    }

    void require_valid() const {
        auto issues = validate();
        if (!issues.empty()) {
            std::string msg = "matrix fails validity checks:";
            for (const auto& is : issues)
                msg += " [" + std::to_string(is.row) + "," + std::to_string(is.col) + "] " + is.message + ";";
            fail(errc::validity, msg);
        }
    }

    // Lagrange adjoint A+ = -Lambda^{-1} conj(A^T) Lambda, computed entrywise:
    // (A+)_{k,s} = (-1)^{k-s+1} conj(a_{m+1-s, m+1-k})   (1-based indices).
    ShinZettlMatrix lagrange_adjoint() const {
        ShinZettlMatrix r(m_, a_, b_);
        for (int i = 0; i < m_; ++i)
            for (int j = 0; j < m_; ++j) {
                const auto& src = at(m_ - 1 - j, m_ - 1 - i);
                if (src.is_zero()) continue;
                double sign = ((i - j + 1) % 2 == 0) ? 1.0 : -1.0;
                r.set(i, j, src.conjugated().scaled(cxd(sign)));
            }
        return r;
    }

    bool equals(const ShinZettlMatrix& o, double atol = 0.0) const {
        if (m_ != o.m_ || a_ != o.a_ || b_ != o.b_) return false;
        for (int i = 0; i < m_; ++i)
            for (int j = 0; j < m_; ++j)
                if (!at(i, j).equals(o.at(i, j), atol)) return false;
        return true;
    }

    bool is_formally_selfadjoint(double atol = 0.0) const { return equals(lagrange_adjoint(), atol); }

    std::vector<double> merged_breakpoints() const {
        std::vector<double> pts{a_, b_};
        for (const auto& e : entries_) {
            auto bp = e.breakpoints();
            pts.insert(pts.end(), bp.begin(), bp.end());
        }
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        if (pts.size() > detail::kBreakpointCap) fail(errc::complexity, "merged breakpoint count exceeds the cap");
        return pts;
    }

    bool singular_at(double endpoint) const {
        for (const auto& e : entries_)
            if (e.singular_at(endpoint)) return true;
        return false;
    }

private:
    size_t idx(int i, int j) const {
        if (i < 0 || i >= m_ || j < 0 || j >= m_) fail(errc::parameter, "entry index out of range");
        return size_t(i) * m_ + j;
    }

    int m_;
    double a_, b_;
    std::vector<PiecewiseCoefficient> entries_;
};

// Antidiagonal signature matrix: row k (1-based) has (-1)^k at column m+1-k.
// Satisfies Lambda^2 = (-1)^{m-1} I and conjugates the Lagrange adjoint.
inline Eigen::MatrixXcd signature_matrix(int m) {
    Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(m, m);
    for (int k = 1; k <= m; ++k) L(k - 1, m - k) = cxd(k % 2 == 0 ? 1.0 : -1.0);
    return L;
}

enum class SturmLiouvilleMode { classical, distributional };

namespace detail {

inline double l1_or_admissibility(const PiecewiseCoefficient& c, const std::string& name) {
    try {
        return c.l1_norm();
    } catch (const Error& e) {
        fail(errc::admissibility, name + " is not integrable: " + e.what());
    }
}

} // namespace detail

// Second-order matrix for -(py')' + qy (classical) or the distributional form
// with q = Q' realized through the modified quasi-derivative p y' - Q y.
inline ShinZettlMatrix sturm_liouville_matrix(const PiecewiseCoefficient& p,
                                              const PiecewiseCoefficient& q_or_Q,
                                              SturmLiouvilleMode mode) {
    double a = p.lower(), b = p.upper();
    if (q_or_Q.lower() != a || q_or_Q.upper() != b)
        fail(errc::domain, "coefficients live on different intervals");
    PiecewiseCoefficient inv_p = [&] {
        try {
            return p.reciprocal();
        } catch (const Error& e) {
            fail(errc::admissibility, std::string("1/p is not representable: ") + e.what());
        }
    }();
    ShinZettlMatrix A(2, a, b);
    detail::l1_or_admissibility(inv_p, "1/p");
    if (mode == SturmLiouvilleMode::classical) {
        detail::l1_or_admissibility(q_or_Q, "q");
        A.set(0, 1, inv_p);
        A.set(1, 0, q_or_Q);
    } else {
        PiecewiseCoefficient Q_over_p = q_or_Q * inv_p;
        PiecewiseCoefficient Q2_over_p = q_or_Q * Q_over_p;
        detail::l1_or_admissibility(Q_over_p, "Q/p");
        detail::l1_or_admissibility(Q2_over_p, "Q^2/p");
        A.set(0, 0, Q_over_p);
        A.set(0, 1, inv_p);
        A.set(1, 0, -Q2_over_p);
        A.set(1, 1, -Q_over_p);
    }
    return A;
}

// Superdiagonal-ones matrix (the operator i^m y^(m)).
inline ShinZettlMatrix free_matrix(int m, double a, double b) {
    ShinZettlMatrix A(m, a, b);
    for (int i = 0; i + 1 < m; ++i) A.set(i, i + 1, PiecewiseCoefficient::constant(cxd(1.0), a, b));
    return A;
}

// Matrix for l(y) = i^m y^(m) + q y with q = Q^(k), expressed through Q alone:
//   rows m-k+s (s = 0..k-1) carry -i^{-m}(-1)^s C(k,s) Q at column s+1,
//   the bottom row carries i^{-m}(-1)^{k+1} Q at column k+1,
//   plus (-1)^{m/2} Q^2 at (m,1) when m = 2k.     (all indices 1-based)
inline ShinZettlMatrix two_term_matrix(int m, int k, const PiecewiseCoefficient& Q) {
    if (m < 3) fail(errc::parameter, "two-term form needs order m >= 3");
    if (k < 1 || 2 * k > m) fail(errc::parameter, "derivative order k must satisfy 1 <= k <= m/2");
    double a = Q.lower(), b = Q.upper();
    if (m == 2 * k) {
        try {
            Q.square_integral();
        } catch (const Error& e) {
            fail(errc::admissibility, std::string("Q must be square-integrable when m = 2k: ") + e.what());
        }
    } else {
        detail::l1_or_admissibility(Q, "Q");
    }
    ShinZettlMatrix A = free_matrix(m, a, b);
    cxd im = unit_imag_power(-m);
    auto binom = [](int n, int r) {
        double v = 1.0;
        for (int j = 1; j <= r; ++j) v = v * (n - r + j) / j;
        return v;
    };
    for (int s = 0; s < k; ++s) {
        double sgn = (s % 2 == 0) ? 1.0 : -1.0;
        A.set(m - k + s - 1, s, Q.scaled(-im * sgn * binom(k, s)));
    }
    double sgn_last = (k % 2 == 0) ? -1.0 : 1.0; // (-1)^{k+1}
    A.set(m - 1, k, Q.scaled(im * sgn_last));
    if (m == 2 * k) {
        double sgn_sq = (m / 2) % 2 == 0 ? 1.0 : -1.0;
        A.set(m - 1, 0, (Q * Q).scaled(cxd(sgn_sq)));
    }
    return A;
}

} // namespace qdo
