#pragma once

#include <Eigen/Dense>

#include "qdo/triplet.hpp"

namespace qdo {

// Sign of the boundary condition (K - I) G1 +/- i (K + I) G2 = 0. With a
// contraction K, `plus` yields the maximal dissipative family and `minus`
// the maximal accumulative one; unitary K gives the self-adjoint extensions
// (both signs then describe the same extension for K and its inverse).
enum class ExtensionSign { plus, minus };

enum class BlockDiagonal { yes, no, not_applicable };

struct ExtensionOptions {
    double contraction_slack = 1e-12; // ||K|| <= 1 + slack still counts as a contraction
    double unitary_tol = 1e-10;       // max-norm tolerance on K* K - I
    double symmetry_tol = 1e-10;      // max-norm tolerance on K - K^T
    double block_tol = 1e-12;         // max-norm tolerance on the off-diagonal blocks
};

struct ExtensionFlags {
    double operator_norm = 0.0;           // largest singular value of K
    bool contraction = false;             // operator_norm <= 1 + slack
    bool borderline_contraction = false;  // operator_norm in (1, 1 + slack]
    bool unitary = false;                 // K* K = I within tolerance
    bool symmetric = false;               // K = K^T (transpose, not adjoint)
    BlockDiagonal block_diagonal = BlockDiagonal::not_applicable; // n x n blocks, even order only
};

inline ExtensionFlags classify_extension_matrix(const Eigen::MatrixXcd& K,
                                                const ExtensionOptions& opt = {}) {
    if (K.rows() != K.cols() || K.rows() < 2)
        fail(errc::parameter, "extension matrix must be square of size at least 2");
    const int m = int(K.rows());
    ExtensionFlags fl;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(K);
    fl.operator_norm = svd.singularValues()(0);
    fl.contraction = fl.operator_norm <= 1.0 + opt.contraction_slack;
    fl.borderline_contraction = fl.contraction && fl.operator_norm > 1.0;
    fl.unitary = (K.adjoint() * K - Eigen::MatrixXcd::Identity(m, m)).cwiseAbs().maxCoeff() <
                 opt.unitary_tol;
    fl.symmetric = (K - K.transpose()).cwiseAbs().maxCoeff() < opt.symmetry_tol;
    if (m % 2 == 0) {
        const int n = m / 2;
        double off = std::max(K.topRightCorner(n, n).cwiseAbs().maxCoeff(),
                              K.bottomLeftCorner(n, n).cwiseAbs().maxCoeff());
        fl.block_diagonal = off < opt.block_tol ? BlockDiagonal::yes : BlockDiagonal::no;
    }
    return fl;
}

// One extension of the minimal operator: the functions y in the maximal
// domain with B * bv(y) = 0 for B = boundary_condition_matrix(spec, T).
struct ExtensionSpec {
    int m = 0;
    Eigen::MatrixXcd K;
    ExtensionSign sign = ExtensionSign::plus;
    ExtensionFlags flags;
};

inline ExtensionSpec make_extension(Eigen::MatrixXcd K, ExtensionSign sign = ExtensionSign::plus,
                                    const ExtensionOptions& opt = {}) {
    ExtensionSpec s;
    s.flags = classify_extension_matrix(K, opt);
    s.m = int(K.rows());
    s.K = std::move(K);
    s.sign = sign;
    return s;
}

inline Eigen::MatrixXcd boundary_condition_matrix(const ExtensionSpec& spec, const BoundaryTriplet& T) {
    if (spec.m != T.m) fail(errc::parameter, "extension and triplet orders differ");
    const cxd i(0.0, 1.0);
    const cxd s = (spec.sign == ExtensionSign::plus) ? i : -i;
    Eigen::MatrixXcd Id = Eigen::MatrixXcd::Identity(spec.m, spec.m);
    return (spec.K - Id) * T.G1 + s * (spec.K + Id) * T.G2;
}

struct ExtensionComparison {
    bool equal = false;
    int rank_first = 0, rank_second = 0, rank_stacked = 0;
    bool degenerate = false; // some boundary matrix has rank below m
};

// Two parameterizations describe the same extension exactly when their
// boundary matrices have identical row spaces.
inline ExtensionComparison same_extension(const ExtensionSpec& s1, const ExtensionSpec& s2,
                                          const BoundaryTriplet& T) {
    if (s1.m != s2.m) fail(errc::parameter, "extensions have different orders");
    Eigen::MatrixXcd B1 = boundary_condition_matrix(s1, T);
    Eigen::MatrixXcd B2 = boundary_condition_matrix(s2, T);
    Eigen::MatrixXcd S(2 * s1.m, 2 * s1.m);
    S.topRows(s1.m) = B1;
    S.bottomRows(s1.m) = B2;
    auto rank_of = [](const Eigen::MatrixXcd& M) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
        const auto& sv = svd.singularValues();
        if (sv.size() == 0 || sv(0) == 0.0) return 0;
        int r = 0;
        for (int k = 0; k < sv.size(); ++k)
            if (sv(k) > 1e-10 * sv(0)) ++r;
        return r;
    };
    ExtensionComparison cmp;
    cmp.rank_first = rank_of(B1);
    cmp.rank_second = rank_of(B2);
    cmp.rank_stacked = rank_of(S);
    cmp.degenerate = cmp.rank_first < s1.m || cmp.rank_second < s1.m;
    cmp.equal = cmp.rank_stacked == cmp.rank_first && cmp.rank_first == cmp.rank_second;
    return cmp;
}

// Presets -------------------------------------------------------------------

// K = I: boundary conditions G2 bv = 0 (vanishing lower quasi-derivatives).
inline ExtensionSpec dirichlet_extension(int m) {
    return make_extension(Eigen::MatrixXcd::Identity(m, m), ExtensionSign::plus);
}

// K = -I: boundary conditions G1 bv = 0 (vanishing upper quasi-derivatives).
inline ExtensionSpec neumann_extension(int m) {
    return make_extension(-Eigen::MatrixXcd::Identity(m, m), ExtensionSign::plus);
}

// Separated conditions at the two endpoints: K = diag(Ka, Kb) with n x n
// blocks, defined for even order m = 2n.
inline ExtensionSpec separated_extension(const Eigen::MatrixXcd& Ka, const Eigen::MatrixXcd& Kb,
                                         ExtensionSign sign = ExtensionSign::plus) {
    if (Ka.rows() != Ka.cols() || Kb.rows() != Kb.cols() || Ka.rows() != Kb.rows() || Ka.rows() < 1)
        fail(errc::parameter, "separated blocks must be square and of equal size");
    const int n = int(Ka.rows());
    Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    K.topLeftCorner(n, n) = Ka;
    K.bottomRightCorner(n, n) = Kb;
    return make_extension(std::move(K), sign);
}

// The unitary K whose boundary subspace is {bv : w(b) = e^{i theta} w(a)},
// found by the Cayley transform of that subspace through the triplet maps.
inline ExtensionSpec quasi_periodic_extension(const BoundaryTriplet& T, double theta,
                                              ExtensionSign sign = ExtensionSign::plus) {
    const int m = T.m;
    Eigen::MatrixXcd S(2 * m, m);
    S.topRows(m) = Eigen::MatrixXcd::Identity(m, m);
    S.bottomRows(m) = std::exp(cxd(0.0, theta)) * Eigen::MatrixXcd::Identity(m, m);
    const cxd i(0.0, 1.0);
    Eigen::MatrixXcd U = T.G1 * S, W = T.G2 * S;
    Eigen::MatrixXcd den, num;
    if (sign == ExtensionSign::plus) {
        den = U + i * W;
        num = U - i * W;
    } else {
        den = U - i * W;
        num = U + i * W;
    }
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(den);
    if (!lu.isInvertible())
        fail(errc::preset, "boundary subspace is not expressible with this sign; try the opposite sign");
    Eigen::MatrixXcd K = num * lu.inverse();
    return make_extension(std::move(K), sign);
}

} // namespace qdo
