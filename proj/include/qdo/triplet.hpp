#pragma once

#include <algorithm>
#include <random>

#include <Eigen/Dense>

#include "qdo/ode.hpp"
#include "qdo/quadrature.hpp"

namespace qdo {

// Pair of boundary maps (as m x 2m matrices acting on the stacked vector of
// quasi-derivatives bv = (D^[0..m-1]y(a), D^[0..m-1]y(b))) satisfying the
// abstract Green identity
//     (l y, z) - (y, l z) = (G1 bv_y, G2 bv_z) - (G2 bv_y, G1 bv_z)
// together with surjectivity of bv -> (G1 bv, G2 bv).
struct BoundaryTriplet {
    int m = 0;
    Eigen::MatrixXcd G1, G2;
    cxd alpha{}, beta{}, gamma{}, delta{}; // mixed-row weights; used when m is odd
};

namespace detail {

inline void check_mixed_weights(int n, cxd a, cxd b, cxd g, cxd d) {
    const double s = (n % 2 == 0) ? 1.0 : -1.0; // (-1)^n
    auto herm = [](cxd x, cxd y) { return x * std::conj(y) + std::conj(x) * y; };
    if (std::abs(herm(a, g) - cxd(s)) > 1e-12)
        fail(errc::constraint, "mixed-row weights: alpha/gamma pairing must equal (-1)^n");
    if (std::abs(herm(b, d) + cxd(s)) > 1e-12)
        fail(errc::constraint, "mixed-row weights: beta/delta pairing must equal (-1)^{n+1}");
    if (std::abs(a * std::conj(d) + std::conj(b) * g) > 1e-12)
        fail(errc::constraint, "mixed-row weights: alpha/delta cross pairing must vanish");
    if (std::abs(b * std::conj(g) + std::conj(a) * d) > 1e-12)
        fail(errc::constraint, "mixed-row weights: beta/gamma cross pairing must vanish");
    if (std::abs(a * d - b * g) <= 1e-12)
        fail(errc::constraint, "mixed-row weights: alpha*delta - beta*gamma must not vanish");
}

} // namespace detail

// Odd-order construction with caller-chosen mixed-row weights (validated).
inline BoundaryTriplet make_boundary_triplet(int m, cxd alpha, cxd beta, cxd gamma, cxd delta) {
    if (m < 3 || m % 2 == 0) fail(errc::parameter, "mixed-row weights apply to odd order >= 3 only");
    const int n = (m - 1) / 2;
    detail::check_mixed_weights(n, alpha, beta, gamma, delta);

    BoundaryTriplet T;
    T.m = m;
    T.alpha = alpha;
    T.beta = beta;
    T.gamma = gamma;
    T.delta = delta;
    T.G1 = Eigen::MatrixXcd::Zero(m, 2 * m);
    T.G2 = Eigen::MatrixXcd::Zero(m, 2 * m);
    const cxd im = unit_imag_power(m);
    for (int j = 1; j <= n; ++j) {
        double sa = (j % 2 == 0) ? 1.0 : -1.0;  // (-1)^j
        T.G1(j - 1, m - j) = im * sa;           // D^{[m-j]} y(a)
        T.G1(n + j - 1, m + (m - j)) = -im * sa; // D^{[m-j]} y(b), sign (-1)^{j-1}
        T.G2(j - 1, j - 1) = 1.0;               // D^{[j-1]} y(a)
        T.G2(n + j - 1, m + (j - 1)) = 1.0;     // D^{[j-1]} y(b)
    }
    T.G1(m - 1, m + n) = im * alpha; // D^{[n]} y(b)
    T.G1(m - 1, n) = im * beta;      // D^{[n]} y(a)
    T.G2(m - 1, m + n) = gamma;
    T.G2(m - 1, n) = delta;
    return T;
}

inline BoundaryTriplet make_boundary_triplet(int m) {
    if (m < 2) fail(errc::parameter, "order m must be at least 2");
    if (m % 2 == 1) {
        const int n = (m - 1) / 2;
        const double s = (n % 2 == 0) ? 1.0 : -1.0;
        return make_boundary_triplet(m, cxd(1.0), cxd(1.0), cxd(0.5 * s, 1.0), cxd(-0.5 * s, 1.0));
    }
    const int n = m / 2;
    BoundaryTriplet T;
    T.m = m;
    T.G1 = Eigen::MatrixXcd::Zero(m, 2 * m);
    T.G2 = Eigen::MatrixXcd::Zero(m, 2 * m);
    const cxd im = unit_imag_power(m);
    for (int j = 1; j <= n; ++j) {
        double sa = (j % 2 == 0) ? 1.0 : -1.0;  // (-1)^j
        T.G1(j - 1, m - j) = im * sa;           // D^{[m-j]} y(a)
        T.G1(n + j - 1, m + (m - j)) = -im * sa; // D^{[m-j]} y(b)
        T.G2(j - 1, j - 1) = 1.0;
        T.G2(n + j - 1, m + (j - 1)) = 1.0;
    }
    return T;
}

// Stack endpoint states into a boundary vector (or columns of them).
inline Eigen::MatrixXcd stack_boundary(const Eigen::MatrixXcd& wa, const Eigen::MatrixXcd& wb) {
    if (wa.rows() != wb.rows() || wa.cols() != wb.cols())
        fail(errc::parameter, "endpoint states must have matching shapes");
    Eigen::MatrixXcd bv(2 * wa.rows(), wa.cols());
    bv.topRows(wa.rows()) = wa;
    bv.bottomRows(wb.rows()) = wb;
    return bv;
}

// Boundary vector of a solution trajectory, ordered by position (left endpoint
// block first) regardless of integration direction.
inline Eigen::VectorXcd boundary_vector(const Trajectory& y) {
    double a = std::min(y.t_begin, y.t_end), b = std::max(y.t_begin, y.t_end);
    return stack_boundary(y.value(a), y.value(b));
}

// Bilinear endpoint bracket [y, z]_a^b = sum_{k=1}^m (-1)^{k-1}
// D^{[m-k]}y conj(D^{[k-1]}z) evaluated at b minus the same at a.
inline cxd boundary_bracket(const Eigen::VectorXcd& bvy, const Eigen::VectorXcd& bvz) {
    if (bvy.size() != bvz.size() || bvy.size() < 4 || bvy.size() % 2 != 0)
        fail(errc::parameter, "boundary vectors must have equal even length >= 4");
    const int m = int(bvy.size()) / 2;
    cxd at_a(0.0), at_b(0.0);
    for (int k = 1; k <= m; ++k) {
        double sgn = (k % 2 == 1) ? 1.0 : -1.0; // (-1)^{k-1}
        at_a += sgn * bvy[m - k] * std::conj(bvz[k - 1]);
        at_b += sgn * bvy[m + (m - k)] * std::conj(bvz[m + (k - 1)]);
    }
    return at_b - at_a;
}

// Sesquilinear boundary form of the expression: (l y, z) - (y, l z) equals
// i^m times the endpoint bracket for every pair in the maximal domain.
inline cxd greens_boundary_form(const Eigen::VectorXcd& bvy, const Eigen::VectorXcd& bvz) {
    const int m = int(bvy.size()) / 2;
    return unit_imag_power(m) * boundary_bracket(bvy, bvz);
}

// (G1 y, G2 z) - (G2 y, G1 z) evaluated through the triplet matrices.
inline cxd triplet_form(const BoundaryTriplet& T, const Eigen::VectorXcd& bvy,
                        const Eigen::VectorXcd& bvz) {
    if (bvy.size() != 2 * T.m || bvz.size() != 2 * T.m)
        fail(errc::parameter, "boundary vector length does not match the triplet order");
    Eigen::VectorXcd g1y = T.G1 * bvy, g2y = T.G2 * bvy;
    Eigen::VectorXcd g1z = T.G1 * bvz, g2z = T.G2 * bvz;
    return g2z.dot(g1y) - g1z.dot(g2y); // x.dot(y) conjugates x
}

// A concrete maximal-domain function with prescribed boundary vector: the
// solution of the forced system l(y) = lambda y + f with f an indicator-bump
// combination supported in the right part of the interval.
struct RealizedFunction {
    Trajectory y;            // first-order trajectory (quasi-derivative columns)
    cxd lambda{};            // spectral shift used in the realization
    PiecewiseCoefficient f;  // inhomogeneous part: l(y) = lambda*y + f
    Eigen::VectorXcd bv;     // achieved boundary vector
};

inline RealizedFunction realize_boundary_data(const ShinZettlMatrix& A, const Eigen::VectorXcd& target,
                                              cxd lambda = cxd(0.0), const OdeOptions& opt = {}) {
    const int m = A.order();
    if (target.size() != 2 * m) fail(errc::parameter, "boundary vector length must be 2m");
    const double a = A.lower(), b = A.upper();
    CompiledSystem sys(A, lambda);

    Trajectory base = sys.solve(target.head(m), true, opt);
    if (base.end_value.log_scale != 0.0)
        fail(errc::realization, "system grows too strongly for boundary-data realization");
    Eigen::VectorXcd defect = target.tail(m) - Eigen::VectorXcd(base.end_value.m);

    // Indicator bumps on m disjoint windows in the right part of the interval:
    // their forced responses collocate the response kernel at separated points,
    // which keeps the matching system well conditioned at every order. If the
    // window layout happens to be degenerate for this system, retry with
    // re-randomized layouts before giving up.
    const double span = b - a;
    for (int attempt = 0; attempt < 5; ++attempt) {
        std::vector<double> cuts(size_t(m) + 1);
        if (attempt == 0) {
            for (int r = 0; r <= m; ++r) cuts[size_t(r)] = a + span * (0.55 + 0.40 * r / m);
        } else {
            std::mt19937 gen(9000u + unsigned(attempt));
            std::uniform_real_distribution<double> dist(0.50, 0.97);
            for (int r = 0; r <= m; ++r) cuts[size_t(r)] = a + span * dist(gen);
            std::sort(cuts.begin(), cuts.end());
            bool ok = true;
            for (int r = 0; r < m; ++r)
                if (cuts[size_t(r) + 1] - cuts[size_t(r)] < 1e-3 * span) ok = false;
            if (!ok) continue;
        }
        std::vector<PiecewiseCoefficient> bumps;
        for (int r = 0; r < m; ++r)
            bumps.push_back(PiecewiseCoefficient::step(a, b, {cuts[size_t(r)], cuts[size_t(r) + 1]},
                                                       {cxd(0.0), cxd(1.0), cxd(0.0)}));

        Eigen::MatrixXcd V(m, m);
        for (int r = 0; r < m; ++r) {
            Trajectory probe = sys.solve_forced(Eigen::VectorXcd::Zero(m), bumps[size_t(r)], true, opt);
            V.col(r) = probe.end_value.m;
        }
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(V, Eigen::ComputeThinU | Eigen::ComputeThinV);
        double smin = svd.singularValues().minCoeff(), smax = svd.singularValues().maxCoeff();
        if (!(smin > 0.0) || smax / smin > 1e10) continue;
        Eigen::VectorXcd coef = svd.solve(defect);

        PiecewiseCoefficient f = PiecewiseCoefficient::zero(a, b);
        for (int r = 0; r < m; ++r) f = f + bumps[size_t(r)].scaled(coef[r]);

        RealizedFunction out{sys.solve_forced(target.head(m), f, true, opt), lambda, std::move(f), {}};
        out.bv = boundary_vector(out.y);
        if ((out.bv - target).norm() > 1e-6 * std::max(1.0, target.norm()))
            fail(errc::realization, "realized boundary data misses the requested values");
        return out;
    }
    fail(errc::realization, "no bump layout conditioned well enough to match the boundary data");
}

// Realize prescribed triplet images (G1 y, G2 y) = (g1, g2).
inline RealizedFunction realize_triplet_data(const ShinZettlMatrix& A, const BoundaryTriplet& T,
                                             const Eigen::VectorXcd& g1, const Eigen::VectorXcd& g2,
                                             cxd lambda = cxd(0.0), const OdeOptions& opt = {}) {
    if (T.m != A.order()) fail(errc::parameter, "triplet order does not match the matrix order");
    if (g1.size() != T.m || g2.size() != T.m) fail(errc::parameter, "triplet data must have length m");
    Eigen::MatrixXcd S(2 * T.m, 2 * T.m);
    S.topRows(T.m) = T.G1;
    S.bottomRows(T.m) = T.G2;
    Eigen::VectorXcd rhs(2 * T.m);
    rhs.head(T.m) = g1;
    rhs.tail(T.m) = g2;
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(S);
    if (!lu.isInvertible()) fail(errc::realization, "stacked boundary maps are singular");
    return realize_boundary_data(A, lu.solve(rhs), lambda, opt);
}

// Quadrature check of the abstract Green identity. The two functions are
// given as trajectories with known images l(y) = shift_y * y + forcing_y
// (forcings may be null). Returns
//   | <l y, z> - <y, l z> - (G1 y, G2 z) + (G2 y, G1 z) |
// with the L2 inner products computed by adaptive panel quadrature on the
// coefficient grid refined by the forcings' breakpoints.
inline double greens_identity_residual(const ShinZettlMatrix& A, const BoundaryTriplet& T,
                                       const Trajectory& y, cxd shift_y, const PiecewiseCoefficient* forcing_y,
                                       const Trajectory& z, cxd shift_z, const PiecewiseCoefficient* forcing_z,
                                       double rel_tol = 1e-12) {
    std::vector<double> breaks = A.merged_breakpoints();
    for (const PiecewiseCoefficient* f : {forcing_y, forcing_z})
        if (f)
            for (double t : f->breakpoints())
                if (t > A.lower() && t < A.upper()) breaks.push_back(t);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    auto yv = [&y](double t) { return y.value(t)(0, 0); };
    auto zv = [&z](double t) { return z.value(t)(0, 0); };
    cxd yz = integrate_cells([&](double t) { return yv(t) * std::conj(zv(t)); }, breaks, 32, rel_tol);
    cxd ly_z = shift_y * yz;
    if (forcing_y)
        ly_z += integrate_cells([&](double t) { return forcing_y->evaluate(t) * std::conj(zv(t)); }, breaks,
                                32, rel_tol);
    cxd y_lz = std::conj(shift_z) * yz;
    if (forcing_z)
        y_lz += integrate_cells([&](double t) { return yv(t) * std::conj(forcing_z->evaluate(t)); }, breaks,
                                32, rel_tol);
    cxd boundary = triplet_form(T, boundary_vector(y), boundary_vector(z));
    return std::abs(ly_z - y_lz - boundary);
}

} // namespace qdo
