#pragma once

// Reusable consistency checks: randomized Green-identity trials, adjoint
// involution distance, and spectrum agreement.  Shared by the verify task and
// the acceptance harness so both report the same quantities.

#include <random>
#include <string>
#include <utility>

#include "qdo/extensions.hpp"
#include "qdo/io_json.hpp"
#include "qdo/spectral.hpp"

namespace qdo::detail {

// Deterministic uniform draw with a fixed bit mapping (independent of any
// library distribution implementation).
inline double uniform_draw(std::mt19937_64& g, double lo, double hi) {
    return lo + (hi - lo) * (double(g() >> 11) * 0x1.0p-53);
}

inline cxd complex_draw(std::mt19937_64& g, double re_lo, double re_hi, double im_lo,
                        double im_hi) {
    return cxd(uniform_draw(g, re_lo, re_hi), uniform_draw(g, im_lo, im_hi));
}

inline double l2_norm_on(const ShinZettlMatrix& A, const Trajectory& y) {
    std::vector<double> breaks = A.merged_breakpoints();
    cxd v = integrate_cells(
        [&](double t) {
            cxd w = y.value(t)(0, 0);
            return w * std::conj(w);
        },
        breaks, 32, 1e-12);
    return std::sqrt(std::max(0.0, v.real()));
}

// One Green-identity trial: solve the homogeneous system at two random
// spectral parameters from random initial data and measure
// |<l y, z> - <y, l z> - boundary form| relative to the solution sizes.
inline double green_trial(const ShinZettlMatrix& A, const BoundaryTriplet& T, long seed,
                          int trial) {
    std::mt19937_64 g(0x9e3779b97f4a7c15ULL ^ (uint64_t(seed) * 0x100000001b3ULL + uint64_t(trial)));
    g.discard(7);
    const int m = A.order();
    cxd lam_y = complex_draw(g, -3.0, 3.0, -1.0, 1.0);
    cxd lam_z = complex_draw(g, -3.0, 3.0, -1.0, 1.0);
    Eigen::VectorXcd wy(m), wz(m);
    for (int i = 0; i < m; ++i) {
        wy(i) = std::polar(uniform_draw(g, 0.5, 1.0), uniform_draw(g, 0.0, 6.283185307179586));
        wz(i) = std::polar(uniform_draw(g, 0.5, 1.0), uniform_draw(g, 0.0, 6.283185307179586));
    }
    CompiledSystem sy(A, lam_y), sz(A, lam_z);
    Trajectory y = sy.solve(wy), z = sz.solve(wz);
    double scale = std::max(1.0, l2_norm_on(A, y) * l2_norm_on(A, z));
    return greens_identity_residual(A, T, y, lam_y, nullptr, z, lam_z, nullptr) / scale;
}

// Largest entrywise L1 distance between the double Lagrange adjoint and the
// original coefficients.
inline double involution_distance(const ShinZettlMatrix& A) {
    ShinZettlMatrix AA = A.lagrange_adjoint().lagrange_adjoint();
    double worst = 0.0;
    for (int i = 0; i < A.order(); ++i)
        for (int j = 0; j < A.order(); ++j)
            worst = std::max(worst, (AA.at(i, j) + (-A.at(i, j))).l1_norm());
    return worst;
}

inline std::pair<bool, std::string> compare_spectra(const SpectralResult& r1,
                                                    const SpectralResult& r2, double tol) {
    if (r1.eigenvalues.size() != r2.eigenvalues.size())
        return {false, "eigenvalue counts differ: " + std::to_string(r1.eigenvalues.size()) +
                           " vs " + std::to_string(r2.eigenvalues.size())};
    double worst = 0.0;
    for (size_t i = 0; i < r1.eigenvalues.size(); ++i) {
        double rel = std::abs(r1.eigenvalues[i].lambda - r2.eigenvalues[i].lambda) /
                     std::max(1.0, std::abs(r1.eigenvalues[i].lambda));
        worst = std::max(worst, rel);
        if (r1.eigenvalues[i].multiplicity != r2.eigenvalues[i].multiplicity)
            return {false, "multiplicities differ at eigenvalue " + std::to_string(i + 1)};
    }
    return {worst < tol, std::to_string(r1.eigenvalues.size()) +
                             " eigenvalues, worst relative difference " + jsio::fmt_double(worst)};
}

} // namespace qdo::detail
