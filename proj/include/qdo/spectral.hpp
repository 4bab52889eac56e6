#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qdo/extensions.hpp"

namespace qdo {

struct SpectralOptions {
    OdeOptions ode{};                      // integrator tolerances for every solve
    int grid_points = 400;                 // real-scan grid resolution
    int max_eigenvalues = 200;             // refuse windows holding more than this
    double residual_threshold = 1e-8;      // accept lambda when sigma_min/sigma_max is below
    double multiplicity_threshold = 1e-6;  // sigma_k < thr * sigma_max counts toward multiplicity
    double singular_offset = 1e-8;         // relative endpoint offset for singular coefficients
    int max_subdivisions = 40;             // complex-box recursion budget
};

struct Eigenvalue {
    cxd lambda;
    int multiplicity = 1;
    double residual = 0.0;                  // sigma_min/sigma_max at lambda
    double extrapolation_uncertainty = 0.0; // nonzero only for singular-endpoint problems
};

struct SpectralResult {
    std::vector<Eigenvalue> eigenvalues;    // sorted by (Re, Im)
    std::string method;                     // "real-scan" or "complex-box"
    int grid_points = 0;
    std::vector<std::string> warnings;
};

struct EigenfunctionResult {
    cxd lambda;
    Trajectory y;              // quasi-derivative trajectory, first row is the function
    Eigen::VectorXcd initial;  // w(a) of the combination (already L2-normalized)
    double residual = 0.0;     // sigma ratio of the characteristic matrix at lambda
};

struct ResolventApplication {
    cxd lambda;
    Trajectory y;
    double ode_residual = 0.0;   // pointwise first-order-system residual of y
    double sigma_ratio = 0.0;    // conditioning of the characteristic matrix
};

namespace detail {

struct SingularData {
    double smin = 0.0, smax = 0.0, ratio = 0.0;
    int multiplicity = 0;
    Eigen::MatrixXcd V; // full right singular vectors, columns by decreasing sigma
};

// Singular values of M measured against a fixed reference scale. Normalizing
// by the matrix's own largest singular value would go blind at eigenvalues of
// full multiplicity, where every singular value vanishes at once; a reference
// independent of the spectral parameter keeps the dip visible at any
// multiplicity.
inline SingularData singular_data(const Eigen::MatrixXcd& M, double mult_threshold, double ref_scale) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    SingularData sd;
    sd.smax = sv(0);
    sd.smin = sv(sv.size() - 1);
    const double ref = ref_scale > 0.0 ? ref_scale : sd.smax;
    sd.ratio = ref > 0.0 ? sd.smin / ref : 0.0;
    for (int k = 0; k < sv.size(); ++k)
        if (ref == 0.0 || sv(k) < mult_threshold * ref) ++sd.multiplicity;
    sd.V = svd.matrixV();
    return sd;
}

} // namespace detail

// One extension of one quasi-differential expression, ready for spectral work.
// Couples the coefficient matrix, the boundary maps, and the boundary-condition
// matrix B; all eigenvalue location goes through the characteristic matrix
//     M(lambda) = B_a + B_b * Phi(b; lambda),
// whose rank drops exactly at the eigenvalues. The matrix is carried in
// log-scaled form (M_hat, s) with M = e^s * M_hat so strongly growing systems
// stay representable; singular-value ratios and determinant phases are
// scale-invariant.
class ExtensionProblem {
public:
    ExtensionProblem(ShinZettlMatrix A, BoundaryTriplet T, ExtensionSpec spec, SpectralOptions opt = {})
        : A_(std::move(A)), T_(std::move(T)), spec_(std::move(spec)), opt_(opt) {
        const int m = A_.order();
        if (T_.m != m || spec_.m != m) fail(errc::parameter, "coefficient, triplet, and extension orders differ");
        formally_selfadjoint_ = A_.is_formally_selfadjoint(1e-12);
        B_ = boundary_condition_matrix(spec_, T_);
        // Row scaling never changes the conditions B w = 0; unit rows keep the
        // detection scale below independent of how the parameter was written.
        for (int i = 0; i < m; ++i) {
            double n = B_.row(i).norm();
            if (n > 0.0) B_.row(i) /= n;
        }
        Ba_ = B_.leftCols(m);
        Bb_ = B_.rightCols(m);
        bnorm_ = B_.jacobiSvd().singularValues()(0);
        span_ = A_.upper() - A_.lower();
        singular_a_ = A_.singular_at(A_.lower());
        singular_b_ = A_.singular_at(A_.upper());
    }

    const ShinZettlMatrix& coefficients() const { return A_; }
    const BoundaryTriplet& triplet() const { return T_; }
    const ExtensionSpec& extension() const { return spec_; }
    const Eigen::MatrixXcd& condition_matrix() const { return B_; }
    const SpectralOptions& options() const { return opt_; }
    bool formally_selfadjoint() const { return formally_selfadjoint_; }
    bool singular_endpoint() const { return singular_a_ || singular_b_; }

    double effective_lower(double offset_scale = 1.0) const {
        return A_.lower() + (singular_a_ ? offset_scale * opt_.singular_offset * span_ : 0.0);
    }
    double effective_upper(double offset_scale = 1.0) const {
        return A_.upper() - (singular_b_ ? offset_scale * opt_.singular_offset * span_ : 0.0);
    }

    CompiledSystem system(cxd lambda, double offset_scale = 1.0) const {
        return CompiledSystem(A_, lambda, effective_lower(offset_scale), effective_upper(offset_scale));
    }

    // Log-scaled characteristic matrix: returns (M_hat, s) with
    // M(lambda) = e^s * M_hat = B_a + B_b Phi(b; lambda). Its determinant is
    // analytic in lambda; its rank drops exactly on the spectrum.
    ScaledMatrix characteristic(cxd lambda, double offset_scale = 1.0) const {
        return bundle(lambda, offset_scale).Mhat;
    }

    // Rank detector: smallest singular value of B applied to an orthonormal
    // basis of the solution-trace space, relative to |B|. Dips to zero on the
    // spectrum at any multiplicity and carries no exponential-growth artifacts.
    double sigma_ratio(cxd lambda, double offset_scale = 1.0) const {
        return rank_test(bundle(lambda, offset_scale)).ratio;
    }

    // ----- real-line eigenvalue scan (self-adjoint extensions) --------------

    SpectralResult eigenvalues_real_scan(double window_lo, double window_hi) const {
        if (!spec_.flags.unitary)
            fail(errc::parameter,
                 "real-line scan requires a unitary extension parameter; use the complex-box method");
        if (!(window_lo < window_hi)) fail(errc::parameter, "empty scan window");

        SpectralResult result;
        result.method = "real-scan";
        const int N = std::max(3, opt_.grid_points);
        result.grid_points = N;

        std::vector<double> xs(size_t(N) + 1), rs(size_t(N) + 1);
        for (int i = 0; i <= N; ++i) {
            xs[size_t(i)] = window_lo + (window_hi - window_lo) * i / N;
            rs[size_t(i)] = sigma_ratio(cxd(xs[size_t(i)]));
        }

        // Candidate brackets around every local minimum that plausibly dips.
        std::vector<std::array<double, 3>> brackets; // lo, hi, vertex seed
        for (int i = 0; i <= N; ++i) {
            bool left_ok = (i == 0) || rs[size_t(i)] <= rs[size_t(i) - 1];
            bool right_ok = (i == N) || rs[size_t(i)] <= rs[size_t(i) + 1];
            if (!(left_ok && right_ok) || rs[size_t(i)] > 0.5) continue;
            double lo = xs[size_t(std::max(0, i - 1))];
            double hi = xs[size_t(std::min(N, i + 1))];
            double vertex = xs[size_t(i)];
            if (i > 0 && i < N) {
                // three-point quadratic interpolation for the minimum position
                double y0 = rs[size_t(i) - 1], y1 = rs[size_t(i)], y2 = rs[size_t(i) + 1];
                double denom = y0 - 2.0 * y1 + y2;
                if (denom > 0.0) {
                    double shift = 0.5 * (y0 - y2) / denom; // in grid-spacing units
                    vertex = xs[size_t(i)] + shift * (xs[size_t(i) + 1] - xs[size_t(i)]);
                    vertex = std::clamp(vertex, lo, hi);
                }
            }
            brackets.push_back({lo, hi, vertex});
        }
        if (int(brackets.size()) > opt_.max_eigenvalues)
            fail(errc::complexity, "window contains too many candidate eigenvalues; narrow the window");

        for (const auto& br : brackets) {
            double lam = refine_minimum(br[0], br[1], br[2], 1.0);
            auto sd = rank_test(bundle(cxd(lam)));
            if (sd.ratio >= opt_.residual_threshold) {
                if (sd.ratio < 1e-4)
                    result.warnings.push_back("unresolved dip near lambda = " + std::to_string(lam) +
                                              " (sigma ratio " + std::to_string(sd.ratio) + ")");
                continue;
            }
            Eigenvalue ev;
            ev.lambda = cxd(lam);
            ev.multiplicity = sd.multiplicity;
            ev.residual = sd.ratio;
            if (singular_endpoint()) extrapolate_singular(ev, lam);
            result.eigenvalues.push_back(ev);
        }

        dedupe_sort(result.eigenvalues);
        if (int(result.eigenvalues.size()) > opt_.max_eigenvalues)
            fail(errc::complexity, "window contains more eigenvalues than the configured maximum");
        return result;
    }

    // ----- complex-box eigenvalue search (argument principle) ----------------

    SpectralResult eigenvalues_complex_box(double re_lo, double re_hi, double im_lo, double im_hi) const {
        if (!spec_.flags.contraction)
            fail(errc::parameter, "complex-box search requires a contraction extension parameter");
        if (!(re_lo < re_hi) || !(im_lo < im_hi)) fail(errc::parameter, "empty search box");

        SpectralResult result;
        result.method = "complex-box";

        DetCache cache{this, {}};
        const double diag = std::hypot(re_hi - re_lo, im_hi - im_lo);

        // A zero (nearly) on the contour breaks phase tracking; nudge the box.
        double grow = 0.0;
        for (int attempt = 0;; ++attempt) {
            try {
                std::vector<Eigenvalue> found;
                search_box(cache, re_lo - grow, re_hi + grow, im_lo - grow, im_hi + grow, 0, found,
                           result.warnings);
                // keep only what lies in the requested box (the nudge may add a sliver)
                const double slack = 1e-9 * std::max(1.0, diag);
                for (const Eigenvalue& ev : found)
                    if (ev.lambda.real() >= re_lo - slack && ev.lambda.real() <= re_hi + slack &&
                        ev.lambda.imag() >= im_lo - slack && ev.lambda.imag() <= im_hi + slack)
                        result.eigenvalues.push_back(ev);
                break;
            } catch (const ContourZero&) {
                if (attempt >= 3)
                    fail(errc::complexity,
                         "an eigenvalue sits on every perturbed search contour; move the box edges");
                grow = (attempt + 1) * 1.7e-3 * std::max(diag, 1e-6);
            }
        }

        dedupe_sort(result.eigenvalues);
        if (int(result.eigenvalues.size()) > opt_.max_eigenvalues)
            fail(errc::complexity, "box contains more eigenvalues than the configured maximum");
        return result;
    }

    // ----- eigenfunctions ----------------------------------------------------

    std::vector<EigenfunctionResult> eigenfunctions(cxd lambda) const {
        auto cb = bundle(lambda);
        auto sd = rank_test(cb);
        if (sd.ratio >= opt_.residual_threshold)
            fail(errc::not_an_eigenvalue, "sigma ratio " + std::to_string(sd.ratio) +
                                              " exceeds the eigenvalue acceptance threshold");
        const int m = A_.order();
        const int k = std::max(1, sd.multiplicity);
        CompiledSystem sys = system(lambda);

        // Null-space combinations of the fundamental columns (kernel vectors of
        // the reduced matrix, mapped back through the triangular factor), then
        // L2 orthonormalization through the Gram matrix.
        Eigen::MatrixXcd coeff(m, k);
        for (int j = 0; j < k; ++j)
            coeff.col(j) = cb.R.triangularView<Eigen::Upper>().solve(
                Eigen::VectorXcd(sd.V.col(m - 1 - j)));
        std::vector<Trajectory> raw;
        raw.reserve(size_t(k));
        for (int j = 0; j < k; ++j) raw.push_back(sys.solve(coeff.col(j), true, opt_.ode));

        Eigen::MatrixXcd G(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) G(i, j) = l2_pairing(raw[size_t(i)], raw[size_t(j)], sys.nodes());
        Eigen::LLT<Eigen::MatrixXcd> llt(G);
        if (llt.info() != Eigen::Success)
            fail(errc::realization, "eigenfunction Gram matrix is not positive definite");
        Eigen::MatrixXcd Linv =
            llt.matrixL().solve(Eigen::MatrixXcd::Identity(k, k)); // L^{-1}
        coeff = coeff * Linv.transpose();                          // Gram becomes the identity

        std::vector<EigenfunctionResult> out;
        for (int j = 0; j < k; ++j) {
            EigenfunctionResult ef;
            ef.lambda = lambda;
            ef.initial = coeff.col(j);
            ef.y = sys.solve(ef.initial, true, opt_.ode);
            ef.residual = sd.ratio;
            out.push_back(std::move(ef));
        }
        return out;
    }

    // ----- resolvent ---------------------------------------------------------

    ResolventApplication apply_resolvent(cxd lambda, const PiecewiseCoefficient& h) const {
        h.square_integral(); // raises non_integrable when h is not square-integrable
        auto cb = bundle(lambda);
        const ScaledMatrix& C = cb.Mhat;
        auto sd = rank_test(cb);
        if (sd.ratio <= 1e-10)
            fail(errc::resolvent_pole, "characteristic matrix is singular at this point "
                                       "(sigma_min/sigma_max = " +
                                           std::to_string(sd.ratio) + ")");
        if (C.log_scale > 300.0)
            fail(errc::integration, "system grows too strongly for resolvent assembly at this point");

        CompiledSystem sys = system(lambda);
        const int m = A_.order();
        Trajectory yp = sys.solve_forced(Eigen::VectorXcd::Zero(m), h, true, opt_.ode);
        Eigen::VectorXcd bvp = boundary_vector(yp);
        Eigen::VectorXcd rhs = -(B_ * bvp);
        // M c = rhs with M = e^s M_hat
        Eigen::VectorXcd c = C.m.colPivHouseholderQr().solve(std::exp(-C.log_scale) * rhs);

        ResolventApplication app;
        app.lambda = lambda;
        app.y = sys.solve_forced(c, h, true, opt_.ode);
        app.ode_residual = sys.max_residual(app.y, &h);
        app.sigma_ratio = sd.ratio;
        return app;
    }

    // L2 inner product (y, z) of the first components over the cell grid.
    static cxd l2_pairing(const Trajectory& y, const Trajectory& z, const std::vector<double>& breaks) {
        return integrate_cells(
            [&](double t) { return y.value(t)(0, 0) * std::conj(z.value(t)(0, 0)); }, breaks);
    }

    static double l2_norm(const Trajectory& y, const std::vector<double>& breaks) {
        return std::sqrt(std::max(0.0, l2_pairing(y, y, breaks).real()));
    }

private:
    struct ContourZero {};

    // Characteristic matrix plus the triangular factor of the (scaled) stacked
    // solution traces [e^{-s} I; Phi_hat]: the two share one fundamental solve.
    struct CharBundle {
        ScaledMatrix Mhat;
        Eigen::MatrixXcd R;
    };

    CharBundle bundle(cxd lambda, double offset_scale = 1.0) const {
        CompiledSystem sys = system(lambda, offset_scale);
        Trajectory F = sys.fundamental(true, opt_.ode);
        const int m = A_.order();
        const double s = F.end_value.log_scale;
        const double es = std::exp(-s);
        CharBundle cb;
        cb.Mhat.log_scale = s;
        cb.Mhat.m = es * Ba_ + Bb_ * F.end_value.m;
        Eigen::MatrixXcd St(2 * m, m);
        St.topRows(m) = es * Eigen::MatrixXcd::Identity(m, m);
        St.bottomRows(m) = F.end_value.m;
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(St);
        Eigen::MatrixXcd Rfull = qr.matrixQR().topRows(m);
        cb.R = Rfull.triangularView<Eigen::Upper>();
        return cb;
    }

    // B restricted to an orthonormal basis of the solution-trace space:
    // M_hat R^{-1} = B Q. Measured against |B| so the test has a fixed scale.
    detail::SingularData rank_test(const CharBundle& cb) const {
        Eigen::MatrixXcd reduced =
            cb.R.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(cb.Mhat.m);
        return detail::singular_data(reduced, opt_.multiplicity_threshold, bnorm_);
    }

    struct DetCache {
        const ExtensionProblem* P;
        std::map<std::pair<double, double>, std::pair<cxd, double>> memo; // lambda -> (det M_hat, s)

        // log det M = m*s + log|det M_hat| + i arg(det M_hat)
        cxd log_det(cxd lambda) {
            auto key = std::make_pair(lambda.real(), lambda.imag());
            auto it = memo.find(key);
            if (it == memo.end()) {
                ScaledMatrix C = P->characteristic(lambda);
                it = memo.emplace(key, std::make_pair(C.m.determinant(), C.log_scale)).first;
            }
            const cxd d = it->second.first;
            const double s = it->second.second;
            double mag = std::abs(d);
            if (mag == 0.0) throw ContourZero{};
            return cxd(P->A_.order() * s + std::log(mag), std::arg(d));
        }
    };

    // Phase increment of det M along the segment [za, zb], refining until each
    // sub-step turns by less than pi/2.
    static double walk_phase(DetCache& cache, cxd za, cxd zb, int depth) {
        cxd la = cache.log_det(za), lb = cache.log_det(zb);
        double d = std::remainder(lb.imag() - la.imag(), 2.0 * 3.141592653589793238462643383279502884);
        if (depth > 46) throw ContourZero{};
        if (std::abs(d) < 1.5533430342970306) // just under pi/2
            return d;
        cxd mid = 0.5 * (za + zb);
        return walk_phase(cache, za, mid, depth + 1) + walk_phase(cache, mid, zb, depth + 1);
    }

    static int winding(DetCache& cache, double re_lo, double re_hi, double im_lo, double im_hi) {
        const cxd c00(re_lo, im_lo), c10(re_hi, im_lo), c11(re_hi, im_hi), c01(re_lo, im_hi);
        double total = 0.0;
        // coarse pre-split keeps the recursive walker shallow
        auto edge = [&](cxd a, cxd b) {
            for (int s = 0; s < 8; ++s) {
                cxd p = a + (b - a) * (double(s) / 8.0);
                cxd q = a + (b - a) * (double(s + 1) / 8.0);
                total += walk_phase(cache, p, q, 0);
            }
        };
        edge(c00, c10);
        edge(c10, c11);
        edge(c11, c01);
        edge(c01, c00);
        const double tau = 2.0 * 3.141592653589793238462643383279502884;
        double w = total / tau;
        long rounded = std::lround(w);
        if (std::abs(w - double(rounded)) > 0.25) throw ContourZero{};
        return int(rounded);
    }

    void search_box(DetCache& cache, double re_lo, double re_hi, double im_lo, double im_hi, int depth,
                    std::vector<Eigenvalue>& out, std::vector<std::string>& warnings) const {
        int W = winding(cache, re_lo, re_hi, im_lo, im_hi);
        if (W == 0) return;
        const cxd center(0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi));
        const double diag = std::hypot(re_hi - re_lo, im_hi - im_lo);
        const bool tiny = diag < 1e-9 * std::max(1.0, std::abs(center));
        if (W == 1 || tiny || depth >= opt_.max_subdivisions) {
            if (W > 1 && !tiny)
                warnings.push_back("cluster of " + std::to_string(W) +
                                   " zeros unresolved at subdivision limit near re = " +
                                   std::to_string(center.real()));
            if (auto ev = newton_polish(cache, center, W, diag)) out.push_back(*ev);
            return;
        }
        // split the longer side; dodge splits that land on a zero
        const bool split_re = (re_hi - re_lo) >= (im_hi - im_lo);
        for (double frac : {0.5, 0.55, 0.45, 0.6, 0.4}) {
            try {
                if (split_re) {
                    double mid = re_lo + frac * (re_hi - re_lo);
                    search_box(cache, re_lo, mid, im_lo, im_hi, depth + 1, out, warnings);
                    search_box(cache, mid, re_hi, im_lo, im_hi, depth + 1, out, warnings);
                } else {
                    double mid = im_lo + frac * (im_hi - im_lo);
                    search_box(cache, re_lo, re_hi, im_lo, mid, depth + 1, out, warnings);
                    search_box(cache, re_lo, re_hi, mid, im_hi, depth + 1, out, warnings);
                }
                return;
            } catch (const ContourZero&) {
                continue; // try the next split fraction
            }
        }
        throw ContourZero{}; // every split failed: escalate to the box-nudge retry
    }

    // Multiplicity-aware Newton iteration on log det M, then singular-value
    // acceptance at the landing point.
    std::optional<Eigenvalue> newton_polish(DetCache& cache, cxd z, int mult_hint, double scale) const {
        double h = std::max(1e-7 * std::max(1.0, std::abs(z)), 1e-3 * scale);
        for (int it = 0; it < 60; ++it) {
            cxd lp, lm;
            try {
                lp = cache.log_det(z + h);
                lm = cache.log_det(z - h);
            } catch (const ContourZero&) {
                h *= 0.5;
                continue;
            }
            double dim = std::remainder(lp.imag() - lm.imag(), 2.0 * 3.141592653589793238462643383279502884);
            cxd dlog = cxd(lp.real() - lm.real(), dim) / (2.0 * h);
            if (std::abs(dlog) < 1e-300) break;
            cxd step = double(std::max(1, mult_hint)) / dlog;
            z -= step;
            double target = 1e-12 * std::max(1.0, std::abs(z));
            if (std::abs(step) < target) break;
            h = std::min(h, std::max(0.25 * std::abs(step), target));
        }
        auto sd = rank_test(bundle(z));
        if (sd.ratio >= opt_.residual_threshold) return std::nullopt;
        Eigenvalue ev;
        ev.lambda = z;
        ev.multiplicity = sd.multiplicity;
        ev.residual = sd.ratio;
        if (singular_endpoint()) ev.extrapolation_uncertainty = opt_.singular_offset;
        return ev;
    }

    // Derivative-sign bisection of the sigma ratio, seeded by the quadratic
    // interpolation vertex.
    double refine_minimum(double lo, double hi, double seed, double offset_scale) const {
        bool first = true;
        while (hi - lo > 1e-10 * std::max(1.0, std::abs(0.5 * (lo + hi)))) {
            double mid = first ? std::clamp(seed, lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo))
                               : 0.5 * (lo + hi);
            first = false;
            double delta = 0.125 * (hi - lo);
            double rm = sigma_ratio(cxd(mid - delta), offset_scale);
            double rp = sigma_ratio(cxd(mid + delta), offset_scale);
            if (rm < rp)
                hi = mid + delta;
            else
                lo = mid - delta;
        }
        return 0.5 * (lo + hi);
    }

    // Offset-halving extrapolation for singular-endpoint problems: the
    // eigenvalue is recomputed at offsets eps, eps/2, eps/4 and accelerated.
    void extrapolate_singular(Eigenvalue& ev, double lam) const {
        const double w = 1e-3 * std::max(1.0, std::abs(lam));
        double l1 = lam;
        double l2 = refine_minimum(l1 - w, l1 + w, l1, 0.5);
        double l3 = refine_minimum(l2 - w, l2 + w, l2, 0.25);
        double d1 = l2 - l1, d2 = l3 - l2;
        double denom = d2 - d1;
        double lstar, unc;
        if (std::abs(denom) > 1e-14 * std::max(1.0, std::abs(lam))) {
            lstar = l3 - d2 * d2 / denom;
            unc = std::abs(lstar - l3) + 0.5 * std::abs(d2);
        } else {
            lstar = l3;
            unc = std::abs(d2);
        }
        auto sd = rank_test(bundle(cxd(l3), 0.25));
        ev.lambda = cxd(lstar);
        ev.multiplicity = sd.multiplicity;
        ev.residual = sd.ratio;
        ev.extrapolation_uncertainty = unc;
    }

    static void dedupe_sort(std::vector<Eigenvalue>& evs) {
        std::sort(evs.begin(), evs.end(), [](const Eigenvalue& a, const Eigenvalue& b) {
            if (a.lambda.real() != b.lambda.real()) return a.lambda.real() < b.lambda.real();
            return a.lambda.imag() < b.lambda.imag();
        });
        std::vector<Eigenvalue> kept;
        for (const Eigenvalue& ev : evs) {
            if (!kept.empty() &&
                std::abs(ev.lambda - kept.back().lambda) <= 1e-8 * std::max(1.0, std::abs(ev.lambda))) {
                if (ev.residual < kept.back().residual) kept.back() = ev;
                continue;
            }
            kept.push_back(ev);
        }
        evs = std::move(kept);
    }

    ShinZettlMatrix A_;
    BoundaryTriplet T_;
    ExtensionSpec spec_;
    SpectralOptions opt_;
    Eigen::MatrixXcd B_, Ba_, Bb_;
    double bnorm_ = 0.0;
    double span_ = 0.0;
    bool singular_a_ = false, singular_b_ = false;
    bool formally_selfadjoint_ = true;
};

// ----- lambda-dependent extension families (generalized resolvents) ----------

struct RationalEntry {
    Polynomial num, den;
    cxd eval(cxd lambda) const {
        cxd d = den.eval(lambda);
        if (std::abs(d) == 0.0) fail(errc::division, "extension family entry has a pole at this point");
        return num.eval(lambda) / d;
    }
};

// K(lambda): constant matrix, matrix of rational-in-lambda entries, or a
// table of sampled matrices blended between the two nearest sample points
// (tabulated families are not certified holomorphic).
class KFamily {
public:
    enum class Kind { constant, rational, tabulated };

    static KFamily constant(Eigen::MatrixXcd K) {
        if (K.rows() != K.cols() || K.rows() < 2) fail(errc::parameter, "family matrix must be square");
        KFamily f;
        f.kind_ = Kind::constant;
        f.order_ = int(K.rows());
        f.constant_ = std::move(K);
        return f;
    }

    static KFamily rational(std::vector<std::vector<RationalEntry>> entries) {
        const int m = int(entries.size());
        if (m < 2) fail(errc::parameter, "family matrix must be square of size at least 2");
        for (const auto& row : entries)
            if (int(row.size()) != m) fail(errc::parameter, "family matrix must be square");
        KFamily f;
        f.kind_ = Kind::rational;
        f.order_ = m;
        f.rational_ = std::move(entries);
        return f;
    }

    static KFamily tabulated(std::vector<std::pair<cxd, Eigen::MatrixXcd>> samples) {
        if (samples.empty()) fail(errc::parameter, "tabulated family needs at least one sample");
        const int m = int(samples.front().second.rows());
        for (const auto& s : samples)
            if (s.second.rows() != m || s.second.cols() != m)
                fail(errc::parameter, "tabulated family samples must share one square shape");
        KFamily f;
        f.kind_ = Kind::tabulated;
        f.order_ = m;
        f.table_ = std::move(samples);
        return f;
    }

    Kind kind() const { return kind_; }
    int order() const { return order_; }
    bool certified_holomorphic() const { return kind_ != Kind::tabulated; }

    Eigen::MatrixXcd eval(cxd lambda) const {
        switch (kind_) {
        case Kind::constant:
            return constant_;
        case Kind::rational: {
            Eigen::MatrixXcd K(order_, order_);
            for (int i = 0; i < order_; ++i)
                for (int j = 0; j < order_; ++j) K(i, j) = rational_[size_t(i)][size_t(j)].eval(lambda);
            return K;
        }
        case Kind::tabulated: {
            if (table_.size() == 1) return table_.front().second;
            size_t best = 0, second = 1;
            double d0 = std::abs(lambda - table_[0].first), d1 = std::abs(lambda - table_[1].first);
            if (d1 < d0) {
                std::swap(best, second);
                std::swap(d0, d1);
            }
            for (size_t i = 2; i < table_.size(); ++i) {
                double d = std::abs(lambda - table_[i].first);
                if (d < d0) {
                    second = best;
                    d1 = d0;
                    best = i;
                    d0 = d;
                } else if (d < d1) {
                    second = i;
                    d1 = d;
                }
            }
            if (d0 == 0.0) return table_[best].second;
            double w0 = d1 / (d0 + d1), w1 = d0 / (d0 + d1);
            return w0 * table_[best].second + w1 * table_[second].second;
        }
        }
        fail(errc::parameter, "unknown family kind");
    }

private:
    Kind kind_ = Kind::constant;
    int order_ = 0;
    Eigen::MatrixXcd constant_;
    std::vector<std::vector<RationalEntry>> rational_;
    std::vector<std::pair<cxd, Eigen::MatrixXcd>> table_;
};

struct GeneralizedResolventApplication {
    ResolventApplication app;
    ExtensionSign sign_used = ExtensionSign::plus;
    double family_norm = 0.0;          // operator norm of K(lambda)
    bool holomorphy_certified = true;  // false for tabulated families
};

// Half-plane rule: Im lambda < 0 uses the plus-sign condition with K(lambda),
// Im lambda > 0 the minus-sign condition; the real axis is outside the domain.
inline GeneralizedResolventApplication apply_generalized_resolvent(
    const ShinZettlMatrix& A, const BoundaryTriplet& T, const KFamily& family, cxd lambda,
    const PiecewiseCoefficient& h, const SpectralOptions& opt = {}) {
    if (lambda.imag() == 0.0)
        fail(errc::domain, "generalized resolvent is defined off the real axis only");
    if (family.order() != A.order()) fail(errc::parameter, "family and coefficient orders differ");
    Eigen::MatrixXcd K = family.eval(lambda);
    ExtensionFlags flags = classify_extension_matrix(K);
    if (!flags.contraction)
        fail(errc::validity, "family value is not a contraction at this point (operator norm " +
                                 std::to_string(flags.operator_norm) + ")");
    const ExtensionSign sign = lambda.imag() < 0.0 ? ExtensionSign::plus : ExtensionSign::minus;
    ExtensionProblem problem(A, T, make_extension(std::move(K), sign), opt);
    GeneralizedResolventApplication out;
    out.app = problem.apply_resolvent(lambda, h);
    out.sign_used = sign;
    out.family_norm = flags.operator_norm;
    out.holomorphy_certified = family.certified_holomorphic();
    return out;
}

} // namespace qdo
