#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qdo/shin_zettl.hpp"

namespace qdo {

// Value carried in factored form v * e^{log_scale}, so solutions of strongly
// growing systems stay representable. log_scale is 0 unless renormalization
// fired during integration.
struct ScaledMatrix {
    Eigen::MatrixXcd m;
    double log_scale = 0.0;

    Eigen::MatrixXcd unscaled() const { return std::exp(log_scale) * m; }
};

struct OdeOptions {
    double rtol = 1e-12;
    double atol = 1e-14;
    size_t max_steps = 2000000;
    double rescale_threshold = 1e150;
};

// Right-hand side restricted to one smoothness cell: f(cell, t, w) -> dw.
// The integrator never asks for values outside the current cell, so coefficient
// jumps at cell boundaries are always evaluated on the correct side.
using CellRhs = std::function<void(int cell, double t, const Eigen::MatrixXcd& w, Eigen::MatrixXcd& dw)>;

namespace detail {

// Dormand-Prince 5(4) tableau with the quartic dense-output weights.
inline constexpr double kC2 = 1.0 / 5, kC3 = 3.0 / 10, kC4 = 4.0 / 5, kC5 = 8.0 / 9;
inline constexpr double kA21 = 1.0 / 5;
inline constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
inline constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
inline constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187, kA53 = 64448.0 / 6561,
                        kA54 = -212.0 / 729;
inline constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247,
                        kA64 = 49.0 / 176, kA65 = -5103.0 / 18656;
inline constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192,
                        kB5 = -2187.0 / 6784, kB6 = 11.0 / 84;
inline constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                        kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;
inline constexpr double kD1 = -12715105075.0 / 11282082432.0, kD3 = 87487479700.0 / 32700410799.0,
                        kD4 = -10690763975.0 / 1880347072.0, kD5 = 701980252875.0 / 199316789632.0,
                        kD6 = -1453857185.0 / 822651844.0, kD7 = 69997945.0 / 29380423.0;

inline double weighted_rms(const Eigen::MatrixXcd& v, const Eigen::MatrixXd& sc) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < v.cols(); ++j)
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            double q = std::abs(v(i, j)) / sc(i, j);
            s += q * q;
        }
    return std::sqrt(s / double(v.size()));
}

inline Eigen::MatrixXd error_weights(const Eigen::MatrixXcd& w0, const Eigen::MatrixXcd& w1,
                                     const OdeOptions& opt) {
    Eigen::MatrixXd sc(w0.rows(), w0.cols());
    for (Eigen::Index j = 0; j < w0.cols(); ++j)
        for (Eigen::Index i = 0; i < w0.rows(); ++i)
            sc(i, j) = opt.atol + opt.rtol * std::max(std::abs(w0(i, j)), std::abs(w1(i, j)));
    return sc;
}

} // namespace detail

// One accepted integrator step with its quartic interpolant in
// theta = (t - t0)/h; the true solution on the step is e^{log_scale} * poly.
struct DenseStep {
    double t0 = 0.0, h = 0.0;
    double log_scale = 0.0;
    std::array<Eigen::MatrixXcd, 5> c;

    Eigen::MatrixXcd poly(double t) const {
        double th = (t - t0) / h;
        return c[0] + th * (c[1] + th * (c[2] + th * (c[3] + th * c[4])));
    }
    Eigen::MatrixXcd poly_derivative(double t) const {
        double th = (t - t0) / h;
        return (c[1] + th * (2.0 * c[2] + th * (3.0 * c[3] + th * (4.0 * c[4])))) / h;
    }
};

// Continuous solution produced by the integrator: dense interpolants on every
// step plus the factored end state.
class Trajectory {
public:
    std::vector<DenseStep> steps;
    bool forward = true;
    double t_begin = 0.0, t_end = 0.0;
    ScaledMatrix end_value;

    ScaledMatrix eval(double t) const {
        const DenseStep& s = locate(t);
        return {s.poly(t), s.log_scale};
    }

    ScaledMatrix derivative(double t) const {
        const DenseStep& s = locate(t);
        return {s.poly_derivative(t), s.log_scale};
    }

    Eigen::MatrixXcd value(double t) const { return eval(t).unscaled(); }
    Eigen::MatrixXcd value_derivative(double t) const { return derivative(t).unscaled(); }

private:
    const DenseStep& locate(double t) const {
        if (steps.empty()) fail(errc::integration, "empty trajectory");
        double lo = std::min(t_begin, t_end), hi = std::max(t_begin, t_end);
        if (t < lo - 1e-12 * (hi - lo) || t > hi + 1e-12 * (hi - lo))
            fail(errc::domain, "evaluation time outside the integration span");
        double d = forward ? 1.0 : -1.0;
        size_t b = 0, e = steps.size();
        while (b < e) { // first step starting strictly beyond t, then back one
            size_t mid = (b + e) / 2;
            if (d * (steps[mid].t0 - t) <= 0)
                b = mid + 1;
            else
                e = mid;
        }
        return steps[b == 0 ? 0 : b - 1];
    }
};

namespace detail {

inline double initial_step(const CellRhs& rhs, int cell, double t, double dir,
                           const Eigen::MatrixXcd& w, const Eigen::MatrixXcd& k1, double width,
                           const OdeOptions& opt) {
    Eigen::MatrixXd sc = error_weights(w, w, opt);
    double d0 = weighted_rms(w, sc);
    double d1 = weighted_rms(k1, sc);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * width : 0.01 * d0 / d1;
    h0 = std::min(h0, width);
    Eigen::MatrixXcd w1 = w + (dir * h0) * k1;
    Eigen::MatrixXcd f1(w.rows(), w.cols());
    rhs(cell, t + dir * h0, w1, f1);
    double d2 = weighted_rms(f1 - k1, sc) / h0;
    double m = std::max(d1, d2);
    double h1 = (m <= 1e-15) ? std::max(1e-6 * width, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
    return std::min({100.0 * h0, h1, width});
}

} // namespace detail

// Adaptive fifth-order integration over the cells bounded by `nodes`
// (strictly increasing). Steps never cross a cell boundary. When
// `allow_rescale` is set (valid only for RHS linear homogeneous in w) the
// state is renormalized whenever it exceeds the threshold, and the factor is
// carried in log_scale.
inline Trajectory integrate_ode(const CellRhs& rhs, const std::vector<double>& nodes, bool forward,
                                  Eigen::MatrixXcd w, bool allow_rescale, const OdeOptions& opt = {}) {
    if (nodes.size() < 2) fail(errc::parameter, "integration needs at least one cell");
    for (size_t i = 0; i + 1 < nodes.size(); ++i)
        if (!(nodes[i] < nodes[i + 1])) fail(errc::parameter, "cell boundaries must strictly increase");

    const int ncells = int(nodes.size()) - 1;
    const double dir = forward ? 1.0 : -1.0;
    const double total = nodes.back() - nodes.front();

    Trajectory traj;
    traj.forward = forward;
    traj.t_begin = forward ? nodes.front() : nodes.back();
    traj.t_end = forward ? nodes.back() : nodes.front();

    double log_scale = 0.0;
    double h_carry = 0.0;
    size_t nsteps = 0;

    Eigen::MatrixXcd k1(w.rows(), w.cols()), k2 = k1, k3 = k1, k4 = k1, k5 = k1, k6 = k1, k7 = k1;
    Eigen::MatrixXcd ws(w.rows(), w.cols()), w1(w.rows(), w.cols());

    for (int ci = 0; ci < ncells; ++ci) {
        int cell = forward ? ci : ncells - 1 - ci;
        double p = forward ? nodes[cell] : nodes[cell + 1];
        double q = forward ? nodes[cell + 1] : nodes[cell];
        double width = std::abs(q - p);
        double t = p;
        rhs(cell, t, w, k1);
        double h = (h_carry > 0.0) ? std::min(h_carry, width)
                                   : detail::initial_step(rhs, cell, t, dir, w, k1, width, opt);

        while (dir * (q - t) > width * 1e-14) {
            double remaining = dir * (q - t);
            bool last = h >= remaining * (1.0 - 1e-12);
            if (last) h = remaining;
            double hs = dir * h;

            ws = w + hs * (detail::kA21 * k1);
            rhs(cell, t + detail::kC2 * hs, ws, k2);
            ws = w + hs * (detail::kA31 * k1 + detail::kA32 * k2);
            rhs(cell, t + detail::kC3 * hs, ws, k3);
            ws = w + hs * (detail::kA41 * k1 + detail::kA42 * k2 + detail::kA43 * k3);
            rhs(cell, t + detail::kC4 * hs, ws, k4);
            ws = w + hs * (detail::kA51 * k1 + detail::kA52 * k2 + detail::kA53 * k3 + detail::kA54 * k4);
            rhs(cell, t + detail::kC5 * hs, ws, k5);
            ws = w + hs * (detail::kA61 * k1 + detail::kA62 * k2 + detail::kA63 * k3 + detail::kA64 * k4 +
                           detail::kA65 * k5);
            rhs(cell, t + hs, ws, k6);
            w1 = w + hs * (detail::kB1 * k1 + detail::kB3 * k3 + detail::kB4 * k4 + detail::kB5 * k5 +
                           detail::kB6 * k6);
            rhs(cell, t + hs, w1, k7);

            Eigen::MatrixXcd errm = hs * (detail::kE1 * k1 + detail::kE3 * k3 + detail::kE4 * k4 +
                                          detail::kE5 * k5 + detail::kE6 * k6 + detail::kE7 * k7);
            Eigen::MatrixXd sc = detail::error_weights(w, w1, opt);
            double err = detail::weighted_rms(errm, sc);

            double facmax = 1.0;
            if (err <= 1.0) {
                DenseStep st;
                st.t0 = t;
                st.h = hs;
                st.log_scale = log_scale;
                Eigen::MatrixXcd ydiff = w1 - w;
                Eigen::MatrixXcd bspl = hs * k1 - ydiff;
                Eigen::MatrixXcd r4 = ydiff - hs * k7 - bspl;
                Eigen::MatrixXcd r5 = hs * (detail::kD1 * k1 + detail::kD3 * k3 + detail::kD4 * k4 +
                                            detail::kD5 * k5 + detail::kD6 * k6 + detail::kD7 * k7);
                st.c[0] = w;
                st.c[1] = ydiff + bspl;
                st.c[2] = -bspl + r4 + r5;
                st.c[3] = -r4 - 2.0 * r5;
                st.c[4] = r5;
                traj.steps.push_back(std::move(st));

                t = last ? q : t + hs;
                w.swap(w1);
                k1.swap(k7);
                if (allow_rescale) {
                    double mx = w.cwiseAbs().maxCoeff();
                    if (mx > opt.rescale_threshold) {
                        w /= mx;
                        k1 /= mx;
                        log_scale += std::log(mx);
                    }
                }
                facmax = 5.0;
            }
            double fac = 0.9 * std::pow(std::max(err, 1e-30), -0.2);
            h *= std::clamp(fac, 0.2, facmax);
            if (h <= std::abs(t) * 1e-16 + total * 1e-17)
                fail(errc::integration, "step size underflow at t=" + std::to_string(t));
            if (++nsteps > opt.max_steps) fail(errc::integration, "step budget exhausted");
        }
        h_carry = h;
    }

    traj.end_value = {std::move(w), log_scale};
    return traj;
}

// First-order realization of the formal expression at spectral parameter
// lambda on a subinterval [lo, hi]: the m x m system
//     w' = C(t) w + i^{-m} f(t) e_m,   C(t) = A(t) + i^{-m} lambda E_{m,1},
// with all coefficient evaluations pre-resolved per smoothness cell.
class CompiledSystem {
public:
    CompiledSystem(const ShinZettlMatrix& A, cxd lambda)
        : CompiledSystem(A, lambda, A.lower(), A.upper()) {}

    CompiledSystem(const ShinZettlMatrix& A, cxd lambda, double lo, double hi)
        : m_(A.order()), lo_(lo), hi_(hi), shift_(unit_imag_power(-A.order()) * lambda),
          forcing_factor_(unit_imag_power(-A.order())) {
        if (!(A.lower() <= lo && lo < hi && hi <= A.upper()))
            fail(errc::domain, "subinterval must sit inside the coefficient interval");
        nodes_.push_back(lo);
        for (double t : A.merged_breakpoints())
            if (t > lo && t < hi) nodes_.push_back(t);
        nodes_.push_back(hi);
        cells_.resize(nodes_.size() - 1);
        for (size_t ci = 0; ci + 1 < nodes_.size(); ++ci) {
            double mid = 0.5 * (nodes_[ci] + nodes_[ci + 1]);
            for (int i = 0; i < m_; ++i)
                for (int j = 0; j < m_; ++j) {
                    const auto& e = A.at(i, j);
                    if (e.is_zero()) continue;
                    const Piece& pc = piece_for(e, mid);
                    if (!pc.terms.empty()) cells_[ci].push_back({i, j, pc});
                }
        }
    }

    int order() const { return m_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    cxd forcing_factor() const { return forcing_factor_; }
    const std::vector<double>& nodes() const { return nodes_; }

    Eigen::MatrixXcd matrix_at(int cell, double t) const {
        Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(m_, m_);
        for (const auto& en : cells_[size_t(cell)]) C(en.i, en.j) = en.piece.eval(t);
        C(m_ - 1, 0) += shift_;
        return C;
    }

    // Homogeneous solve from one or several stacked initial columns.
    Trajectory solve(const Eigen::MatrixXcd& w0, bool forward = true, const OdeOptions& opt = {}) const {
        if (w0.rows() != m_) fail(errc::parameter, "initial state has wrong row count");
        auto rhs = [this](int cell, double t, const Eigen::MatrixXcd& w, Eigen::MatrixXcd& dw) {
            dw.noalias() = matrix_at(cell, t) * w;
        };
        return integrate_ode(rhs, nodes_, forward, w0, /*allow_rescale=*/true, opt);
    }

    Trajectory fundamental(bool forward = true, const OdeOptions& opt = {}) const {
        return solve(Eigen::MatrixXcd::Identity(m_, m_), forward, opt);
    }

    // Inhomogeneous solve (single column); renormalization stays off because
    // the forcing breaks scaling invariance. The integration grid is the
    // coefficient grid refined by the forcing's own breakpoints, so forcings
    // with kinks inside a coefficient cell are resolved exactly.
    Trajectory solve_forced(const Eigen::VectorXcd& w0, const PiecewiseCoefficient& f, bool forward = true,
                            const OdeOptions& opt = {}) const {
        if (w0.size() != m_) fail(errc::parameter, "initial state has wrong row count");
        if (f.lower() > lo_ || f.upper() < hi_) fail(errc::domain, "forcing does not cover the subinterval");
        std::vector<double> grid = forced_nodes(f);
        std::vector<Piece> fp;
        std::vector<int> sys;
        for (size_t ci = 0; ci + 1 < grid.size(); ++ci) {
            double mid = 0.5 * (grid[ci] + grid[ci + 1]);
            fp.push_back(piece_for(f, mid));
            sys.push_back(system_cell(mid));
        }
        auto rhs = [this, fp = std::move(fp), sys = std::move(sys)](int cell, double t, const Eigen::MatrixXcd& w,
                                                                    Eigen::MatrixXcd& dw) {
            dw.noalias() = matrix_at(sys[size_t(cell)], t) * w;
            dw(m_ - 1, 0) += forcing_factor_ * fp[size_t(cell)].eval(t);
        };
        return integrate_ode(rhs, grid, forward, w0, /*allow_rescale=*/false, opt);
    }

    // Largest relative residual ||u' - C u - g|| / max(1, ||u||) over interior
    // sample points; measures how faithfully a dense trajectory satisfies the
    // system it came from.
    double max_residual(const Trajectory& traj, const PiecewiseCoefficient* f = nullptr,
                        int samples_per_cell = 9) const {
        std::vector<double> grid = f ? forced_nodes(*f) : nodes_;
        std::vector<Piece> fp;
        if (f)
            for (size_t ci = 0; ci + 1 < grid.size(); ++ci)
                fp.push_back(piece_for(*f, 0.5 * (grid[ci] + grid[ci + 1])));
        double worst = 0.0;
        for (size_t ci = 0; ci + 1 < grid.size(); ++ci)
            for (int s = 1; s <= samples_per_cell; ++s) {
                double t = grid[ci] + (grid[ci + 1] - grid[ci]) * s / (samples_per_cell + 1.0);
                ScaledMatrix u = traj.eval(t);
                ScaledMatrix du = traj.derivative(t);
                Eigen::MatrixXcd res = du.m - matrix_at(system_cell(t), t) * u.m;
                if (f) res(m_ - 1, 0) -= forcing_factor_ * fp[ci].eval(t) * std::exp(-u.log_scale);
                double rel = res.cwiseAbs().maxCoeff() / std::max(1.0, u.m.cwiseAbs().maxCoeff());
                worst = std::max(worst, rel);
            }
        return worst;
    }

private:
    struct CellEntry {
        int i, j;
        Piece piece;
    };

    static const Piece& piece_for(const PiecewiseCoefficient& c, double mid) {
        for (const auto& p : c.pieces())
            if (p.lo <= mid && mid <= p.hi) return p;
        fail(errc::domain, "no piece covers the requested cell");
    }

    // Index of the coefficient cell containing t (clamped at the ends).
    int system_cell(double t) const {
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
        int ci = int(it - nodes_.begin()) - 1;
        return std::clamp(ci, 0, int(nodes_.size()) - 2);
    }

    // Coefficient grid refined by the forcing's interior breakpoints; original
    // nodes are kept exactly, and near-duplicates are merged.
    std::vector<double> forced_nodes(const PiecewiseCoefficient& f) const {
        const double tol = 1e-12 * (hi_ - lo_);
        std::vector<double> grid = nodes_;
        for (double t : f.breakpoints()) {
            if (t <= lo_ + tol || t >= hi_ - tol) continue;
            bool dup = false;
            for (double s : grid)
                if (std::abs(t - s) <= tol) { dup = true; break; }
            if (!dup) grid.push_back(t);
        }
        std::sort(grid.begin(), grid.end());
        return grid;
    }

    int m_;
    double lo_, hi_;
    cxd shift_;
    cxd forcing_factor_;
    std::vector<double> nodes_;
    std::vector<std::vector<CellEntry>> cells_;
};

// Solution determined by the value of the quasi-derivative vector at a single
// anchor point, integrated away from the anchor toward each endpoint it does
// not already sit on.  The vector carries D^[0..m-1]y; the highest
// quasi-derivative is not a state component and is recovered pointwise from
// the differential equation instead.
class CauchySolution {
public:
    CauchySolution(const ShinZettlMatrix& A, cxd lambda, double anchor,
                   const Eigen::VectorXcd& data, const OdeOptions& opt = {})
        : CauchySolution(A, lambda, anchor, data, nullptr, opt) {}

    CauchySolution(const ShinZettlMatrix& A, cxd lambda, const PiecewiseCoefficient& f,
                   double anchor, const Eigen::VectorXcd& data, const OdeOptions& opt = {})
        : CauchySolution(A, lambda, anchor, data, &f, opt) {}

    int order() const { return m_; }
    double anchor() const { return anchor_; }
    double lower() const { return lo_; }
    double upper() const { return hi_; }

    // Quasi-derivative column (D^[0]y, ..., D^[m-1]y) at t.
    Eigen::VectorXcd value(double t) const { return side(t).value(t).col(0); }

    // D^[m]y = i^{-m} (lambda y + f), read off the equation along the solution.
    cxd top_quasi_derivative(double t) const {
        cxd y = side(t).value(t)(0, 0);
        cxd ft = forcing_ ? forcing_->evaluate(t) : cxd(0.0);
        return unit_imag_power(-m_) * (lambda_ * y + ft);
    }

    const std::optional<Trajectory>& left() const { return left_; }
    const std::optional<Trajectory>& right() const { return right_; }

private:
    CauchySolution(const ShinZettlMatrix& A, cxd lambda, double anchor,
                   const Eigen::VectorXcd& data, const PiecewiseCoefficient* f,
                   const OdeOptions& opt)
        : m_(A.order()), lo_(A.lower()), hi_(A.upper()), anchor_(anchor), lambda_(lambda) {
        if (!(lo_ <= anchor && anchor <= hi_))
            fail(errc::domain, "anchor lies outside the coefficient interval");
        if (data.size() != m_) fail(errc::parameter, "anchor data has wrong row count");
        if (f) {
            f->l1_norm();
            forcing_ = *f;
        }
        auto run = [&](double s_lo, double s_hi, bool forward) {
            CompiledSystem sys(A, lambda, s_lo, s_hi);
            return f ? sys.solve_forced(data, *f, forward, opt) : sys.solve(data, forward, opt);
        };
        if (anchor > lo_) left_ = run(lo_, anchor, false);
        if (anchor < hi_) right_ = run(anchor, hi_, true);
    }

    const Trajectory& side(double t) const {
        if (t >= anchor_ && right_) return *right_;
        return left_ ? *left_ : *right_;
    }

    int m_;
    double lo_, hi_, anchor_;
    cxd lambda_;
    std::optional<PiecewiseCoefficient> forcing_;
    std::optional<Trajectory> left_, right_;
};

} // namespace qdo
