#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "qdo/errors.hpp"

namespace qdo {

// Dense complex polynomial in the global coordinate t, monomial basis.
// Normalized so the coefficient vector never ends in zeros; the zero
// polynomial has an empty vector.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(cxd c) : c_{c} { normalize(); }
    explicit Polynomial(std::vector<cxd> coeffs) : c_(std::move(coeffs)) { normalize(); }

    static Polynomial one() { return Polynomial(cxd(1.0, 0.0)); }
    static Polynomial variable() { return Polynomial(std::vector<cxd>{{0.0, 0.0}, {1.0, 0.0}}); }

    const std::vector<cxd>& coeffs() const { return c_; }
    int degree() const { return static_cast<int>(c_.size()) - 1; } // -1 for zero
    bool is_zero() const { return c_.empty(); }
    bool is_constant() const { return c_.size() <= 1; }
    cxd constant_value() const { return c_.empty() ? cxd(0.0) : c_[0]; }

    cxd eval(double t) const {
        cxd acc(0.0);
        for (size_t j = c_.size(); j-- > 0;) acc = acc * t + c_[j];
        return acc;
    }

    cxd eval(cxd z) const {
        cxd acc(0.0);
        for (size_t j = c_.size(); j-- > 0;) acc = acc * z + c_[j];
        return acc;
    }

    Polynomial operator+(const Polynomial& o) const {
        std::vector<cxd> r(std::max(c_.size(), o.c_.size()), cxd(0.0));
        for (size_t j = 0; j < c_.size(); ++j) r[j] += c_[j];
        for (size_t j = 0; j < o.c_.size(); ++j) r[j] += o.c_[j];
        return Polynomial(std::move(r));
    }

    Polynomial operator-() const {
        std::vector<cxd> r = c_;
        for (auto& v : r) v = -v;
        return Polynomial(std::move(r));
    }

    Polynomial operator-(const Polynomial& o) const { return *this + (-o); }

    Polynomial operator*(const Polynomial& o) const {
        if (is_zero() || o.is_zero()) return Polynomial();
        std::vector<cxd> r(c_.size() + o.c_.size() - 1, cxd(0.0));
        for (size_t j = 0; j < c_.size(); ++j)
            for (size_t k = 0; k < o.c_.size(); ++k) r[j + k] += c_[j] * o.c_[k];
        return Polynomial(std::move(r));
    }

    Polynomial scaled(cxd s) const {
        std::vector<cxd> r = c_;
        for (auto& v : r) v *= s;
        return Polynomial(std::move(r));
    }

    // Coefficient-wise conjugate; as a function of real t this is conj(p(t)).
    Polynomial conjugated() const {
        std::vector<cxd> r = c_;
        for (auto& v : r) v = std::conj(v);
        return Polynomial(std::move(r));
    }

    Polynomial derivative() const {
        if (c_.size() <= 1) return Polynomial();
        std::vector<cxd> r(c_.size() - 1);
        for (size_t j = 1; j < c_.size(); ++j) r[j - 1] = c_[j] * double(j);
        return Polynomial(std::move(r));
    }

    Polynomial antiderivative() const {
        if (is_zero()) return Polynomial();
        std::vector<cxd> r(c_.size() + 1, cxd(0.0));
        for (size_t j = 0; j < c_.size(); ++j) r[j + 1] = c_[j] / double(j + 1);
        return Polynomial(std::move(r));
    }

    // Coefficients of p in powers of (t - s): b_j = p^(j)(s)/j!, via repeated
    // synthetic division (Horner deflation).
    std::vector<cxd> rebased(double s) const {
        std::vector<cxd> out(c_.size(), cxd(0.0));
        std::vector<cxd> cur = c_;
        for (size_t j = 0; j < c_.size() && !cur.empty(); ++j) {
            std::vector<cxd> quot(cur.size() - 1, cxd(0.0));
            cxd rem(0.0);
            for (size_t k = cur.size(); k-- > 0;) {
                cxd tmp = cur[k] + rem * s;
                if (k > 0) quot[k - 1] = rem = tmp;
                else rem = tmp;
            }
            out[j] = rem;
            cur = std::move(quot);
        }
        return out;
    }

    // Value of p with coefficients exactly zero at `s` divided out: returns q
    // with p = (t - s)^mult * q. Only deflates while the remainder is exactly 0.
    Polynomial deflated_at(double s, int& mult) const {
        mult = 0;
        Polynomial q = *this;
        while (!q.is_zero()) {
            std::vector<cxd> quot(q.c_.size() - 1, cxd(0.0));
            cxd rem(0.0);
            for (size_t k = q.c_.size(); k-- > 0;) {
                cxd tmp = q.c_[k] + rem * s;
                if (k > 0) quot[k - 1] = rem = tmp; // synthetic division by (t - s)
                else rem = tmp;
            }
            if (rem != cxd(0.0)) break;
            q = Polynomial(std::move(quot));
            ++mult;
        }
        return q;
    }

    double max_abs_coeff() const {
        double m = 0.0;
        for (const auto& v : c_) m = std::max(m, std::abs(v));
        return m;
    }

    bool operator==(const Polynomial& o) const { return c_ == o.c_; }

    bool approx_equal(const Polynomial& o, double atol) const {
        size_t n = std::max(c_.size(), o.c_.size());
        for (size_t j = 0; j < n; ++j) {
            cxd x = j < c_.size() ? c_[j] : cxd(0.0);
            cxd y = j < o.c_.size() ? o.c_[j] : cxd(0.0);
            if (std::abs(x - y) > atol) return false;
        }
        return true;
    }

    // Real zeros of |p(t)|^2 inside [lo, hi], ascending. These are the points
    // where the (complex-valued) polynomial vanishes on the real line.
    std::vector<double> real_zeros_in(double lo, double hi) const {
        std::vector<double> out;
        if (is_zero() || is_constant()) return out;
        // |p|^2 = p * conj(p) has real coefficients.
        Polynomial sq = (*this) * conjugated();
        std::vector<double> rc(sq.c_.size());
        for (size_t j = 0; j < rc.size(); ++j) rc[j] = sq.c_[j].real();
        // Trim numerically-zero leading coefficients.
        double scale = 0.0;
        for (double v : rc) scale = std::max(scale, std::abs(v));
        while (rc.size() > 1 && std::abs(rc.back()) < 1e-14 * scale) rc.pop_back();
        int n = static_cast<int>(rc.size()) - 1;
        if (n < 1) return out;
        Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
        for (int j = 0; j < n; ++j) comp(j, n - 1) = -rc[j] / rc[n];
        for (int j = 1; j < n; ++j) comp(j, j - 1) = 1.0;
        Eigen::EigenSolver<Eigen::MatrixXd> es(comp, /*computeEigenvectors=*/false);
        // Real zeros of |p|^2 always have even multiplicity, so rounding splits
        // them ~sqrt(eps) off the real axis; the imag filter must be generous.
        double span = std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
        for (int j = 0; j < n; ++j) {
            std::complex<double> root = es.eigenvalues()(j);
            if (std::abs(root.imag()) > 1e-6 * span) continue;
            double x = root.real();
            if (x < lo - 1e-12 * span || x > hi + 1e-12 * span) continue;
            out.push_back(std::clamp(x, lo, hi));
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end(),
                              [&](double x, double y) { return std::abs(x - y) < 1e-9 * span; }),
                  out.end());
        return out;
    }

private:
    void normalize() {
        while (!c_.empty() && c_.back() == cxd(0.0)) c_.pop_back();
    }

    std::vector<cxd> c_;
};

} // namespace qdo
