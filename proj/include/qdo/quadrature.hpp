#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include "qdo/errors.hpp"

namespace qdo {

struct QuadNode {
    double x; // abscissa on [-1, 1]
    double w;
};

// Gauss-Legendre nodes by Newton iteration on P_n (standard recurrence).
inline std::vector<QuadNode> compute_gauss_legendre(int n) {
    std::vector<QuadNode> nodes(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = {-x, w};
        nodes[n - 1 - i] = {x, w};
    }
    return nodes;
}

inline const std::vector<QuadNode>& gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, std::vector<QuadNode>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

template <class F>
auto integrate_panel(F&& f, double lo, double hi, int n) {
    const auto& nodes = gauss_legendre(n);
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    auto acc = f(mid + half * nodes[0].x) * (half * nodes[0].w);
    for (size_t j = 1; j < nodes.size(); ++j) acc += f(mid + half * nodes[j].x) * (half * nodes[j].w);
    return acc;
}

// Composite Gauss-Legendre on [lo, hi]: `base_nodes` per panel, panel count
// doubled until two successive composite values agree to rel_tol (relative,
// with an absolute floor), or the doubling cap is hit.
template <class F>
auto integrate_doubling(F&& f, double lo, double hi, int base_nodes = 32, double rel_tol = 1e-12,
                        double abs_floor = 1e-300, int max_doublings = 10) {
    auto total = integrate_panel(f, lo, hi, base_nodes);
    int panels = 1;
    for (int d = 0; d < max_doublings; ++d) {
        panels *= 2;
        double h = (hi - lo) / panels;
        auto refined = integrate_panel(f, lo, lo + h, base_nodes);
        for (int k = 1; k < panels; ++k) refined += integrate_panel(f, lo + k * h, lo + (k + 1) * h, base_nodes);
        double diff = std::abs(refined - total);
        total = refined;
        if (diff <= rel_tol * std::abs(total) + abs_floor) break;
    }
    return total;
}

// Composite integration over a breakpoint partition (each cell assumed smooth
// inside), doubling within each cell.
template <class F>
auto integrate_cells(F&& f, const std::vector<double>& breaks, int base_nodes = 32,
                     double rel_tol = 1e-12) {
    auto total = integrate_doubling(f, breaks[0], breaks[1], base_nodes, rel_tol);
    for (size_t k = 1; k + 1 < breaks.size(); ++k)
        total += integrate_doubling(f, breaks[k], breaks[k + 1], base_nodes, rel_tol);
    return total;
}

} // namespace qdo
