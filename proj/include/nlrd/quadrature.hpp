#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace nlrd {

/// Gauss-Legendre nodes/weights on [-1, 1], computed by Newton iteration on
/// the Legendre recurrence. Exact for polynomials of degree 2n-1.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussRule(int n) {
        if (n < 1) throw std::invalid_argument("GaussRule: need n >= 1");
        nodes.resize(n);
        weights.resize(n);
        const int m = (n + 1) / 2;
        for (int i = 0; i < m; ++i) {
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            double w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
    }
};

namespace detail {
// 32-point base rule shared by the composite integrators.
inline const GaussRule& base_rule() {
    static const GaussRule rule(32);
    return rule;
}
} // namespace detail

/// Composite Gauss-Legendre over [a, b]. `nodes` is the total node budget;
/// it is split into 32-point panels (at least one).
inline double integrate_1d(const std::function<double(double)>& f, double a, double b,
                           int nodes = 256) {
    if (nodes < 1) throw std::invalid_argument("integrate_1d: nodes >= 1 required");
    const GaussRule& rule = detail::base_rule();
    const int panels = std::max(1, (nodes + 31) / 32);
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        const double mid = lo + 0.5 * h;
        const double half = 0.5 * h;
        double s = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
            s += rule.weights[i] * f(mid + half * rule.nodes[i]);
        total += s * half;
    }
    return total;
}

/// Tensor-product composite Gauss-Legendre over [ax,bx] x [ay,by];
/// `nodes` is the per-dimension budget.
inline double integrate_2d(const std::function<double(double, double)>& f,
                           double ax, double bx, double ay, double by,
                           int nodes = 256) {
    if (nodes < 1) throw std::invalid_argument("integrate_2d: nodes >= 1 required");
    const GaussRule& rule = detail::base_rule();
    const int panels = std::max(1, (nodes + 31) / 32);
    const double hx = (bx - ax) / panels;
    const double hy = (by - ay) / panels;
    double total = 0.0;
    for (int px = 0; px < panels; ++px) {
        const double midx = ax + (px + 0.5) * hx;
        for (int py = 0; py < panels; ++py) {
            const double midy = ay + (py + 0.5) * hy;
            double s = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                const double x = midx + 0.5 * hx * rule.nodes[i];
                double row = 0.0;
                for (std::size_t j = 0; j < rule.nodes.size(); ++j)
                    row += rule.weights[j] * f(x, midy + 0.5 * hy * rule.nodes[j]);
                s += rule.weights[i] * row;
            }
            total += s * 0.25 * hx * hy;
        }
    }
    return total;
}

} // namespace nlrd
