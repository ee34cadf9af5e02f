#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "nlrd/errors.hpp"
#include "nlrd/quadrature.hpp"

namespace nlrd {

enum class DomainKind { Interval, Rectangle };

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Analytic Dirichlet eigenpairs of -Laplace on an interval (0, L) or a
/// rectangle (0, Lx) x (0, Ly). Interval: lambda_k = (k pi / L)^2 with
/// eigenfunctions sqrt(2/L) sin(k pi x / L); rectangle: sorted merge of
/// (i pi / Lx)^2 + (j pi / Ly)^2 with product-of-sines eigenfunctions.
/// All eigenfunctions carry unit L2 norm.
class SpectralDomain {
public:
    static SpectralDomain interval(double length, int mode_count) {
        if (length <= 0.0) throw ConfigError("domain: interval length must be positive");
        if (mode_count < 1) throw ConfigError("domain: mode_count must be >= 1");
        SpectralDomain d;
        d.kind_ = DomainKind::Interval;
        d.lx_ = length;
        d.ly_ = 0.0;
        d.mode_count_ = mode_count;
        const int total = mode_count + kExtraModes;
        d.modes_.reserve(total);
        for (int k = 1; k <= total; ++k) {
            double w = k * M_PI / length;
            d.modes_.push_back({w * w, k, 0});
        }
        return d;
    }

    static SpectralDomain rectangle(double lx, double ly, int mode_count) {
        if (lx <= 0.0 || ly <= 0.0) throw ConfigError("domain: rectangle sides must be positive");
        if (mode_count < 1) throw ConfigError("domain: mode_count must be >= 1");
        SpectralDomain d;
        d.kind_ = DomainKind::Rectangle;
        d.lx_ = lx;
        d.ly_ = ly;
        d.mode_count_ = mode_count;
        const int total = mode_count + kExtraModes;
        // The `total` smallest sums occur for indices <= total in each factor.
        std::vector<Mode> all;
        all.reserve(static_cast<std::size_t>(total) * total);
        for (int i = 1; i <= total; ++i) {
            for (int j = 1; j <= total; ++j) {
                double wi = i * M_PI / lx;
                double wj = j * M_PI / ly;
                all.push_back({wi * wi + wj * wj, i, j});
            }
        }
        std::sort(all.begin(), all.end(), [](const Mode& a, const Mode& b) {
            if (a.lambda != b.lambda) return a.lambda < b.lambda;
            if (a.ix != b.ix) return a.ix < b.ix;
            return a.iy < b.iy;
        });
        all.resize(total);
        d.modes_ = std::move(all);
        return d;
    }

    DomainKind kind() const { return kind_; }
    int mode_count() const { return mode_count_; }
    double length() const { return lx_; }
    double lx() const { return lx_; }
    double ly() const { return ly_; }
    double measure() const { return kind_ == DomainKind::Interval ? lx_ : lx_ * ly_; }

    /// k is 1-based; valid up to mode_count() + a few spares (used for the
    /// k0 = N+1 sentinel).
    double eigenvalue(int k) const { return modes_.at(k - 1).lambda; }

    double eigenfunction(int k, Point p) const {
        const Mode& m = modes_.at(k - 1);
        if (kind_ == DomainKind::Interval)
            return std::sqrt(2.0 / lx_) * std::sin(m.ix * M_PI * p.x / lx_);
        return 2.0 / std::sqrt(lx_ * ly_) * std::sin(m.ix * M_PI * p.x / lx_) *
               std::sin(m.iy * M_PI * p.y / ly_);
    }

    /// Gradient of the k-th eigenfunction (y-component zero for intervals).
    Point eigenfunction_grad(int k, Point p) const {
        const Mode& m = modes_.at(k - 1);
        if (kind_ == DomainKind::Interval) {
            double w = m.ix * M_PI / lx_;
            return {std::sqrt(2.0 / lx_) * w * std::cos(w * p.x), 0.0};
        }
        double wx = m.ix * M_PI / lx_;
        double wy = m.iy * M_PI / ly_;
        double c = 2.0 / std::sqrt(lx_ * ly_);
        return {c * wx * std::cos(wx * p.x) * std::sin(wy * p.y),
                c * wy * std::sin(wx * p.x) * std::cos(wy * p.y)};
    }

    /// Integral of f over the domain by composite Gauss-Legendre with the
    /// given per-dimension node budget.
    double integrate(const std::function<double(Point)>& f, int nodes = 256) const {
        if (kind_ == DomainKind::Interval)
            return integrate_1d([&](double x) { return f({x, 0.0}); }, 0.0, lx_, nodes);
        return integrate_2d([&](double x, double y) { return f({x, y}); }, 0.0, lx_, 0.0,
                            ly_, nodes);
    }

    /// Domain average (1/mes) * integral.
    double mean(const std::function<double(Point)>& f, int nodes = 256) const {
        return integrate(f, nodes) / measure();
    }

    /// Uniform verification grid of interior points (n total for intervals,
    /// ~n for rectangles via a balanced nx x ny tensor grid).
    std::vector<Point> verification_grid(int n) const {
        std::vector<Point> pts;
        if (kind_ == DomainKind::Interval) {
            pts.reserve(n);
            for (int i = 1; i <= n; ++i) pts.push_back({lx_ * i / (n + 1.0), 0.0});
        } else {
            int side = std::max(2, static_cast<int>(std::lround(std::sqrt(double(n)))));
            pts.reserve(static_cast<std::size_t>(side) * side);
            for (int i = 1; i <= side; ++i)
                for (int j = 1; j <= side; ++j)
                    pts.push_back({lx_ * i / (side + 1.0), ly_ * j / (side + 1.0)});
        }
        return pts;
    }

private:
    struct Mode {
        double lambda;
        int ix, iy;
    };
    static constexpr int kExtraModes = 8;

    DomainKind kind_ = DomainKind::Interval;
    double lx_ = 1.0, ly_ = 0.0;
    int mode_count_ = 1;
    std::vector<Mode> modes_;
};

/// Domain average of a closed-form field, Eq.-style hat coefficients.
inline double mean_coefficient(const std::function<double(Point)>& field,
                               const SpectralDomain& domain, int nodes = 256) {
    return domain.mean(field, nodes);
}

/// L2 projection of a field onto the first mode_count eigenfunctions.
/// Reports the Parseval defect ||u||^2_quad - sum u_k^2; throws
/// ProjectionError when the relative defect exceeds `defect_tol`.
struct Projection {
    std::vector<double> coefficients;
    double parseval_defect;
    double norm_sq;
};

inline Projection project_initial(const std::function<double(Point)>& field,
                                  const SpectralDomain& domain, int nodes = 256,
                                  double defect_tol = 1e-3) {
    Projection out;
    out.coefficients.resize(domain.mode_count());
    double sum_sq = 0.0;
    for (int k = 1; k <= domain.mode_count(); ++k) {
        double c = domain.integrate(
            [&](Point p) { return field(p) * domain.eigenfunction(k, p); }, nodes);
        out.coefficients[k - 1] = c;
        sum_sq += c * c;
    }
    out.norm_sq = domain.integrate([&](Point p) {
        double v = field(p);
        return v * v;
    }, nodes);
    out.parseval_defect = out.norm_sq - sum_sq;
    const double scale = std::max(out.norm_sq, 1e-300);
    if (std::abs(out.parseval_defect) > defect_tol * scale)
        throw ProjectionError("project_initial: Parseval defect " +
                                  std::to_string(out.parseval_defect) +
                                  " exceeds tolerance (field not resolved by truncation)",
                              out.parseval_defect);
    return out;
}

} // namespace nlrd
