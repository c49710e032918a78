#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace qpkr::stats {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double r2 = 0.0;
    std::size_t n = 0;
};

/// Weighted least squares y = intercept + slope*x. Empty weights means unweighted.
/// The slope standard error uses the weighted residual variance with n-2 dof.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y,
                        std::span<const double> w = {}) {
    const std::size_t n = x.size();
    if (y.size() != n || (!w.empty() && w.size() != n))
        throw std::invalid_argument("fit_line: length mismatch");
    if (n < 2) throw std::invalid_argument("fit_line: need at least two points");

    auto weight = [&](std::size_t i) { return w.empty() ? 1.0 : w[i]; };
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += weight(i);
        sx += weight(i) * x[i];
        sy += weight(i) * y[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += weight(i) * dx * dx;
        sxy += weight(i) * dx * dy;
        syy += weight(i) * dy * dy;
    }
    if (sxx <= 0) throw std::invalid_argument("fit_line: degenerate abscissae");

    LineFit f;
    f.n = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        ss_res += weight(i) * r * r;
    }
    f.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
    if (n > 2) {
        // Normalize weights to sum n so the variance estimate is scale-free.
        const double scale = static_cast<double>(n) / sw;
        f.slope_stderr = std::sqrt(ss_res * scale / static_cast<double>(n - 2) / (sxx * scale));
    }
    return f;
}

struct OriginFit {
    double slope = 0.0;
    double slope_stderr = 0.0;
    std::size_t n = 0;
};

/// Unweighted least squares y = slope*x through the origin.
inline OriginFit fit_through_origin(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (y.size() != n) throw std::invalid_argument("fit_through_origin: length mismatch");
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    if (sxx <= 0) throw std::invalid_argument("fit_through_origin: all abscissae zero");
    OriginFit f{sxy / sxx, 0.0, n};
    if (n > 1) {
        double ss = 0;
        for (std::size_t i = 0; i < n; ++i) ss += std::pow(y[i] - f.slope * x[i], 2);
        f.slope_stderr = std::sqrt(ss / static_cast<double>(n - 1) / sxx);
    }
    return f;
}

inline double mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample standard deviation (n-1).
inline double stddev(std::span<const double> v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace qpkr::stats
