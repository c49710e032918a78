// Classical map of the quasiperiodic kicked rotor and diffusion-tensor estimation.
#pragma once

#include <cmath>
#include <vector>

#include "qpkr/core.hpp"
#include "qpkr/parallel.hpp"
#include "qpkr/stats.hpp"

namespace qpkr {

struct ClassicalState {
    double x1 = 0.0;
    double x2 = 0.0;
    double p1 = 0.0;
    double p2 = 0.0;
};

/// Reduces an angle to [0, 2 pi).
inline double wrap_angle(double x) noexcept {
    double r = std::fmod(x, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    return r >= kTwoPi ? 0.0 : r;
}

/// One period: both momenta from the old angles, then x1 with the new p1.
inline ClassicalState step(const ClassicalState& s, double K, double epsilon, double omega2) noexcept {
    const double s1 = std::sin(s.x1), c1 = std::cos(s.x1);
    const double s2 = std::sin(s.x2), c2 = std::cos(s.x2);
    ClassicalState n;
    n.p1 = s.p1 + K * s1 * (1.0 + epsilon * c2);
    n.p2 = s.p2 + K * epsilon * c1 * s2;
    n.x1 = wrap_angle(s.x1 + n.p1);
    n.x2 = wrap_angle(s.x2 + omega2);
    return n;
}

/// Exact inverse of step().
inline ClassicalState step_back(const ClassicalState& s, double K, double epsilon, double omega2) noexcept {
    ClassicalState o;
    o.x2 = wrap_angle(s.x2 - omega2);
    o.x1 = wrap_angle(s.x1 - s.p1);
    o.p2 = s.p2 - K * epsilon * std::cos(o.x1) * std::sin(o.x2);
    o.p1 = s.p1 - K * std::sin(o.x1) * (1.0 + epsilon * std::cos(o.x2));
    return o;
}

/// Second moments of one contiguous batch of trajectories, index t-1 for step t.
struct MomentSeries {
    std::vector<double> p1sq, p2sq, p1p2;

    void resize(std::size_t n) {
        p1sq.assign(n, 0.0);
        p2sq.assign(n, 0.0);
        p1p2.assign(n, 0.0);
    }
};

/// Ensemble moments <p1^2>(t), <p2^2>(t), <p1 p2>(t) for t = 1..n_steps.
/// `batches` holds the same moments over disjoint trajectory batches and is
/// used for statistical error bars.
struct ClassicalMoments {
    std::vector<int> times;
    MomentSeries mean;
    std::vector<MomentSeries> batches;
};

inline constexpr int kDefaultBatches = 20;

/// Iterates n_traj trajectories from p1 = p2 = 0 with x1, x2 uniform. Trajectory
/// i draws its angles from derive_seed(seed, i); moments are summed per batch in
/// trajectory order and batches in index order, independent of `workers`.
inline ClassicalMoments simulate(const SimParams& params, int n_traj, int n_steps, std::uint64_t seed,
                                 int workers = 1, int n_batches = kDefaultBatches) {
    if (n_traj < 1 || n_steps < 1) throw ValidationError("n_traj and n_steps must be >= 1");
    n_batches = std::clamp(n_batches, 1, n_traj);

    const auto steps = static_cast<std::size_t>(n_steps);
    std::vector<MomentSeries> sums(static_cast<std::size_t>(n_batches));
    parallel_for(n_batches, workers, [&](int b) {
        auto& acc = sums[static_cast<std::size_t>(b)];
        acc.resize(steps);
        const int begin = static_cast<int>(static_cast<long long>(n_traj) * b / n_batches);
        const int end = static_cast<int>(static_cast<long long>(n_traj) * (b + 1) / n_batches);
        for (int i = begin; i < end; ++i) {
            CounterRng rng(derive_seed(seed, i));
            ClassicalState s;
            s.x1 = kTwoPi * rng.uniform();
            s.x2 = kTwoPi * rng.uniform();
            for (std::size_t t = 0; t < steps; ++t) {
                s = step(s, params.K, params.epsilon, params.omega2);
                acc.p1sq[t] += s.p1 * s.p1;
                acc.p2sq[t] += s.p2 * s.p2;
                acc.p1p2[t] += s.p1 * s.p2;
            }
        }
        const double inv = 1.0 / (end - begin);
        for (std::size_t t = 0; t < steps; ++t) {
            acc.p1sq[t] *= inv;
            acc.p2sq[t] *= inv;
            acc.p1p2[t] *= inv;
        }
    });

    ClassicalMoments out;
    out.times.resize(steps);
    for (std::size_t t = 0; t < steps; ++t) out.times[t] = static_cast<int>(t) + 1;
    out.mean.resize(steps);
    for (int b = 0; b < n_batches; ++b) {
        const auto& acc = sums[static_cast<std::size_t>(b)];
        const int begin = static_cast<int>(static_cast<long long>(n_traj) * b / n_batches);
        const int end = static_cast<int>(static_cast<long long>(n_traj) * (b + 1) / n_batches);
        const double w = static_cast<double>(end - begin) / n_traj;
        for (std::size_t t = 0; t < steps; ++t) {
            out.mean.p1sq[t] += w * acc.p1sq[t];
            out.mean.p2sq[t] += w * acc.p2sq[t];
            out.mean.p1p2[t] += w * acc.p1p2[t];
        }
    }
    out.batches = std::move(sums);
    return out;
}

struct DiffusionTensor {
    double d11 = 0.0, d22 = 0.0, d12 = 0.0;
    double stderr11 = 0.0, stderr22 = 0.0, stderr12 = 0.0;
    int t_min = 0, t_max = 0;
};

struct FitWindow {
    int t_min = 10;
    int t_max = -1;  // -1: last available step
};

/// D_ij from the least-squares slope of <p_i p_j>(t) over the window, with the
/// convention <p_i p_j> = 2 D_ij t (so D_11 ~ K^2/4 for uncorrelated kicks).
/// Standard errors come from the spread across trajectory batches when at
/// least two are present, otherwise from the regression residuals.
inline DiffusionTensor estimate_diffusion(const ClassicalMoments& m, FitWindow window = {}) {
    const int t_max = window.t_max < 0 ? (m.times.empty() ? 0 : m.times.back()) : window.t_max;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < m.times.size(); ++i)
        if (m.times[i] >= window.t_min && m.times[i] <= t_max) idx.push_back(i);
    if (idx.size() < 5) throw ValidationError("diffusion fit window has fewer than 5 points");

    std::vector<double> t(idx.size()), y(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) t[k] = m.times[idx[k]];
    auto slope_of = [&](const std::vector<double>& series) {
        for (std::size_t k = 0; k < idx.size(); ++k) y[k] = series[idx[k]];
        return stats::fit_line(t, y);
    };

    DiffusionTensor d;
    d.t_min = window.t_min;
    d.t_max = t_max;
    const auto f11 = slope_of(m.mean.p1sq), f22 = slope_of(m.mean.p2sq), f12 = slope_of(m.mean.p1p2);
    d.d11 = 0.5 * f11.slope;
    d.d22 = 0.5 * f22.slope;
    d.d12 = 0.5 * f12.slope;

    if (m.batches.size() >= 2) {
        std::vector<double> b11, b22, b12;
        for (const auto& b : m.batches) {
            b11.push_back(0.5 * slope_of(b.p1sq).slope);
            b22.push_back(0.5 * slope_of(b.p2sq).slope);
            b12.push_back(0.5 * slope_of(b.p1p2).slope);
        }
        const double root_b = std::sqrt(static_cast<double>(m.batches.size()));
        d.stderr11 = stats::stddev(b11) / root_b;
        d.stderr22 = stats::stddev(b22) / root_b;
        d.stderr12 = stats::stddev(b12) / root_b;
    } else {
        d.stderr11 = 0.5 * f11.slope_stderr;
        d.stderr22 = 0.5 * f22.slope_stderr;
        d.stderr12 = 0.5 * f12.slope_stderr;
    }
    return d;
}

/// Large-K uncorrelated-kick estimates (K^2/4)(1+eps^2/2) and K^2 eps^2/8.
inline double quasilinear_d11(double K, double epsilon) { return K * K / 4.0 * (1.0 + epsilon * epsilon / 2.0); }
inline double quasilinear_d22(double K, double epsilon) { return K * K * epsilon * epsilon / 8.0; }

}  // namespace qpkr
