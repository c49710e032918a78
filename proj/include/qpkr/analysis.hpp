// Localization observables and the exponential scaling law.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>
#include <vector>

#include "qpkr/core.hpp"
#include "qpkr/stats.hpp"

namespace qpkr {

class FitError : public Error {
  public:
    explicit FitError(const std::string& what) : Error("fit_failed", what) {}
};

struct LocalizationFit {
    double p_loc = 0.0;  // sites (units of 2 hbar k_L)
    double stderr = 0.0;
    int m_min = 0;
    int m_max = 0;
    double r2 = 0.0;           // exponential model, ln P vs |m|
    double gaussian_r2 = 0.0;  // gaussian model, ln P vs m^2, same window and weights
    int n_points = 0;
};

struct ExponentialFitOptions {
    int m_min = 3;
    double noise_floor = 1e-8;
    bool weighted = true;  // weight each ln P point by P
};

/// Fits exp(-|m|/p_loc) to the symmetrized profile (P(m)+P(-m))/2 over
/// m_min <= m <= m_max, m_max being the largest m above the noise floor.
inline LocalizationFit fit_exponential(const MomentumDistribution& dist, ExponentialFitOptions opt = {}) {
    const double total = std::accumulate(dist.probs.begin(), dist.probs.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-6) throw FitError("distribution is not normalized");
    if (opt.m_min < 1) throw FitError("m_min must be >= 1");

    auto sym = [&](int m) { return 0.5 * (dist.at(m) + dist.at(-m)); };
    int m_max = 0;
    for (int m = dist.max_site(); m >= opt.m_min; --m)
        if (sym(m) > opt.noise_floor) {
            m_max = m;
            break;
        }

    std::vector<double> ms, m2s, logp, w;
    for (int m = opt.m_min; m <= m_max; ++m) {
        const double p = sym(m);
        if (p <= opt.noise_floor) continue;
        ms.push_back(m);
        m2s.push_back(static_cast<double>(m) * m);
        logp.push_back(std::log(p));
        w.push_back(opt.weighted ? p : 1.0);
    }
    if (ms.size() < 6 || m_max <= opt.m_min + 4)
        throw FitError("insufficient points above the noise floor for an exponential fit");

    const auto f = stats::fit_line(ms, logp, w);
    if (f.slope >= 0.0) throw FitError("not localized in window: non-negative log slope");
    const auto g = stats::fit_line(m2s, logp, w);

    LocalizationFit out;
    out.p_loc = -1.0 / f.slope;
    out.stderr = f.slope_stderr / (f.slope * f.slope);
    out.m_min = opt.m_min;
    out.m_max = m_max;
    out.r2 = f.r2;
    out.gaussian_r2 = g.r2;
    out.n_points = static_cast<int>(ms.size());
    return out;
}

/// E_kin = (1/2) sum_m P(m) (m+beta)^2, in units (2 hbar k_L)^2 / 2.
inline double kinetic_energy(const MomentumDistribution& dist, double beta) {
    double s = 0.0;
    for (int i = 0; i < dist.grid_n(); ++i) {
        const double p = site_of_index(i, dist.grid_n()) + beta;
        s += dist.probs[static_cast<std::size_t>(i)] * p * p;
    }
    return 0.5 * s;
}

/// Ensemble kinetic energy from a mean <(m+beta)^2>.
inline double kinetic_energy_from_p2(double p2_mean) { return 0.5 * p2_mean; }

/// 1/(4 Pi0^2): equals E_kin for an exponential profile with Pi0 = 1/(2 p_loc).
inline double pi0_proxy(double pi0) {
    if (!(pi0 > 0.0 && pi0 <= 1.0)) throw ValidationError("pi0 must lie in (0, 1]");
    return 1.0 / (4.0 * pi0 * pi0);
}

inline double scaling_variable(double K, double hbar_eff, double epsilon) {
    return epsilon * K * K / (hbar_eff * hbar_eff);
}

/// (K^2 / 4 hbar) exp(alpha eps K^2 / hbar^2) in scaled momentum units.
inline double predicted_ploc(double K, double hbar_eff, double epsilon) {
    if (!(K > 0.0 && hbar_eff > 0.0 && epsilon >= 0.0)) throw ValidationError("predicted_ploc needs positive parameters");
    return K * K / (4.0 * hbar_eff) * std::exp(kAlpha * scaling_variable(K, hbar_eff, epsilon));
}

/// Same prediction in lattice sites: scaled momentum divided by hbar.
inline double predicted_ploc_sites(double K, double hbar_eff, double epsilon) {
    return predicted_ploc(K, hbar_eff, epsilon) / hbar_eff;
}

/// Kinetic-energy ratio predicted from E_kin ~ p_loc^2: exp(2 alpha x).
inline double predicted_energy_ratio(double x) { return std::exp(2.0 * kAlpha * x); }

struct EnergySample {
    double K = 0.0, hbar_eff = 0.0, epsilon = 0.0;
    int t = 0;
    double ekin = 0.0;
};

struct ScalingPoint {
    double x = 0.0;  // eps K^2 / hbar^2
    double y = 0.0;  // E_kin(eps) / E_kin(0) at the same K, hbar, t
    double K = 0.0, hbar_eff = 0.0, epsilon = 0.0;
    int t = 0;
};

/// Normalizes every sample by the eps = 0 sample of its (K, hbar, t) group.
inline std::vector<ScalingPoint> scaling_points(const std::vector<EnergySample>& samples) {
    using Key = std::tuple<double, double, int>;
    std::map<Key, double> reference;
    for (const auto& s : samples)
        if (s.epsilon == 0.0) reference[{s.K, s.hbar_eff, s.t}] = s.ekin;

    std::vector<ScalingPoint> out;
    for (const auto& s : samples) {
        const auto it = reference.find({s.K, s.hbar_eff, s.t});
        if (it == reference.end())
            throw ValidationError("no eps = 0 reference for K=" + std::to_string(s.K) +
                                  " hbar=" + std::to_string(s.hbar_eff));
        if (!(it->second > 0.0 && s.ekin > 0.0)) throw ValidationError("kinetic energies must be positive");
        out.push_back({scaling_variable(s.K, s.hbar_eff, s.epsilon), s.ekin / it->second, s.K, s.hbar_eff,
                       s.epsilon, s.t});
    }
    return out;
}

struct ScalingFit {
    double slope = 0.0;
    double stderr = 0.0;
    int n_points = 0;
    double x_max = 0.0;
    double predicted_slope = 2.0 * kAlpha;
};

/// Least squares of ln y against x through the origin, over points with x <= x_max.
inline ScalingFit scaling_fit(const std::vector<ScalingPoint>& points, double x_max = 4.0) {
    std::vector<double> xs, ly;
    bool has_origin = false;
    for (const auto& p : points) {
        if (p.x > x_max) continue;
        if (!(p.y > 0.0)) throw ValidationError("scaling point with non-positive ratio");
        has_origin = has_origin || p.x == 0.0;
        xs.push_back(p.x);
        ly.push_back(std::log(p.y));
    }
    if (xs.size() < 5 || !has_origin)
        throw FitError("scaling fit needs at least 5 points with x <= x_max, including x = 0");
    const auto f = stats::fit_through_origin(xs, ly);
    return {f.slope, f.slope_stderr, static_cast<int>(xs.size()), x_max, 2.0 * kAlpha};
}

}  // namespace qpkr
