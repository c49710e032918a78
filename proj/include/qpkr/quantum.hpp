// Floquet evolution of the quasiperiodic kicked rotor.
//
// One period is: kick exp(-i A_n cos(x) / hbar) with A_n = K (1 + eps cos(omega2 n + phi2)),
// then free flight exp(-i hbar (m+beta)^2 / 2). Kick n = 0 is the first one applied.
// The kick is applied in position space on the N-point grid x_j = 2 pi j / N.
#pragma once

#include <algorithm>
#include <complex>
#include <span>
#include <vector>

#include "qpkr/core.hpp"
#include "qpkr/fft.hpp"
#include "qpkr/parallel.hpp"

namespace qpkr {

using cplx = std::complex<double>;

/// Amplitudes over momentum sites m in [-N/2, N/2) at fixed quasimomentum.
struct WaveState {
    std::vector<cplx> amps;
    double beta = 0.0;
    int t = 0;

    int grid_n() const noexcept { return static_cast<int>(amps.size()); }

    static WaveState momentum_eigenstate(int grid_n, int m, double beta) {
        WaveState s{std::vector<cplx>(static_cast<std::size_t>(grid_n)), beta, 0};
        s.amps.at(static_cast<std::size_t>(index_of_site(m, grid_n))) = 1.0;
        return s;
    }

    double norm2() const noexcept {
        double s = 0.0;
        for (const auto& a : amps) s += std::norm(a);
        return s;
    }

    std::vector<double> probabilities() const {
        std::vector<double> p(amps.size());
        std::transform(amps.begin(), amps.end(), p.begin(), [](cplx a) { return std::norm(a); });
        return p;
    }

    /// <(m+beta)^2> in site units.
    double p2_mean() const noexcept {
        const int n = grid_n();
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double p = site_of_index(i, n) + beta;
            s += std::norm(amps[static_cast<std::size_t>(i)]) * p * p;
        }
        return s;
    }

    double pi0() const { return std::norm(amps[static_cast<std::size_t>(index_of_site(0, grid_n()))]); }

    double edge_mass() const noexcept {
        const int n = grid_n();
        const int w = edge_width(n);
        double s = 0.0;
        for (int i = 0; i < w; ++i) s += std::norm(amps[static_cast<std::size_t>(i)]);
        for (int i = n - w; i < n; ++i) s += std::norm(amps[static_cast<std::size_t>(i)]);
        return s;
    }
};

/// Reusable kick / free-flight operators for a fixed grid size and hbar.
class FloquetPropagator {
  public:
    FloquetPropagator(int grid_n, double hbar_eff)
        : n_(grid_n), hbar_(hbar_eff), fft_(grid_n), cos_x_(static_cast<std::size_t>(grid_n)) {
        for (int j = 0; j < n_; ++j) cos_x_[static_cast<std::size_t>(j)] = std::cos(kTwoPi * j / n_);
    }

    int grid_n() const noexcept { return n_; }
    double hbar_eff() const noexcept { return hbar_; }

    /// Multiplies the state by exp(-i amplitude cos(x) / hbar) in position space.
    void kick(WaveState& s, double amplitude) const {
        if (s.grid_n() != n_) throw std::length_error("state grid does not match propagator");
        if (amplitude == 0.0) return;
        // Site order vs FFT order differs by (-1)^j in position space on both
        // legs of the round trip; the factors cancel around a diagonal operator.
        std::span<cplx> a(s.amps);
        fft_.backward(a);
        const double c = -amplitude / hbar_;
        const double inv_n = 1.0 / n_;
        for (std::size_t j = 0; j < a.size(); ++j) a[j] *= std::polar(inv_n, c * cos_x_[j]);
        fft_.forward(a);
    }

    /// Multiplies amplitude m by exp(-i hbar (m+beta)^2 / 2).
    void free_flight(WaveState& s) const {
        if (s.grid_n() != n_) throw std::length_error("state grid does not match propagator");
        if (!flight_beta_ || *flight_beta_ != s.beta) rebuild_flight(s.beta);
        for (std::size_t i = 0; i < s.amps.size(); ++i) s.amps[i] *= flight_[i];
    }

  private:
    void rebuild_flight(double beta) const {
        flight_.resize(static_cast<std::size_t>(n_));
        for (int i = 0; i < n_; ++i) {
            const double p = site_of_index(i, n_) + beta;
            flight_[static_cast<std::size_t>(i)] = std::polar(1.0, -0.5 * hbar_ * p * p);
        }
        flight_beta_ = beta;
    }

    int n_;
    double hbar_;
    Fft fft_;
    std::vector<double> cos_x_;
    mutable std::vector<cplx> flight_;
    mutable std::optional<double> flight_beta_;
};

inline WaveState kick(WaveState state, double kick_amplitude, double hbar_eff) {
    FloquetPropagator(state.grid_n(), hbar_eff).kick(state, kick_amplitude);
    return state;
}

inline WaveState free_flight(WaveState state, double hbar_eff) {
    FloquetPropagator(state.grid_n(), hbar_eff).free_flight(state);
    return state;
}

/// Kick amplitude K (1 + eps cos(omega2 n + phi2)) of kick n.
inline double kick_amplitude(const SimParams& p, double phi2, int n) {
    return p.K * (1.0 + p.epsilon * std::cos(p.omega2 * n + phi2));
}

inline constexpr double kEdgeMassThreshold = 1e-6;

struct EvolutionResult {
    std::vector<MomentumDistribution> distributions;  // one per requested record time
    ObservableSeries series;                           // t = 0 .. n_kicks
};

namespace detail {
inline void check_record_times(const std::vector<int>& times, int n_kicks) {
    if (!std::is_sorted(times.begin(), times.end()))
        throw ValidationError("record_times must be sorted");
    if (!times.empty() && (times.front() < 0 || times.back() > n_kicks))
        throw ValidationError("record_times must lie in [0, n_kicks]");
}
}  // namespace detail

/// Evolves the momentum eigenstate m=0 at quasimomentum beta for params.n_kicks
/// periods. Throws GridOverflowError when the edge mass exceeds 1e-6.
inline EvolutionResult evolve(const SimParams& params, double beta, double phi2,
                              const std::vector<int>& record_times) {
    validate(params);
    detail::check_record_times(record_times, params.n_kicks);

    const int n = params.grid_n;
    FloquetPropagator prop(n, params.hbar_eff);
    WaveState psi = WaveState::momentum_eigenstate(n, 0, beta);

    EvolutionResult out;
    out.series.times.reserve(static_cast<std::size_t>(params.n_kicks) + 1);
    SimParams meta = params;
    meta.beta = beta;
    meta.phi2 = phi2;

    auto next_record = record_times.begin();
    auto observe = [&] {
        out.series.push(psi.t, psi.p2_mean(), psi.pi0(), psi.edge_mass());
        while (next_record != record_times.end() && *next_record == psi.t) {
            out.distributions.push_back({psi.probabilities(), psi.t, meta, std::nullopt});
            ++next_record;
        }
    };

    observe();
    for (int k = 0; k < params.n_kicks; ++k) {
        prop.kick(psi, kick_amplitude(params, phi2, k));
        prop.free_flight(psi);
        psi.t = k + 1;
        observe();
        const double edge = out.series.edge_mass.back();
        if (edge > kEdgeMassThreshold) throw GridOverflowError(psi.t, edge, n);
    }
    return out;
}

/// Ensemble-averaged evolution. Realizations may run concurrently; the mean is
/// always accumulated in realization-index order, so the result does not depend
/// on the worker count.
inline EvolutionResult run_ensemble(const SimParams& params, const EnsembleSpec& spec,
                                    const std::vector<int>& record_times, int workers = 1) {
    validate(params);
    validate(spec);
    detail::check_record_times(record_times, params.n_kicks);

    std::vector<EvolutionResult> runs(static_cast<std::size_t>(spec.n_realizations));
    parallel_for(spec.n_realizations, workers, [&](int r) {
        const RealizationDraw d = draw_realization(spec, r);
        try {
            runs[static_cast<std::size_t>(r)] = evolve(params, d.beta, d.phi2, record_times);
        } catch (const GridOverflowError& e) {
            throw e.with_realization(r);
        }
    });

    EvolutionResult mean = std::move(runs.front());
    for (auto& d : mean.distributions) {
        d.params = params;
        d.ensemble = spec;
    }
    for (std::size_t r = 1; r < runs.size(); ++r) {
        const auto& run = runs[r];
        for (std::size_t k = 0; k < mean.distributions.size(); ++k) {
            auto& acc = mean.distributions[k].probs;
            const auto& add = run.distributions[k].probs;
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += add[i];
        }
        for (std::size_t t = 0; t < mean.series.size(); ++t) {
            mean.series.p2_mean[t] += run.series.p2_mean[t];
            mean.series.pi0[t] += run.series.pi0[t];
            mean.series.edge_mass[t] += run.series.edge_mass[t];
        }
    }
    const double inv = 1.0 / spec.n_realizations;
    for (auto& d : mean.distributions)
        for (auto& p : d.probs) p *= inv;
    for (std::size_t t = 0; t < mean.series.size(); ++t) {
        mean.series.p2_mean[t] *= inv;
        mean.series.pi0[t] *= inv;
        mean.series.edge_mass[t] *= inv;
    }
    return mean;
}

}  // namespace qpkr
