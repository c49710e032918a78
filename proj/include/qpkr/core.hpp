// Shared domain types for the quasiperiodic kicked rotor toolkit.
//
// Unit convention: a momentum lattice site m is one unit of 2*hbar*k_L.
// The scaled canonical momentum used by the dynamics is p = hbar_eff*(m+beta).
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qpkr {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
/// 2*pi*sqrt(5), the experimental modulation frequency.
inline constexpr double kDefaultOmega2 = 2.0 * std::numbers::pi * 2.2360679774997896964;
/// Weak-disorder coefficient of the 2D localization-length exponent, pi/sqrt(32).
inline constexpr double kAlpha = std::numbers::pi / 5.6568542494923801952;

/// Base of all toolkit errors. `code()` is a stable machine-readable tag.
class Error : public std::runtime_error {
  public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

  private:
    std::string code_;
};

class ValidationError : public Error {
  public:
    explicit ValidationError(const std::string& what) : Error("invalid_params", what) {}
};

class GridOverflowError : public Error {
  public:
    GridOverflowError(int kick, double edge_mass, int grid_n, std::optional<int> realization = {})
        : Error("grid_overflow", describe(kick, edge_mass, grid_n, realization)),
          kick_(kick), edge_mass_(edge_mass), grid_n_(grid_n), realization_(realization) {}

    int kick() const noexcept { return kick_; }
    double edge_mass() const noexcept { return edge_mass_; }
    int grid_n() const noexcept { return grid_n_; }
    std::optional<int> realization() const noexcept { return realization_; }

    GridOverflowError with_realization(int r) const { return {kick_, edge_mass_, grid_n_, r}; }

  private:
    static std::string describe(int kick, double mass, int n, std::optional<int> r) {
        std::string s = "edge mass " + std::to_string(mass) + " exceeds threshold at kick " +
                        std::to_string(kick) + " on grid N=" + std::to_string(n);
        if (r) s += " (realization " + std::to_string(*r) + ")";
        return s;
    }
    int kick_;
    double edge_mass_;
    int grid_n_;
    std::optional<int> realization_;
};

/// Full parameter set of one kicked-rotor run.
struct SimParams {
    double K = 5.34;
    double hbar_eff = 2.89;
    double epsilon = 0.0;
    double omega2 = kDefaultOmega2;
    double phi2 = 0.0;
    double beta = 0.0;
    int n_kicks = 1000;
    int grid_n = 4096;

    bool operator==(const SimParams&) const = default;
};

struct ValidatedParams {
    SimParams params;
    std::vector<std::string> warnings;
};

namespace detail {

/// True when x is within tol of p/q for some q <= max_den.
inline bool near_rational(double x, int max_den, double tol = 1e-9) {
    for (int q = 1; q <= max_den; ++q) {
        const double p = std::round(x * q);
        if (std::abs(x - p / q) <= tol * std::max(1.0, std::abs(x))) return true;
    }
    return false;
}

}  // namespace detail

/// Checks the parameter invariants. Throws ValidationError on a hard
/// violation; returns the parameters unchanged with advisory warnings otherwise.
inline ValidatedParams validate(const SimParams& p) {
    if (!(p.K > 0.0) || !std::isfinite(p.K)) throw ValidationError("K must be positive");
    if (!(p.hbar_eff > 0.0) || !std::isfinite(p.hbar_eff))
        throw ValidationError("hbar_eff must be positive");
    if (!(p.epsilon >= 0.0 && p.epsilon < 1.0))
        throw ValidationError("epsilon out of range [0,1): " + std::to_string(p.epsilon));
    if (!std::isfinite(p.omega2)) throw ValidationError("omega2 must be finite");
    if (!std::isfinite(p.phi2)) throw ValidationError("phi2 must be finite");
    if (!(p.beta >= 0.0 && p.beta < 1.0))
        throw ValidationError("beta out of range [0,1): " + std::to_string(p.beta));
    if (p.n_kicks < 0) throw ValidationError("n_kicks must be >= 0");
    if (p.grid_n < 16 || p.grid_n % 2 != 0)
        throw ValidationError("grid_n must be even and >= 16, got " + std::to_string(p.grid_n));

    ValidatedParams out{p, {}};
    if (p.K <= 4.0) out.warnings.emplace_back("K <= 4: classical phase space not fully chaotic");
    if (detail::near_rational(p.omega2 / kTwoPi, 64))
        out.warnings.emplace_back("omega2/2pi is rational with small denominator: commensurability risk");
    if (detail::near_rational(p.hbar_eff / kTwoPi, 64))
        out.warnings.emplace_back("hbar_eff/2pi is rational with small denominator: commensurability risk");
    return out;
}

// ---------------------------------------------------------------------------
// Deterministic seeding.
//
// derive_seed(s, r) = mix64(s + (r+1)*G) with G = 0x9E3779B97F4A7C15 and mix64
// the SplitMix64 finalizer. G is odd, so r -> s + (r+1)*G is injective mod 2^64,
// and mix64 is a bijection; the composition is injective in r.
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master_seed, std::int64_t realization_index) {
    if (realization_index < 0) throw ValidationError("realization_index must be >= 0");
    return mix64(master_seed + (static_cast<std::uint64_t>(realization_index) + 1) * kGolden);
}

/// Counter-based SplitMix64 stream: output k is mix64(seed + (k+1)*G).
/// Reproducible bit-for-bit on every platform.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() noexcept {
        state_ += kGolden;
        return mix64(state_);
    }
    /// Uniform in [0,1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  private:
    std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

/// Either a fixed value or a uniform draw over the parameter's natural range.
struct Sampling {
    bool uniform = true;
    double value = 0.0;

    static Sampling fixed(double v) { return {false, v}; }
    static Sampling uniform_draw() { return {true, 0.0}; }
    bool operator==(const Sampling&) const = default;
};

struct EnsembleSpec {
    int n_realizations = 100;
    std::uint64_t master_seed = 20160101;
    Sampling beta_sampling = Sampling::uniform_draw();
    Sampling phi2_sampling = Sampling::uniform_draw();

    bool operator==(const EnsembleSpec&) const = default;
};

inline void validate(const EnsembleSpec& e) {
    if (e.n_realizations < 1) throw ValidationError("n_realizations must be >= 1");
    if (!e.beta_sampling.uniform && !(e.beta_sampling.value >= 0.0 && e.beta_sampling.value < 1.0))
        throw ValidationError("fixed beta out of range [0,1)");
    if (!e.phi2_sampling.uniform && !std::isfinite(e.phi2_sampling.value))
        throw ValidationError("fixed phi2 must be finite");
}

/// (beta, phi2) of one realization; depends only on (master_seed, r).
struct RealizationDraw {
    double beta;
    double phi2;
};

inline RealizationDraw draw_realization(const EnsembleSpec& e, int r) {
    CounterRng rng(derive_seed(e.master_seed, r));
    // Both draws are always consumed so fixing one axis leaves the other unchanged.
    const double ub = rng.uniform();
    const double up = rng.uniform();
    return {e.beta_sampling.uniform ? ub : e.beta_sampling.value,
            e.phi2_sampling.uniform ? kTwoPi * up : e.phi2_sampling.value};
}

// ---------------------------------------------------------------------------
// Momentum lattice observables
// ---------------------------------------------------------------------------

/// Site m in [-N/2, N/2) is stored at index m + N/2.
constexpr int site_of_index(int i, int n) noexcept { return i - n / 2; }
constexpr int index_of_site(int m, int n) noexcept { return m + n / 2; }

/// Probability over momentum sites, optionally ensemble-averaged.
struct MomentumDistribution {
    std::vector<double> probs;
    int time = 0;
    SimParams params;
    std::optional<EnsembleSpec> ensemble;

    int grid_n() const noexcept { return static_cast<int>(probs.size()); }
    int min_site() const noexcept { return -grid_n() / 2; }
    int max_site() const noexcept { return grid_n() / 2 - 1; }
    double at(int m) const {
        if (m < min_site() || m > max_site()) return 0.0;
        return probs[static_cast<std::size_t>(index_of_site(m, grid_n()))];
    }
};

/// Per-kick observables: <(m+beta)^2>, the m=0 population and the edge mass.
struct ObservableSeries {
    std::vector<int> times;
    std::vector<double> p2_mean;
    std::vector<double> pi0;
    std::vector<double> edge_mass;

    std::size_t size() const noexcept { return times.size(); }
    void push(int t, double p2, double p0, double edge) {
        times.push_back(t);
        p2_mean.push_back(p2);
        pi0.push_back(p0);
        edge_mass.push_back(edge);
    }
};

/// Sites counted as "edge": the outermost 5% on each side (10% of the grid).
constexpr int edge_width(int n) noexcept { return std::max(1, n / 20); }

}  // namespace qpkr
