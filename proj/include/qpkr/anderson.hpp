// Mapping of the quasiperiodic kicked rotor onto a 2D Anderson-like lattice.
//
// Floquet eigenstates phi of the periodically kicked 2D rotor
//   H = p1^2/2 + omega2 p2 + K cos x1 (1 + eps cos x2) sum_n delta(t - n)
// give chi = (1 + iW)^{-1} phi with W(x1,x2) = tan[K cos x1 (1 + eps cos x2) / (2 hbar)],
// whose plane-wave coefficients satisfy
//   eps_m chi_m + sum_{r != 0} W_r chi_{m+r} = 0,
//   eps_m = tan{ [ (hbar m1^2/2 + omega2 m2) - E/hbar ] / 2 }.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include "qpkr/core.hpp"
#include "qpkr/fft.hpp"

namespace qpkr {

class ResonantSiteError : public Error {
  public:
    ResonantSiteError(int m1, int m2)
        : Error("resonant_site", "on-site energy singular at site (" + std::to_string(m1) + "," +
                                     std::to_string(m2) + "); shift the quasi-energy"),
          m1_(m1), m2_(m2) {}
    int m1() const noexcept { return m1_; }
    int m2() const noexcept { return m2_; }

  private:
    int m1_, m2_;
};

class SingularMappingError : public Error {
  public:
    explicit SingularMappingError(const std::string& what) : Error("mapping_singular", what) {}
};

struct LatticeSite {
    int m1 = 0;
    int m2 = 0;
};

inline constexpr double kResonanceTolerance = 1e-12;

/// Half-angle argument of the on-site tangent.
inline double onsite_angle(int m1, int m2, double E, double hbar_eff, double omega2) {
    const double m1d = m1;
    return 0.5 * ((hbar_eff * m1d * m1d / 2.0 + omega2 * m2) - E / hbar_eff);
}

inline double onsite_energy(int m1, int m2, double E, double hbar_eff, double omega2) {
    const double theta = onsite_angle(m1, m2, E, hbar_eff, omega2);
    if (std::abs(std::remainder(theta - kPi / 2.0, kPi)) < kResonanceTolerance)
        throw ResonantSiteError(m1, m2);
    return std::tan(theta);
}

/// On-site energies over the window [m1_min, m1_min+n1) x [m2_min, m2_min+n2),
/// stored row-major with m1 as the slow index.
struct OnsiteField {
    int m1_min = 0, m2_min = 0, n1 = 0, n2 = 0;
    double E = 0.0, hbar_eff = 0.0, omega2 = 0.0;
    std::vector<double> values;

    double at(int m1, int m2) const {
        return values.at(static_cast<std::size_t>((m1 - m1_min) * n2 + (m2 - m2_min)));
    }
};

inline OnsiteField onsite_field(int m1_min, int n1, int m2_min, int n2, double E, double hbar_eff,
                                double omega2) {
    if (n1 < 1 || n2 < 1) throw ValidationError("onsite window must be non-empty");
    OnsiteField f{m1_min, m2_min, n1, n2, E, hbar_eff, omega2, {}};
    f.values.reserve(static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2));
    for (int a = 0; a < n1; ++a)
        for (int b = 0; b < n2; ++b) f.values.push_back(onsite_energy(m1_min + a, m2_min + b, E, hbar_eff, omega2));
    return f;
}

/// Fourier coefficients W_{r1,r2} for |r1|, |r2| <= R.
struct HoppingTable {
    double K = 0.0, hbar_eff = 0.0, epsilon = 0.0;
    int R = 0;
    int quadrature_n = 0;
    std::vector<std::complex<double>> coeffs;  // (2R+1)^2, r1 slow

    int side() const noexcept { return 2 * R + 1; }
    std::complex<double> at(int r1, int r2) const {
        if (std::abs(r1) > R || std::abs(r2) > R) return 0.0;
        return coeffs[static_cast<std::size_t>((r1 + R) * side() + (r2 + R))];
    }
    /// Largest |W| on the shell max(|r1|,|r2|) = s.
    double shell_max(int s) const {
        double m = 0.0;
        for (int r1 = -s; r1 <= s; ++r1)
            for (int r2 = -s; r2 <= s; ++r2)
                if (std::max(std::abs(r1), std::abs(r2)) == s) m = std::max(m, std::abs(at(r1, r2)));
        return m;
    }
};

inline constexpr int kDefaultHoppingRange = 16;

/// Largest |K cos x1 (1 + eps cos x2) / (2 hbar)| over the torus.
inline double hopping_argument_max(double K, double hbar_eff, double epsilon) {
    return std::abs(K) * (1.0 + std::abs(epsilon)) / (2.0 * hbar_eff);
}

inline void check_mapping_regular(double K, double hbar_eff, double epsilon) {
    const double a = hopping_argument_max(K, hbar_eff, epsilon);
    if (!(a < kPi / 2.0 - 1e-6))
        throw SingularMappingError("mapping singular for these parameters: K(1+eps)/(2 hbar) = " +
                                   std::to_string(a) + " >= pi/2");
}

/// Trapezoidal quadrature of W(x1,x2) e^{-i(r1 x1 + r2 x2)} on a
/// quadrature_n x quadrature_n torus grid.
inline HoppingTable hopping_table(double K, double hbar_eff, double epsilon, int R = kDefaultHoppingRange,
                                  int quadrature_n = 0) {
    if (quadrature_n == 0) quadrature_n = 8 * R;
    if (!(hbar_eff > 0.0)) throw ValidationError("hbar_eff must be positive");
    if (R < 1) throw ValidationError("hopping range R must be >= 1");
    if (quadrature_n < 8 * R) throw ValidationError("quadrature_n must be >= 8R");
    check_mapping_regular(K, hbar_eff, epsilon);

    const int q = quadrature_n;
    const int side = 2 * R + 1;
    std::vector<double> cosx(static_cast<std::size_t>(q));
    for (int j = 0; j < q; ++j) cosx[static_cast<std::size_t>(j)] = std::cos(kTwoPi * j / q);
    // twiddle[r+R][j] = exp(-2 pi i r j / q), phase reduced exactly mod q.
    std::vector<std::complex<double>> twiddle(static_cast<std::size_t>(side * q));
    for (int r = -R; r <= R; ++r)
        for (int j = 0; j < q; ++j) {
            const long long k = ((static_cast<long long>(r) * j) % q + q) % q;
            twiddle[static_cast<std::size_t>((r + R) * q + j)] = std::polar(1.0, -kTwoPi * static_cast<double>(k) / q);
        }

    // partial[j][r2] = sum_k W(x_j, y_k) e^{-i r2 y_k}
    std::vector<std::complex<double>> partial(static_cast<std::size_t>(q * side));
    std::vector<double> row(static_cast<std::size_t>(q));
    for (int j = 0; j < q; ++j) {
        for (int k = 0; k < q; ++k)
            row[static_cast<std::size_t>(k)] =
                std::tan(K * cosx[static_cast<std::size_t>(j)] * (1.0 + epsilon * cosx[static_cast<std::size_t>(k)]) /
                         (2.0 * hbar_eff));
        for (int r2 = -R; r2 <= R; ++r2) {
            std::complex<double> s = 0.0;
            const auto* tw = &twiddle[static_cast<std::size_t>((r2 + R) * q)];
            for (int k = 0; k < q; ++k) s += row[static_cast<std::size_t>(k)] * tw[k];
            partial[static_cast<std::size_t>(j * side + (r2 + R))] = s;
        }
    }

    HoppingTable t{K, hbar_eff, epsilon, R, q, std::vector<std::complex<double>>(static_cast<std::size_t>(side * side))};
    const double norm = 1.0 / (static_cast<double>(q) * q);
    for (int r1 = -R; r1 <= R; ++r1) {
        const auto* tw = &twiddle[static_cast<std::size_t>((r1 + R) * q)];
        for (int r2 = -R; r2 <= R; ++r2) {
            std::complex<double> s = 0.0;
            for (int j = 0; j < q; ++j) s += partial[static_cast<std::size_t>(j * side + (r2 + R))] * tw[j];
            t.coeffs[static_cast<std::size_t>((r1 + R) * side + (r2 + R))] = s * norm;
        }
    }
    return t;
}

/// RMS of hoppings with a direction-2 component (r2 != 0) over RMS of hoppings
/// purely along direction 1 (r2 == 0). Zero when eps = 0.
inline double anisotropy_report(const HoppingTable& t) {
    double along2 = 0.0, along1 = 0.0;
    for (int r1 = -t.R; r1 <= t.R; ++r1)
        for (int r2 = -t.R; r2 <= t.R; ++r2) {
            const double w2 = std::norm(t.at(r1, r2));
            (r2 == 0 ? along1 : along2) += w2;
        }
    if (along1 == 0.0) throw ValidationError("hopping table has no weight along direction 1");
    return std::sqrt(along2 / along1);
}

// ---------------------------------------------------------------------------
// Mapping verification on a truncated lattice.
// ---------------------------------------------------------------------------

struct MappingOptions {
    int R = 0;             // hopping range and interior margin; 0 picks lattice_n/4
    int quadrature_n = 0;  // 0 picks max(8R, 128)
    int max_states = 0;    // 0 checks every eigenstate; otherwise an evenly spaced sample
    double threshold = 1e-6;
};

struct MappingReport {
    int lattice_n = 0;
    int R = 0;
    int interior_sites = 0;
    int states_checked = 0;
    int resonant_sites_excluded = 0;
    double threshold = 0.0;
    double max_residual = 0.0;
    double median_residual = 0.0;
    double fraction_below_threshold = 0.0;
    double max_unitarity_defect = 0.0;  // max | |lambda| - 1 |
    std::vector<double> residuals;      // per checked state, relative to ||chi||
    std::vector<double> quasi_energies; // E of each checked state
};

namespace detail {

/// Floquet operator of the 2D kicked rotor on an n x n plane-wave torus
/// (kick then free flight), as a column-major dense matrix.
inline std::vector<std::complex<double>> floquet_matrix_2d(double K, double hbar_eff, double epsilon,
                                                           double omega2, int n) {
    const std::size_t dim = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    Fft fft(n, n);
    std::vector<std::complex<double>> kick(dim), flight(dim);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            const double x1 = kTwoPi * j / n, x2 = kTwoPi * k / n;
            const double V = K * std::cos(x1) * (1.0 + epsilon * std::cos(x2));
            kick[static_cast<std::size_t>(j * n + k)] = std::polar(1.0 / static_cast<double>(dim), -V / hbar_eff);
        }
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const double m1 = site_of_index(a, n), m2 = site_of_index(b, n);
            flight[static_cast<std::size_t>(a * n + b)] = std::polar(1.0, -(hbar_eff * m1 * m1 / 2.0 + omega2 * m2));
        }

    std::vector<std::complex<double>> U(dim * dim);
    std::vector<std::complex<double>> col(dim);
    for (std::size_t c = 0; c < dim; ++c) {
        std::fill(col.begin(), col.end(), 0.0);
        col[c] = 1.0;
        fft.backward(col);
        for (std::size_t i = 0; i < dim; ++i) col[i] *= kick[i];
        fft.forward(col);
        for (std::size_t i = 0; i < dim; ++i) U[c * dim + i] = col[i] * flight[i];
    }
    return U;
}

}  // namespace detail

/// Diagonalizes the truncated Floquet operator, maps each sampled eigenvector
/// phi to chi = (1+iW)^{-1} phi and evaluates the lattice-equation residual
/// over interior sites (margin >= R from every edge).
inline MappingReport verify_mapping(double K, double hbar_eff, double epsilon, double omega2, int lattice_n,
                                    MappingOptions opt = {}) {
    if (lattice_n < 8 || lattice_n > 48 || lattice_n % 2 != 0)
        throw ValidationError("lattice_n must be even and in [8, 48]");
    const int n = lattice_n;
    const int R = opt.R > 0 ? opt.R : n / 4;
    if (2 * R >= n) throw ValidationError("hopping range leaves no interior sites");
    const int q = opt.quadrature_n > 0 ? opt.quadrature_n : std::max(8 * R, 128);
    const HoppingTable table = hopping_table(K, hbar_eff, epsilon, R, q);

    const std::size_t dim = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    auto U = detail::floquet_matrix_2d(K, hbar_eff, epsilon, omega2, n);

    std::vector<std::complex<double>> w(dim), vr(dim * dim);
    const auto ld = static_cast<lapack_int>(dim);
    const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', ld, U.data(), ld, w.data(), nullptr, 1,
                                          vr.data(), ld);
    if (info != 0) throw Error("diagonalization_failed", "zgeev failed with info=" + std::to_string(info));

    // 1 / (1 + i W(x)) on the torus grid, with the 1/dim round-trip factor folded in.
    std::vector<std::complex<double>> inv_1piw(dim);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            const double x1 = kTwoPi * j / n, x2 = kTwoPi * k / n;
            const double W = std::tan(K * std::cos(x1) * (1.0 + epsilon * std::cos(x2)) / (2.0 * hbar_eff));
            inv_1piw[static_cast<std::size_t>(j * n + k)] =
                1.0 / (static_cast<double>(dim) * std::complex<double>(1.0, W));
        }

    MappingReport rep;
    rep.lattice_n = n;
    rep.R = R;
    rep.threshold = opt.threshold;
    const int lo = -n / 2 + R, hi = n / 2 - 1 - R;
    rep.interior_sites = (hi - lo + 1) * (hi - lo + 1);

    std::vector<std::size_t> states;
    if (opt.max_states <= 0 || static_cast<std::size_t>(opt.max_states) >= dim) {
        for (std::size_t s = 0; s < dim; ++s) states.push_back(s);
    } else {
        for (int s = 0; s < opt.max_states; ++s)
            states.push_back(static_cast<std::size_t>(s) * dim / static_cast<std::size_t>(opt.max_states));
    }

    Fft fft(n, n);
    std::vector<std::complex<double>> chi(dim);
    auto chi_at = [&](int m1, int m2) {
        return chi[static_cast<std::size_t>(index_of_site(m1, n) * n + index_of_site(m2, n))];
    };
    for (std::size_t e = 0; e < dim; ++e) {
        rep.max_unitarity_defect = std::max(rep.max_unitarity_defect, std::abs(std::abs(w[e]) - 1.0));
    }

    for (std::size_t s : states) {
        const double E = -hbar_eff * std::arg(w[s]);
        std::copy_n(vr.begin() + static_cast<std::ptrdiff_t>(s * dim), dim, chi.begin());
        fft.backward(chi);
        for (std::size_t i = 0; i < dim; ++i) chi[i] *= inv_1piw[i];
        fft.forward(chi);

        double chi_norm2 = 0.0;
        for (const auto& c : chi) chi_norm2 += std::norm(c);
        double res2 = 0.0;
        for (int m1 = lo; m1 <= hi; ++m1)
            for (int m2 = lo; m2 <= hi; ++m2) {
                double eps_m;
                try {
                    eps_m = onsite_energy(m1, m2, E, hbar_eff, omega2);
                } catch (const ResonantSiteError&) {
                    ++rep.resonant_sites_excluded;
                    continue;
                }
                std::complex<double> r = eps_m * chi_at(m1, m2);
                for (int r1 = -R; r1 <= R; ++r1)
                    for (int r2 = -R; r2 <= R; ++r2)
                        if (r1 != 0 || r2 != 0) r += table.at(r1, r2) * chi_at(m1 + r1, m2 + r2);
                res2 += std::norm(r);
            }
        rep.residuals.push_back(std::sqrt(res2 / chi_norm2));
        rep.quasi_energies.push_back(E);
    }

    rep.states_checked = static_cast<int>(rep.residuals.size());
    std::vector<double> sorted = rep.residuals;
    std::sort(sorted.begin(), sorted.end());
    rep.max_residual = sorted.back();
    rep.median_residual = sorted.size() % 2 ? sorted[sorted.size() / 2]
                                            : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
    const auto below = std::count_if(sorted.begin(), sorted.end(), [&](double r) { return r <= opt.threshold; });
    rep.fraction_below_threshold = static_cast<double>(below) / static_cast<double>(sorted.size());
    return rep;
}

}  // namespace qpkr
