// CSV / JSON persistence. Numbers are written with 17 significant digits so
// files round-trip exactly and identical runs produce identical bytes.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qpkr/analysis.hpp"
#include "qpkr/anderson.hpp"
#include "qpkr/classical.hpp"
#include "qpkr/core.hpp"

namespace qpkr {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.3.0";

inline std::string fmt_num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Writes via a temporary sibling and rename, so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("io_error", "cannot write " + tmp.string());
        out << content;
        if (!out) throw Error("io_error", "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io_error", "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- JSON --------------------------------------------------------------------

inline json to_json(const SimParams& p) {
    return {{"K", p.K},         {"hbar_eff", p.hbar_eff}, {"epsilon", p.epsilon}, {"omega2", p.omega2},
            {"phi2", p.phi2},   {"beta", p.beta},         {"n_kicks", p.n_kicks}, {"grid_n", p.grid_n}};
}

inline json to_json(const Sampling& s) {
    if (s.uniform) return "uniform";
    return s.value;
}

inline json to_json(const EnsembleSpec& e) {
    return {{"n_realizations", e.n_realizations},
            {"master_seed", e.master_seed},
            {"beta_sampling", to_json(e.beta_sampling)},
            {"phi2_sampling", to_json(e.phi2_sampling)}};
}

inline json to_json(const DiffusionTensor& d) {
    return {{"d11", d.d11},
            {"d22", d.d22},
            {"d12", d.d12},
            {"stderr", {{"d11", d.stderr11}, {"d22", d.stderr22}, {"d12", d.stderr12}}},
            {"window", {{"t_min", d.t_min}, {"t_max", d.t_max}}}};
}

inline json to_json(const LocalizationFit& f) {
    return {{"p_loc", f.p_loc}, {"stderr", f.stderr},           {"m_min", f.m_min},
            {"m_max", f.m_max}, {"r2", f.r2}, {"gaussian_r2", f.gaussian_r2}, {"n_points", f.n_points}};
}

inline json to_json(const ScalingFit& f) {
    return {{"slope", f.slope},
            {"stderr", f.stderr},
            {"n_points", f.n_points},
            {"x_max", f.x_max},
            {"predicted_slope", f.predicted_slope}};
}

inline json to_json(const HoppingTable& t) {
    json rows = json::array();
    for (int r1 = -t.R; r1 <= t.R; ++r1)
        for (int r2 = -t.R; r2 <= t.R; ++r2) {
            const auto w = t.at(r1, r2);
            rows.push_back({{"r1", r1}, {"r2", r2}, {"re", w.real()}, {"im", w.imag()}});
        }
    return {{"K", t.K},   {"hbar_eff", t.hbar_eff}, {"epsilon", t.epsilon}, {"R", t.R},
            {"quadrature_n", t.quadrature_n}, {"anisotropy_ratio", anisotropy_report(t)}, {"coefficients", rows}};
}

inline json to_json(const MappingReport& r) {
    return {{"lattice_n", r.lattice_n},
            {"R", r.R},
            {"interior_sites", r.interior_sites},
            {"states_checked", r.states_checked},
            {"resonant_sites_excluded", r.resonant_sites_excluded},
            {"threshold", r.threshold},
            {"max_residual", r.max_residual},
            {"median_residual", r.median_residual},
            {"fraction_below_threshold", r.fraction_below_threshold},
            {"max_unitarity_defect", r.max_unitarity_defect}};
}

// --- CSV ---------------------------------------------------------------------

/// Rows "m, p_over_2hbarkL, prob". The momentum column is m + beta_label; for
/// ensembles with drawn beta pass 0 so the column is the site label.
inline std::string distribution_csv(const MomentumDistribution& d, double beta_label) {
    std::string s = "m,p_over_2hbarkL,prob\n";
    for (int i = 0; i < d.grid_n(); ++i) {
        const int m = site_of_index(i, d.grid_n());
        s += std::to_string(m) + "," + fmt_num(m + beta_label) + "," + fmt_num(d.probs[static_cast<std::size_t>(i)]) + "\n";
    }
    return s;
}

inline std::string series_csv(const ObservableSeries& o) {
    std::string s = "t,p2_mean,pi0,edge_mass\n";
    for (std::size_t k = 0; k < o.size(); ++k)
        s += std::to_string(o.times[k]) + "," + fmt_num(o.p2_mean[k]) + "," + fmt_num(o.pi0[k]) + "," +
             fmt_num(o.edge_mass[k]) + "\n";
    return s;
}

inline std::string moments_csv(const ClassicalMoments& m) {
    std::string s = "t,p1sq,p2sq,p1p2\n";
    for (std::size_t k = 0; k < m.times.size(); ++k)
        s += std::to_string(m.times[k]) + "," + fmt_num(m.mean.p1sq[k]) + "," + fmt_num(m.mean.p2sq[k]) + "," +
             fmt_num(m.mean.p1p2[k]) + "\n";
    return s;
}

/// Grid with one row per m1 and one column per m2.
inline std::string onsite_csv(const OnsiteField& f) {
    std::string s = "m1";
    for (int b = 0; b < f.n2; ++b) s += "," + std::to_string(f.m2_min + b);
    s += "\n";
    for (int a = 0; a < f.n1; ++a) {
        s += std::to_string(f.m1_min + a);
        for (int b = 0; b < f.n2; ++b) s += "," + fmt_num(f.at(f.m1_min + a, f.m2_min + b));
        s += "\n";
    }
    return s;
}

inline std::string scaling_csv(const std::vector<ScalingPoint>& pts, bool with_prediction) {
    std::string s = with_prediction ? "x,y,K,hbar,epsilon,t,prediction\n" : "x,y,K,hbar,epsilon,t\n";
    for (const auto& p : pts) {
        s += fmt_num(p.x) + "," + fmt_num(p.y) + "," + fmt_num(p.K) + "," + fmt_num(p.hbar_eff) + "," +
             fmt_num(p.epsilon) + "," + std::to_string(p.t);
        if (with_prediction) s += "," + fmt_num(predicted_energy_ratio(p.x));
        s += "\n";
    }
    return s;
}

/// Minimal numeric CSV reader: header row, then comma-separated numbers.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw Error("io_error", "missing CSV column " + name);
    }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    CsvTable t;
    std::string line;
    auto split = [](const std::string& l) {
        std::vector<std::string> out;
        std::stringstream ss(l);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        return out;
    };
    if (!std::getline(in, line)) throw Error("io_error", "empty CSV " + path.string());
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        for (const auto& c : split(line)) row.push_back(std::stod(c));
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace qpkr
