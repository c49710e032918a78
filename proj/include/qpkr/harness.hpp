// Sweep orchestration: cells, manifest, resumable execution and reports.
//
// Layout of an output directory:
//   manifest.json               every cell, its seed, status and artifact paths
//   cells/<id>/observables.csv  t, p2_mean, pi0, edge_mass
//   cells/<id>/dist_t<T>.csv    m, p_over_2hbarkL, prob
//   cells/<id>/run.json         parameters, ensemble, code version, wall time, fit
//   report/                     written by report()
#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "qpkr/analysis.hpp"
#include "qpkr/config.hpp"
#include "qpkr/io.hpp"
#include "qpkr/parallel.hpp"
#include "qpkr/quantum.hpp"

namespace qpkr {

namespace fs = std::filesystem;

struct SweepSpec {
    SimParams base;
    std::vector<double> K_values;        // empty: base.K only
    std::vector<double> hbar_values;     // empty: base.hbar_eff only
    std::vector<double> epsilon_values;  // empty: base.epsilon only
    std::vector<int> record_times;
    EnsembleSpec ensemble;
    fs::path out_dir;
    int workers = 1;
    int max_grid_n = 65536;
};

struct Cell {
    int index = 0;
    std::string id;
    SimParams params;
};

inline std::string cell_id(int index, const SimParams& p) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "c%03d_K%.4f_h%.4f_e%.4f", index, p.K, p.hbar_eff, p.epsilon);
    return buf;
}

/// Cartesian product K x hbar x eps (eps fastest). Every cell is validated
/// before anything runs.
inline std::vector<Cell> sweep_cells(const SweepSpec& spec) {
    auto axis = [](const std::vector<double>& v, double fallback) {
        return v.empty() ? std::vector<double>{fallback} : v;
    };
    std::vector<Cell> cells;
    for (double K : axis(spec.K_values, spec.base.K))
        for (double h : axis(spec.hbar_values, spec.base.hbar_eff))
            for (double e : axis(spec.epsilon_values, spec.base.epsilon)) {
                SimParams p = spec.base;
                p.K = K;
                p.hbar_eff = h;
                p.epsilon = e;
                const int idx = static_cast<int>(cells.size());
                try {
                    validate(p);
                } catch (const ValidationError& err) {
                    throw ValidationError("cell " + cell_id(idx, p) + ": " + err.what());
                }
                cells.push_back({idx, cell_id(idx, p), p});
            }
    validate(spec.ensemble);
    detail::check_record_times(spec.record_times, spec.base.n_kicks);
    return cells;
}

inline SweepSpec sweep_spec_from(const KeyValueConfig& c) {
    SweepSpec s;
    s.base = sim_params_from(c);
    s.ensemble = ensemble_from(c);
    s.K_values = c.get_doubles("K_values");
    s.hbar_values = c.get_doubles("hbar_values");
    s.epsilon_values = c.get_doubles("epsilon_values");
    s.record_times = c.get_ints("record_times");
    if (s.record_times.empty()) s.record_times = {s.base.n_kicks};
    s.max_grid_n = static_cast<int>(c.get_int("max_grid_n", s.max_grid_n));
    return s;
}

/// Momentum label offset used in distribution CSVs: the fixed beta, or 0 when drawn.
inline double beta_label(const EnsembleSpec& e) { return e.beta_sampling.uniform ? 0.0 : e.beta_sampling.value; }

inline std::string dist_filename(int t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "dist_t%05d.csv", t);
    return buf;
}

struct CellRun {
    EvolutionResult result;
    int grid_n = 0;
};

/// Runs one ensemble, doubling the grid on overflow up to max_grid_n.
inline CellRun run_cell_ensemble(SimParams params, const EnsembleSpec& ensemble, const std::vector<int>& record_times,
                                 int workers, int max_grid_n) {
    for (;;) {
        try {
            return {run_ensemble(params, ensemble, record_times, workers), params.grid_n};
        } catch (const GridOverflowError&) {
            if (params.grid_n * 2 > max_grid_n) throw;
            params.grid_n *= 2;
        }
    }
}

/// Fingerprint of everything that determines a cell's outputs.
inline std::string cell_fingerprint(const Cell& c, const SweepSpec& s) {
    return json{{"params", to_json(c.params)},
                {"ensemble", to_json(s.ensemble)},
                {"record_times", s.record_times},
                {"max_grid_n", s.max_grid_n},
                {"version", kVersion}}
        .dump();
}

/// Writes a cell's artifacts and returns its manifest entry.
inline json execute_cell(const Cell& cell, const SweepSpec& spec, int workers) {
    const auto start = std::chrono::steady_clock::now();
    const fs::path rel = fs::path("cells") / cell.id;
    json entry{{"index", cell.index},
               {"id", cell.id},
               {"K", cell.params.K},
               {"hbar_eff", cell.params.hbar_eff},
               {"epsilon", cell.params.epsilon},
               {"seed", spec.ensemble.master_seed},
               {"fingerprint", cell_fingerprint(cell, spec)}};
    try {
        const CellRun run =
            run_cell_ensemble(cell.params, spec.ensemble, spec.record_times, workers, spec.max_grid_n);
        const auto& series = run.result.series;
        json artifacts{{"observables", (rel / "observables.csv").string()}, {"distributions", json::object()}};
        write_file_atomic(spec.out_dir / rel / "observables.csv", series_csv(series));
        for (const auto& d : run.result.distributions) {
            const auto name = (rel / dist_filename(d.time)).string();
            write_file_atomic(spec.out_dir / name, distribution_csv(d, beta_label(spec.ensemble)));
            artifacts["distributions"][std::to_string(d.time)] = name;
        }

        SimParams used = cell.params;
        used.grid_n = run.grid_n;
        json sidecar{{"params", to_json(used)},
                     {"ensemble", to_json(spec.ensemble)},
                     {"record_times", spec.record_times},
                     {"version", kVersion},
                     {"ekin_final", kinetic_energy_from_p2(series.p2_mean.back())},
                     {"pi0_final", series.pi0.back()}};
        if (!run.result.distributions.empty()) {
            try {
                sidecar["localization_fit"] = to_json(fit_exponential(run.result.distributions.back()));
            } catch (const FitError& e) {
                sidecar["localization_fit"] = {{"error", e.what()}};
            }
        }
        sidecar["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        artifacts["sidecar"] = (rel / "run.json").string();
        write_file_atomic(spec.out_dir / rel / "run.json", sidecar.dump(2) + "\n");

        entry["status"] = "completed";
        entry["grid_n"] = run.grid_n;
        entry["artifacts"] = artifacts;
    } catch (const Error& e) {
        entry["status"] = "failed";
        entry["error"] = {{"code", e.code()}, {"message", e.what()}};
    }
    return entry;
}

inline bool artifacts_present(const fs::path& out, const json& entry) {
    if (!entry.contains("artifacts")) return false;
    const auto& a = entry["artifacts"];
    if (!fs::exists(out / a["observables"].get<std::string>())) return false;
    for (const auto& [t, p] : a["distributions"].items())
        if (!fs::exists(out / p.get<std::string>())) return false;
    return true;
}

struct SweepSummary {
    int total = 0;
    int completed = 0;
    int skipped = 0;
    int failed = 0;
    fs::path manifest;
};

/// Runs every cell not already completed with a matching fingerprint.
/// The manifest is rewritten (atomically, by one writer at a time) after each cell.
inline SweepSummary run_sweep(const SweepSpec& spec) {
    const auto cells = sweep_cells(spec);
    fs::create_directories(spec.out_dir);
    const fs::path manifest_path = spec.out_dir / "manifest.json";

    std::map<std::string, json> previous;
    if (fs::exists(manifest_path)) {
        try {
            const json old = json::parse(read_file(manifest_path));
            for (const auto& e : old.at("cells")) previous[e.at("id")] = e;
        } catch (const json::exception&) {
            previous.clear();  // unreadable manifest: recompute everything
        }
    }

    json manifest{{"version", kVersion},
                  {"base", to_json(spec.base)},
                  {"ensemble", to_json(spec.ensemble)},
                  {"record_times", spec.record_times},
                  {"axes", {{"K", spec.K_values}, {"hbar_eff", spec.hbar_values}, {"epsilon", spec.epsilon_values}}},
                  {"cells", json::array()}};

    SweepSummary summary{static_cast<int>(cells.size()), 0, 0, 0, manifest_path};
    std::vector<int> todo;
    for (const auto& c : cells) {
        const auto it = previous.find(c.id);
        if (it != previous.end() && it->second.value("status", "") == "completed" &&
            it->second.value("fingerprint", "") == cell_fingerprint(c, spec) &&
            artifacts_present(spec.out_dir, it->second)) {
            manifest["cells"].push_back(it->second);
            ++summary.skipped;
        } else {
            manifest["cells"].push_back({{"index", c.index},
                                         {"id", c.id},
                                         {"K", c.params.K},
                                         {"hbar_eff", c.params.hbar_eff},
                                         {"epsilon", c.params.epsilon},
                                         {"seed", spec.ensemble.master_seed},
                                         {"status", "pending"}});
            todo.push_back(c.index);
        }
    }
    std::mutex writer;
    auto flush = [&] { write_file_atomic(manifest_path, manifest.dump(2) + "\n"); };
    flush();

    const int workers = std::max(1, spec.workers);
    const int cell_workers = std::clamp(static_cast<int>(todo.size()), 1, workers);
    const int inner_workers = std::max(1, workers / cell_workers);
    parallel_for(static_cast<int>(todo.size()), cell_workers, [&](int k) {
        const Cell& c = cells[static_cast<std::size_t>(todo[static_cast<std::size_t>(k)])];
        json entry = execute_cell(c, spec, inner_workers);
        std::lock_guard lock(writer);
        manifest["cells"][static_cast<std::size_t>(c.index)] = std::move(entry);
        flush();
    });

    for (const auto& e : manifest["cells"]) {
        if (e["status"] == "completed")
            ++summary.completed;
        else if (e["status"] == "failed")
            ++summary.failed;
    }
    summary.completed -= summary.skipped;
    return summary;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct ReportSummary {
    int cells = 0;
    int reported = 0;
    std::vector<std::string> missing;
    std::optional<ScalingFit> scaling;
    fs::path dir;
    std::string text;
};

/// Reads a manifest and its artifacts and writes plot-ready tables into
/// <dir of manifest>/report. Missing artifacts are listed, not fatal.
inline ReportSummary report(const fs::path& manifest_path) {
    const fs::path root = manifest_path.parent_path();
    ReportSummary rep;
    rep.dir = root / "report";
    json manifest = fs::exists(manifest_path) ? json::parse(read_file(manifest_path)) : json::object();
    const json cells = manifest.value("cells", json::array());
    rep.cells = static_cast<int>(cells.size());

    std::vector<EnergySample> energies;
    std::string fig2 = "K,hbar,epsilon,t,ekin,ln_ekin,pi0,pi0_proxy\n";
    json fits = json::array();

    for (const auto& c : cells) {
        const std::string id = c.value("id", "?");
        if (c.value("status", "") != "completed") {
            rep.missing.push_back(id + ": status " + c.value("status", "unknown"));
            continue;
        }
        const auto& art = c["artifacts"];
        const fs::path obs_path = root / art["observables"].get<std::string>();
        if (!fs::exists(obs_path)) {
            rep.missing.push_back(id + ": " + obs_path.string());
            continue;
        }
        const CsvTable obs = read_csv(obs_path);
        const auto& last = obs.rows.back();
        const int t = static_cast<int>(last[static_cast<std::size_t>(obs.column("t"))]);
        const double ekin = kinetic_energy_from_p2(last[static_cast<std::size_t>(obs.column("p2_mean"))]);
        const double pi0 = last[static_cast<std::size_t>(obs.column("pi0"))];
        const double K = c["K"], h = c["hbar_eff"], e = c["epsilon"];
        energies.push_back({K, h, e, t, ekin});
        fig2 += fmt_num(K) + "," + fmt_num(h) + "," + fmt_num(e) + "," + std::to_string(t) + "," + fmt_num(ekin) + "," +
                fmt_num(std::log(ekin)) + "," + fmt_num(pi0) + "," + fmt_num(pi0 > 0 ? pi0_proxy(pi0) : 0.0) + "\n";

        // Distribution table: one probability column per record time.
        std::vector<std::pair<int, CsvTable>> dists;
        for (const auto& [ts, p] : art["distributions"].items()) {
            const fs::path dp = root / p.get<std::string>();
            if (!fs::exists(dp)) {
                rep.missing.push_back(id + ": " + dp.string());
                continue;
            }
            dists.emplace_back(std::stoi(ts), read_csv(dp));
        }
        std::sort(dists.begin(), dists.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        if (!dists.empty()) {
            std::string fig1 = "m";
            for (const auto& [tt, tab] : dists) fig1 += ",prob_t" + std::to_string(tt);
            fig1 += "\n";
            const auto& first = dists.front().second;
            for (std::size_t r = 0; r < first.rows.size(); ++r) {
                fig1 += std::to_string(static_cast<int>(first.rows[r][0]));
                for (const auto& [tt, tab] : dists) fig1 += "," + fmt_num(tab.rows[r][2]);
                fig1 += "\n";
            }
            write_file_atomic(rep.dir / ("fig1_" + id + ".csv"), fig1);

            MomentumDistribution d;
            d.time = dists.back().first;
            for (const auto& row : dists.back().second.rows) d.probs.push_back(row[2]);
            json f{{"id", id}, {"t", d.time}};
            try {
                f["fit"] = to_json(fit_exponential(d));
            } catch (const Error& err) {
                f["fit"] = {{"error", err.what()}};
            }
            fits.push_back(f);
        }
        ++rep.reported;
    }

    write_file_atomic(rep.dir / "fig2_energy.csv", fig2);

    // Scaling points per (K, hbar, t) group that has an eps = 0 reference.
    std::vector<EnergySample> referenced;
    for (const auto& s : energies) {
        const bool has_ref = std::any_of(energies.begin(), energies.end(), [&](const EnergySample& o) {
            return o.K == s.K && o.hbar_eff == s.hbar_eff && o.t == s.t && o.epsilon == 0.0;
        });
        if (has_ref) referenced.push_back(s);
    }
    const auto points = scaling_points(referenced);
    write_file_atomic(rep.dir / "fig3_scaling.csv", scaling_csv(points, true));

    json groups = json::array();
    std::map<std::pair<double, double>, std::vector<EnergySample>> by_pair;
    for (const auto& s : energies) by_pair[{s.K, s.hbar_eff}].push_back(s);
    for (const auto& [key, samples] : by_pair) {
        json g{{"K", key.first}, {"hbar_eff", key.second}, {"n", samples.size()}};
        if (samples.size() >= 2) {
            std::vector<double> xs, ys;
            for (const auto& s : samples) {
                xs.push_back(s.epsilon);
                ys.push_back(std::log(s.ekin));
            }
            try {
                const auto f = stats::fit_line(xs, ys);
                g["ln_ekin_vs_eps"] = {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
            } catch (const std::invalid_argument&) {
            }
        }
        groups.push_back(g);
    }

    json out{{"cells", rep.cells}, {"reported", rep.reported}, {"missing", rep.missing}, {"groups", groups},
             {"localization_fits", fits}};
    try {
        rep.scaling = scaling_fit(points);
        out["scaling_fit"] = to_json(*rep.scaling);
    } catch (const Error& e) {
        out["scaling_fit"] = {{"error", e.what()}};
    }
    write_file_atomic(rep.dir / "report.json", out.dump(2) + "\n");

    auto brief = [](double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", x);
        return std::string(buf);
    };
    std::string text = "cells: " + std::to_string(rep.cells) + ", reported: " + std::to_string(rep.reported) + "\n";
    for (const auto& g : groups) {
        text += "K=" + brief(g["K"]) + " hbar=" + brief(g["hbar_eff"]) + " cells=" + std::to_string(g["n"].get<int>());
        if (g.contains("ln_ekin_vs_eps"))
            text += " d(ln Ekin)/d(eps)=" + brief(g["ln_ekin_vs_eps"]["slope"]) +
                    " R2=" + brief(g["ln_ekin_vs_eps"]["r2"]);
        text += "\n";
    }
    if (rep.scaling)
        text += "scaling slope " + brief(rep.scaling->slope) + " +/- " + brief(rep.scaling->stderr) +
                " (prediction 2*alpha = " + brief(rep.scaling->predicted_slope) + ")\n";
    for (const auto& m : rep.missing) text += "missing: " + m + "\n";
    rep.text = text;
    write_file_atomic(rep.dir / "summary.txt", text);
    return rep;
}

}  // namespace qpkr
