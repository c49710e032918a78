// qpkr command-line front end.
//
//   qpkr validate       --config c.txt
//   qpkr run            --config c.txt --out dir
//   qpkr sweep          --config c.txt --out dir [--workers n]
//   qpkr report         --out dir
//   qpkr verify-mapping --config c.txt [--out dir]
//   qpkr classical      --config c.txt [--out dir]
//
// Results go to stdout as JSON; errors go to stderr as {"error", "message"}
// with a nonzero exit status.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "qpkr/qpkr.hpp"

namespace {

using qpkr::json;

struct Common {
    std::string config;
    std::string out;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
    std::optional<int> grid;
    std::optional<int> kicks;
    std::optional<int> realizations;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "key = value configuration file");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--workers", c.workers, "worker threads (overrides QPKR_WORKERS)");
    cmd->add_option("--seed", c.seed, "master seed");
    cmd->add_option("--grid", c.grid, "momentum grid size N");
    cmd->add_option("--kicks", c.kicks, "number of kicks");
    cmd->add_option("--realizations", c.realizations, "ensemble size");
}

qpkr::KeyValueConfig load_config(const Common& c) {
    auto cfg = c.config.empty() ? qpkr::KeyValueConfig{} : qpkr::KeyValueConfig::load(c.config);
    if (c.seed) cfg.set("master_seed", std::to_string(*c.seed));
    if (c.grid) cfg.set("grid_n", std::to_string(*c.grid));
    if (c.kicks) {
        // A shortened run keeps the record times it can reach plus its final kick.
        cfg.set("n_kicks", std::to_string(*c.kicks));
        std::string times;
        for (int t : cfg.get_ints("record_times"))
            if (t < *c.kicks) times += std::to_string(t) + ",";
        cfg.set("record_times", times + std::to_string(*c.kicks));
    }
    if (c.realizations) cfg.set("n_realizations", std::to_string(*c.realizations));
    return cfg;
}

int resolve_workers(const Common& c) {
    int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("QPKR_WORKERS")) {
        try {
            workers = std::stoi(env);
        } catch (const std::exception&) {
            throw qpkr::ValidationError(std::string("QPKR_WORKERS is not an integer: ") + env);
        }
    }
    if (c.workers) workers = *c.workers;
    if (workers < 1) throw qpkr::ValidationError("worker count must be >= 1");
    return workers;
}

std::filesystem::path require_out(const Common& c) {
    if (c.out.empty()) throw qpkr::ValidationError("--out is required");
    return c.out;
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

int cmd_validate(const Common& c) {
    const auto cfg = load_config(c);
    const auto spec = qpkr::sweep_spec_from(cfg);
    json warnings = json::array();
    const auto cells = qpkr::sweep_cells(spec);
    for (const auto& cell : cells)
        for (const auto& w : qpkr::validate(cell.params).warnings) warnings.push_back(cell.id + ": " + w);
    print({{"valid", true}, {"cells", cells.size()}, {"warnings", warnings}});
    return 0;
}

int cmd_sweep(const Common& c, bool single) {
    const auto cfg = load_config(c);
    auto spec = qpkr::sweep_spec_from(cfg);
    if (single) spec.K_values = spec.hbar_values = spec.epsilon_values = {};
    spec.out_dir = require_out(c);
    spec.workers = resolve_workers(c);
    for (const auto& cell : qpkr::sweep_cells(spec))
        for (const auto& w : qpkr::validate(cell.params).warnings)
            std::cerr << json{{"warning", w}, {"cell", cell.id}}.dump() << "\n";
    const auto s = qpkr::run_sweep(spec);
    print({{"cells", s.total},
           {"completed", s.completed},
           {"skipped", s.skipped},
           {"failed", s.failed},
           {"manifest", s.manifest.string()}});
    return s.failed == 0 ? 0 : 3;
}

int cmd_report(const Common& c) {
    const auto rep = qpkr::report(require_out(c) / "manifest.json");
    std::cout << rep.text;
    return 0;
}

int cmd_verify_mapping(const Common& c) {
    const auto cfg = load_config(c);
    const auto p = qpkr::sim_params_from(cfg, {.K = 2.0, .hbar_eff = 2.89, .epsilon = 0.2});
    qpkr::MappingOptions opt;
    opt.R = static_cast<int>(cfg.get_int("hopping_range", 0));
    opt.quadrature_n = static_cast<int>(cfg.get_int("quadrature_n", 0));
    const int n = static_cast<int>(cfg.get_int("lattice_n", 32));
    const auto rep = qpkr::verify_mapping(p.K, p.hbar_eff, p.epsilon, p.omega2, n, opt);
    json out = qpkr::to_json(rep);
    if (!c.out.empty()) {
        const std::filesystem::path dir = c.out;
        const int R = cfg.has("hopping_range") ? opt.R : qpkr::kDefaultHoppingRange;
        const auto table = qpkr::hopping_table(p.K, p.hbar_eff, p.epsilon, R, opt.quadrature_n);
        qpkr::write_file_atomic(dir / "hopping.json", qpkr::to_json(table).dump(2) + "\n");
        const double E = cfg.get_double("quasi_energy", 0.0);
        const auto field = qpkr::onsite_field(-32, 64, -32, 64, E, p.hbar_eff, p.omega2);
        qpkr::write_file_atomic(dir / "onsite.csv", qpkr::onsite_csv(field));
        qpkr::write_file_atomic(dir / "mapping.json", out.dump(2) + "\n");
    }
    print(out);
    return rep.fraction_below_threshold >= 0.9 ? 0 : 4;
}

int cmd_classical(const Common& c) {
    const auto cfg = load_config(c);
    const auto p = qpkr::sim_params_from(cfg, {.K = 10.0, .epsilon = 0.5});
    const int n_traj = static_cast<int>(cfg.get_int("n_traj", 100000));
    const int n_steps = static_cast<int>(cfg.get_int("n_steps", 200));
    const auto seed = cfg.get_u64("master_seed", qpkr::EnsembleSpec{}.master_seed);
    const auto m = qpkr::simulate(p, n_traj, n_steps, seed, resolve_workers(c));
    qpkr::FitWindow window;
    window.t_min = static_cast<int>(cfg.get_int("fit_t_min", window.t_min));
    const auto d = qpkr::estimate_diffusion(m, window);
    json out{{"diffusion", qpkr::to_json(d)},
             {"quasilinear", {{"d11", qpkr::quasilinear_d11(p.K, p.epsilon)}, {"d22", qpkr::quasilinear_d22(p.K, p.epsilon)}}}};
    if (!c.out.empty()) {
        const std::filesystem::path dir = c.out;
        qpkr::write_file_atomic(dir / "moments.csv", qpkr::moments_csv(m));
        qpkr::write_file_atomic(dir / "diffusion.json", out.dump(2) + "\n");
    }
    print(out);
    return 0;
}

int fail(const std::string& code, const std::string& message, int status) {
    std::cerr << json{{"error", code}, {"message", message}}.dump() << "\n";
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quasiperiodic kicked rotor simulator"};
    app.require_subcommand(1);
    Common c;
    auto* validate = app.add_subcommand("validate", "check a configuration");
    auto* run = app.add_subcommand("run", "run one ensemble");
    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    auto* report = app.add_subcommand("report", "summarize a sweep directory");
    auto* mapping = app.add_subcommand("verify-mapping", "check the Anderson-lattice mapping");
    auto* classical = app.add_subcommand("classical", "classical diffusion tensor");
    for (auto* cmd : {validate, run, sweep, report, mapping, classical}) add_common(cmd, c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), 2);
    }

    try {
        if (*validate) return cmd_validate(c);
        if (*run) return cmd_sweep(c, true);
        if (*sweep) return cmd_sweep(c, false);
        if (*report) return cmd_report(c);
        if (*mapping) return cmd_verify_mapping(c);
        if (*classical) return cmd_classical(c);
    } catch (const qpkr::Error& e) {
        return fail(e.code(), e.what(), 1);
    } catch (const qpkr::json::exception& e) {
        return fail("io_error", e.what(), 1);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 1);
    }
    return 0;
}
