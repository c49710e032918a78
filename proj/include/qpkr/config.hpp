// Flat key-value configuration files:
//
//   # comment
//   K = 5.34
//   hbar_eff = 2.89
//   epsilon_values = 0, 0.06, 0.12
//   beta_sampling = uniform        # or a fixed number
//
// Keys are the field names of SimParams / EnsembleSpec plus the sweep and tool
// keys listed in kKnownKeys. Unknown keys are rejected.
#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qpkr/core.hpp"
#include "qpkr/io.hpp"

namespace qpkr {

inline constexpr std::array<std::string_view, 24> kKnownKeys = {
    "K",           "hbar_eff",       "epsilon",      "omega2",        "phi2",          "beta",
    "n_kicks",     "grid_n",         "n_realizations", "master_seed", "beta_sampling", "phi2_sampling",
    "record_times", "K_values",      "hbar_values",  "epsilon_values", "max_grid_n",   "lattice_n",
    "n_traj",      "n_steps",        "fit_t_min",    "hopping_range", "quadrature_n",  "quasi_energy"};

class KeyValueConfig {
  public:
    static KeyValueConfig parse(std::string_view text) {
        KeyValueConfig c;
        std::istringstream in{std::string(text)};
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const std::string t = trim(line);
            if (t.empty()) continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(t.substr(0, eq));
            const std::string value = trim(t.substr(eq + 1));
            if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end())
                throw ValidationError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
            if (value.empty()) throw ValidationError("config key '" + key + "' has no value");
            c.values_[key] = value;
        }
        return c;
    }

    static KeyValueConfig load(const std::filesystem::path& path) { return parse(read_file(path)); }

    bool has(const std::string& key) const { return values_.contains(key); }
    const std::string& raw(const std::string& key) const { return values_.at(key); }

    double get_double(const std::string& key, double fallback) const {
        return has(key) ? to_double(key, raw(key)) : fallback;
    }
    long long get_int(const std::string& key, long long fallback) const {
        return has(key) ? to_int(key, raw(key)) : fallback;
    }
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        std::uint64_t v = 0;
        const auto& s = raw(key);
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size())
            throw ValidationError("config key '" + key + "' is not an unsigned integer");
        return v;
    }
    std::vector<double> get_doubles(const std::string& key) const {
        std::vector<double> out;
        if (has(key))
            for (const auto& item : split_list(raw(key))) out.push_back(to_double(key, item));
        return out;
    }
    std::vector<int> get_ints(const std::string& key) const {
        std::vector<int> out;
        if (has(key))
            for (const auto& item : split_list(raw(key))) out.push_back(static_cast<int>(to_int(key, item)));
        return out;
    }
    Sampling get_sampling(const std::string& key, Sampling fallback) const {
        if (!has(key)) return fallback;
        if (raw(key) == "uniform") return Sampling::uniform_draw();
        return Sampling::fixed(to_double(key, raw(key)));
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

  private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }
    static std::vector<std::string> split_list(const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }
    static double to_double(const std::string& key, const std::string& s) {
        double v = 0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size())
            throw ValidationError("config key '" + key + "' is not a decimal number: " + s);
        return v;
    }
    static long long to_int(const std::string& key, const std::string& s) {
        long long v = 0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size())
            throw ValidationError("config key '" + key + "' is not an integer: " + s);
        return v;
    }

    std::map<std::string, std::string> values_;
};

inline SimParams sim_params_from(const KeyValueConfig& c, SimParams base = {}) {
    base.K = c.get_double("K", base.K);
    base.hbar_eff = c.get_double("hbar_eff", base.hbar_eff);
    base.epsilon = c.get_double("epsilon", base.epsilon);
    base.omega2 = c.get_double("omega2", base.omega2);
    base.phi2 = c.get_double("phi2", base.phi2);
    base.beta = c.get_double("beta", base.beta);
    base.n_kicks = static_cast<int>(c.get_int("n_kicks", base.n_kicks));
    base.grid_n = static_cast<int>(c.get_int("grid_n", base.grid_n));
    return base;
}

inline EnsembleSpec ensemble_from(const KeyValueConfig& c, EnsembleSpec base = {}) {
    base.n_realizations = static_cast<int>(c.get_int("n_realizations", base.n_realizations));
    base.master_seed = c.get_u64("master_seed", base.master_seed);
    base.beta_sampling = c.get_sampling("beta_sampling", base.beta_sampling);
    base.phi2_sampling = c.get_sampling("phi2_sampling", base.phi2_sampling);
    return base;
}

}  // namespace qpkr
