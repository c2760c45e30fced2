#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dmcanc/harness.hpp"

namespace dmcanc {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::size_t parse_count(const std::string& key, const std::string& value) {
    try {
        const long long v = std::stoll(value);
        if (v < 0)
            throw ConfigError(key + ": must be non-negative");
        return static_cast<std::size_t>(v);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError(key + ": cannot parse '" + value + "' as a count");
    }
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        return std::stod(value);
    } catch (const std::exception&) {
        throw ConfigError(key + ": cannot parse '" + value + "' as a number");
    }
}

std::uint64_t parse_seed(const std::string& key, const std::string& value) {
    try {
        return std::stoull(value);
    } catch (const std::exception&) {
        throw ConfigError(key + ": cannot parse '" + value + "' as a seed");
    }
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (key == "n_nodes") n_nodes = parse_count(key, value);
    else if (key == "fs") fs = parse_real(key, value);
    else if (key == "duration") duration = parse_count(key, value);
    else if (key == "noise_low_hz") noise_low_hz = parse_real(key, value);
    else if (key == "noise_high_hz") noise_high_hz = parse_real(key, value);
    else if (key == "path_low_hz") path_low_hz = parse_real(key, value);
    else if (key == "path_high_hz") path_high_hz = parse_real(key, value);
    else if (key == "self_taps") self_taps = parse_count(key, value);
    else if (key == "cross_taps") cross_taps = parse_count(key, value);
    else if (key == "primary_taps") primary_taps = parse_count(key, value);
    else if (key == "psi_taps") psi_taps = parse_count(key, value);
    else if (key == "comp_taps") comp_taps = parse_count(key, value);
    else if (key == "mu_psi") mu_psi = parse_real(key, value);
    else if (key == "mu_c") mu_c = parse_real(key, value);
    else if (key == "comp_samples") comp_samples = parse_count(key, value);
    else if (key == "algorithm") algorithm = value;
    else if (key == "comm") comm = value;
    else if (key == "n_runs") n_runs = parse_count(key, value);
    else if (key == "seed") seed = parse_seed(key, value);
    else if (key == "comm_seed") comm_seed = parse_seed(key, value);
    else if (key == "smooth_window") smooth_window = parse_count(key, value);
    else if (key == "decimation") decimation = parse_count(key, value);
    else if (key == "w_update_interval") w_update_interval = parse_count(key, value);
    else if (key == "bus_capacity") bus_capacity = parse_count(key, value);
    else if (key == "threads") threads = parse_count(key, value);
    else if (key == "path_tail_taps") path_tail_taps = parse_count(key, value);
    else if (key == "path_tail_decay") path_tail_decay = parse_real(key, value);
    else if (key == "path_self_boost") path_self_boost = parse_real(key, value);
    else if (key == "path_cross_gain") path_cross_gain = parse_real(key, value);
    else if (key == "estimate_perturb") estimate_perturb = parse_real(key, value);
    else if (key == "plant_dir") plant_dir = value;
    else if (key == "compensation_dir") compensation_dir = value;
    else if (key == "profile") *this = profile(value);
    else throw ConfigError("unknown config key '" + key + "'");
}

std::string ExperimentConfig::get(const std::string& key) const {
    std::ostringstream out;
    if (key == "n_nodes") out << n_nodes;
    else if (key == "fs") out << fs;
    else if (key == "duration") out << duration;
    else if (key == "noise_low_hz") out << noise_low_hz;
    else if (key == "noise_high_hz") out << noise_high_hz;
    else if (key == "path_low_hz") out << path_low_hz;
    else if (key == "path_high_hz") out << path_high_hz;
    else if (key == "self_taps") out << self_taps;
    else if (key == "cross_taps") out << cross_taps;
    else if (key == "primary_taps") out << primary_taps;
    else if (key == "psi_taps") out << psi_taps;
    else if (key == "comp_taps") out << comp_taps;
    else if (key == "mu_psi") out << mu_psi;
    else if (key == "mu_c") out << mu_c;
    else if (key == "comp_samples") out << comp_samples;
    else if (key == "algorithm") out << algorithm;
    else if (key == "comm") out << comm;
    else if (key == "n_runs") out << n_runs;
    else if (key == "seed") out << seed;
    else if (key == "comm_seed") out << comm_seed;
    else if (key == "smooth_window") out << smooth_window;
    else if (key == "decimation") out << decimation;
    else if (key == "w_update_interval") out << w_update_interval;
    else if (key == "bus_capacity") out << bus_capacity;
    else if (key == "threads") out << threads;
    else if (key == "path_tail_taps") out << path_tail_taps;
    else if (key == "path_tail_decay") out << path_tail_decay;
    else if (key == "path_self_boost") out << path_self_boost;
    else if (key == "path_cross_gain") out << path_cross_gain;
    else if (key == "estimate_perturb") out << estimate_perturb;
    else if (key == "plant_dir") out << plant_dir;
    else if (key == "compensation_dir") out << compensation_dir;
    else throw ConfigError("unknown config key '" + key + "'");
    return out.str();
}

void ExperimentConfig::validate() const {
    if (n_nodes < 1)
        throw ConfigError("n_nodes: need at least one node");
    if (fs <= 0.0)
        throw ConfigError("fs: must be positive");
    if (duration < 1)
        throw ConfigError("duration: must be positive");
    if (psi_taps < 1 || comp_taps < 1)
        throw ConfigError("psi_taps/comp_taps: must be positive");
    if (self_taps < 3 || cross_taps < 3 || primary_taps < 3)
        throw ConfigError("path taps: must be at least 3");
    if (self_taps > cross_taps)
        throw ConfigError("self_taps must not exceed cross_taps");
    if (mu_psi < 0.0 || mu_c < 0.0)
        throw ConfigError("step sizes must be non-negative");
    if (!(noise_low_hz > 0.0 && noise_low_hz < noise_high_hz && noise_high_hz < fs / 2.0))
        throw ConfigError("noise band: need 0 < low < high < fs/2");
    if (!(path_low_hz > 0.0 && path_low_hz < path_high_hz && path_high_hz < fs / 2.0))
        throw ConfigError("path band: need 0 < low < high < fs/2");
    if (algorithm != "dmcanc" && algorithm != "centralized")
        throw ConfigError("algorithm: expected 'dmcanc' or 'centralized'");
    if (n_runs < 1)
        throw ConfigError("n_runs: need at least one run");
    if (smooth_window < 1 || decimation < 1)
        throw ConfigError("smooth_window/decimation: must be positive");
    if (decimation > duration)
        throw ConfigError("decimation: exceeds duration");
    if (path_tail_taps + 2 > std::min({self_taps, cross_taps, primary_taps}))
        throw ConfigError("path_tail_taps: leaves no room for the band-pass prototype");
    if (path_tail_decay <= 0.0)
        throw ConfigError("path_tail_decay: must be positive");
    if (path_self_boost < 0.0)
        throw ConfigError("path_self_boost: must be non-negative");
    if (!(path_cross_gain > 0.0))
        throw ConfigError("path_cross_gain: must be positive");
    if (estimate_perturb < 0.0)
        throw ConfigError("estimate_perturb: must be non-negative");
    CommPolicy::parse(comm, fs, 0);  // validates the spec string
}

std::vector<std::string> ExperimentConfig::warnings() const {
    std::vector<std::string> out;
    if (duration < 10 * psi_taps)
        out.push_back("duration is shorter than 10x the control filter length; traces may not settle");
    return out;
}

CommPolicy ExperimentConfig::policy(std::uint64_t run_seed) const {
    return CommPolicy::parse(comm, fs, substream_seed(run_seed, 42, comm_seed));
}

ExperimentConfig ExperimentConfig::profile(const std::string& name) {
    if (name == "paper" || name == "default")
        return ExperimentConfig{};
    if (name == "ci") {
        ExperimentConfig cfg;
        cfg.n_nodes = 3;
        cfg.fs = 8000.0;
        cfg.duration = 200'000;
        cfg.path_high_hz = 3500.0;
        cfg.self_taps = 64;
        cfg.cross_taps = 80;
        cfg.primary_taps = 80;
        cfg.psi_taps = 128;
        cfg.comp_taps = 16;
        cfg.mu_psi = 4e-4;
        cfg.mu_c = 2e-3;
        cfg.comp_samples = 200'000;
        cfg.n_runs = 10;
        cfg.smooth_window = 2000;
        cfg.decimation = 50;
        cfg.path_tail_taps = 8;
        cfg.path_tail_decay = 2.0;
        return cfg;
    }
    throw ConfigError("unknown profile '" + name + "' (expected paper | ci)");
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw ConfigError("cannot open config file: " + path);
    ExperimentConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

}  // namespace dmcanc
