#include "dmcanc/compensation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dmcanc {

namespace {

constexpr std::size_t kBlockSamples = 1000;
constexpr double kDivergenceFactor = 10.0;
constexpr double kDbFloor = -120.0;

double to_db(double power) {
    return power > 0.0 ? std::max(kDbFloor, 10.0 * std::log10(power)) : kDbFloor;
}

bool trace_converged(const std::vector<double>& trace_db) {
    if (trace_db.size() < 20)
        return false;
    double tail = 0.0, prev = 0.0;
    for (std::size_t i = trace_db.size() - 10; i < trace_db.size(); ++i)
        tail += trace_db[i];
    for (std::size_t i = trace_db.size() - 20; i < trace_db.size() - 10; ++i)
        prev += trace_db[i];
    return std::fabs(tail - prev) / 10.0 <= 1.0;
}

}  // namespace

std::pair<FirFilter, CompensationFitReport> fit_compensation(const Plant& plant, std::size_t k,
                                                             std::size_t m,
                                                             const FirFilter& s_kk_est,
                                                             double mu_c, std::size_t n_samples,
                                                             std::size_t comp_taps,
                                                             std::uint64_t seed,
                                                             std::span<const double> init) {
    if (k == m)
        throw ArgumentError("fit_compensation: no compensation filter for a node's own path");
    if (k >= plant.n_nodes || m >= plant.n_nodes)
        throw ArgumentError("fit_compensation: node index out of range");
    if (mu_c < 0.0)
        throw ArgumentError("fit_compensation: negative step size");
    if (comp_taps == 0)
        throw ArgumentError("fit_compensation: need at least one tap");
    if (!init.empty() && init.size() != comp_taps)
        throw ArgumentError("fit_compensation: warm-start length mismatch");

    // Fresh zero-state streams over the true paths; the plant's own streaming
    // state is left untouched.
    FirFilter cross(plant.secondary[k][m].coeffs());
    FirFilter self(plant.secondary[k][k].coeffs());
    FirFilter self_est(s_kk_est.coeffs());

    std::vector<double> c(comp_taps, 0.0);
    if (!init.empty())
        c.assign(init.begin(), init.end());
    HistoryRing v_hist(comp_taps);
    HistoryRing vhat_hist(comp_taps);

    GaussianRng rng(seed);
    CompensationFitReport report;
    report.iterations = n_samples;

    double block_power = 0.0;
    std::size_t block_fill = 0;
    double first_block_power = -1.0;

    for (std::size_t n = 0; n < n_samples; ++n) {
        const double v = rng.next();
        const double desired = cross.step(v);
        v_hist.push(v);
        const double model_drive = dot_reversed(c, v_hist.window());
        const double model_out = self.step(model_drive);
        const double err = desired - model_out;
        const double vhat = self_est.step(v);
        vhat_hist.push(vhat);
        axpy_reversed(c, vhat_hist.window(), mu_c * err);

        block_power += err * err;
        if (++block_fill == kBlockSamples) {
            block_power /= static_cast<double>(kBlockSamples);
            report.error_power_trace_db.push_back(to_db(block_power));
            if (first_block_power < 0.0)
                first_block_power = block_power;
            else if (first_block_power > 0.0 && block_power >= kDivergenceFactor * first_block_power)
                throw DivergenceError("compensation fit diverged (mu_c=" + std::to_string(mu_c) +
                                          ") for pair (" + std::to_string(k + 1) + "," +
                                          std::to_string(m + 1) + ")",
                                      static_cast<long long>(n));
            block_power = 0.0;
            block_fill = 0;
        }
        if (!std::isfinite(err))
            throw DivergenceError("compensation fit produced non-finite error (mu_c=" +
                                      std::to_string(mu_c) + ")",
                                  static_cast<long long>(n));
    }
    report.converged = trace_converged(report.error_power_trace_db);
    return {FirFilter(std::move(c)), report};
}

double compensation_residual(std::span<const double> s_kk, std::span<const double> s_km,
                             std::span<const double> c_km) {
    double target_energy = 0.0;
    for (double v : s_km)
        target_energy += v * v;
    if (target_energy <= 0.0)
        throw ArgumentError("compensation_residual: zero-norm cross path");

    const std::vector<double> model = convolve(s_kk, c_km);
    const std::size_t len = std::max(model.size(), s_km.size());
    double err = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        const double a = i < s_km.size() ? s_km[i] : 0.0;
        const double b = i < model.size() ? model[i] : 0.0;
        err += (a - b) * (a - b);
    }
    return 10.0 * std::log10(err / target_energy);
}

std::vector<CompensationSet> fit_all(const Plant& plant, const std::vector<FirFilter>& estimates,
                                     double mu_c, std::size_t n_samples, std::size_t comp_taps,
                                     std::uint64_t seed) {
    if (estimates.size() != plant.n_nodes)
        throw ArgumentError("fit_all: need one self-path estimate per node");
    std::vector<CompensationSet> sets(plant.n_nodes);
    for (std::size_t k = 0; k < plant.n_nodes; ++k) {
        sets[k].owner = k;
        for (std::size_t m = 0; m < plant.n_nodes; ++m) {
            if (m == k)
                continue;
            const std::uint64_t pair_seed = substream_seed(seed, 21, k * plant.n_nodes + m);
            try {
                auto [filter, report] =
                    fit_compensation(plant, k, m, estimates[k], mu_c, n_samples, comp_taps, pair_seed);
                sets[k].residual_db[m] = compensation_residual(
                    plant.secondary[k][k].coeffs(), plant.secondary[k][m].coeffs(), filter.coeffs());
                sets[k].filters.emplace(m, std::move(filter));
            } catch (const DivergenceError& err) {
                throw DivergenceError("fit_all: pair (" + std::to_string(k + 1) + "," +
                                          std::to_string(m + 1) + "): " + err.what(),
                                      err.sample_index);
            }
        }
    }
    return sets;
}

std::vector<FirFilter> self_path_estimates(const Plant& plant, double perturb, std::uint64_t seed) {
    std::vector<FirFilter> est;
    for (std::size_t k = 0; k < plant.n_nodes; ++k) {
        std::vector<double> taps = plant.secondary[k][k].coeffs();
        if (perturb > 0.0) {
            double rms = 0.0;
            for (double v : taps)
                rms += v * v;
            rms = std::sqrt(rms / static_cast<double>(taps.size()));
            GaussianRng rng(substream_seed(seed, 22, k));
            for (double& v : taps)
                v += perturb * rms * rng.next();
        }
        est.emplace_back(std::move(taps));
    }
    return est;
}

// ---------------------------------------------------------------------------
// Serialization

void save_compensation(const std::vector<CompensationSet>& sets, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir + "/manifest.txt");
    if (!manifest)
        throw IoError("cannot write manifest in " + dir);
    manifest << "n_nodes=" << sets.size() << "\n";
    char buf[64];
    for (const auto& set : sets) {
        for (const auto& [m, filter] : set.filters) {
            save_coeffs(dir + "/comp_" + std::to_string(set.owner + 1) + "_" + std::to_string(m + 1) +
                            ".txt",
                        filter.coeffs());
            std::snprintf(buf, sizeof buf, "%.17g", set.residual_db.at(m));
            manifest << "residual_" << set.owner + 1 << "_" << m + 1 << "=" << buf << "\n";
        }
    }
}

std::vector<CompensationSet> load_compensation(const std::string& dir) {
    std::ifstream manifest(dir + "/manifest.txt");
    if (!manifest)
        throw IoError("cannot open: " + dir + "/manifest.txt");
    std::size_t n_nodes = 0;
    std::map<std::pair<std::size_t, std::size_t>, double> residuals;
    std::string line;
    while (std::getline(manifest, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos)
            continue;
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "n_nodes") {
            n_nodes = std::stoull(value);
        } else if (key.rfind("residual_", 0) == 0) {
            std::size_t k = 0, m = 0;
            if (std::sscanf(key.c_str(), "residual_%zu_%zu", &k, &m) == 2)
                residuals[{k, m}] = std::stod(value);
        }
    }
    if (n_nodes == 0)
        throw IoError("bad compensation manifest in " + dir);
    std::vector<CompensationSet> sets(n_nodes);
    for (std::size_t k = 0; k < n_nodes; ++k) {
        sets[k].owner = k;
        for (std::size_t m = 0; m < n_nodes; ++m) {
            if (m == k)
                continue;
            sets[k].filters.emplace(
                m, FirFilter(load_coeffs(dir + "/comp_" + std::to_string(k + 1) + "_" +
                                         std::to_string(m + 1) + ".txt")));
            auto it = residuals.find({k + 1, m + 1});
            sets[k].residual_db[m] = it == residuals.end() ? 0.0 : it->second;
        }
    }
    return sets;
}

}  // namespace dmcanc
