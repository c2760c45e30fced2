#include "dmcanc/plant.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace dmcanc {

namespace {

// Substream component ids for plant synthesis.
constexpr std::uint64_t kStreamPrimary = 11;
constexpr std::uint64_t kStreamSecondary = 12;
constexpr std::uint64_t kStreamConstructedSelf = 13;
constexpr std::uint64_t kStreamConstructedKernel = 14;

std::vector<double> decaying_tail(GaussianRng& rng, std::size_t taps, double decay) {
    std::vector<double> tail(taps);
    for (std::size_t i = 0; i < taps; ++i)
        tail[i] = rng.next() * std::exp(-static_cast<double>(i) / decay);
    return tail;
}

void peak_normalize(std::vector<double>& v) {
    double peak = 0.0;
    for (double x : v)
        peak = std::max(peak, std::fabs(x));
    if (peak <= 0.0)
        throw ArgumentError("path synthesis produced an all-zero filter");
    for (double& x : v)
        x /= peak;
}

void energy_normalize(std::vector<double>& v) {
    double e = 0.0;
    for (double x : v)
        e += x * x;
    if (e <= 0.0)
        throw ArgumentError("path synthesis produced an all-zero filter");
    const double g = 1.0 / std::sqrt(e);
    for (double& x : v)
        x *= g;
}

std::vector<double> zero_pad(std::vector<double> v, std::size_t len) {
    v.resize(len, 0.0);
    return v;
}

// Band-pass prototype convolved with a seeded decaying tail; the result has
// exactly `taps` coefficients.
std::vector<double> synth_path(std::size_t taps, double band_low, double band_high, double fs,
                               const PathRecipe& recipe, double head_boost, std::uint64_t seed) {
    if (recipe.tail_taps + 2 > taps)
        throw ArgumentError("synth_path: tail longer than the path");
    const std::size_t proto_taps = taps - recipe.tail_taps + 1;
    FirFilter proto = design_bandpass(proto_taps, band_low, band_high, fs);
    GaussianRng rng(seed);
    std::vector<double> tail = decaying_tail(rng, recipe.tail_taps, recipe.tail_decay);
    if (head_boost > 0.0)
        tail[0] = head_boost + std::fabs(tail[0]);
    std::vector<double> path = convolve(proto.coeffs(), tail);
    peak_normalize(path);
    return path;
}

}  // namespace

void Plant::validate() const {
    if (n_nodes == 0 || fs <= 0.0)
        throw ArgumentError("plant: empty or invalid");
    if (primary.size() != n_nodes || secondary.size() != n_nodes)
        throw ArgumentError("plant: path table shape mismatch");
    for (const auto& row : secondary) {
        if (row.size() != n_nodes)
            throw ArgumentError("plant: secondary matrix must be n_nodes x n_nodes");
        for (const auto& f : row)
            if (f.num_taps() != row.front().num_taps() || f.num_taps() != secondary.front().front().num_taps())
                throw ArgumentError("plant: secondary paths must share one tap length");
    }
}

PlantStepOutput Plant::step(double x_n, std::span<const double> y) {
    if (y.size() != n_nodes)
        throw ArgumentError("plant step: control vector must have one entry per node");
    PlantStepOutput out;
    out.d.resize(n_nodes);
    out.e.resize(n_nodes);
    for (std::size_t k = 0; k < n_nodes; ++k) {
        out.d[k] = primary[k].step(x_n);
        double cancel = 0.0;
        for (std::size_t m = 0; m < n_nodes; ++m)
            cancel += secondary[k][m].step(y[m]);
        out.e[k] = out.d[k] - cancel;
    }
    return out;
}

void Plant::reset_streams() {
    for (auto& f : primary)
        f.reset();
    for (auto& row : secondary)
        for (auto& f : row)
            f.reset();
}

Plant synthesize_plant(std::size_t n_nodes, std::size_t self_taps, std::size_t cross_taps,
                       std::size_t primary_taps, double band_low, double band_high, double fs,
                       std::uint64_t seed, const PathRecipe& recipe) {
    if (n_nodes == 0)
        throw ArgumentError("synthesize_plant: need at least one node");
    if (self_taps > cross_taps)
        throw ArgumentError("synthesize_plant: self paths must not exceed cross length");

    Plant plant;
    plant.n_nodes = n_nodes;
    plant.fs = fs;
    plant.seed = seed;
    plant.self_taps = self_taps;
    plant.cross_taps = cross_taps;
    plant.primary_taps = primary_taps;
    plant.band_low = band_low;
    plant.band_high = band_high;

    for (std::size_t k = 0; k < n_nodes; ++k) {
        std::vector<double> p = synth_path(primary_taps, band_low, band_high, fs, recipe, 0.0,
                                           substream_seed(seed, kStreamPrimary, k));
        energy_normalize(p);  // unit-energy primary keeps disturbance power near 1
        plant.primary.emplace_back(std::move(p));
    }
    for (std::size_t k = 0; k < n_nodes; ++k) {
        plant.secondary.emplace_back();
        for (std::size_t m = 0; m < n_nodes; ++m) {
            const std::size_t taps = (k == m) ? self_taps : cross_taps;
            const double boost = (k == m) ? recipe.self_head_boost : 0.0;
            std::vector<double> s = synth_path(taps, band_low, band_high, fs, recipe, boost,
                                               substream_seed(seed, kStreamSecondary, k * n_nodes + m));
            if (k != m)
                for (double& v : s)
                    v *= recipe.cross_gain;
            plant.secondary[k].emplace_back(zero_pad(std::move(s), cross_taps));
        }
    }
    plant.validate();
    return plant;
}

ConstructedPlant synthesize_constructed_plant(std::size_t n_nodes, std::size_t self_taps,
                                              std::size_t comp_taps, std::size_t cross_taps,
                                              std::size_t primary_taps, double fs,
                                              std::uint64_t seed) {
    if (self_taps + comp_taps - 1 > cross_taps)
        throw ArgumentError("constructed plant: cross length too short for self*kernel");

    ConstructedPlant out;
    Plant& plant = out.plant;
    plant.n_nodes = n_nodes;
    plant.fs = fs;
    plant.seed = seed;
    plant.self_taps = self_taps;
    plant.cross_taps = cross_taps;
    plant.primary_taps = primary_taps;
    plant.band_low = 0.0;
    plant.band_high = fs / 2.0;

    std::vector<std::vector<double>> self_paths(n_nodes);
    for (std::size_t k = 0; k < n_nodes; ++k) {
        GaussianRng rng(substream_seed(seed, kStreamConstructedSelf, k));
        std::vector<double> s(self_taps, 0.0);
        s[0] = 1.0;  // broadband: spectrum bounded away from zero
        const double tau = static_cast<double>(self_taps) / 8.0;
        for (std::size_t i = 1; i < self_taps; ++i)
            s[i] = 0.3 * rng.next() * std::exp(-static_cast<double>(i) / tau);
        peak_normalize(s);
        self_paths[k] = std::move(s);

        GaussianRng prng(substream_seed(seed, kStreamPrimary, k));
        std::vector<double> p(primary_taps);
        const double ptau = static_cast<double>(primary_taps) / 4.0;
        for (std::size_t i = 0; i < primary_taps; ++i)
            p[i] = prng.next() * std::exp(-static_cast<double>(i) / ptau);
        energy_normalize(p);
        plant.primary.emplace_back(std::move(p));
    }

    out.true_c.assign(n_nodes, std::vector<std::vector<double>>(n_nodes));
    for (std::size_t k = 0; k < n_nodes; ++k) {
        plant.secondary.emplace_back();
        for (std::size_t m = 0; m < n_nodes; ++m) {
            if (k == m) {
                plant.secondary[k].emplace_back(zero_pad(self_paths[k], cross_taps));
                continue;
            }
            GaussianRng rng(substream_seed(seed, kStreamConstructedKernel, k * n_nodes + m));
            std::vector<double> c(comp_taps);
            const double tau = static_cast<double>(comp_taps) / 4.0;
            for (std::size_t i = 0; i < comp_taps; ++i)
                c[i] = rng.next() * std::exp(-static_cast<double>(i) / tau);
            double e = 0.0;
            for (double x : c)
                e += x * x;
            const double g = 0.5 / std::sqrt(e);  // moderate cross coupling
            for (double& x : c)
                x *= g;
            std::vector<double> cross = convolve(self_paths[k], c);
            plant.secondary[k].emplace_back(zero_pad(std::move(cross), cross_taps));
            out.true_c[k][m] = std::move(c);
        }
    }
    plant.validate();
    return out;
}

Signal interference(const Plant& plant, const std::vector<Signal>& y_histories, std::size_t k) {
    if (k >= plant.n_nodes)
        throw ArgumentError("interference: node index out of range");
    if (y_histories.size() != plant.n_nodes)
        throw ArgumentError("interference: need one history per node");
    Signal gamma;
    gamma.sample_rate = plant.fs;
    const std::size_t n = y_histories.empty() ? 0 : y_histories[0].samples.size();
    gamma.samples.assign(n, 0.0);
    for (std::size_t m = 0; m < plant.n_nodes; ++m) {
        if (m == k)
            continue;
        std::vector<double> contrib =
            convolve(y_histories[m].samples, plant.secondary[k][m].coeffs());
        for (std::size_t i = 0; i < n; ++i)
            gamma.samples[i] += contrib[i];
    }
    return gamma;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::map<std::string, std::string> read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot open: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(f, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos)
            continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

}  // namespace

void save_plant(const Plant& plant, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t k = 0; k < plant.n_nodes; ++k) {
        save_coeffs(dir + "/primary_" + std::to_string(k + 1) + ".txt", plant.primary[k].coeffs());
        for (std::size_t m = 0; m < plant.n_nodes; ++m)
            save_coeffs(dir + "/secondary_" + std::to_string(k + 1) + "_" + std::to_string(m + 1) + ".txt",
                        plant.secondary[k][m].coeffs());
    }
    std::ofstream f(dir + "/manifest.txt");
    if (!f)
        throw IoError("cannot write manifest in " + dir);
    f << "n_nodes=" << plant.n_nodes << "\n"
      << "fs=" << plant.fs << "\n"
      << "self_taps=" << plant.self_taps << "\n"
      << "cross_taps=" << plant.cross_taps << "\n"
      << "primary_taps=" << plant.primary_taps << "\n"
      << "band_low=" << plant.band_low << "\n"
      << "band_high=" << plant.band_high << "\n"
      << "seed=" << plant.seed << "\n";
}

Plant load_plant(const std::string& dir) {
    auto kv = read_manifest(dir + "/manifest.txt");
    Plant plant;
    try {
        plant.n_nodes = std::stoull(kv.at("n_nodes"));
        plant.fs = std::stod(kv.at("fs"));
        plant.self_taps = std::stoull(kv.at("self_taps"));
        plant.cross_taps = std::stoull(kv.at("cross_taps"));
        plant.primary_taps = std::stoull(kv.at("primary_taps"));
        plant.band_low = std::stod(kv.at("band_low"));
        plant.band_high = std::stod(kv.at("band_high"));
        plant.seed = std::stoull(kv.at("seed"));
    } catch (const std::exception&) {
        throw IoError("incomplete plant manifest in " + dir);
    }
    for (std::size_t k = 0; k < plant.n_nodes; ++k) {
        plant.primary.emplace_back(load_coeffs(dir + "/primary_" + std::to_string(k + 1) + ".txt"));
        plant.secondary.emplace_back();
        for (std::size_t m = 0; m < plant.n_nodes; ++m)
            plant.secondary[k].emplace_back(load_coeffs(dir + "/secondary_" + std::to_string(k + 1) +
                                                        "_" + std::to_string(m + 1) + ".txt"));
    }
    plant.validate();
    return plant;
}

}  // namespace dmcanc
