#include "dmcanc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

namespace dmcanc {

namespace {

constexpr double kDbFloor = -120.0;
constexpr double kDivergenceFactor = 1e3;

// Substream components: 41 reference noise, 42 comm events (see config.cpp),
// 43 path estimates, 44 compensation fitting, 45 frozen-weight diagnostics.
constexpr std::uint64_t kStreamNoise = 41;
constexpr std::uint64_t kStreamEstimates = 43;
constexpr std::uint64_t kStreamCompFit = 44;
constexpr std::uint64_t kStreamFrozenPsi = 45;

double to_db(double power) {
    return power > 0.0 ? std::max(kDbFloor, 10.0 * std::log10(power)) : kDbFloor;
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// Trailing moving average of e^2, decimated.
class MseAccumulator {
public:
    MseAccumulator(std::size_t window, std::size_t decimation)
        : window_(window), decimation_(decimation), ring_(window, 0.0) {}

    void push(double e) {
        const double e2 = e * e;
        sum_ += e2 - ring_[n_ % window_];
        ring_[n_ % window_] = e2;
        ++n_;
        if (n_ % decimation_ == 0)
            points_.push_back(sum_ / static_cast<double>(std::min<std::size_t>(n_, window_)));
    }

    const std::vector<double>& points() const { return points_; }

private:
    std::size_t window_, decimation_;
    std::vector<double> ring_;
    double sum_ = 0.0;
    std::size_t n_ = 0;
    std::vector<double> points_;
};

std::vector<std::vector<FirFilter>> path_estimate_matrix(const Plant& plant, double perturb,
                                                         std::uint64_t seed) {
    std::vector<std::vector<FirFilter>> est(plant.n_nodes);
    for (std::size_t k = 0; k < plant.n_nodes; ++k) {
        for (std::size_t m = 0; m < plant.n_nodes; ++m) {
            std::vector<double> taps = plant.secondary[k][m].coeffs();
            if (perturb > 0.0) {
                double rms = 0.0;
                for (double v : taps)
                    rms += v * v;
                rms = std::sqrt(rms / static_cast<double>(taps.size()));
                GaussianRng rng(substream_seed(seed, kStreamEstimates, k * plant.n_nodes + m));
                for (double& v : taps)
                    v += perturb * rms * rng.next();
            }
            est[k].emplace_back(std::move(taps));
        }
    }
    return est;
}

}  // namespace

// ---------------------------------------------------------------------------
// MseTrace

double MseTrace::node_db(std::size_t k, std::size_t i) const { return to_db(node_power[k][i]); }

double MseTrace::mean_power(std::size_t i) const {
    double acc = 0.0;
    for (const auto& node : node_power)
        acc += node[i];
    return acc / static_cast<double>(node_power.size());
}

double MseTrace::mean_db(std::size_t i) const { return to_db(mean_power(i)); }

double MseTrace::final_mean_db(double tail_fraction) const {
    if (points() == 0)
        throw ArgumentError("final_mean_db: empty trace");
    const std::size_t tail = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                          std::llround(tail_fraction * points())));
    double acc = 0.0;
    for (std::size_t i = points() - tail; i < points(); ++i)
        acc += mean_power(i);
    return to_db(acc / static_cast<double>(tail));
}

MseTrace mse_smooth(const Signal& e, std::size_t window, std::size_t decimation) {
    if (window < 1 || decimation < 1)
        throw ArgumentError("mse_smooth: window and decimation must be positive");
    if (window > e.samples.size())
        throw ArgumentError("mse_smooth: window exceeds signal length");
    MseAccumulator acc(window, decimation);
    for (double v : e.samples)
        acc.push(v);
    MseTrace trace;
    trace.smooth_window = window;
    trace.decimation = decimation;
    trace.node_power.push_back(acc.points());
    for (std::size_t j = 1; j <= acc.points().size(); ++j)
        trace.sample_index.push_back(static_cast<long long>(j * decimation));
    return trace;
}

// ---------------------------------------------------------------------------
// Experiment setup

ExperimentSetup prepare_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentSetup setup;
    if (!cfg.plant_dir.empty())
        setup.plant = load_plant(cfg.plant_dir);
    else
        setup.plant = synthesize_plant(cfg.n_nodes, cfg.self_taps, cfg.cross_taps, cfg.primary_taps,
                                       cfg.path_low_hz, cfg.path_high_hz, cfg.fs, cfg.seed,
                                       cfg.recipe());
    if (setup.plant.n_nodes != cfg.n_nodes)
        throw ConfigError("plant node count does not match the configuration");

    setup.estimates = path_estimate_matrix(setup.plant, cfg.estimate_perturb,
                                           substream_seed(cfg.seed, kStreamEstimates));

    if (cfg.algorithm == "dmcanc") {
        if (!cfg.compensation_dir.empty()) {
            setup.comps = load_compensation(cfg.compensation_dir);
            if (setup.comps.size() != cfg.n_nodes)
                throw ConfigError("compensation set count does not match the configuration");
        } else {
            std::vector<FirFilter> diag;
            for (std::size_t k = 0; k < cfg.n_nodes; ++k)
                diag.push_back(setup.estimates[k][k]);
            setup.comps = fit_all(setup.plant, diag, cfg.mu_c, cfg.comp_samples, cfg.comp_taps,
                                  substream_seed(cfg.seed, kStreamCompFit));
        }
    }
    return setup;
}

// ---------------------------------------------------------------------------
// Single run

RunResult run_once(const ExperimentConfig& cfg, const ExperimentSetup& setup,
                   std::uint64_t run_seed, bool record) {
    const std::size_t N = cfg.n_nodes;
    const bool distributed = cfg.algorithm == "dmcanc";

    Plant plant = setup.plant;
    plant.reset_streams();
    const Signal x = bandlimited_noise(substream_seed(run_seed, kStreamNoise), cfg.duration,
                                       cfg.noise_low_hz, cfg.noise_high_hz, cfg.fs);
    const CommPolicy policy = cfg.policy(run_seed);

    RunResult res;
    res.mean_d2.assign(N, 0.0);
    res.staleness = StalenessStats(N);
    if (record) {
        res.records = std::make_shared<RunRecords>();
        res.records->x = x.samples;
        res.records->d.assign(N, {});
        res.records->e.assign(N, {});
        res.records->y.assign(N, {});
    }

    std::vector<DmcancNode> nodes;
    std::optional<CentralizedController> central;
    std::optional<CoefficientBus> bus;
    if (distributed) {
        if (setup.comps.size() != N)
            throw ConfigError("run: compensation sets missing for the distributed algorithm");
        for (std::size_t k = 0; k < N; ++k) {
            std::map<std::size_t, FirFilter> incoming;
            for (std::size_t m = 0; m < N; ++m)
                if (m != k)
                    incoming.emplace(m, setup.comps[m].filters.at(k));
            nodes.emplace_back(k, N, cfg.psi_taps, setup.comps[k], incoming, setup.estimates[k][k],
                               cfg.w_update_interval);
        }
        const std::size_t capacity =
            std::max<std::size_t>(cfg.bus_capacity,
                                  policy.kind == CommPolicy::Kind::Delay
                                      ? static_cast<std::size_t>(policy.delay_samples)
                                      : 0);
        bus.emplace(N, cfg.psi_taps, capacity);
    } else {
        central.emplace(N, cfg.psi_taps, setup.estimates);
    }

    std::vector<MseAccumulator> acc(N, MseAccumulator(cfg.smooth_window, cfg.decimation));
    const std::size_t warmup = std::min<std::size_t>(1000, cfg.duration);
    double warm_d2 = 0.0;
    double divergence_threshold = -1.0;  // set after warmup

    std::vector<double> y(N, 0.0);
    for (std::size_t n = 0; n < cfg.duration; ++n) {
        const double xn = x.samples[n];
        if (distributed) {
            for (std::size_t k = 0; k < N; ++k)
                y[k] = nodes[k].emit(xn);
        } else {
            y = central->emit(xn);
        }
        const PlantStepOutput out = plant.step(xn, y);

        bool blew_up = false;
        for (std::size_t k = 0; k < N; ++k) {
            res.mean_d2[k] += out.d[k] * out.d[k];
            acc[k].push(out.e[k]);
            if (!std::isfinite(out.e[k]) ||
                (divergence_threshold > 0.0 && std::fabs(out.e[k]) > divergence_threshold))
                blew_up = true;
        }
        if (n < warmup) {
            for (std::size_t k = 0; k < N; ++k)
                warm_d2 += out.d[k] * out.d[k];
            if (n + 1 == warmup)
                divergence_threshold = kDivergenceFactor *
                                       std::sqrt(warm_d2 / static_cast<double>(warmup * N));
        }
        if (record) {
            for (std::size_t k = 0; k < N; ++k) {
                res.records->d[k].push_back(out.d[k]);
                res.records->e[k].push_back(out.e[k]);
                res.records->y[k].push_back(y[k]);
            }
        }
        if (blew_up) {
            res.diverged = true;
            res.diverged_at = static_cast<long long>(n);
            break;
        }

        if (distributed) {
            const long long nn = static_cast<long long>(n);
            for (std::size_t k = 0; k < N; ++k)
                bus->publish(k, nodes[k].psi(), nn);
            for (std::size_t k = 0; k < N; ++k)
                if (auto delivery = bus->snapshot(policy, k, nn))
                    nodes[k].apply_delivery(*delivery);
            for (std::size_t k = 0; k < N; ++k)
                for (std::size_t m = 0; m < N; ++m)
                    if (m != k)
                        res.staleness.record(k, m, nn - bus->delivered_stamp(k, m));
        }

        try {
            if (distributed) {
                for (std::size_t k = 0; k < N; ++k)
                    nodes[k].update(out.e[k], cfg.mu_psi);
                for (std::size_t k = 0; k < N; ++k)
                    nodes[k].end_sample(static_cast<long long>(n));
            } else {
                central->update(out.e, cfg.mu_psi);
            }
        } catch (const DivergenceError&) {
            res.diverged = true;
            res.diverged_at = static_cast<long long>(n);
            break;
        }
    }

    for (std::size_t k = 0; k < N; ++k)
        res.mean_d2[k] /= static_cast<double>(res.diverged ? std::max<long long>(1, res.diverged_at + 1)
                                                           : cfg.duration);

    res.trace.smooth_window = cfg.smooth_window;
    res.trace.decimation = cfg.decimation;
    for (std::size_t k = 0; k < N; ++k)
        res.trace.node_power.push_back(acc[k].points());
    for (std::size_t j = 1; j <= res.trace.node_power[0].size(); ++j)
        res.trace.sample_index.push_back(static_cast<long long>(j * cfg.decimation));

    if (distributed) {
        for (auto& node : nodes) {
            res.local_weights.push_back(node.psi());
            res.global_weights.push_back(node.global_filter_now());
        }
    } else {
        res.local_weights = central->weights();
        res.global_weights = central->weights();
    }
    return res;
}

// ---------------------------------------------------------------------------
// Averaged runs

AveragedResult run_averaged(const ExperimentConfig& cfg, const ExperimentSetup& setup) {
    const std::size_t runs = cfg.n_runs;
    std::vector<RunResult> results(runs);

    std::size_t threads = cfg.threads == 0 ? std::thread::hardware_concurrency() : cfg.threads;
    threads = std::max<std::size_t>(1, std::min(threads, runs));

    if (threads == 1) {
        for (std::size_t i = 0; i < runs; ++i)
            results[i] = run_once(cfg, setup, cfg.seed + i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t i = next.fetch_add(1); i < runs; i = next.fetch_add(1))
                        results[i] = run_once(cfg, setup, cfg.seed + i);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool)
            th.join();
        for (auto& err : errors)
            if (err)
                std::rethrow_exception(err);
    }

    AveragedResult avg;
    avg.trace.smooth_window = cfg.smooth_window;
    avg.trace.decimation = cfg.decimation;
    avg.trace.run_averaged = true;

    double d2_acc = 0.0;
    for (std::size_t i = 0; i < runs; ++i) {
        const RunResult& r = results[i];
        if (r.diverged) {
            ++avg.runs_diverged;
            avg.warnings.push_back("run " + std::to_string(i + 1) + " diverged at sample " +
                                   std::to_string(r.diverged_at) + "; excluded from the average");
            continue;
        }
        if (avg.runs_completed == 0) {
            avg.trace.sample_index = r.trace.sample_index;
            avg.trace.node_power.assign(cfg.n_nodes,
                                        std::vector<double>(r.trace.sample_index.size(), 0.0));
            avg.global_weights = r.global_weights;
            avg.local_weights = r.local_weights;
        }
        for (std::size_t k = 0; k < cfg.n_nodes; ++k) {
            for (std::size_t j = 0; j < avg.trace.node_power[k].size(); ++j)
                avg.trace.node_power[k][j] += r.trace.node_power[k][j];
            d2_acc += r.mean_d2[k];
        }
        avg.staleness.merge(r.staleness);
        ++avg.runs_completed;
    }
    if (avg.runs_completed == 0)
        throw DivergenceError("every run diverged; nothing to average", results[0].diverged_at);

    const double inv = 1.0 / static_cast<double>(avg.runs_completed);
    for (auto& node : avg.trace.node_power)
        for (double& v : node)
            v *= inv;
    avg.initial_power_db = to_db(d2_acc * inv / static_cast<double>(cfg.n_nodes));
    return avg;
}

// ---------------------------------------------------------------------------
// Spectra

SpectraReport spectra_report(const std::vector<std::vector<double>>& weights_a,
                             const std::vector<std::vector<double>>& weights_b, double fs,
                             double band_low, double band_high) {
    if (weights_a.size() != weights_b.size() || weights_a.empty())
        throw ArgumentError("spectra_report: need matching non-empty filter sets");
    constexpr std::size_t kDftPoints = 4096;
    SpectraReport rep;
    rep.band_low = band_low;
    rep.band_high = band_high;
    for (std::size_t bin = 0; bin <= kDftPoints / 2; ++bin)
        rep.freq_hz.push_back(static_cast<double>(bin) * fs / kDftPoints);

    for (std::size_t k = 0; k < weights_a.size(); ++k) {
        std::vector<double> a = weights_a[k];
        std::vector<double> b = weights_b[k];
        const std::size_t len = std::max(a.size(), b.size());
        a.resize(len, 0.0);
        b.resize(len, 0.0);
        rep.mag_a.push_back(dft_magnitude(a, kDftPoints));
        rep.mag_b.push_back(dft_magnitude(b, kDftPoints));

        double dev = 0.0;
        for (std::size_t bin = 0; bin < rep.freq_hz.size(); ++bin) {
            const double f = rep.freq_hz[bin];
            if (f < band_low || f > band_high)
                continue;
            const double ma = std::max(rep.mag_a[k][bin], 1e-150);
            const double mb = std::max(rep.mag_b[k][bin], 1e-150);
            dev = std::max(dev, std::fabs(20.0 * std::log10(ma / mb)));
        }
        rep.max_dev_db.push_back(dev);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Sweep

std::vector<SweepPoint> sweep(const ExperimentConfig& cfg, const std::string& axis,
                              const std::vector<double>& points) {
    if (points.empty())
        throw ArgumentError("sweep: need at least one axis point");
    if (axis != "delay" && axis != "rate")
        throw ConfigError("sweep: axis must be 'delay' or 'rate'");

    ExperimentConfig base = cfg;
    base.algorithm = "dmcanc";
    const ExperimentSetup setup = prepare_experiment(base);

    std::vector<SweepPoint> out;
    for (double p : points) {
        ExperimentConfig point_cfg = base;
        if (axis == "delay")
            point_cfg.comm = "delay:" + std::to_string(static_cast<long long>(std::llround(p)));
        else
            point_cfg.comm = "intermittent:" + fmt(p);
        point_cfg.validate();

        SweepPoint sp;
        sp.param = p;
        const AveragedResult avg = run_averaged(point_cfg, setup);
        sp.final_mse_mean_db = avg.trace.final_mean_db();
        for (std::size_t k = 0; k < point_cfg.n_nodes; ++k) {
            double tail = 0.0;
            const std::size_t n_tail =
                std::max<std::size_t>(1, avg.trace.points() / 10);
            for (std::size_t i = avg.trace.points() - n_tail; i < avg.trace.points(); ++i)
                tail += avg.trace.node_power[k][i];
            sp.final_mse_node_db.push_back(to_db(tail / static_cast<double>(n_tail)));
        }
        sp.runs_diverged = avg.runs_diverged;
        sp.converged = avg.runs_diverged == 0 &&
                       sp.final_mse_mean_db <= avg.initial_power_db - 3.0;
        out.push_back(std::move(sp));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Frozen-weight consistency diagnostic

double ConsistencyReport::worst() const {
    double w = 0.0;
    for (double v : max_deviation)
        w = std::max(w, v);
    return w;
}

ConsistencyReport consistency_check(std::size_t n_nodes, std::size_t self_taps,
                                    std::size_t comp_taps, std::size_t psi_taps, double fs,
                                    std::size_t n_samples, std::uint64_t seed) {
    const std::size_t cross = self_taps + comp_taps - 1;
    ConstructedPlant built =
        synthesize_constructed_plant(n_nodes, self_taps, comp_taps, cross, cross, fs, seed);
    Plant& plant = built.plant;

    std::vector<CompensationSet> comps(n_nodes);
    for (std::size_t k = 0; k < n_nodes; ++k) {
        comps[k].owner = k;
        for (std::size_t m = 0; m < n_nodes; ++m) {
            if (m == k)
                continue;
            comps[k].residual_db[m] =
                compensation_residual(plant.secondary[k][k].coeffs(),
                                      plant.secondary[k][m].coeffs(), built.true_c[k][m]);
            comps[k].filters.emplace(m, FirFilter(built.true_c[k][m]));
        }
    }

    // Frozen random weights, pre-shared so every held copy is exact.
    std::vector<std::vector<double>> psi(n_nodes);
    for (std::size_t k = 0; k < n_nodes; ++k) {
        GaussianRng rng(substream_seed(seed, kStreamFrozenPsi, k));
        psi[k].resize(psi_taps);
        for (double& v : psi[k])
            v = 0.1 * rng.next();
    }

    std::vector<DmcancNode> nodes;
    for (std::size_t k = 0; k < n_nodes; ++k) {
        std::map<std::size_t, FirFilter> incoming;
        for (std::size_t m = 0; m < n_nodes; ++m)
            if (m != k)
                incoming.emplace(m, comps[m].filters.at(k));
        nodes.emplace_back(k, n_nodes, psi_taps, comps[k], incoming,
                           FirFilter(plant.secondary[k][k].coeffs()), 1);
        nodes[k].set_psi(psi[k]);
        std::map<std::size_t, PeerUpdate> preload;
        for (std::size_t m = 0; m < n_nodes; ++m)
            if (m != k)
                preload.emplace(m, PeerUpdate{psi[m], 0});
        nodes[k].apply_delivery(preload);
        nodes[k].end_sample(0);
    }

    const Signal x = white_noise(substream_seed(seed, kStreamNoise), n_samples, 1.0, fs);
    std::vector<std::vector<double>> d(n_nodes), e(n_nodes);
    std::vector<double> y(n_nodes);
    for (std::size_t n = 0; n < n_samples; ++n) {
        for (std::size_t k = 0; k < n_nodes; ++k)
            y[k] = nodes[k].emit(x.samples[n]);
        const PlantStepOutput out = plant.step(x.samples[n], y);
        for (std::size_t k = 0; k < n_nodes; ++k) {
            d[k].push_back(out.d[k]);
            e[k].push_back(out.e[k]);
        }
    }

    ConsistencyReport rep;
    rep.max_deviation = error_expansion_check(x.samples, d, e, plant, comps, psi);
    return rep;
}

// ---------------------------------------------------------------------------
// CSV writers

namespace {

std::ofstream open_out(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty())
        std::filesystem::create_directories(parent);
    std::ofstream f(path);
    if (!f)
        throw IoError("cannot open for writing: " + path);
    return f;
}

}  // namespace

void write_mse_csv(const std::string& path, const MseTrace& trace) {
    std::ofstream f = open_out(path);
    f << "sample";
    for (std::size_t k = 0; k < trace.nodes(); ++k)
        f << ",mse_node_" << k + 1 << "_db";
    f << ",mse_mean_db\n";
    for (std::size_t i = 0; i < trace.points(); ++i) {
        f << trace.sample_index[i];
        for (std::size_t k = 0; k < trace.nodes(); ++k)
            f << "," << fmt(trace.node_db(k, i));
        f << "," << fmt(trace.mean_db(i)) << "\n";
    }
    if (!f)
        throw IoError("write failed: " + path);
}

void write_compare_csv(const std::string& path, const MseTrace& dmcanc_trace,
                       const MseTrace& centralized_trace) {
    if (dmcanc_trace.points() != centralized_trace.points())
        throw ArgumentError("compare csv: traces have different lengths");
    std::ofstream f = open_out(path);
    f << "sample";
    for (std::size_t k = 0; k < dmcanc_trace.nodes(); ++k)
        f << ",dmcanc_node_" << k + 1 << "_db";
    f << ",dmcanc_mean_db";
    for (std::size_t k = 0; k < centralized_trace.nodes(); ++k)
        f << ",centralized_node_" << k + 1 << "_db";
    f << ",centralized_mean_db\n";
    for (std::size_t i = 0; i < dmcanc_trace.points(); ++i) {
        f << dmcanc_trace.sample_index[i];
        for (std::size_t k = 0; k < dmcanc_trace.nodes(); ++k)
            f << "," << fmt(dmcanc_trace.node_db(k, i));
        f << "," << fmt(dmcanc_trace.mean_db(i));
        for (std::size_t k = 0; k < centralized_trace.nodes(); ++k)
            f << "," << fmt(centralized_trace.node_db(k, i));
        f << "," << fmt(centralized_trace.mean_db(i)) << "\n";
    }
}

void write_spectra_csv(const std::string& path, const SpectraReport& report,
                       const std::string& name_a, const std::string& name_b) {
    std::ofstream f = open_out(path);
    f << "freq_hz";
    for (std::size_t k = 0; k < report.mag_a.size(); ++k)
        f << "," << name_a << "_node_" << k + 1;
    for (std::size_t k = 0; k < report.mag_b.size(); ++k)
        f << "," << name_b << "_node_" << k + 1;
    f << "\n";
    for (std::size_t bin = 0; bin < report.freq_hz.size(); ++bin) {
        f << fmt(report.freq_hz[bin]);
        for (const auto& mag : report.mag_a)
            f << "," << fmt(mag[bin]);
        for (const auto& mag : report.mag_b)
            f << "," << fmt(mag[bin]);
        f << "\n";
    }
}

void write_sweep_csv(const std::string& path, const std::vector<SweepPoint>& points) {
    std::ofstream f = open_out(path);
    f << "param,final_mse_mean_db,converged\n";
    for (const auto& p : points)
        f << fmt(p.param) << "," << fmt(p.final_mse_mean_db) << "," << (p.converged ? 1 : 0)
          << "\n";
}

void write_staleness_csv(const std::string& path, const StalenessStats& stats) {
    std::ofstream f = open_out(path);
    f << "receiver,sender,mean_staleness,max_staleness\n";
    for (std::size_t k = 0; k < stats.n_nodes(); ++k)
        for (std::size_t m = 0; m < stats.n_nodes(); ++m) {
            if (m == k)
                continue;
            f << k + 1 << "," << m + 1 << "," << fmt(stats.mean(k, m)) << ","
              << stats.max_staleness(k, m) << "\n";
        }
}

// ---------------------------------------------------------------------------
// Subcommand bodies

void cmd_paths(const ExperimentConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    const Plant plant =
        synthesize_plant(cfg.n_nodes, cfg.self_taps, cfg.cross_taps, cfg.primary_taps,
                         cfg.path_low_hz, cfg.path_high_hz, cfg.fs, cfg.seed, cfg.recipe());
    save_plant(plant, out_dir + "/plant");
}

void cmd_compensate(const ExperimentConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    ExperimentConfig work = cfg;
    work.algorithm = "dmcanc";
    work.compensation_dir.clear();
    const ExperimentSetup setup = prepare_experiment(work);
    save_compensation(setup.comps, out_dir + "/compensation");
}

void cmd_run(const ExperimentConfig& cfg, const std::string& out_dir) {
    const ExperimentSetup setup = prepare_experiment(cfg);
    const AveragedResult avg = run_averaged(cfg, setup);
    write_mse_csv(out_dir + "/mse.csv", avg.trace);
    std::filesystem::create_directories(out_dir + "/weights");
    for (std::size_t k = 0; k < avg.local_weights.size(); ++k) {
        save_coeffs(out_dir + "/weights/psi_" + std::to_string(k + 1) + ".txt",
                    avg.local_weights[k]);
        save_coeffs(out_dir + "/weights/w_" + std::to_string(k + 1) + ".txt",
                    avg.global_weights[k]);
    }
    if (cfg.algorithm == "dmcanc")
        write_staleness_csv(out_dir + "/staleness.csv", avg.staleness);
}

void cmd_compare(const ExperimentConfig& cfg, const std::string& out_dir) {
    ExperimentConfig dist_cfg = cfg;
    dist_cfg.algorithm = "dmcanc";
    const ExperimentSetup setup = prepare_experiment(dist_cfg);
    ExperimentConfig central_cfg = dist_cfg;
    central_cfg.algorithm = "centralized";

    const AveragedResult dist = run_averaged(dist_cfg, setup);
    const AveragedResult central = run_averaged(central_cfg, setup);
    write_compare_csv(out_dir + "/mse_compare.csv", dist.trace, central.trace);
    const SpectraReport rep = spectra_report(dist.global_weights, central.global_weights, cfg.fs,
                                             cfg.noise_low_hz, cfg.noise_high_hz);
    write_spectra_csv(out_dir + "/spectra.csv", rep, "dmcanc", "centralized");
}

void cmd_sweep(const ExperimentConfig& cfg, const std::string& axis,
               const std::vector<double>& points, const std::string& out_dir) {
    const std::vector<SweepPoint> table = sweep(cfg, axis, points);
    write_sweep_csv(out_dir + "/sweep.csv", table);
}

double cmd_check(const ExperimentConfig& cfg, const std::string& out_dir) {
    const std::size_t samples = std::min<std::size_t>(cfg.duration, 4096);
    const ConsistencyReport rep = consistency_check(cfg.n_nodes, cfg.self_taps, cfg.comp_taps,
                                                    cfg.psi_taps, cfg.fs, samples, cfg.seed);
    if (!out_dir.empty()) {
        std::ofstream f = open_out(out_dir + "/check.txt");
        for (std::size_t k = 0; k < rep.max_deviation.size(); ++k)
            f << "node_" << k + 1 << "_max_deviation=" << fmt(rep.max_deviation[k]) << "\n";
        f << "worst=" << fmt(rep.worst()) << "\n";
    }
    return rep.worst();
}

}  // namespace dmcanc
