#ifndef DMCANC_HARNESS_HPP
#define DMCANC_HARNESS_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dmcanc/control.hpp"

namespace dmcanc {

// Full experiment description. Defaults are the desk-scale configuration;
// profile("ci") is the scaled-down variant used by the fast test suite.
struct ExperimentConfig {
    std::size_t n_nodes = 4;
    double fs = 16000.0;
    std::size_t duration = 1'600'000;  // samples
    double noise_low_hz = 100.0, noise_high_hz = 1000.0;
    double path_low_hz = 50.0, path_high_hz = 5000.0;
    std::size_t self_taps = 256, cross_taps = 320, primary_taps = 320;
    std::size_t psi_taps = 512, comp_taps = 64;
    double mu_psi = 1e-5, mu_c = 1e-3;
    std::size_t comp_samples = 1'000'000;
    std::string algorithm = "dmcanc";  // dmcanc | centralized
    std::string comm = "ideal";        // ideal | delay:<samples> | intermittent:<rate>[:periodic]
    std::size_t n_runs = 30;
    std::uint64_t seed = 1;
    std::uint64_t comm_seed = 0;  // extra entropy for exchange events only
    std::size_t smooth_window = 4000, decimation = 100;
    std::size_t w_update_interval = 1;
    std::size_t bus_capacity = 4096;
    std::size_t threads = 0;  // 0 = hardware concurrency
    std::size_t path_tail_taps = 16;
    double path_tail_decay = 4.0;
    double path_self_boost = 4.0;
    double path_cross_gain = 0.10;
    double estimate_perturb = 0.0;  // relative noise on path estimates
    std::string plant_dir;          // load instead of synthesizing when set
    std::string compensation_dir;   // load instead of fitting when set

    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;
    void validate() const;                       // throws ConfigError
    std::vector<std::string> warnings() const;   // soft issues
    CommPolicy policy(std::uint64_t run_seed) const;
    PathRecipe recipe() const {
        return PathRecipe{path_tail_taps, path_tail_decay, path_self_boost, path_cross_gain};
    }

    static ExperimentConfig profile(const std::string& name);  // "paper" | "ci"
    static ExperimentConfig from_file(const std::string& path);
};

// Smoothed error-power trace: trailing moving average of e^2, decimated,
// held as linear power and converted to dB (floor -120) on read.
struct MseTrace {
    std::vector<long long> sample_index;             // window end, 1-based
    std::vector<std::vector<double>> node_power;     // [node][point]
    std::size_t smooth_window = 0, decimation = 0;
    bool run_averaged = false;

    std::size_t points() const { return sample_index.size(); }
    std::size_t nodes() const { return node_power.size(); }
    double node_db(std::size_t k, std::size_t i) const;
    double mean_power(std::size_t i) const;
    double mean_db(std::size_t i) const;
    // Mean power over the trailing fraction of the trace, in dB.
    double final_mean_db(double tail_fraction = 0.1) const;
};

MseTrace mse_smooth(const Signal& e, std::size_t window, std::size_t decimation);

struct RunRecords {
    std::vector<double> x;
    std::vector<std::vector<double>> d, e, y;  // [node][sample]
};

struct RunResult {
    MseTrace trace;
    std::vector<std::vector<double>> local_weights;   // adaptive filters per node
    std::vector<std::vector<double>> global_weights;  // combined filters per node
    std::vector<double> mean_d2;                      // disturbance power per node
    bool diverged = false;
    long long diverged_at = -1;
    StalenessStats staleness;
    std::shared_ptr<RunRecords> records;
};

// Plant, path estimates, and compensation filters shared by all Monte Carlo
// runs of one experiment.
struct ExperimentSetup {
    Plant plant;
    std::vector<std::vector<FirFilter>> estimates;  // [k][m]
    std::vector<CompensationSet> comps;             // filled for dmcanc
};

ExperimentSetup prepare_experiment(const ExperimentConfig& cfg);

RunResult run_once(const ExperimentConfig& cfg, const ExperimentSetup& setup,
                   std::uint64_t run_seed, bool record = false);

struct AveragedResult {
    MseTrace trace;
    std::vector<std::vector<double>> global_weights;  // first completed run
    std::vector<std::vector<double>> local_weights;
    double initial_power_db = 0.0;  // mean disturbance power
    std::size_t runs_completed = 0, runs_diverged = 0;
    StalenessStats staleness;
    std::vector<std::string> warnings;
};

// Mean of per-run squared-error traces (before dB); runs i use seed base+i
// and may execute in parallel with results identical to serial order.
AveragedResult run_averaged(const ExperimentConfig& cfg, const ExperimentSetup& setup);

struct SpectraReport {
    std::vector<double> freq_hz;
    std::vector<std::vector<double>> mag_a, mag_b;  // [node][bin]
    std::vector<double> max_dev_db;                 // per node, over the band
    double band_low = 0.0, band_high = 0.0;
};

// 4096-point magnitude comparison of two filter sets over [band_low, band_high].
SpectraReport spectra_report(const std::vector<std::vector<double>>& weights_a,
                             const std::vector<std::vector<double>>& weights_b, double fs,
                             double band_low, double band_high);

struct SweepPoint {
    double param = 0.0;
    double final_mse_mean_db = 0.0;
    std::vector<double> final_mse_node_db;
    bool converged = false;
    std::size_t runs_diverged = 0;
};

// One averaged experiment per axis point; axis is "delay" (samples) or
// "rate" (events per second).
std::vector<SweepPoint> sweep(const ExperimentConfig& cfg, const std::string& axis,
                              const std::vector<double>& points);

// End-to-end algebra check on an exactly-compensable plant with frozen
// weights: runs the real node/plant loop and compares the measured errors
// with the offline expansion. Returns per-node max absolute deviation.
struct ConsistencyReport {
    std::vector<double> max_deviation;
    double worst() const;
};
ConsistencyReport consistency_check(std::size_t n_nodes, std::size_t self_taps,
                                    std::size_t comp_taps, std::size_t psi_taps, double fs,
                                    std::size_t n_samples, std::uint64_t seed);

// ---------------------------------------------------------------------------
// File outputs (deterministic formatting: repeated runs give identical bytes)

void write_mse_csv(const std::string& path, const MseTrace& trace);
void write_compare_csv(const std::string& path, const MseTrace& dmcanc_trace,
                       const MseTrace& centralized_trace);
void write_spectra_csv(const std::string& path, const SpectraReport& report,
                       const std::string& name_a, const std::string& name_b);
void write_sweep_csv(const std::string& path, const std::vector<SweepPoint>& points);
void write_staleness_csv(const std::string& path, const StalenessStats& stats);

// ---------------------------------------------------------------------------
// Subcommand bodies shared by the C API and (through it) the CLI.

void cmd_paths(const ExperimentConfig& cfg, const std::string& out_dir);
void cmd_compensate(const ExperimentConfig& cfg, const std::string& out_dir);
void cmd_run(const ExperimentConfig& cfg, const std::string& out_dir);
void cmd_compare(const ExperimentConfig& cfg, const std::string& out_dir);
void cmd_sweep(const ExperimentConfig& cfg, const std::string& axis,
               const std::vector<double>& points, const std::string& out_dir);
double cmd_check(const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace dmcanc

#endif
