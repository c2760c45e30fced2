#ifndef DMCANC_COMPENSATION_HPP
#define DMCANC_COMPENSATION_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dmcanc/plant.hpp"

namespace dmcanc {

// Cross-path compensation filters owned by one node: filters[m] makes
// self_path * filters[m] approximate the cross path from source m.
// No entry for m == owner.
struct CompensationSet {
    std::size_t owner = 0;
    std::map<std::size_t, FirFilter> filters;
    std::map<std::size_t, double> residual_db;  // filter-domain modeling residual

    std::size_t comp_taps() const {
        return filters.empty() ? 0 : filters.begin()->second.num_taps();
    }
};

struct CompensationFitReport {
    std::vector<double> error_power_trace_db;  // one block average per 1000 samples
    bool converged = false;
    std::size_t iterations = 0;
};

// Offline identification of one compensation filter by filtered-reference
// LMS: white noise through the true cross path is the target, the adapting
// filter drives the true self path, and the update correlates the error
// with noise filtered through the self-path estimate.
//
// The excitation sequence is GaussianRng(seed) directly. The filter starts
// from zero unless `init` (comp_taps long) is given.
// Throws DivergenceError when the block error power grows 10x above the
// first block.
std::pair<FirFilter, CompensationFitReport> fit_compensation(const Plant& plant, std::size_t k,
                                                             std::size_t m,
                                                             const FirFilter& s_kk_est,
                                                             double mu_c, std::size_t n_samples,
                                                             std::size_t comp_taps,
                                                             std::uint64_t seed,
                                                             std::span<const double> init = {});

// 10*log10(|s_km - s_kk*c_km|^2 / |s_km|^2); the shorter vector is
// zero-padded before comparing.
double compensation_residual(std::span<const double> s_kk, std::span<const double> s_km,
                             std::span<const double> c_km);

// All n*(n-1) fits, one active source at a time, deterministic per seed.
// estimates[k] is the self-path estimate used in node k's updates.
std::vector<CompensationSet> fit_all(const Plant& plant, const std::vector<FirFilter>& estimates,
                                     double mu_c, std::size_t n_samples, std::size_t comp_taps,
                                     std::uint64_t seed);

// Self-path estimates for every node: exact copies when perturb == 0,
// otherwise each tap gets additive noise scaled by perturb times the path RMS.
std::vector<FirFilter> self_path_estimates(const Plant& plant, double perturb, std::uint64_t seed);

// Directory serialization: comp_<k>_<m>.txt plus manifest.txt with residuals.
void save_compensation(const std::vector<CompensationSet>& sets, const std::string& dir);
std::vector<CompensationSet> load_compensation(const std::string& dir);

}  // namespace dmcanc

#endif
