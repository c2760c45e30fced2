#ifndef DMCANC_PLANT_HPP
#define DMCANC_PLANT_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dmcanc/dsp.hpp"

namespace dmcanc {

// Per-sample plant response: disturbances and residual errors at each
// error sensor.
struct PlantStepOutput {
    std::vector<double> d;
    std::vector<double> e;
};

// Ground-truth acoustic world: per-node primary path (reference to error
// sensor) and the full secondary-path matrix (source m to sensor k).
// Paths are fixed for the plant's lifetime; the filters carry streaming
// state, so one instance serves one simulated sequence.
struct Plant {
    std::size_t n_nodes = 0;
    double fs = 0.0;
    std::uint64_t seed = 0;
    std::size_t self_taps = 0;      // nominal self path length before padding
    std::size_t cross_taps = 0;     // common secondary length after padding
    std::size_t primary_taps = 0;
    double band_low = 0.0, band_high = 0.0;

    std::vector<FirFilter> primary;                 // [k]
    std::vector<std::vector<FirFilter>> secondary;  // [k][m]

    // d_k(n) = (x*p_k)(n); e_k(n) = d_k(n) - sum_m (y_m*s_km)(n).
    // Call once per time index, in order; y must have n_nodes entries.
    PlantStepOutput step(double x_n, std::span<const double> y);

    void reset_streams();
    void validate() const;
};

// Recipe knobs for synthetic paths: a band-pass prototype convolved with a
// random exponentially decaying tail of tail_taps samples. Short tails keep
// cross/self path ratios representable by short compensation filters. Self
// paths get a dominant leading tail coefficient (a strong direct component),
// which keeps them robustly invertible. Cross paths are attenuated by
// cross_gain: sources sit closer to their own sensor than to the others.
struct PathRecipe {
    std::size_t tail_taps = 16;
    double tail_decay = 4.0;  // tail_taps / 4
    double self_head_boost = 4.0;
    double cross_gain = 0.10;
};

// Synthesizes a random plant. Each secondary path is peak-normalized; self
// paths are zero-padded from self_taps to cross_taps; primary paths are
// scaled to unit energy so disturbance power sits near unity.
Plant synthesize_plant(std::size_t n_nodes, std::size_t self_taps, std::size_t cross_taps,
                       std::size_t primary_taps, double band_low, double band_high, double fs,
                       std::uint64_t seed, const PathRecipe& recipe = {});

// Plant whose cross paths are exactly self paths convolved with known
// short kernels, so the cross/self relation has an exact solution. Self
// paths are broadband (leading unit tap plus decaying random tail) so every
// mode of the kernel is excited during identification. Returns the plant
// and the true kernels true_c[k][m] (empty on the diagonal).
struct ConstructedPlant {
    Plant plant;
    std::vector<std::vector<std::vector<double>>> true_c;
};
ConstructedPlant synthesize_constructed_plant(std::size_t n_nodes, std::size_t self_taps,
                                              std::size_t comp_taps, std::size_t cross_taps,
                                              std::size_t primary_taps, double fs,
                                              std::uint64_t seed);

// Cross-talk at sensor k from recorded control histories:
// gamma_k(n) = sum_{m != k} (y_m * s_km)(n). Diagnostic only.
Signal interference(const Plant& plant, const std::vector<Signal>& y_histories, std::size_t k);

// Directory serialization: primary_<k>.txt, secondary_<k>_<m>.txt (1-based)
// plus manifest.txt.
void save_plant(const Plant& plant, const std::string& dir);
Plant load_plant(const std::string& dir);

}  // namespace dmcanc

#endif
