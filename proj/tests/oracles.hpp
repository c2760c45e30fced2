// Independent reference computations used by the test suites. These stay
// deliberately naive (different loop structures from the library) so they
// can serve as oracles for the optimized paths.
#ifndef DMCANC_TEST_ORACLES_HPP
#define DMCANC_TEST_ORACLES_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace oracles {

// Direct convolution, output-index-major loop.
std::vector<double> naive_convolve(std::span<const double> a, std::span<const double> b);

// |H(f)| of a tap vector at one frequency, direct sum.
double magnitude_at(std::span<const double> taps, double freq_hz, double fs);

// Mean power of a signal in [f_low, f_high] via a direct periodogram over
// n_bins frequencies; returns the bin frequency with the largest power.
double periodogram_peak_hz(std::span<const double> x, double fs, std::size_t n_bins);

// Band power fraction: sum of periodogram bins above f_cut divided by total.
double power_fraction_above(std::span<const double> x, double fs, double f_cut,
                            std::size_t n_bins);

// Least-squares solution of convolve(s_kk, c) ~= s_km over c (full
// convolution matrix, normal equations, Cholesky). Returns the solution and
// the residual energy ratio in dB.
struct LeastSquaresFit {
    std::vector<double> c;
    double residual_db;
};
LeastSquaresFit ls_compensation(std::span<const double> s_kk, std::span<const double> s_km,
                                std::size_t comp_taps);

}  // namespace oracles

#endif
