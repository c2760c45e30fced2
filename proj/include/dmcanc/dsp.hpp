#ifndef DMCANC_DSP_HPP
#define DMCANC_DSP_HPP

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dmcanc/errors.hpp"

namespace dmcanc {

// A sampled signal. Values are expected to stay finite; NaN/Inf means a
// contract was broken upstream.
struct Signal {
    std::vector<double> samples;
    double sample_rate = 0.0;  // Hz

    void validate() const;  // throws ArgumentError on non-finite samples or bad rate
};

// FIR filter with streaming state. One instance serves exactly one sample
// stream; reset() or a fresh copy is needed to start another.
//
// The delay line is kept as a double-written ring so the per-sample dot
// product always reads one contiguous block.
class FirFilter {
public:
    FirFilter() : FirFilter(std::vector<double>{1.0}) {}
    explicit FirFilter(std::vector<double> coeffs);

    double step(double x);
    Signal process(const Signal& x);                     // streams, keeps state
    std::vector<double> process(std::span<const double> x);

    // Replace coefficients while keeping the input delay line, so the output
    // stream has no restart transient. New length must match.
    void set_coeffs(std::span<const double> coeffs);

    void reset();  // zero the delay line

    const std::vector<double>& coeffs() const { return coeffs_; }
    std::size_t num_taps() const { return coeffs_.size(); }

    // Past inputs, most recent first; length num_taps()-1.
    std::vector<double> state() const;

private:
    std::vector<double> coeffs_;
    std::vector<double> ring_;  // 2*len slots, each sample written twice
    std::size_t pos_ = 0;       // index of the most recent sample in [0, len)
};

// Exact linear convolution, length a+b-1. Throws ArgumentError on empty input.
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);

// Fixed-length sample history with the same double-write ring layout as
// FirFilter: window()[-i] reads x(n-i) from one contiguous block.
class HistoryRing {
public:
    explicit HistoryRing(std::size_t len) : len_(len), ring_(2 * len, 0.0), pos_(0) {}

    void push(double x) {
        pos_ = (pos_ + 1 == len_) ? 0 : pos_ + 1;
        ring_[pos_] = x;
        ring_[pos_ + len_] = x;
    }
    const double* window() const { return ring_.data() + pos_ + len_; }
    std::size_t size() const { return len_; }

private:
    std::size_t len_;
    std::vector<double> ring_;
    std::size_t pos_;
};

inline double dot_reversed(std::span<const double> coeffs, const double* window) {
    double acc = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i)
        acc += coeffs[i] * window[-static_cast<std::ptrdiff_t>(i)];
    return acc;
}

inline void axpy_reversed(std::span<double> coeffs, const double* window, double scale) {
    for (std::size_t i = 0; i < coeffs.size(); ++i)
        coeffs[i] += scale * window[-static_cast<std::ptrdiff_t>(i)];
}

// Band-pass FIR design: Hamming-windowed sinc, linear phase.
//
// f_low/f_high are treated as stop-band edges: the -6 dB cutoffs are pulled
// inside the band by half the transition width, so attenuation below f_low
// and above f_high reaches the window's stop-band floor. The transition
// width is 3.3*fs/num_taps (Hamming); the flat passband is therefore
// [f_low + delta, f_high - delta] with delta = that width.
FirFilter design_bandpass(std::size_t num_taps, double f_low, double f_high, double fs);

double bandpass_transition_width(std::size_t num_taps, double fs);

// Magnitude of the n_points-point DFT of a tap vector, bins 0..n_points/2.
std::vector<double> dft_magnitude(std::span<const double> taps, std::size_t n_points = 4096);

// Seed for an independent generator substream. Distinct (component, index)
// pairs give unrelated streams from one base seed (splitmix64 mixing).
std::uint64_t substream_seed(std::uint64_t base, std::uint64_t component, std::uint64_t index = 0);

// Portable seeded Gaussian generator: std::mt19937_64 (sequence fixed by the
// standard) + Marsaglia polar transform, so traces reproduce across
// platforms and standard libraries.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}
    double next();  // standard normal

private:
    double uniform_signed();  // [-1, 1)

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// White Gaussian noise, deterministic per seed. variance > 0, n >= 1.
Signal white_noise(std::uint64_t seed, std::size_t n, double variance, double fs);

// White noise band-pass filtered and normalized to exactly unit mean power.
Signal bandlimited_noise(std::uint64_t seed, std::size_t n, double f_low, double f_high, double fs);

// Coefficient file I/O: "taps=<count>" header then one coefficient per line
// with 17 significant digits (lossless round trip).
void save_coeffs(const std::string& path, std::span<const double> coeffs);
std::vector<double> load_coeffs(const std::string& path);

}  // namespace dmcanc

#endif
