#include "dmcanc/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace dmcanc {

void Signal::validate() const {
    if (sample_rate <= 0.0)
        throw ArgumentError("signal sample rate must be positive");
    for (double v : samples)
        if (!std::isfinite(v))
            throw ArgumentError("signal contains non-finite samples");
}

// ---------------------------------------------------------------------------
// FirFilter

FirFilter::FirFilter(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty())
        throw ArgumentError("FIR filter needs at least one tap");
    ring_.assign(2 * coeffs_.size(), 0.0);
    pos_ = 0;
}

double FirFilter::step(double x) {
    const std::size_t len = coeffs_.size();
    pos_ = (pos_ + 1 == len) ? 0 : pos_ + 1;
    ring_[pos_] = x;
    ring_[pos_ + len] = x;
    // ring_[pos_ + len - i] is x(n-i); one contiguous reversed window.
    const double* win = ring_.data() + pos_ + len;
    const double* c = coeffs_.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < len; ++i)
        acc += c[i] * win[-static_cast<std::ptrdiff_t>(i)];
    return acc;
}

std::vector<double> FirFilter::process(std::span<const double> x) {
    std::vector<double> y(x.size());
    for (std::size_t n = 0; n < x.size(); ++n)
        y[n] = step(x[n]);
    return y;
}

Signal FirFilter::process(const Signal& x) {
    return Signal{process(std::span<const double>(x.samples)), x.sample_rate};
}

void FirFilter::set_coeffs(std::span<const double> coeffs) {
    if (coeffs.size() != coeffs_.size())
        throw ArgumentError("set_coeffs: tap count change would invalidate the delay line");
    std::copy(coeffs.begin(), coeffs.end(), coeffs_.begin());
}

void FirFilter::reset() {
    std::fill(ring_.begin(), ring_.end(), 0.0);
    pos_ = 0;
}

std::vector<double> FirFilter::state() const {
    const std::size_t len = coeffs_.size();
    std::vector<double> s(len - 1);
    for (std::size_t i = 0; i < s.size(); ++i)
        s[i] = ring_[pos_ + len - i];
    return s;
}

// ---------------------------------------------------------------------------
// Convolution

std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty())
        throw ArgumentError("convolve: empty input");
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ai = a[i];
        double* o = out.data() + i;
        for (std::size_t j = 0; j < b.size(); ++j)
            o[j] += ai * b[j];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Band-pass design

double bandpass_transition_width(std::size_t num_taps, double fs) {
    return 3.3 * fs / static_cast<double>(num_taps);
}

FirFilter design_bandpass(std::size_t num_taps, double f_low, double f_high, double fs) {
    if (num_taps < 3)
        throw ArgumentError("design_bandpass: need at least 3 taps");
    if (!(f_low > 0.0 && f_low < f_high && f_high < fs / 2.0))
        throw ArgumentError("design_bandpass: need 0 < f_low < f_high < fs/2");
    const double delta = bandpass_transition_width(num_taps, fs);
    // -6 dB cutoffs pulled inside so f_low/f_high are stop-band edges.
    const double c1 = f_low + delta / 2.0;
    const double c2 = f_high - delta / 2.0;
    if (c1 >= c2)
        throw ArgumentError("design_bandpass: band too narrow for the tap count (transition " +
                            std::to_string(delta) + " Hz)");

    const double w1 = 2.0 * c1 / fs;  // normalized cutoffs in cycles/sample *2
    const double w2 = 2.0 * c2 / fs;
    const double mid = (static_cast<double>(num_taps) - 1.0) / 2.0;
    auto sinc = [](double x) { return x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x); };

    std::vector<double> h(num_taps);
    for (std::size_t i = 0; i < num_taps; ++i) {
        const double t = static_cast<double>(i) - mid;
        const double ideal = w2 * sinc(w2 * t) - w1 * sinc(w1 * t);
        const double window =
            0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                   (static_cast<double>(num_taps) - 1.0));
        h[i] = ideal * window;
    }
    return FirFilter(std::move(h));
}

std::vector<double> dft_magnitude(std::span<const double> taps, std::size_t n_points) {
    if (taps.empty() || n_points == 0)
        throw ArgumentError("dft_magnitude: empty input");
    std::vector<double> mag(n_points / 2 + 1);
    const double step = 2.0 * std::numbers::pi / static_cast<double>(n_points);
    for (std::size_t k = 0; k < mag.size(); ++k) {
        const double w = step * static_cast<double>(k);
        double re = 0.0, im = 0.0;
        for (std::size_t n = 0; n < taps.size(); ++n) {
            re += taps[n] * std::cos(w * static_cast<double>(n));
            im -= taps[n] * std::sin(w * static_cast<double>(n));
        }
        mag[k] = std::hypot(re, im);
    }
    return mag;
}

// ---------------------------------------------------------------------------
// Random generation

std::uint64_t substream_seed(std::uint64_t base, std::uint64_t component, std::uint64_t index) {
    // splitmix64 over a combination of the inputs; decorrelates streams that
    // share a base seed.
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (component + 1) + 0xbf58476d1ce4e5b9ULL * (index + 1);
    for (int round = 0; round < 2; ++round) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z = z ^ (z >> 31);
    }
    return z;
}

double GaussianRng::uniform_signed() {
    // 53 random bits into [0,1), then stretched to [-1,1).
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
}

double GaussianRng::next() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = uniform_signed();
        v = uniform_signed();
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

Signal white_noise(std::uint64_t seed, std::size_t n, double variance, double fs) {
    if (n < 1)
        throw ArgumentError("white_noise: need n >= 1");
    if (variance <= 0.0)
        throw ArgumentError("white_noise: variance must be positive");
    GaussianRng rng(seed);
    const double scale = std::sqrt(variance);
    Signal out;
    out.sample_rate = fs;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.samples[i] = scale * rng.next();
    return out;
}

Signal bandlimited_noise(std::uint64_t seed, std::size_t n, double f_low, double f_high, double fs) {
    FirFilter bp = design_bandpass(320, f_low, f_high, fs);
    Signal white = white_noise(seed, n, 1.0, fs);
    Signal out = bp.process(white);
    double power = 0.0;
    for (double v : out.samples)
        power += v * v;
    power /= static_cast<double>(n);
    if (power <= 0.0)
        throw ArgumentError("bandlimited_noise: degenerate output power");
    const double g = 1.0 / std::sqrt(power);
    for (double& v : out.samples)
        v *= g;
    return out;
}

// ---------------------------------------------------------------------------
// Coefficient files

void save_coeffs(const std::string& path, std::span<const double> coeffs) {
    std::ofstream f(path);
    if (!f)
        throw IoError("cannot open for writing: " + path);
    f << "taps=" << coeffs.size() << "\n";
    char buf[64];
    for (double c : coeffs) {
        std::snprintf(buf, sizeof buf, "%.17g\n", c);
        f << buf;
    }
    if (!f)
        throw IoError("write failed: " + path);
}

std::vector<double> load_coeffs(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot open: " + path);
    std::string header;
    if (!std::getline(f, header) || header.rfind("taps=", 0) != 0)
        throw IoError("bad coefficient file header in " + path);
    std::size_t count = 0;
    try {
        count = std::stoull(header.substr(5));
    } catch (const std::exception&) {
        throw IoError("bad tap count in " + path);
    }
    std::vector<double> coeffs;
    coeffs.reserve(count);
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty())
            continue;
        coeffs.push_back(std::stod(line));
    }
    if (coeffs.size() != count)
        throw IoError("tap count mismatch in " + path);
    return coeffs;
}

}  // namespace dmcanc
