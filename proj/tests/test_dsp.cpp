#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>

#include "dmcanc/dsp.hpp"
#include "oracles.hpp"

using namespace dmcanc;

namespace {

std::vector<double> random_taps(std::uint64_t seed, std::size_t n, double scale = 1.0) {
    GaussianRng rng(seed);
    std::vector<double> v(n);
    for (double& x : v)
        x = scale * rng.next();
    return v;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

double norm(std::span<const double> a) {
    double s = 0.0;
    for (double v : a)
        s += v * v;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("convolve: delta identity") {
    const std::vector<double> a{1.0};
    const std::vector<double> b{0.5, -0.25};
    CHECK(convolve(a, b) == std::vector<double>{0.5, -0.25});
}

TEST_CASE("convolve: hand-computed pair") {
    CHECK(convolve(std::vector<double>{1, 1}, std::vector<double>{1, 1}) ==
          std::vector<double>{1, 2, 1});
}

TEST_CASE("convolve: matches naive oracle on random 64x256 pair") {
    const auto a = random_taps(7, 64);
    const auto b = random_taps(8, 256);
    const auto got = convolve(a, b);
    const auto want = oracles::naive_convolve(a, b);
    CHECK(max_abs_diff(got, want) / norm(want) <= 1e-12);
}

TEST_CASE("convolve: empty input is an argument error") {
    CHECK_THROWS_AS(convolve(std::vector<double>{}, std::vector<double>{1.0}), ArgumentError);
    CHECK_THROWS_AS(convolve(std::vector<double>{1.0}, std::vector<double>{}), ArgumentError);
}

TEST_CASE("convolve: commutative and associative within tolerance") {
    const auto a = random_taps(11, 33);
    const auto b = random_taps(12, 64);
    const auto c = random_taps(13, 17);

    const auto ab = convolve(a, b);
    const auto ba = convolve(b, a);
    CHECK(max_abs_diff(ab, ba) / norm(ab) <= 1e-12);

    const auto left = convolve(convolve(a, b), c);
    const auto right = convolve(a, convolve(b, c));
    CHECK(max_abs_diff(left, right) / norm(left) <= 1e-10);
}

TEST_CASE("fir: identity and unit delay") {
    FirFilter identity(std::vector<double>{1.0});
    const std::vector<double> x{3.0, -1.0, 2.5};
    CHECK(identity.process(std::span<const double>(x)) == x);

    FirFilter delay(std::vector<double>{0.0, 1.0});
    CHECK(delay.process(std::vector<double>{3.0, 4.0, 5.0}) ==
          std::vector<double>{0.0, 3.0, 4.0});
}

TEST_CASE("fir: zero signal from zero state stays zero") {
    FirFilter f(random_taps(21, 32));
    const std::vector<double> x(100, 0.0);
    for (double v : f.process(std::span<const double>(x)))
        CHECK(v == 0.0);
}

TEST_CASE("fir: streaming equals full convolution truncated") {
    const auto taps = random_taps(31, 48);
    const auto x = random_taps(32, 500);
    FirFilter f(taps);
    const auto streamed = f.process(std::span<const double>(x));
    auto batch = oracles::naive_convolve(taps, x);
    batch.resize(x.size());
    CHECK(max_abs_diff(streamed, batch) == 0.0);
}

TEST_CASE("fir: chunked processing equals one-shot") {
    const auto taps = random_taps(41, 64);
    const auto x = random_taps(42, 10'000);
    FirFilter whole(taps), chunked(taps);
    const auto want = whole.process(std::span<const double>(x));

    std::vector<double> got;
    std::mt19937_64 rng(43);
    std::size_t pos = 0;
    while (pos < x.size()) {
        const std::size_t len = std::min<std::size_t>(1 + rng() % 97, x.size() - pos);
        const auto part = chunked.process(std::span<const double>(x).subspan(pos, len));
        got.insert(got.end(), part.begin(), part.end());
        pos += len;
    }
    CHECK(max_abs_diff(got, want) == 0.0);
}

TEST_CASE("fir: linearity over fresh states") {
    const auto taps = random_taps(51, 40);
    const auto x = random_taps(52, 300);
    const auto z = random_taps(53, 300);
    const double alpha = 0.7, beta = -1.3;

    std::vector<double> mix(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        mix[i] = alpha * x[i] + beta * z[i];

    FirFilter fa(taps), fb(taps), fm(taps);
    const auto yx = fa.process(std::span<const double>(x));
    const auto yz = fb.process(std::span<const double>(z));
    const auto ym = fm.process(std::span<const double>(mix));
    double scale = norm(ym);
    for (std::size_t i = 0; i < ym.size(); ++i)
        CHECK(std::fabs(ym[i] - (alpha * yx[i] + beta * yz[i])) <= 1e-10 * scale);
}

TEST_CASE("fir: state vector has length taps-1 and tracks recent input") {
    FirFilter f(std::vector<double>{1.0, 2.0, 3.0});
    CHECK(f.state() == std::vector<double>{0.0, 0.0});
    f.step(5.0);
    f.step(7.0);
    CHECK(f.state() == std::vector<double>{7.0, 5.0});
}

TEST_CASE("design_bandpass: passband gain at 2 kHz within 1 dB") {
    FirFilter bp = design_bandpass(320, 50.0, 5000.0, 16000.0);
    const double mag = oracles::magnitude_at(bp.coeffs(), 2000.0, 16000.0);
    CHECK(std::fabs(20.0 * std::log10(mag)) <= 1.0);
}

TEST_CASE("design_bandpass: stopband attenuation at 10 Hz") {
    FirFilter bp = design_bandpass(320, 50.0, 5000.0, 16000.0);
    const double mag = oracles::magnitude_at(bp.coeffs(), 10.0, 16000.0);
    CHECK(20.0 * std::log10(mag) <= -20.0);
}

TEST_CASE("design_bandpass: full-band design approximates a delayed delta") {
    // Odd length so the integer group delay lands on a tap.
    FirFilter bp = design_bandpass(321, 1e-3, 8000.0 - 1e-3, 16000.0);
    double peak = 0.0;
    for (double v : bp.coeffs())
        peak = std::max(peak, std::fabs(v));
    CHECK(peak >= 0.9);
}

TEST_CASE("design_bandpass: band violations are argument errors") {
    CHECK_THROWS_AS(design_bandpass(320, -1.0, 5000.0, 16000.0), ArgumentError);
    CHECK_THROWS_AS(design_bandpass(320, 5000.0, 50.0, 16000.0), ArgumentError);
    CHECK_THROWS_AS(design_bandpass(320, 50.0, 9000.0, 16000.0), ArgumentError);
    CHECK_THROWS_AS(design_bandpass(2, 50.0, 5000.0, 16000.0), ArgumentError);
    // band narrower than the transition width
    CHECK_THROWS_AS(design_bandpass(16, 900.0, 1000.0, 16000.0), ArgumentError);
}

TEST_CASE("design_bandpass: dft_magnitude agrees with the direct oracle") {
    FirFilter bp = design_bandpass(160, 100.0, 1000.0, 8000.0);
    const auto mags = dft_magnitude(bp.coeffs(), 4096);
    for (std::size_t bin : {10u, 100u, 500u, 1500u}) {
        const double f = static_cast<double>(bin) * 8000.0 / 4096.0;
        CHECK(std::fabs(mags[bin] - oracles::magnitude_at(bp.coeffs(), f, 8000.0)) <= 1e-9);
    }
}

TEST_CASE("white_noise: deterministic per seed, sensitive to seed") {
    const Signal a = white_noise(99, 4096, 1.0, 16000.0);
    const Signal b = white_noise(99, 4096, 1.0, 16000.0);
    const Signal c = white_noise(100, 4096, 1.0, 16000.0);
    CHECK(a.samples == b.samples);
    CHECK(a.samples != c.samples);
}

TEST_CASE("white_noise: sample variance near 1 for a million samples") {
    const Signal s = white_noise(7, 1'000'000, 1.0, 16000.0);
    double mean = 0.0;
    for (double v : s.samples)
        mean += v;
    mean /= static_cast<double>(s.samples.size());
    double var = 0.0;
    for (double v : s.samples)
        var += (v - mean) * (v - mean);
    var /= static_cast<double>(s.samples.size());
    CHECK(var >= 0.99);
    CHECK(var <= 1.01);
}

TEST_CASE("white_noise: preconditions") {
    CHECK_THROWS_AS(white_noise(1, 0, 1.0, 16000.0), ArgumentError);
    CHECK_THROWS_AS(white_noise(1, 16, 0.0, 16000.0), ArgumentError);
}

TEST_CASE("substream_seed: distinct components decorrelate") {
    CHECK(substream_seed(1, 1, 0) != substream_seed(1, 2, 0));
    CHECK(substream_seed(1, 1, 0) != substream_seed(2, 1, 0));
    CHECK(substream_seed(1, 1, 3) != substream_seed(1, 1, 4));
}

TEST_CASE("bandlimited_noise: exact unit power and in-band spectrum") {
    const Signal s = bandlimited_noise(5, 50'000, 100.0, 1000.0, 16000.0);
    double power = 0.0;
    for (double v : s.samples)
        power += v * v;
    power /= static_cast<double>(s.samples.size());
    CHECK(std::fabs(power - 1.0) <= 1e-6);

    // Periodogram over the first chunk: peak inside the band, almost no
    // power above 2 kHz.
    std::span<const double> head(s.samples.data(), 8192);
    const double peak = oracles::periodogram_peak_hz(head, 16000.0, 512);
    CHECK(peak >= 100.0);
    CHECK(peak <= 1000.0);
    CHECK(oracles::power_fraction_above(head, 16000.0, 2000.0, 512) <= 0.01);
}

TEST_CASE("signal validation rejects non-finite values") {
    Signal s{{1.0, std::nan("")}, 16000.0};
    CHECK_THROWS_AS(s.validate(), ArgumentError);
    Signal bad_rate{{1.0}, 0.0};
    CHECK_THROWS_AS(bad_rate.validate(), ArgumentError);
}

TEST_CASE("coefficient files: round trip is exact") {
    const auto dir = std::filesystem::temp_directory_path() / "dmcanc_dsp_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "coeffs.txt").string();
    const auto taps = random_taps(61, 97, 1e-3);
    save_coeffs(path, taps);
    CHECK(load_coeffs(path) == taps);
    std::filesystem::remove_all(dir);
}

TEST_CASE("coefficient files: bad paths and headers") {
    CHECK_THROWS_AS(load_coeffs("/nonexistent/nowhere.txt"), IoError);
}
