#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oracles {

std::vector<double> naive_convolve(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t n = 0; n < out.size(); ++n) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (n < i || n - i >= b.size())
                continue;
            acc += a[i] * b[n - i];
        }
        out[n] = acc;
    }
    return out;
}

double magnitude_at(std::span<const double> taps, double freq_hz, double fs) {
    const double w = 2.0 * std::numbers::pi * freq_hz / fs;
    double re = 0.0, im = 0.0;
    for (std::size_t n = 0; n < taps.size(); ++n) {
        re += taps[n] * std::cos(w * static_cast<double>(n));
        im -= taps[n] * std::sin(w * static_cast<double>(n));
    }
    return std::sqrt(re * re + im * im);
}

namespace {

std::vector<double> periodogram(std::span<const double> x, double fs, std::size_t n_bins) {
    std::vector<double> power(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        const double f = 0.5 * fs * static_cast<double>(b) / static_cast<double>(n_bins);
        const double w = 2.0 * std::numbers::pi * f / fs;
        double re = 0.0, im = 0.0;
        for (std::size_t n = 0; n < x.size(); ++n) {
            re += x[n] * std::cos(w * static_cast<double>(n));
            im -= x[n] * std::sin(w * static_cast<double>(n));
        }
        power[b] = (re * re + im * im) / static_cast<double>(x.size());
    }
    return power;
}

}  // namespace

double periodogram_peak_hz(std::span<const double> x, double fs, std::size_t n_bins) {
    const std::vector<double> power = periodogram(x, fs, n_bins);
    std::size_t best = 0;
    for (std::size_t b = 1; b < n_bins; ++b)
        if (power[b] > power[best])
            best = b;
    return 0.5 * fs * static_cast<double>(best) / static_cast<double>(n_bins);
}

double power_fraction_above(std::span<const double> x, double fs, double f_cut,
                            std::size_t n_bins) {
    const std::vector<double> power = periodogram(x, fs, n_bins);
    double total = 0.0, above = 0.0;
    for (std::size_t b = 0; b < n_bins; ++b) {
        const double f = 0.5 * fs * static_cast<double>(b) / static_cast<double>(n_bins);
        total += power[b];
        if (f > f_cut)
            above += power[b];
    }
    return total > 0.0 ? above / total : 0.0;
}

LeastSquaresFit ls_compensation(std::span<const double> s_kk, std::span<const double> s_km,
                                std::size_t comp_taps) {
    const std::size_t rows = s_kk.size() + comp_taps - 1;
    const std::size_t cols = comp_taps;
    // A[r][j] = s_kk[r - j]
    auto a_at = [&](std::size_t r, std::size_t j) -> double {
        if (r < j || r - j >= s_kk.size())
            return 0.0;
        return s_kk[r - j];
    };

    std::vector<double> ata(cols * cols, 0.0);
    std::vector<double> atb(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double b_r = r < s_km.size() ? s_km[r] : 0.0;
        for (std::size_t i = 0; i < cols; ++i) {
            const double ai = a_at(r, i);
            if (ai == 0.0)
                continue;
            atb[i] += ai * b_r;
            for (std::size_t j = i; j < cols; ++j)
                ata[i * cols + j] += ai * a_at(r, j);
        }
    }
    for (std::size_t i = 0; i < cols; ++i)
        for (std::size_t j = 0; j < i; ++j)
            ata[i * cols + j] = ata[j * cols + i];

    // Cholesky; a tiny diagonal ridge is added only if the factorization
    // stalls on a semidefinite matrix.
    double trace = 0.0;
    for (std::size_t i = 0; i < cols; ++i)
        trace += ata[i * cols + i];
    std::vector<double> chol(cols * cols, 0.0);
    const double ridge_unit = trace / static_cast<double>(cols);
    double ridge = 0.0;
    for (int attempt = 0; attempt < 3; ++attempt) {
        bool ok = true;
        std::fill(chol.begin(), chol.end(), 0.0);
        for (std::size_t i = 0; i < cols && ok; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double sum = ata[i * cols + j] + (i == j ? ridge : 0.0);
                for (std::size_t t = 0; t < j; ++t)
                    sum -= chol[i * cols + t] * chol[j * cols + t];
                if (i == j) {
                    if (sum <= 0.0) {
                        ok = false;
                        break;
                    }
                    chol[i * cols + i] = std::sqrt(sum);
                } else {
                    chol[i * cols + j] = sum / chol[j * cols + j];
                }
            }
        }
        if (ok)
            break;
        if (attempt == 2)
            throw std::runtime_error("ls_compensation: matrix not positive definite");
        ridge = (ridge == 0.0 ? 1e-14 * ridge_unit : ridge * 100.0);
    }
    std::vector<double> y(cols, 0.0);
    for (std::size_t i = 0; i < cols; ++i) {
        double sum = atb[i];
        for (std::size_t t = 0; t < i; ++t)
            sum -= chol[i * cols + t] * y[t];
        y[i] = sum / chol[i * cols + i];
    }
    LeastSquaresFit fit;
    fit.c.assign(cols, 0.0);
    for (std::size_t ii = cols; ii-- > 0;) {
        double sum = y[ii];
        for (std::size_t t = ii + 1; t < cols; ++t)
            sum -= chol[t * cols + ii] * fit.c[t];
        fit.c[ii] = sum / chol[ii * cols + ii];
    }

    double err = 0.0, target = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        double model = 0.0;
        for (std::size_t j = 0; j < cols; ++j)
            model += a_at(r, j) * fit.c[j];
        const double b_r = r < s_km.size() ? s_km[r] : 0.0;
        err += (model - b_r) * (model - b_r);
        target += b_r * b_r;
    }
    fit.residual_db = err > 0.0 ? 10.0 * std::log10(err / target) : -320.0;
    return fit;
}

}  // namespace oracles
