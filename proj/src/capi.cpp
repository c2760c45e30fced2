#include "dmcanc.h"

#include <cstring>
#include <string>

#include "dmcanc/harness.hpp"

using dmcanc::ExperimentConfig;
using dmcanc::FirFilter;

struct dmc_config {
    ExperimentConfig cfg;
};

struct dmc_fir {
    FirFilter filter;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename Fn>
dmc_status guarded(Fn&& fn) {
    try {
        fn();
        return DMC_OK;
    } catch (const dmcanc::ConfigError& e) {
        set_error(e.what());
        return DMC_ERR_CONFIG;
    } catch (const dmcanc::DivergenceError& e) {
        set_error(e.what());
        return DMC_ERR_DIVERGENCE;
    } catch (const dmcanc::ArgumentError& e) {
        set_error(e.what());
        return DMC_ERR_ARGUMENT;
    } catch (const dmcanc::IoError& e) {
        set_error(e.what());
        return DMC_ERR_IO;
    } catch (const std::exception& e) {
        set_error(e.what());
        return DMC_ERR_INTERNAL;
    } catch (...) {
        set_error("unknown failure");
        return DMC_ERR_INTERNAL;
    }
}

template <typename Fn>
auto guarded_ptr(Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const std::exception& e) {
        set_error(e.what());
        return nullptr;
    } catch (...) {
        set_error("unknown failure");
        return nullptr;
    }
}

dmc_status copy_string(const std::string& s, char* buf, size_t buf_len) {
    if (buf == nullptr || buf_len == 0) {
        set_error("output buffer is empty");
        return DMC_ERR_ARGUMENT;
    }
    if (s.size() + 1 > buf_len) {
        set_error("output buffer too small (" + std::to_string(s.size() + 1) + " bytes needed)");
        return DMC_ERR_ARGUMENT;
    }
    std::memcpy(buf, s.c_str(), s.size() + 1);
    return DMC_OK;
}

}  // namespace

extern "C" {

const char* dmc_version(void) { return "1.0.0"; }

const char* dmc_last_error(void) { return g_last_error.c_str(); }

/* --- configuration ------------------------------------------------------ */

dmc_config* dmc_config_create(void) {
    return guarded_ptr([] { return new dmc_config{}; });
}

dmc_config* dmc_config_create_profile(const char* name) {
    return guarded_ptr([&]() -> dmc_config* {
        if (name == nullptr)
            throw dmcanc::ArgumentError("profile name is null");
        return new dmc_config{ExperimentConfig::profile(name)};
    });
}

dmc_config* dmc_config_load(const char* path) {
    return guarded_ptr([&]() -> dmc_config* {
        if (path == nullptr)
            throw dmcanc::ArgumentError("config path is null");
        return new dmc_config{ExperimentConfig::from_file(path)};
    });
}

void dmc_config_destroy(dmc_config* cfg) { delete cfg; }

dmc_status dmc_config_set(dmc_config* cfg, const char* key, const char* value) {
    return guarded([&] {
        if (cfg == nullptr || key == nullptr || value == nullptr)
            throw dmcanc::ArgumentError("null argument");
        cfg->cfg.set(key, value);
    });
}

dmc_status dmc_config_get(const dmc_config* cfg, const char* key, char* buf, size_t buf_len) {
    std::string value;
    const dmc_status rc = guarded([&] {
        if (cfg == nullptr || key == nullptr)
            throw dmcanc::ArgumentError("null argument");
        value = cfg->cfg.get(key);
    });
    if (rc != DMC_OK)
        return rc;
    return copy_string(value, buf, buf_len);
}

dmc_status dmc_config_validate(const dmc_config* cfg) {
    return guarded([&] {
        if (cfg == nullptr)
            throw dmcanc::ArgumentError("null config");
        cfg->cfg.validate();
    });
}

/* --- commands ------------------------------------------------------------ */

namespace {

dmc_status require(const dmc_config* cfg, const char* out_dir) {
    if (cfg == nullptr || out_dir == nullptr) {
        set_error("null argument");
        return DMC_ERR_ARGUMENT;
    }
    return DMC_OK;
}

}  // namespace

dmc_status dmc_run_paths(const dmc_config* cfg, const char* out_dir) {
    if (dmc_status rc = require(cfg, out_dir); rc != DMC_OK)
        return rc;
    return guarded([&] { dmcanc::cmd_paths(cfg->cfg, out_dir); });
}

dmc_status dmc_run_compensate(const dmc_config* cfg, const char* out_dir) {
    if (dmc_status rc = require(cfg, out_dir); rc != DMC_OK)
        return rc;
    return guarded([&] { dmcanc::cmd_compensate(cfg->cfg, out_dir); });
}

dmc_status dmc_run_experiment(const dmc_config* cfg, const char* out_dir) {
    if (dmc_status rc = require(cfg, out_dir); rc != DMC_OK)
        return rc;
    return guarded([&] { dmcanc::cmd_run(cfg->cfg, out_dir); });
}

dmc_status dmc_run_compare(const dmc_config* cfg, const char* out_dir) {
    if (dmc_status rc = require(cfg, out_dir); rc != DMC_OK)
        return rc;
    return guarded([&] { dmcanc::cmd_compare(cfg->cfg, out_dir); });
}

dmc_status dmc_run_sweep(const dmc_config* cfg, const char* axis, const double* points,
                         size_t n_points, const char* out_dir) {
    if (dmc_status rc = require(cfg, out_dir); rc != DMC_OK)
        return rc;
    return guarded([&] {
        if (axis == nullptr || (points == nullptr && n_points > 0))
            throw dmcanc::ArgumentError("null sweep axis or points");
        dmcanc::cmd_sweep(cfg->cfg, axis, std::vector<double>(points, points + n_points), out_dir);
    });
}

dmc_status dmc_run_check(const dmc_config* cfg, const char* out_dir, double* worst_deviation) {
    if (cfg == nullptr) {
        set_error("null config");
        return DMC_ERR_ARGUMENT;
    }
    return guarded([&] {
        const double worst = dmcanc::cmd_check(cfg->cfg, out_dir == nullptr ? "" : out_dir);
        if (worst_deviation != nullptr)
            *worst_deviation = worst;
    });
}

/* --- FIR primitive ------------------------------------------------------- */

dmc_fir* dmc_fir_create(const double* coeffs, size_t n_taps) {
    return guarded_ptr([&]() -> dmc_fir* {
        if (coeffs == nullptr || n_taps == 0)
            throw dmcanc::ArgumentError("fir_create: empty coefficient vector");
        return new dmc_fir{FirFilter(std::vector<double>(coeffs, coeffs + n_taps))};
    });
}

dmc_fir* dmc_fir_design_bandpass(size_t n_taps, double f_low, double f_high, double fs) {
    return guarded_ptr([&]() -> dmc_fir* {
        return new dmc_fir{dmcanc::design_bandpass(n_taps, f_low, f_high, fs)};
    });
}

void dmc_fir_destroy(dmc_fir* f) { delete f; }

dmc_status dmc_fir_process(dmc_fir* f, const double* x, double* y, size_t n) {
    return guarded([&] {
        if (f == nullptr || x == nullptr || y == nullptr)
            throw dmcanc::ArgumentError("null argument");
        for (size_t i = 0; i < n; ++i)
            y[i] = f->filter.step(x[i]);
    });
}

dmc_status dmc_fir_reset(dmc_fir* f) {
    return guarded([&] {
        if (f == nullptr)
            throw dmcanc::ArgumentError("null filter");
        f->filter.reset();
    });
}

size_t dmc_fir_num_taps(const dmc_fir* f) { return f == nullptr ? 0 : f->filter.num_taps(); }

dmc_status dmc_fir_coeffs(const dmc_fir* f, double* buf, size_t buf_len) {
    return guarded([&] {
        if (f == nullptr || buf == nullptr)
            throw dmcanc::ArgumentError("null argument");
        const auto& c = f->filter.coeffs();
        if (buf_len < c.size())
            throw dmcanc::ArgumentError("coefficient buffer too small");
        std::memcpy(buf, c.data(), c.size() * sizeof(double));
    });
}

}  // extern "C"
