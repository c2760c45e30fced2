// Command-line front end for the ANC simulation library. All work happens
// behind the shared-library C API; this file only parses arguments and maps
// status codes to exit codes (0 ok, 2 config error, 3 divergence, 1 other).

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dmcanc.h"

namespace {

struct ConfigDeleter {
    void operator()(dmc_config* cfg) const { dmc_config_destroy(cfg); }
};
using ConfigPtr = std::unique_ptr<dmc_config, ConfigDeleter>;

int exit_code(dmc_status rc) {
    switch (rc) {
    case DMC_OK:
        return 0;
    case DMC_ERR_CONFIG:
        return 2;
    case DMC_ERR_DIVERGENCE:
        return 3;
    default:
        return 1;
    }
}

int fail(dmc_status rc) {
    std::fprintf(stderr, "error: %s\n", dmc_last_error());
    return exit_code(rc);
}

ConfigPtr build_config(const std::string& config_file, const std::string& profile,
                       const std::vector<std::string>& sets, dmc_status& rc) {
    ConfigPtr cfg;
    if (!config_file.empty())
        cfg.reset(dmc_config_load(config_file.c_str()));
    else
        cfg.reset(dmc_config_create_profile(profile.c_str()));
    if (!cfg) {
        rc = DMC_ERR_CONFIG;
        return cfg;
    }
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
            rc = DMC_ERR_CONFIG;
            cfg.reset();
            return cfg;
        }
        rc = dmc_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
        if (rc != DMC_OK) {
            cfg.reset();
            return cfg;
        }
    }
    rc = DMC_OK;
    return cfg;
}

std::vector<double> parse_points(const std::string& csv) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const auto comma = csv.find(',', start);
        const std::string tok =
            csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty())
            out.push_back(std::stod(tok));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed multichannel active noise control simulator"};
    app.require_subcommand(1);

    std::string config_file;
    std::string profile = "paper";
    std::string out_dir = "out";
    std::vector<std::string> sets;
    app.add_option("--config", config_file, "Configuration file (key = value lines)");
    app.add_option("--profile", profile, "Built-in profile when no --config is given (paper|ci)");
    app.add_option("--set", sets, "Override a config key, e.g. --set mu_psi=1e-5")
        ->take_all();
    app.add_option("--out", out_dir, "Output directory");

    auto* cmd_paths = app.add_subcommand("paths", "Synthesize and save the acoustic plant");
    auto* cmd_comp = app.add_subcommand("compensate", "Fit and save cross-path compensation filters");
    auto* cmd_run = app.add_subcommand("run", "Run one experiment (mse.csv, weights/)");
    auto* cmd_compare =
        app.add_subcommand("compare", "Distributed vs centralized (mse_compare.csv, spectra.csv)");
    auto* cmd_sweep = app.add_subcommand("sweep", "Sweep a communication parameter (sweep.csv)");
    auto* cmd_check = app.add_subcommand("check", "Residual-error expansion consistency diagnostic");

    std::string axis = "delay";
    std::string points_csv;
    cmd_sweep->add_option("--axis", axis, "delay | rate")->required();
    cmd_sweep->add_option("--points", points_csv,
                          "Comma-separated axis values (defaults: delays 0,500,1500,3000; "
                          "rates fs,fs/100,fs/1000)");

    CLI11_PARSE(app, argc, argv);

    if (!config_file.empty() && app.count("--profile") > 0) {
        std::fprintf(stderr, "error: use either --config or --profile (a config file may set "
                             "profile= itself)\n");
        return 2;
    }

    dmc_status rc = DMC_OK;
    ConfigPtr cfg = build_config(config_file, profile, sets, rc);
    if (!cfg)
        return fail(rc);

    if (cmd_paths->parsed()) {
        rc = dmc_run_paths(cfg.get(), out_dir.c_str());
        if (rc == DMC_OK)
            std::printf("plant written to %s/plant\n", out_dir.c_str());
    } else if (cmd_comp->parsed()) {
        rc = dmc_run_compensate(cfg.get(), out_dir.c_str());
        if (rc == DMC_OK)
            std::printf("compensation filters written to %s/compensation\n", out_dir.c_str());
    } else if (cmd_run->parsed()) {
        rc = dmc_run_experiment(cfg.get(), out_dir.c_str());
        if (rc == DMC_OK)
            std::printf("results written to %s (mse.csv, weights/)\n", out_dir.c_str());
    } else if (cmd_compare->parsed()) {
        rc = dmc_run_compare(cfg.get(), out_dir.c_str());
        if (rc == DMC_OK)
            std::printf("results written to %s (mse_compare.csv, spectra.csv)\n", out_dir.c_str());
    } else if (cmd_sweep->parsed()) {
        std::vector<double> points;
        if (!points_csv.empty()) {
            points = parse_points(points_csv);
        } else if (axis == "delay") {
            points = {0, 500, 1500, 3000};
        } else {
            char buf[64];
            if (dmc_config_get(cfg.get(), "fs", buf, sizeof buf) != DMC_OK)
                return fail(DMC_ERR_CONFIG);
            const double fs = std::stod(buf);
            points = {fs, fs / 100.0, fs / 1000.0};
        }
        rc = dmc_run_sweep(cfg.get(), axis.c_str(), points.data(), points.size(), out_dir.c_str());
        if (rc == DMC_OK)
            std::printf("sweep table written to %s/sweep.csv\n", out_dir.c_str());
    } else if (cmd_check->parsed()) {
        double worst = 0.0;
        rc = dmc_run_check(cfg.get(), out_dir.c_str(), &worst);
        if (rc == DMC_OK)
            std::printf("max expansion deviation: %.3g (report in %s/check.txt)\n", worst,
                        out_dir.c_str());
    }

    return rc == DMC_OK ? 0 : fail(rc);
}
