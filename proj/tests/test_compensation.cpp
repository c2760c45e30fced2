#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "dmcanc/compensation.hpp"
#include "oracles.hpp"

using namespace dmcanc;

namespace {

double misalignment_db(std::span<const double> c, std::span<const double> c_true) {
    double err = 0.0, ref = 0.0;
    const std::size_t len = std::max(c.size(), c_true.size());
    for (std::size_t i = 0; i < len; ++i) {
        const double a = i < c.size() ? c[i] : 0.0;
        const double b = i < c_true.size() ? c_true[i] : 0.0;
        err += (a - b) * (a - b);
        ref += b * b;
    }
    return 10.0 * std::log10(err / ref);
}

Plant default_plant(std::uint64_t seed = 1) {
    return synthesize_plant(4, 256, 320, 320, 50.0, 5000.0, 16000.0, seed, {});
}

}  // namespace

TEST_CASE("fit: recovers the exact kernel on a constructed plant") {
    const ConstructedPlant built = synthesize_constructed_plant(2, 256, 64, 320, 320, 16000.0, 5);
    const FirFilter s_est(built.plant.secondary[0][0].coeffs());
    auto [c, report] = fit_compensation(built.plant, 0, 1, s_est, 1e-3, 1'000'000, 64, 77);
    CHECK(misalignment_db(c.coeffs(), built.true_c[0][1]) <= -30.0);
    CHECK(report.iterations == 1'000'000);
    CHECK(report.converged);

    // the filter-domain least-squares oracle confirms the optimum is exact
    const auto fit = oracles::ls_compensation(built.plant.secondary[0][0].coeffs(),
                                              built.plant.secondary[0][1].coeffs(), 64);
    CHECK(fit.residual_db <= -200.0);
    CHECK(misalignment_db(fit.c, built.true_c[0][1]) <= -100.0);
}

TEST_CASE("fit: zero step size leaves the filter at zero") {
    const Plant plant = default_plant(2);
    const FirFilter s_est(plant.secondary[0][0].coeffs());
    auto [c, report] = fit_compensation(plant, 0, 1, s_est, 0.0, 20'000, 64, 78);
    for (double v : c.coeffs())
        CHECK(v == 0.0);
    // all error power comes from the unmodeled cross path: unit-power noise
    // through s_km, so block power ~ |s_km|^2
    double energy = 0.0;
    for (double v : plant.secondary[0][1].coeffs())
        energy += v * v;
    const double expect_db = 10.0 * std::log10(energy);
    for (double block_db : report.error_power_trace_db)
        CHECK(std::fabs(block_db - expect_db) <= 2.0);
}

TEST_CASE("fit: reaches the least-squares floor within 3 dB on a random plant") {
    // The weakly excited transition-band modes close slowly, so this check
    // needs a long identification run.
    const Plant plant = default_plant(3);
    const FirFilter s_est(plant.secondary[0][0].coeffs());
    auto [c, report] = fit_compensation(plant, 0, 1, s_est, 1e-3, 4'000'000, 64, 79);
    const double fitted_db = compensation_residual(plant.secondary[0][0].coeffs(),
                                                   plant.secondary[0][1].coeffs(), c.coeffs());
    const auto oracle = oracles::ls_compensation(plant.secondary[0][0].coeffs(),
                                                 plant.secondary[0][1].coeffs(), 64);
    CHECK(fitted_db <= oracle.residual_db + 3.0);
    CHECK(fitted_db >= oracle.residual_db - 1e-6);  // oracle is the floor
}

TEST_CASE("fit: one update step equals the hand-computed correlation") {
    const Plant plant = default_plant(4);
    const FirFilter s_est(plant.secondary[0][0].coeffs());
    const double mu = 1e-3;
    const std::uint64_t seed = 91;
    auto [c, report] = fit_compensation(plant, 0, 1, s_est, mu, 1, 64, seed);

    // replicate: v(0) from the same stream; after one sample the filter is
    // mu * e(0) * vhat(0) in tap 0, zero elsewhere
    GaussianRng rng(seed);
    const double v0 = rng.next();
    const double desired = v0 * plant.secondary[0][1].coeffs()[0];
    const double vhat0 = v0 * s_est.coeffs()[0];
    const double e0 = desired - 0.0;
    CHECK(c.coeffs()[0] == mu * e0 * vhat0);
    for (std::size_t i = 1; i < 64; ++i)
        CHECK(c.coeffs()[i] == 0.0);
}

TEST_CASE("fit: block error power is non-increasing after settling") {
    // Exact-solution plant: the trace descends to the floor and stays, so
    // the per-block bound is meaningful.
    const ConstructedPlant built = synthesize_constructed_plant(2, 256, 64, 320, 320, 16000.0, 5);
    const FirFilter s_est(built.plant.secondary[0][0].coeffs());
    auto [c, report] = fit_compensation(built.plant, 0, 1, s_est, 1e-3, 200'000, 64, 80);
    REQUIRE(report.error_power_trace_db.size() == 200);
    for (std::size_t b = 10; b + 1 < report.error_power_trace_db.size(); ++b)
        CHECK(report.error_power_trace_db[b + 1] <= report.error_power_trace_db[b] + 1.0);
    // fully settled: the closing quarter of the trace sits at the dB floor
    for (std::size_t b = 150; b < 200; ++b)
        CHECK(report.error_power_trace_db[b] == -120.0);

    // Random plant: the residual stays correlated over ~400 samples, so a
    // 1000-sample block has only a few independent chunks and swings by a
    // few dB. The trend bound applies to a 20-block aggregate instead.
    const Plant plant = default_plant(6);
    const FirFilter est2(plant.secondary[1][1].coeffs());
    auto [c2, report2] = fit_compensation(plant, 1, 0, est2, 1e-3, 200'000, 64, 80);
    std::vector<double> coarse;
    for (std::size_t b = 0; b + 20 <= report2.error_power_trace_db.size(); b += 20) {
        double acc = 0.0;
        for (std::size_t i = b; i < b + 20; ++i)
            acc += std::pow(10.0, report2.error_power_trace_db[i] / 10.0);
        coarse.push_back(10.0 * std::log10(acc / 20.0));
    }
    for (std::size_t b = 1; b + 1 < coarse.size(); ++b)
        CHECK(coarse[b + 1] <= coarse[b] + 1.0);
}

TEST_CASE("fit: adaptation does not drift off the exact solution") {
    const ConstructedPlant built = synthesize_constructed_plant(2, 256, 64, 320, 320, 16000.0, 7);
    const FirFilter s_est(built.plant.secondary[0][0].coeffs());
    auto [c, report] = fit_compensation(built.plant, 0, 1, s_est, 1e-3, 100'000, 64, 81,
                                        built.true_c[0][1]);
    double drift = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < 64; ++i) {
        drift += (c.coeffs()[i] - built.true_c[0][1][i]) * (c.coeffs()[i] - built.true_c[0][1][i]);
        ref += built.true_c[0][1][i] * built.true_c[0][1][i];
    }
    CHECK(std::sqrt(drift / ref) <= 1e-3);
}

TEST_CASE("fit: argument and divergence errors") {
    const Plant plant = default_plant(8);
    const FirFilter s_est(plant.secondary[0][0].coeffs());
    CHECK_THROWS_AS(fit_compensation(plant, 0, 0, s_est, 1e-3, 100, 64, 1), ArgumentError);
    CHECK_THROWS_AS(fit_compensation(plant, 0, 9, s_est, 1e-3, 100, 64, 1), ArgumentError);
    CHECK_THROWS_AS(fit_compensation(plant, 0, 1, s_est, -1.0, 100, 64, 1), ArgumentError);
    CHECK_THROWS_AS(fit_compensation(plant, 0, 1, s_est, 1e-3, 100, 0, 1), ArgumentError);
    try {
        fit_compensation(plant, 0, 1, s_est, 50.0, 100'000, 64, 1);
        FAIL("expected divergence");
    } catch (const DivergenceError& err) {
        CHECK(std::string(err.what()).find("mu_c") != std::string::npos);
    }
}

TEST_CASE("compensation_residual: exact, zero, and random filters") {
    const ConstructedPlant built = synthesize_constructed_plant(2, 128, 32, 159, 159, 16000.0, 9);
    const auto& s_kk = built.plant.secondary[0][0].coeffs();
    const auto& s_km = built.plant.secondary[0][1].coeffs();

    const auto ls = oracles::ls_compensation(s_kk, s_km, 32);
    CHECK(compensation_residual(s_kk, s_km, ls.c) <= -200.0);

    const std::vector<double> zero(32, 0.0);
    CHECK(compensation_residual(s_kk, s_km, zero) == doctest::Approx(0.0).epsilon(1e-12));

    GaussianRng rng(10);
    std::vector<double> random(32);
    for (double& v : random)
        v = rng.next();
    CHECK(compensation_residual(s_kk, s_km, random) >= ls.residual_db);

    CHECK_THROWS_AS(compensation_residual(s_kk, std::vector<double>(159, 0.0), zero),
                    ArgumentError);
}

TEST_CASE("fit_all: full pair coverage and strong residuals on the default plant") {
    const Plant plant = default_plant(1);
    const std::vector<FirFilter> estimates = self_path_estimates(plant, 0.0, 0);
    const auto sets = fit_all(plant, estimates, 1e-3, 400'000, 64, 11);
    REQUIRE(sets.size() == 4);
    std::size_t count = 0;
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(sets[k].owner == k);
        CHECK_FALSE(sets[k].filters.contains(k));
        for (const auto& [m, filter] : sets[k].filters) {
            CHECK(filter.num_taps() == 64);
            ++count;
        }
        for (const auto& [m, db] : sets[k].residual_db) {
            CHECK(db <= -20.0);
            // least-squares oracle is the floor for each pair; the within-3dB
            // convergence claim is covered by the dedicated long-run test
            const auto ls = oracles::ls_compensation(plant.secondary[k][k].coeffs(),
                                                     plant.secondary[k][m].coeffs(), 64);
            CHECK(db >= ls.residual_db - 1e-6);
        }
    }
    CHECK(count == 12);
}

TEST_CASE("fit_all: single node yields empty sets") {
    Plant p;
    p.n_nodes = 1;
    p.fs = 16000.0;
    p.self_taps = p.cross_taps = 8;
    p.primary_taps = 8;
    p.primary.emplace_back(std::vector<double>(8, 0.1));
    p.secondary.emplace_back();
    p.secondary[0].emplace_back(std::vector<double>(8, 0.1));
    const auto sets = fit_all(p, self_path_estimates(p, 0.0, 0), 1e-3, 100, 4, 1);
    REQUIRE(sets.size() == 1);
    CHECK(sets[0].filters.empty());
}

TEST_CASE("self_path_estimates: exact by default, perturbed on request") {
    const Plant plant = default_plant(12);
    const auto exact = self_path_estimates(plant, 0.0, 50);
    for (std::size_t k = 0; k < 4; ++k)
        CHECK(exact[k].coeffs() == plant.secondary[k][k].coeffs());
    const auto noisy = self_path_estimates(plant, 0.05, 50);
    for (std::size_t k = 0; k < 4; ++k)
        CHECK(noisy[k].coeffs() != plant.secondary[k][k].coeffs());
}

TEST_CASE("compensation serialization round-trips") {
    const Plant plant = default_plant(13);
    const auto sets = fit_all(plant, self_path_estimates(plant, 0.0, 0), 1e-3, 20'000, 64, 14);
    const auto dir = std::filesystem::temp_directory_path() / "dmcanc_comp_test";
    std::filesystem::remove_all(dir);
    save_compensation(sets, dir.string());
    const auto loaded = load_compensation(dir.string());
    REQUIRE(loaded.size() == sets.size());
    for (std::size_t k = 0; k < sets.size(); ++k) {
        for (const auto& [m, filter] : sets[k].filters) {
            CHECK(loaded[k].filters.at(m).coeffs() == filter.coeffs());
            CHECK(loaded[k].residual_db.at(m) == sets[k].residual_db.at(m));
        }
    }
    std::filesystem::remove_all(dir);
}
