#include <doctest.h>

#include <cmath>

#include "drtox/pkpd.hpp"
#include "drtox/stats.hpp"
#include "oracles.hpp"

using namespace drtox;

namespace {

DoseRegimen flat25() {
    Eigen::VectorXd doses(7), days(7);
    doses.setConstant(25.0);
    days << 1, 5, 9, 13, 17, 21, 25;
    return DoseRegimen::from_days(doses, days, "flat25");
}

DoseRegimen stepped25() {
    Eigen::VectorXd doses(7), days(7);
    doses << 1, 5, 10, 25, 25, 25, 25;
    days << 1, 5, 9, 13, 17, 21, 25;
    return DoseRegimen::from_days(doses, days, "stepped25");
}

SimSettings default_settings() { return SimSettings{}; }

}  // namespace

TEST_CASE("concentration: hand-checked end-of-infusion value") {
    PkParams pk{1.36, 3.4};
    Eigen::VectorXd d(1), t(1);
    d << 25.0;
    t << 0.0;
    DoseRegimen r{d, t, "single"};

    const double rate = 25.0 * 70.0 / 4.0;  // 437.5 ug/h
    const double ke = 1.36 / 3.4;           // 0.4 1/h
    const double expected = rate / 1.36 * (1.0 - std::exp(-ke * 4.0));
    const double got = concentration(pk, r, 70.0, 4.0, 4.0);
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    CHECK(got == doctest::Approx(256.7).epsilon(2e-4));
}

TEST_CASE("concentration: zero before dosing, zero at infinity") {
    PkParams pk{1.36, 3.4};
    const auto r = flat25();
    CHECK(concentration(pk, r, 70.0, 4.0, 1.0) == 0.0);
    CHECK(concentration(pk, r, 70.0, 4.0, 23.999) == 0.0);
    Eigen::VectorXd d(1), t(1);
    d << 25.0;
    t << 0.0;
    DoseRegimen single{d, t, "single"};
    CHECK(concentration(pk, single, 70.0, 4.0, 5000.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS((void)concentration(pk, r, 70.0, 4.0, -1.0), std::invalid_argument);
}

TEST_CASE("concentration: exact superposition over administrations") {
    PkParams pk{1.36, 3.4};
    const auto r = stepped25();
    for (double t : {30.0, 125.5, 240.0, 400.0, 601.0}) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < r.n_admin(); ++j) {
            Eigen::VectorXd dj(1), tj(1);
            dj << r.doses[j];
            tj << r.times[j];
            sum += concentration(pk, DoseRegimen{dj, tj, "one"}, 70.0, 4.0, t);
        }
        CHECK(concentration(pk, r, 70.0, 4.0, t) == doctest::Approx(sum).epsilon(1e-12));
    }
}

TEST_CASE("closed-form concentration matches RK4 integration of the 1-compartment system") {
    const auto pop = PopulationParams::defaults();
    const auto th = pop.at_mode();
    const auto r = stepped25();
    const auto res = oracle::integrate_rk4(th, r, 70.0, 4.0, 96.0, 0.01);
    double max_rel = 0.0;
    for (size_t i = 0; i < res.grid.size(); i += 7) {
        const double c = concentration(th.pk, r, 70.0, 4.0, res.grid[i]);
        if (c > 1.0) max_rel = std::max(max_rel, std::abs(c - res.conc[i]) / c);
    }
    CHECK(max_rel < 1e-6);
}

TEST_CASE("simulate_pd: no production without stimulus") {
    auto pop = PopulationParams::defaults();
    auto th = pop.at_mode();

    SUBCASE("emax = 0") {
        th.pd.emax = 0.0;
        const auto prof = simulate_pd(th, flat25(), default_settings());
        CHECK(prof.cytokine.maxCoeff() == 0.0);
    }
    SUBCASE("all doses zero") {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(7), days(7);
        days << 1, 5, 9, 13, 17, 21, 25;
        const auto prof =
            simulate_pd(th, DoseRegimen::from_days(d, days, "zero"), default_settings());
        CHECK(prof.cytokine.maxCoeff() == 0.0);
        CHECK(prof.conc.maxCoeff() == 0.0);
    }
}

// Golden peaks for the default fixed effects, frozen from the step-halving
// RK4 oracle (converged to 1e-7).
constexpr double kFlat25Peaks[7] = {15388.695, 1349.3414, 551.44172, 290.82215,
                                    201.56922, 170.56172, 159.73756};

TEST_CASE("simulate_pd: golden peaks for the flat-25 regimen") {
    const auto pop = PopulationParams::defaults();
    const auto peaks = cytokine_peaks(pop.at_mode(), flat25(), default_settings());
    REQUIRE(peaks.size() == 7);
    for (int j = 0; j < 7; ++j)
        CHECK(peaks[j] == doctest::Approx(kFlat25Peaks[j]).epsilon(5e-3));

    // independent oracle recomputation (coarser convergence, same answer)
    const auto ref = oracle::converged_peaks(pop.at_mode(), flat25(), 70.0, 4.0, 96.0, 1e-6);
    for (int j = 0; j < 7; ++j) CHECK(ref[j] == doctest::Approx(kFlat25Peaks[j]).epsilon(1e-4));
}

TEST_CASE("figure-2 behaviour: stepped regimen mitigates the cytokine peak") {
    const auto pop = PopulationParams::defaults();
    const auto th = pop.at_mode();
    const auto s = default_settings();

    const auto peaks_flat = cytokine_peaks(th, flat25(), s);
    const auto peaks_stepped = cytokine_peaks(th, stepped25(), s);

    CHECK(max_peak(peaks_stepped) < max_peak(peaks_flat));

    // flat regimen: priming inhibition makes the first peak the largest
    Eigen::Index argmax;
    peaks_flat.maxCoeff(&argmax);
    CHECK(argmax == 0);

    // concentration profiles coincide from the 4th administration onward
    const double t4 = flat25().times[3];
    double max_rel = 0.0;
    for (double t = t4; t <= 600.0 + 96.0; t += 3.7) {
        const double cf = concentration(th.pk, flat25(), s.body_weight_kg, s.infusion_hours, t);
        const double cs = concentration(th.pk, stepped25(), s.body_weight_kg, s.infusion_hours, t);
        if (cf > 1.0) max_rel = std::max(max_rel, std::abs(cf - cs) / cf);
    }
    CHECK(max_rel < 1e-4);
}

TEST_CASE("peak windows cover the global maximum") {
    const auto pop = PopulationParams::defaults();
    Rng rng = make_rng({99, 1});
    for (int rep = 0; rep < 3; ++rep) {
        const auto th = sample_individual(pop, rng);
        const auto prof = simulate_pd(th, stepped25(), default_settings());
        const auto peaks = cytokine_peaks(th, stepped25(), default_settings());
        // grid max is a lower bound; refinement may top it by the grid gap
        const double global_max = prof.cytokine.maxCoeff();
        CHECK(peaks.sum() >= global_max);
        CHECK(max_peak(peaks) >= global_max - 1e-12);
        CHECK(max_peak(peaks) <= global_max * 1.01);
    }
}

TEST_CASE("cytokine nonnegative, AUC nondecreasing") {
    const auto pop = PopulationParams::defaults();
    Rng rng = make_rng({99, 2});
    for (int rep = 0; rep < 3; ++rep) {
        const auto th = sample_individual(pop, rng);
        const auto prof = simulate_pd(th, stepped25(), default_settings());
        CHECK(prof.cytokine.minCoeff() >= 0.0);
        for (Eigen::Index i = 1; i < prof.auc_e.size(); ++i)
            CHECK(prof.auc_e[i] >= prof.auc_e[i - 1] - 1e-9);
    }
}

TEST_CASE("halving tolerances moves peaks by less than 0.1%") {
    const auto pop = PopulationParams::defaults();
    const auto th = pop.at_mode();
    SimSettings s1 = default_settings();
    SimSettings s2 = s1;
    s2.rtol *= 0.5;
    s2.atol *= 0.5;
    const auto p1 = cytokine_peaks(th, stepped25(), s1);
    const auto p2 = cytokine_peaks(th, stepped25(), s2);
    for (Eigen::Index j = 0; j < p1.size(); ++j)
        CHECK(std::abs(p1[j] - p2[j]) <= 1e-3 * std::max(p1[j], 1e-12));
}

TEST_CASE("simulate_at matches the dense profile at observation times") {
    const auto pop = PopulationParams::defaults();
    const auto th = pop.at_mode();
    const auto r = stepped25();
    const auto prof = simulate_pd(th, r, default_settings());

    Eigen::VectorXd times(5);
    times << 28.0, 120.0, 250.0, 430.0, 690.0;
    const auto vals = simulate_at(th, r, times, default_settings());
    for (Eigen::Index i = 0; i < times.size(); ++i) {
        const double c = concentration(th.pk, r, 70.0, 4.0, times[i]);
        CHECK(vals.conc[i] == doctest::Approx(c).epsilon(1e-10));
    }
    // cytokine path: compare against the oracle at its own grid times
    const auto res = oracle::integrate_rk4(th, r, 70.0, 4.0, 96.0, 0.005);
    for (size_t gi = 1000; gi < res.grid.size(); gi += 23777) {
        Eigen::VectorXd tg(1);
        tg << res.grid[gi];
        const auto v = simulate_at(th, r, tg, default_settings());
        CHECK(v.cytokine[0] == doctest::Approx(res.cytokine[gi]).epsilon(1e-3).scale(1e-6));
    }
}

TEST_CASE("sample_individual: degenerate and stochastic behaviour") {
    auto pop = PopulationParams::defaults();

    SUBCASE("omega all zero returns mu exactly") {
        pop.omega.setZero();
        Rng rng = make_rng({1, 2, 3});
        const auto th = sample_individual(pop, rng);
        CHECK((th.as_vec() == pop.mu).all());
    }

    SUBCASE("log-scale mean matches log mu (LLN)") {
        const int n = 100000;
        Rng rng = make_rng({4, 5, 6});
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += std::log(sample_individual(pop, rng).pk.cl);
        const double mean_log = acc / n;
        const double om = pop.omega[static_cast<int>(Param::Cl)];
        CHECK(std::abs(mean_log - std::log(pop.mu[0])) < 3.0 * om / std::sqrt(double(n)));
    }

    SUBCASE("CV mapping is the exact log-normal relation") {
        const double om = cv_percent_to_omega(41.9);
        CHECK(std::sqrt(std::exp(om * om) - 1.0) == doctest::Approx(0.419).epsilon(1e-12));
    }
}

TEST_CASE("observe_with_error") {
    auto pop = PopulationParams::defaults();
    const auto th = pop.at_mode();
    const auto prof = simulate_pd(th, flat25(), default_settings());

    SUBCASE("b = 0 reproduces model values; zero model value stays zero") {
        pop.b_pk = 0.0;
        pop.b_pd = 0.0;
        Rng rng = make_rng({7});
        Eigen::VectorXd times(2);
        times << 28.0, 120.0;
        const auto obs = observe_with_error(prof, times, pop, rng);
        CHECK(obs.conc[0] == doctest::Approx(concentration(th.pk, flat25(), 70, 4, 28.0))
                                 .epsilon(1e-6));
        // at t = 24 h (infusion start) concentration is exactly 0
        Eigen::VectorXd t0(1);
        t0 << 24.0;
        pop.b_pk = 0.1;
        const auto obs0 = observe_with_error(prof, t0, pop, rng);
        CHECK(obs0.conc[0] == 0.0);
    }

    SUBCASE("empirical proportional-error SD is b") {
        Rng rng = make_rng({8});
        Eigen::VectorXd times(1);
        times << 120.0;
        const double model = concentration(th.pk, flat25(), 70, 4, 120.0);
        const int n = 10000;
        Eigen::VectorXd ratio(n);
        for (int i = 0; i < n; ++i)
            ratio[i] = observe_with_error(prof, times, pop, rng).conc[0] / model - 1.0;
        CHECK(std::abs(sample_sd(ratio) - 0.1) < 0.003);
    }

    SUBCASE("time outside grid throws") {
        Rng rng = make_rng({9});
        Eigen::VectorXd times(1);
        times << 1e6;
        CHECK_THROWS_AS((void)observe_with_error(prof, times, pop, rng), std::invalid_argument);
    }
}

TEST_CASE("reference_peaks: deterministic, zero for zero doses") {
    const auto pop = PopulationParams::defaults();
    Eigen::VectorXd dz = Eigen::VectorXd::Zero(3), days(3);
    days << 1, 5, 9;
    auto panel = RegimenPanel{{DoseRegimen::from_days(dz, days, "zero"), flat25()}, {0.0, 25.0}};
    const auto ref1 = reference_peaks(pop, panel, default_settings());
    const auto ref2 = reference_peaks(pop, panel, default_settings());
    CHECK(ref1[0] == 0.0);
    CHECK(ref1[1] > 0.0);
    CHECK(ref1.isApprox(ref2));
}

TEST_CASE("max_peak basics") {
    Eigen::VectorXd v(3);
    v << 3, 7, 2;
    CHECK(max_peak(v) == 7.0);
    Eigen::VectorXd one(1);
    one << 5;
    CHECK(max_peak(one) == 5.0);
    CHECK_THROWS_AS((void)max_peak(Eigen::VectorXd()), std::invalid_argument);
}
