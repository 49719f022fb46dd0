#include <doctest.h>

#include <cmath>

#include "drtox/stats.hpp"
#include "drtox/toxgen.hpp"

using namespace drtox;

namespace {

DoseRegimen flat(double dose, int n = 7) {
    Eigen::VectorXd d = Eigen::VectorXd::Constant(n, dose);
    Eigen::VectorXd days(n);
    for (int j = 0; j < n; ++j) days[j] = 1.0 + 4.0 * j;
    return DoseRegimen::from_days(d, days, "flat");
}

}  // namespace

TEST_CASE("simulate_toxicity: deterministic threshold cases") {
    Rng rng = make_rng({11});

    SUBCASE("threshold above every peak -> all zeros") {
        Eigen::VectorXd peaks(4);
        peaks << 10, 20, 15, 5;
        ToxicityGround g{1e12, 0.25};
        const auto out = simulate_toxicity(peaks, g, rng);
        out.validate();
        CHECK(out.global == 0);
        CHECK(out.stop_index == 4);
        CHECK(out.per_admin.sum() == 0);
    }

    SUBCASE("omega_alpha = 0: first crossing stops dosing") {
        Eigen::VectorXd peaks(2);
        peaks << 10, 20;
        ToxicityGround g{15.0, 0.0};
        const auto out = simulate_toxicity(peaks, g, rng);
        out.validate();
        CHECK(out.global == 1);
        CHECK(out.stop_index == 2);
        CHECK(out.per_admin[1] == 1);
        CHECK(out.per_admin[0] == 0);
    }
}

TEST_CASE("simulate_toxicity: structural invariants over random peaks") {
    Rng rng = make_rng({12});
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int rep = 0; rep < 500; ++rep) {
        const int n = 1 + static_cast<int>(unif(rng) * 7);
        Eigen::VectorXd peaks(n);
        for (int j = 0; j < n; ++j) peaks[j] = 5000.0 * unif(rng);
        ToxicityGround g{50.0 + 4000.0 * unif(rng), 0.4 * unif(rng)};
        const auto out = simulate_toxicity(peaks, g, rng);
        out.validate();  // at most last flag set, stop index consistent
        CHECK(out.stop_index <= n);
    }
}

TEST_CASE("simulate_toxicity: empirical rate matches the closed form") {
    Eigen::VectorXd peaks(3);
    peaks << 400.0, 900.0, 700.0;
    ToxicityGround g{1000.0, 0.25};
    const double p_closed = tox_prob_given_peak(peaks.maxCoeff(), g);

    Rng rng = make_rng({13});
    const int n = 100000;
    int tox = 0;
    for (int i = 0; i < n; ++i) tox += simulate_toxicity(peaks, g, rng).global;
    const double p_emp = static_cast<double>(tox) / n;
    const double se = std::sqrt(p_closed * (1.0 - p_closed) / n);
    CHECK(std::abs(p_emp - p_closed) < 3.0 * se);
}

TEST_CASE("true_tox_prob: degenerate thresholds") {
    const auto pop = PopulationParams::defaults();
    const SimSettings s{};
    Rng rng = make_rng({14});
    const auto r = flat(25.0);

    const double p_low = true_tox_prob(r, pop, ToxicityGround{1e-6, 0.25}, 50, s, rng);
    CHECK(p_low == doctest::Approx(1.0));
    const double p_high = true_tox_prob(r, pop, ToxicityGround{1e15, 0.25}, 50, s, rng);
    CHECK(p_high == doctest::Approx(0.0));
}

TEST_CASE("true_tox_prob agrees with direct Bernoulli simulation") {
    const auto pop = PopulationParams::defaults();
    const SimSettings s{};
    const auto r = flat(25.0);

    Rng rng = make_rng({15});
    const int n_mc = 400;
    const auto sample = sample_max_peaks(r, pop, n_mc, s, rng);
    ToxicityGround g{quantile(sample, 0.7), 0.25};

    const double p_phi = tox_prob_from_sample(sample, g);

    Rng rng2 = make_rng({16});
    int tox = 0;
    const int reps = 40;  // reuse each simulated patient for several alpha draws
    for (Eigen::Index i = 0; i < sample.size(); ++i) {
        Eigen::VectorXd one(1);
        one << sample[i];
        for (int k = 0; k < reps; ++k) tox += simulate_toxicity(one, g, rng2).global;
    }
    const double p_emp = static_cast<double>(tox) / (n_mc * reps);
    const double se = std::sqrt(p_phi * (1.0 - p_phi) / (n_mc * reps)) +
                      sample_sd(sample) / std::sqrt(double(n_mc)) * 1e-3;
    CHECK(std::abs(p_emp - p_phi) < 3.0 * std::sqrt(p_phi * (1.0 - p_phi) / (n_mc * reps)) + 0.01);
}

TEST_CASE("tox probability is nonincreasing in tau and degenerates at omega_alpha = 0") {
    Eigen::VectorXd sample(5);
    sample << 100, 200, 300, 400, 500;
    double prev = 1.1;
    for (double tau : {50.0, 150.0, 250.0, 350.0, 450.0, 550.0}) {
        const double p = tox_prob_from_sample(sample, ToxicityGround{tau, 0.25});
        CHECK(p <= prev + 1e-12);
        prev = p;
    }
    // omega_alpha = 0: step function P(r >= tau)
    CHECK(tox_prob_from_sample(sample, ToxicityGround{250.0, 0.0}) == doctest::Approx(0.6));
}

TEST_CASE("calibrate_threshold: single-regimen panel hits the target rate") {
    const auto pop = PopulationParams::defaults();
    const SimSettings s{};
    auto panel = RegimenPanel::from_regimens({flat(25.0)});
    Rng rng = make_rng({17});
    const auto cal = calibrate_threshold(panel, pop, 0.25, 0, 0.3, 300, s, rng, 2);
    CHECK(cal.true_curve[0] == doctest::Approx(0.3).epsilon(0.034));
    CHECK(cal.tau_t > 0.0);
}

TEST_CASE("calibrate_threshold: dominated regimen increases probability") {
    const auto pop = PopulationParams::defaults();
    const SimSettings s{};
    auto panel = RegimenPanel::from_regimens({flat(10.0), flat(25.0)});
    Rng rng = make_rng({18});
    const auto cal = calibrate_threshold(panel, pop, 0.25, 1, 0.3, 300, s, rng, 2);
    CHECK(cal.true_curve[1] == doctest::Approx(0.3).epsilon(0.034));
    CHECK(cal.true_curve[0] < cal.true_curve[1]);
}
