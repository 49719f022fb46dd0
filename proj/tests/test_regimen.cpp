#include <doctest.h>

#include "drtox/regimen.hpp"

using drtox::DoseRegimen;
using drtox::RegimenPanel;

namespace {

DoseRegimen stepped() {
    Eigen::VectorXd doses(7), days(7);
    doses << 1, 5, 10, 25, 25, 25, 25;
    days << 1, 5, 9, 13, 17, 21, 25;
    return DoseRegimen::from_days(doses, days, "stepped");
}

}  // namespace

TEST_CASE("day-to-hour conversion") {
    const auto r = stepped();
    CHECK(r.times[0] == doctest::Approx(24.0));
    CHECK(r.times[6] == doctest::Approx(600.0));
}

TEST_CASE("subregimen returns the dose/time prefix") {
    const auto r = stepped();
    const auto s3 = drtox::subregimen(r, 3);
    REQUIRE(s3.n_admin() == 3);
    CHECK(s3.doses[0] == 1.0);
    CHECK(s3.doses[1] == 5.0);
    CHECK(s3.doses[2] == 10.0);
    CHECK(s3.times[2] == doctest::Approx(9.0 * 24.0));

    const auto full = drtox::subregimen(r, r.n_admin());
    CHECK(full.doses.isApprox(r.doses));
    CHECK(full.times.isApprox(r.times));

    Eigen::VectorXd d1(7), t1(7);
    d1.setConstant(25.0);
    t1 << 1, 5, 9, 13, 17, 21, 25;
    const auto flat = DoseRegimen::from_days(d1, t1, "flat");
    const auto s1 = drtox::subregimen(flat, 1);
    REQUIRE(s1.n_admin() == 1);
    CHECK(s1.doses[0] == 25.0);
    CHECK(s1.times[0] == doctest::Approx(24.0));
}

TEST_CASE("subregimen rejects out-of-range indices") {
    const auto r = stepped();
    CHECK_THROWS_AS((void)drtox::subregimen(r, 0), std::invalid_argument);
    CHECK_THROWS_AS((void)drtox::subregimen(r, 8), std::invalid_argument);
    CHECK_THROWS_AS((void)drtox::truncate_at_toxicity(r, 0), std::invalid_argument);
    CHECK_THROWS_AS((void)drtox::truncate_at_toxicity(r, 8), std::invalid_argument);
}

TEST_CASE("truncate_at_toxicity agrees with subregimen") {
    const auto r = stepped();
    for (Eigen::Index j = 1; j <= r.n_admin(); ++j) {
        const auto a = drtox::truncate_at_toxicity(r, j);
        const auto b = drtox::subregimen(r, j);
        CHECK(a.doses.isApprox(b.doses));
        CHECK(a.times.isApprox(b.times));
    }
    CHECK(drtox::truncate_at_toxicity(r, 4).n_admin() == 4);
    CHECK(drtox::truncate_at_toxicity(r, 7).n_admin() == 7);
    CHECK(drtox::truncate_at_toxicity(r, 1).n_admin() == 1);
}

TEST_CASE("prefix composition: sub of sub") {
    const auto r = stepped();
    for (Eigen::Index j = 1; j <= r.n_admin(); ++j) {
        const auto outer = drtox::subregimen(r, j);
        for (Eigen::Index jp = 1; jp <= j; ++jp) {
            const auto nested = drtox::subregimen(outer, jp);
            const auto direct = drtox::subregimen(r, jp);
            CHECK(nested.doses.isApprox(direct.doses));
            CHECK(nested.times.isApprox(direct.times));
        }
    }
}

TEST_CASE("regimen validation") {
    Eigen::VectorXd d(2), t(2);
    d << 1, 2;
    t << 48, 24;  // decreasing
    DoseRegimen bad{d, t, "bad"};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    DoseRegimen empty{Eigen::VectorXd(), Eigen::VectorXd(), "empty"};
    CHECK_THROWS_AS(empty.validate(), std::invalid_argument);

    Eigen::VectorXd dn(1), tn(1);
    dn << -1;
    tn << 24;
    DoseRegimen neg{dn, tn, "neg"};
    CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
}

TEST_CASE("panel derives the dose set and validates membership") {
    Eigen::VectorXd d1(2), d2(2), t(2);
    d1 << 1, 5;
    d2 << 5, 10;
    t << 1, 5;
    auto panel = RegimenPanel::from_regimens(
        {DoseRegimen::from_days(d1, t, "S1"), DoseRegimen::from_days(d2, t, "S2")});
    REQUIRE(panel.dose_set.size() == 3);
    CHECK(panel.dose_set[0] == 1.0);
    CHECK(panel.dose_set[2] == 10.0);

    panel.dose_set = {1.0, 5.0};  // 10 now missing
    CHECK_THROWS_AS(panel.validate(), std::invalid_argument);
}
