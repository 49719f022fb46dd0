#pragma once

// Test-only reference implementations, independent of the library's numeric
// paths: a fixed-step RK4 integrator over the full (C, E, AUC_E) system with
// step-halving convergence, plus small deterministic quadrature helpers.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "drtox/pkpd.hpp"
#include "drtox/regimen.hpp"

namespace oracle {

struct PkPdOracleResult {
    std::vector<double> grid;
    std::vector<double> conc;
    std::vector<double> cytokine;
    std::vector<double> auc_e;
};

// Fixed-step RK4 on dC/dt = rate_in(t)/V - (Cl/V) C, dE/dt = production - kdeg E,
// dAUC/dt = E, split at administration starts and infusion ends.
inline PkPdOracleResult integrate_rk4(const drtox::IndividualParams& th,
                                      const drtox::DoseRegimen& reg, double body_weight_kg,
                                      double infusion_hours, double horizon_h, double step_h) {
    using Vec3 = std::array<double, 3>;
    const double ke = th.pk.cl / th.pk.v;

    auto rate_in = [&](double t) {
        double r = 0.0;
        for (Eigen::Index j = 0; j < reg.n_admin(); ++j) {
            const double dt = t - reg.times[j];
            if (dt >= 0.0 && dt < infusion_hours)
                r += reg.doses[j] * body_weight_kg / infusion_hours;
        }
        return r;
    };
    auto admins_so_far = [&](double t) {
        int j = 0;
        while (j < reg.n_admin() && reg.times[j] <= t) ++j;
        return j;
    };
    // rate_in is piecewise constant with breakpoints exactly at the segment
    // boundaries, so it enters the RHS as a per-segment constant.
    auto rhs = [&](double, const Vec3& y, int j_admin, double seg_rate) -> Vec3 {
        const double c = std::max(y[0], 0.0);
        double prod = 0.0;
        if (c > 0.0) {
            const double ch = std::pow(c, th.pd.h);
            const double ic50_eff = th.pd.ic50 / std::pow(th.pd.kprime, std::max(j_admin - 1, 0));
            prod = th.pd.emax * ch / (std::pow(th.pd.ec50, th.pd.h) + ch) *
                   (1.0 - th.pd.imax * y[2] / (ic50_eff + y[2]));
        }
        return {seg_rate / th.pk.v - ke * y[0], prod - th.pd.kdeg * y[1], y[1]};
    };

    std::vector<double> events;
    for (Eigen::Index j = 0; j < reg.n_admin(); ++j) {
        events.push_back(reg.times[j]);
        events.push_back(reg.times[j] + infusion_hours);
    }
    events.push_back(reg.times[reg.n_admin() - 1] + horizon_h);
    std::sort(events.begin(), events.end());

    PkPdOracleResult out;
    Vec3 y = {0.0, 0.0, 0.0};
    double t = events.front();
    out.grid.push_back(t);
    out.conc.push_back(0.0);
    out.cytokine.push_back(0.0);
    out.auc_e.push_back(0.0);

    for (size_t e = 1; e < events.size(); ++e) {
        const double seg_end = events[e];
        if (seg_end <= t) continue;
        const int j_admin = admins_so_far(0.5 * (t + seg_end));
        const double seg_rate = rate_in(0.5 * (t + seg_end));
        const long n_steps = std::max<long>(1, std::lround((seg_end - t) / step_h));
        const double h = (seg_end - t) / static_cast<double>(n_steps);
        for (long s = 0; s < n_steps; ++s) {
            const Vec3 k1 = rhs(t, y, j_admin, seg_rate);
            Vec3 y2, y3, y4;
            for (int i = 0; i < 3; ++i) y2[i] = y[i] + 0.5 * h * k1[i];
            const Vec3 k2 = rhs(t + 0.5 * h, y2, j_admin, seg_rate);
            for (int i = 0; i < 3; ++i) y3[i] = y[i] + 0.5 * h * k2[i];
            const Vec3 k3 = rhs(t + 0.5 * h, y3, j_admin, seg_rate);
            for (int i = 0; i < 3; ++i) y4[i] = y[i] + h * k3[i];
            const Vec3 k4 = rhs(t + h, y4, j_admin, seg_rate);
            for (int i = 0; i < 3; ++i)
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            t += h;
            out.grid.push_back(t);
            out.conc.push_back(y[0]);
            out.cytokine.push_back(y[1]);
            out.auc_e.push_back(y[2]);
        }
        t = seg_end;
    }
    return out;
}

// Per-administration-window cytokine maxima from an oracle run.
inline std::vector<double> window_peaks(const PkPdOracleResult& res, const drtox::DoseRegimen& reg,
                                        double horizon_h) {
    const Eigen::Index J = reg.n_admin();
    std::vector<double> peaks(J, 0.0);
    for (size_t i = 0; i < res.grid.size(); ++i) {
        const double t = res.grid[i];
        for (Eigen::Index j = 0; j < J; ++j) {
            const double w0 = reg.times[j];
            const double w1 = (j + 1 < J) ? reg.times[j + 1] : reg.times[J - 1] + horizon_h;
            if (t >= w0 && t <= w1) peaks[j] = std::max(peaks[j], res.cytokine[i]);
        }
    }
    return peaks;
}

// Step-halving wrapper: halve until successive max-peaks agree to rel_tol.
inline std::vector<double> converged_peaks(const drtox::IndividualParams& th,
                                           const drtox::DoseRegimen& reg, double body_weight_kg,
                                           double infusion_hours, double horizon_h,
                                           double rel_tol = 1e-6) {
    double h = 0.05;
    std::vector<double> prev;
    for (int iter = 0; iter < 8; ++iter) {
        auto res = integrate_rk4(th, reg, body_weight_kg, infusion_hours, horizon_h, h);
        auto peaks = window_peaks(res, reg, horizon_h);
        if (!prev.empty()) {
            double rel = 0.0;
            for (size_t j = 0; j < peaks.size(); ++j)
                if (peaks[j] > 0.0) rel = std::max(rel, std::abs(peaks[j] - prev[j]) / peaks[j]);
            if (rel < rel_tol) return peaks;
        }
        prev = peaks;
        h *= 0.5;
    }
    return prev;
}

}  // namespace oracle
