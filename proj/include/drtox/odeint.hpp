#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>

#include "drtox/errors.hpp"

namespace drtox {

struct OdeControl {
    double rtol = 1e-8;
    double atol = 1e-10;
    long max_steps = 2000000;
};

// Adaptive Dormand-Prince 5(4). Advances y from t0 to t1, never stepping past
// t1, so callers pin discontinuities and output points by chaining segments.
template <int N>
class Dopri5 {
public:
    using Vec = Eigen::Matrix<double, N, 1>;
    using Rhs = std::function<Vec(double, const Vec&)>;

    explicit Dopri5(OdeControl ctrl = {}) : ctrl_(ctrl) {}

    // Returns a step-size hint for a follow-up segment; pass it back in as
    // h_init when integrating piecewise between discontinuities.
    double integrate(const Rhs& f, double t0, double t1, Vec& y, double h_init = 0.0) const {
        if (t1 <= t0) return h_init;
        double t = t0;
        Vec k1 = f(t, y);
        double h = (h_init > 0.0) ? std::min(h_init, t1 - t0) : initial_step(k1, t0, t1, y);
        long n_steps = 0;
        while (t < t1) {
            if (++n_steps > ctrl_.max_steps) throw OdeError("ode: step budget exhausted", t);
            h = std::min(h, t1 - t);

            const Vec k2 = f(t + c2 * h, (y + h * (a21 * k1)).eval());
            const Vec k3 = f(t + c3 * h, (y + h * (a31 * k1 + a32 * k2)).eval());
            const Vec k4 = f(t + c4 * h, (y + h * (a41 * k1 + a42 * k2 + a43 * k3)).eval());
            const Vec k5 =
                f(t + c5 * h, (y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)).eval());
            const Vec k6 = f(
                t + h, (y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)).eval());
            const Vec y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            const Vec k7 = f(t + h, y5);
            const Vec err =
                h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            double err_norm = 0.0;
            for (int i = 0; i < N; ++i) {
                const double sc =
                    ctrl_.atol + ctrl_.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
                const double r = err[i] / sc;
                err_norm += r * r;
            }
            err_norm = std::sqrt(err_norm / N);

            if (!std::isfinite(err_norm)) throw OdeError("ode: non-finite state", t);

            if (err_norm <= 1.0) {
                t += h;
                y = y5;
                k1 = k7;  // FSAL
            }
            double fac = 0.9 * std::pow(std::max(err_norm, 1e-16), -0.2);
            fac = std::clamp(fac, 0.2, 5.0);
            h *= fac;
            if (h < 1e-14 * std::max(1.0, std::abs(t)))
                throw OdeError("ode: step size collapsed", t);
        }
        return h;
    }

private:
    // Hairer-style h0 = 0.01 * |y|_sc / |y'|_sc.
    double initial_step(const Vec& dy, double t0, double t1, const Vec& y) const {
        double d0 = 0.0, d1 = 0.0;
        for (int i = 0; i < N; ++i) {
            const double sc = ctrl_.atol + ctrl_.rtol * std::abs(y[i]);
            d0 += (y[i] / sc) * (y[i] / sc);
            d1 += (dy[i] / sc) * (dy[i] / sc);
        }
        d0 = std::sqrt(d0 / N);
        d1 = std::sqrt(d1 / N);
        double h = (d0 > 1e-5 && d1 > 1e-5) ? 0.01 * d0 / d1 : (t1 - t0) / 100.0;
        return std::clamp(h, 1e-10, t1 - t0);
    }

    OdeControl ctrl_;

    // Dormand-Prince RK5(4)7M tableau
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                            e4 = 125.0 / 192 - 393.0 / 640,
                            e5 = -2187.0 / 6784 + 92097.0 / 339200,
                            e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
};

}  // namespace drtox
