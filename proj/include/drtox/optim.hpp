#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <utility>

namespace drtox {

struct NelderMeadResult {
    Eigen::VectorXd x;
    double fx = 0.0;
    bool converged = false;
    int n_evals = 0;
};

// Nelder-Mead simplex minimizer. Stops when the simplex f-spread and
// x-spread fall below tol, or after max_evals objective calls.
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& x0, double initial_scale = 0.2,
                                    double tol = 1e-7, int max_evals = 500) {
    const int n = static_cast<int>(x0.size());
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    NelderMeadResult out;
    std::vector<Eigen::VectorXd> xs(n + 1, x0);
    std::vector<double> fs(n + 1);
    for (int i = 1; i <= n; ++i) xs[i][i - 1] += initial_scale;
    for (int i = 0; i <= n; ++i) fs[i] = f(xs[i]);
    out.n_evals = n + 1;

    auto order = [&] {
        std::vector<int> idx(n + 1);
        for (int i = 0; i <= n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
        std::vector<Eigen::VectorXd> xs2(n + 1);
        std::vector<double> fs2(n + 1);
        for (int i = 0; i <= n; ++i) {
            xs2[i] = xs[idx[i]];
            fs2[i] = fs[idx[i]];
        }
        xs.swap(xs2);
        fs.swap(fs2);
    };

    while (out.n_evals < max_evals) {
        order();
        double xspread = 0.0;
        for (int i = 1; i <= n; ++i) xspread = std::max(xspread, (xs[i] - xs[0]).norm());
        if (std::abs(fs[n] - fs[0]) < tol * (1.0 + std::abs(fs[0])) && xspread < tol) {
            out.converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) centroid += xs[i];
        centroid /= n;

        const Eigen::VectorXd xr = centroid + alpha * (centroid - xs[n]);
        const double fr = f(xr);
        ++out.n_evals;
        if (fr < fs[0]) {
            const Eigen::VectorXd xe = centroid + gamma * (xr - centroid);
            const double fe = f(xe);
            ++out.n_evals;
            if (fe < fr) {
                xs[n] = xe;
                fs[n] = fe;
            } else {
                xs[n] = xr;
                fs[n] = fr;
            }
        } else if (fr < fs[n - 1]) {
            xs[n] = xr;
            fs[n] = fr;
        } else {
            const Eigen::VectorXd xc = centroid + rho * (xs[n] - centroid);
            const double fc = f(xc);
            ++out.n_evals;
            if (fc < fs[n]) {
                xs[n] = xc;
                fs[n] = fc;
            } else {
                for (int i = 1; i <= n; ++i) {
                    xs[i] = xs[0] + sigma * (xs[i] - xs[0]);
                    fs[i] = f(xs[i]);
                    ++out.n_evals;
                }
            }
        }
    }
    order();
    out.x = xs[0];
    out.fx = fs[0];
    return out;
}

// Golden-section minimizer of a unimodal f on [lo, hi].
inline std::pair<double, double> golden_section_min(const std::function<double(double)>& f,
                                                    double lo, double hi, double tol = 1e-10,
                                                    int max_iter = 200) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < max_iter && (b - a) > tol * (1.0 + std::abs(a) + std::abs(b)); ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    const double xm = 0.5 * (a + b);
    return {xm, f(xm)};
}

// Bisection root of a monotone f on [lo, hi]; requires sign change.
inline double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                          double tol = 1e-12, int max_iter = 200) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) throw std::invalid_argument("bisect_root: no sign change on bracket");
    for (int it = 0; it < max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0 || (hi - lo) < tol * (1.0 + std::abs(mid))) return mid;
        if ((flo < 0.0) == (fm < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace drtox
