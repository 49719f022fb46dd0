#include "drtox/toxgen.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "drtox/errors.hpp"
#include "drtox/optim.hpp"
#include "drtox/parallel.hpp"
#include "drtox/stats.hpp"

namespace drtox {

void ToxicityGround::validate() const {
    if (!(tau_t > 0.0)) throw std::invalid_argument("tau_t must be positive");
    if (omega_alpha < 0.0) throw std::invalid_argument("omega_alpha must be >= 0");
}

void ToxicityOutcome::validate() const {
    const Eigen::Index n = per_admin.size();
    if (n == 0) throw std::invalid_argument("outcome: empty");
    for (Eigen::Index j = 0; j + 1 < n; ++j)
        if (per_admin[j] != 0) throw std::invalid_argument("outcome: non-terminal toxicity flag");
    const bool toxic = per_admin[n - 1] == 1;
    if (global != (toxic ? 1 : 0)) throw std::invalid_argument("outcome: global flag mismatch");
    if (stop_index != static_cast<int>(n)) throw std::invalid_argument("outcome: stop index mismatch");
}

ToxicityOutcome simulate_toxicity(const Eigen::VectorXd& peaks, const ToxicityGround& ground,
                                  Rng& rng) {
    if (peaks.size() == 0) throw std::invalid_argument("simulate_toxicity: empty peaks");
    ground.validate();
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double alpha = std::exp(ground.omega_alpha * gauss(rng));

    ToxicityOutcome out;
    Eigen::Index stop = peaks.size();
    int toxic = 0;
    for (Eigen::Index j = 0; j < peaks.size(); ++j) {
        if (alpha * peaks[j] >= ground.tau_t) {
            stop = j + 1;
            toxic = 1;
            break;
        }
    }
    out.per_admin = Eigen::VectorXi::Zero(stop);
    if (toxic) out.per_admin[stop - 1] = 1;
    out.stop_index = static_cast<int>(stop);
    out.global = toxic;
    return out;
}

double tox_prob_given_peak(double r_max, const ToxicityGround& ground) {
    if (r_max <= 0.0) return 0.0;
    if (ground.omega_alpha == 0.0) return r_max >= ground.tau_t ? 1.0 : 0.0;
    return 1.0 - normal_cdf((std::log(ground.tau_t) - std::log(r_max)) / ground.omega_alpha);
}

double tox_prob_from_sample(const Eigen::VectorXd& r_max_sample, const ToxicityGround& ground) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < r_max_sample.size(); ++i)
        acc += tox_prob_given_peak(r_max_sample[i], ground);
    return acc / static_cast<double>(r_max_sample.size());
}

Eigen::VectorXd sample_max_peaks(const DoseRegimen& regimen, const PopulationParams& pop,
                                 int n_mc, const SimSettings& settings, Rng& rng,
                                 int n_threads) {
    if (n_mc < 1) throw std::invalid_argument("sample_max_peaks: n_mc must be >= 1");
    const std::uint64_t base = rng();
    Eigen::VectorXd out(n_mc);
    parallel_for(n_mc, n_threads, [&](long i) {
        Rng sub = make_rng({base, static_cast<std::uint64_t>(i)});
        const IndividualParams theta = sample_individual(pop, sub);
        out[i] = max_peak(cytokine_peaks(theta, regimen, settings));
    });
    return out;
}

double true_tox_prob(const DoseRegimen& regimen, const PopulationParams& pop,
                     const ToxicityGround& ground, int n_mc, const SimSettings& settings,
                     Rng& rng) {
    ground.validate();
    const Eigen::VectorXd r = sample_max_peaks(regimen, pop, n_mc, settings, rng);
    return tox_prob_from_sample(r, ground);
}

CalibrationResult calibrate_threshold(const RegimenPanel& panel, const PopulationParams& pop,
                                      double omega_alpha, int target_index, double delta_t,
                                      int n_mc, const SimSettings& settings, Rng& rng,
                                      int n_threads) {
    const int K = panel.size();
    if (target_index < 0 || target_index >= K)
        throw std::invalid_argument("calibrate_threshold: target index out of range");
    if (!(delta_t > 0.0 && delta_t < 1.0))
        throw std::invalid_argument("calibrate_threshold: delta_t outside (0,1)");

    std::vector<Eigen::VectorXd> samples(K);
    for (int k = 0; k < K; ++k)
        samples[k] = sample_max_peaks(panel.regimens[k], pop, n_mc, settings, rng, n_threads);

    auto curve_at = [&](double tau) {
        Eigen::VectorXd p(K);
        const ToxicityGround g{tau, omega_alpha};
        for (int k = 0; k < K; ++k) p[k] = tox_prob_from_sample(samples[k], g);
        return p;
    };
    auto mtd_at = [&](const Eigen::VectorXd& p) {
        int best = 0;
        for (int k = 1; k < K; ++k)
            if (std::abs(p[k] - delta_t) < std::abs(p[best] - delta_t)) best = k;
        return best;
    };

    // p_T at the target regimen is nonincreasing in tau; bracket then bisect.
    const double r_hi = samples[target_index].maxCoeff();
    double log_lo = std::log(std::max(r_hi * 1e-6, 1e-12));
    double log_hi = std::log(r_hi * std::exp(6.0 * std::max(omega_alpha, 0.1)));
    auto excess = [&](double log_tau) {
        const ToxicityGround g{std::exp(log_tau), omega_alpha};
        return tox_prob_from_sample(samples[target_index], g) - delta_t;
    };
    double log_tau = bisect_root(excess, log_lo, log_hi, 1e-12, 300);

    Eigen::VectorXd p = curve_at(std::exp(log_tau));
    if (mtd_at(p) != target_index) {
        // Exact match at the target does not make it the panel argmin; scan
        // the neighborhood for a feasible tau, else report achievable MTDs.
        double best_err = kInf, best_log_tau = 0.0;
        std::set<int> achievable;
        for (int s = 0; s <= 400; ++s) {
            const double lt = log_tau - 1.0 + 2.0 * s / 400.0;
            const Eigen::VectorXd ps = curve_at(std::exp(lt));
            const int m = mtd_at(ps);
            achievable.insert(m);
            const double err = std::abs(ps[target_index] - delta_t);
            if (m == target_index && err < best_err) {
                best_err = err;
                best_log_tau = lt;
            }
        }
        if (!std::isfinite(best_err))
            throw CalibrationError("calibrate_threshold: no tau_t places the MTD-regimen at the "
                                   "requested index",
                                   std::vector<int>(achievable.begin(), achievable.end()));
        log_tau = best_log_tau;
        p = curve_at(std::exp(log_tau));
    }

    return {std::exp(log_tau), p};
}

}  // namespace drtox
