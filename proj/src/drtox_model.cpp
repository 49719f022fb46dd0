#include "drtox/drtox_model.hpp"

#include <algorithm>
#include <cmath>

#include "drtox/errors.hpp"
#include "drtox/optim.hpp"
#include "drtox/stats.hpp"

namespace drtox {

// ----------------------------------------------------------- logistic model

void LogisticPrior::validate() const {
    if (beta0_sd <= 0.0 || beta1_shape <= 0.0 || beta1_mean <= 0.0 || ref_peak <= 0.0)
        throw std::invalid_argument("logistic prior: nonpositive hyperparameter");
}

double logistic_prob(double beta0, double beta1, double r_m, double ref_peak) {
    if (r_m <= 0.0 || ref_peak <= 0.0)
        throw std::invalid_argument("logistic_prob: peaks must be positive");
    return inv_logit(beta0 + beta1 * std::log(r_m / ref_peak));
}

LogisticPrior calibrate_logistic_prior(const Eigen::VectorXd& initial_guesses,
                                       const Eigen::VectorXd& ref_peaks, int kT, double delta_t,
                                       double beta0_sd, double beta1_shape, CalibrationMode mode,
                                       int single_k) {
    const int K = static_cast<int>(ref_peaks.size());
    if (initial_guesses.size() != K)
        throw std::invalid_argument("calibrate_logistic_prior: guesses/peaks length mismatch");
    if (kT < 0 || kT >= K) throw std::invalid_argument("calibrate_logistic_prior: kT out of range");
    for (int k = 0; k < K; ++k)
        if (!(initial_guesses[k] > 0.0 && initial_guesses[k] < 1.0))
            throw std::invalid_argument("calibrate_logistic_prior: guesses must lie in (0,1)");
    if ((ref_peaks.array() <= 0.0).any())
        throw std::invalid_argument("calibrate_logistic_prior: reference peaks must be positive");
    if (std::abs(initial_guesses[kT] - delta_t) > 1e-12)
        throw std::invalid_argument("calibrate_logistic_prior: guess at kT must equal delta_t");

    LogisticPrior prior;
    prior.beta0_mean = logit(delta_t);
    prior.beta0_sd = beta0_sd;
    prior.beta1_shape = beta1_shape;
    prior.ref_index_kT = kT;
    prior.ref_peak = ref_peaks[kT];

    if (mode == CalibrationMode::Single) {
        const int k = single_k;
        if (k < 0 || k >= K || k == kT)
            throw std::invalid_argument("calibrate_logistic_prior: single mode needs k != kT");
        const double du = std::log(ref_peaks[k] / ref_peaks[kT]);
        if (du == 0.0)
            throw CalibrationError("calibrate_logistic_prior: reference peaks equal at distinct "
                                   "regimens (degenerate)");
        const double slope = (logit(initial_guesses[k]) - prior.beta0_mean) / du;
        if (!(slope > 0.0))
            throw CalibrationError("calibrate_logistic_prior: single-regimen solve gives a "
                                   "nonpositive slope (degenerate)");
        prior.beta1_mean = slope;
        return prior;
    }

    // neighbors mode: least squares over {kT-1, kT, kT+1} (clipped at the
    // panel boundary); the kT term is constant in beta1
    std::vector<int> ks;
    for (int k = std::max(kT - 1, 0); k <= std::min(kT + 1, K - 1); ++k) ks.push_back(k);
    bool informative = false;
    for (int k : ks)
        if (k != kT && std::abs(std::log(ref_peaks[k] / ref_peaks[kT])) > 0.0) informative = true;
    if (!informative)
        throw CalibrationError(
            "calibrate_logistic_prior: neighbor reference peaks equal the reference (degenerate)");

    auto sse = [&](double beta1) {
        double acc = 0.0;
        for (int k : ks) {
            const double pi =
                inv_logit(prior.beta0_mean + beta1 * std::log(ref_peaks[k] / ref_peaks[kT]));
            acc += (initial_guesses[k] - pi) * (initial_guesses[k] - pi);
        }
        return acc;
    };
    // golden section over a wide positive bracket, then local refinement
    auto [b1, f1] = golden_section_min(sse, 1e-6, 1e3, 1e-12, 300);
    const double lo = std::max(b1 * 0.5, 1e-9);
    const double hi = b1 * 2.0 + 1e-9;
    auto [b2, f2] = golden_section_min(sse, lo, hi, 1e-14, 300);
    prior.beta1_mean = (f2 < f1) ? b2 : b1;
    if (!(prior.beta1_mean > 0.0))
        throw CalibrationError("calibrate_logistic_prior: calibrated slope not positive");
    return prior;
}

PosteriorDraws logistic_posterior(const std::vector<LogisticDatum>& data,
                                  const LogisticPrior& prior, int m_iter, Rng& rng,
                                  const McmcConfig& mcmc) {
    prior.validate();
    std::vector<double> u;  // log peak ratios
    u.reserve(data.size());
    for (const auto& d : data) {
        if (d.r_max <= 0.0)
            throw std::invalid_argument("logistic_posterior: nonpositive peak in data");
        u.push_back(std::log(d.r_max / prior.ref_peak));
    }

    const double rate = prior.beta1_shape / prior.beta1_mean;
    auto log_target = [&](const Eigen::VectorXd& q) {
        const double b0 = q[0];
        const double log_b1 = q[1];
        const double b1 = std::exp(log_b1);
        double lp = normal_logpdf(b0, prior.beta0_mean, prior.beta0_sd) +
                    gamma_logpdf(b1, prior.beta1_shape, rate) + log_b1;
        for (size_t i = 0; i < data.size(); ++i) {
            const double eta = b0 + b1 * u[i];
            lp += data[i].toxic * eta - (eta > 0.0 ? eta + std::log1p(std::exp(-eta))
                                                   : std::log1p(std::exp(eta)));
        }
        return lp;
    };
    auto to_natural = [](const Eigen::VectorXd& q) {
        Eigen::VectorXd nat(2);
        nat << q[0], std::exp(q[1]);
        return nat;
    };

    McmcConfig cfg = mcmc;
    cfg.m_iter = m_iter;
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::gamma_distribution<double> gamma_draw(prior.beta1_shape, prior.beta1_mean / prior.beta1_shape);
    std::vector<Eigen::VectorXd> inits;
    for (int c = 0; c < cfg.n_chains; ++c) {
        Eigen::VectorXd q(2);
        q << prior.beta0_mean + prior.beta0_sd * gauss(rng),
            std::log(std::max(gamma_draw(rng), 1e-8));
        inits.push_back(q);
    }
    return sample_rwm(log_target, to_natural, inits, cfg, rng);
}

// -------------------------------------------------------- hierarchical model

void HierarchicalPrior::validate() const {
    if (mu_z_sd <= 0.0 || tau_z_scale <= 0.0 || ref_peak <= 0.0)
        throw std::invalid_argument("hierarchical prior: nonpositive hyperparameter");
}

double hierarchical_prob(double mu_z, double tau_z, double r_m, double ref_peak) {
    if (r_m <= 0.0 || ref_peak <= 0.0)
        throw std::invalid_argument("hierarchical_prob: peaks must be positive");
    const double u = std::log(r_m / ref_peak);
    if (tau_z <= 0.0) return u >= mu_z ? 1.0 : 0.0;
    return normal_cdf((u - mu_z) / tau_z);
}

double hierarchical_patient_loglik(double mu_z, double tau_z, const Eigen::VectorXd& peaks,
                                   const ToxicityOutcome& outcome, double ref_peak) {
    if ((peaks.array() <= 0.0).any())
        throw std::invalid_argument("hierarchical loglik: nonpositive peak");
    if (outcome.stop_index != peaks.size())
        throw std::invalid_argument("hierarchical loglik: outcome/peaks length mismatch");
    const auto u = (peaks.array() / ref_peak).log();

    const double u_max = u.maxCoeff();
    if (outcome.global == 0) {
        // survives every administration: Z above every u_j
        const double F = normal_cdf((u_max - mu_z) / tau_z);
        return F >= 1.0 ? -kInf : std::log1p(-F);
    }
    const Eigen::Index j = outcome.stop_index - 1;
    double prev_max = -kInf;
    for (Eigen::Index l = 0; l < j; ++l) prev_max = std::max(prev_max, u[l]);
    if (u[j] <= prev_max)
        throw ModelInconsistencyError(
            "hierarchical model: toxic administration's peak does not exceed all earlier peaks");
    const double hi = normal_cdf((u[j] - mu_z) / tau_z);
    const double lo = (j == 0) ? 0.0 : normal_cdf((prev_max - mu_z) / tau_z);
    const double p = hi - lo;
    return p > 0.0 ? std::log(p) : -kInf;
}

std::vector<int> hierarchical_inconsistent_patients(const std::vector<HierarchicalDatum>& data,
                                                    double ref_peak) {
    std::vector<int> bad;
    for (size_t i = 0; i < data.size(); ++i) {
        try {
            (void)hierarchical_patient_loglik(0.0, 1.0, data[i].peaks, data[i].outcome, ref_peak);
        } catch (const ModelInconsistencyError&) {
            bad.push_back(static_cast<int>(i));
        }
    }
    return bad;
}

PosteriorDraws hierarchical_posterior(const std::vector<HierarchicalDatum>& data,
                                      const HierarchicalPrior& prior, int m_iter, Rng& rng,
                                      const McmcConfig& mcmc) {
    prior.validate();
    const auto bad = hierarchical_inconsistent_patients(data, prior.ref_peak);
    if (!bad.empty())
        throw ModelInconsistencyError("hierarchical_posterior: dataset rejected, " +
                                          std::to_string(bad.size()) +
                                          " patient(s) violate the running-max constraint",
                                      bad);

    auto log_target = [&](const Eigen::VectorXd& q) {
        const double mu_z = q[0];
        const double log_tau = q[1];
        const double tau = std::exp(log_tau);
        double lp = normal_logpdf(mu_z, 0.0, prior.mu_z_sd) +
                    half_cauchy_logpdf(tau, prior.tau_z_scale) + log_tau;
        for (const auto& d : data) {
            lp += hierarchical_patient_loglik(mu_z, tau, d.peaks, d.outcome, prior.ref_peak);
            if (!std::isfinite(lp)) return -kInf;
        }
        return lp;
    };
    auto to_natural = [](const Eigen::VectorXd& q) {
        Eigen::VectorXd nat(2);
        nat << q[0], std::exp(q[1]);
        return nat;
    };

    McmcConfig cfg = mcmc;
    cfg.m_iter = m_iter;
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.05, 0.95);
    std::vector<Eigen::VectorXd> inits;
    for (int c = 0; c < cfg.n_chains; ++c) {
        Eigen::VectorXd q(2);
        const double tau0 = prior.tau_z_scale * std::tan(M_PI * 0.5 * unif(rng));
        q << prior.mu_z_sd * gauss(rng), std::log(tau0);
        inits.push_back(q);
    }
    return sample_rwm(log_target, to_natural, inits, cfg, rng);
}

// ------------------------------------------------------------ prior ESS

Eigen::MatrixXd sample_logistic_prior(const LogisticPrior& prior, int n, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::gamma_distribution<double> gamma_draw(prior.beta1_shape,
                                               prior.beta1_mean / prior.beta1_shape);
    Eigen::MatrixXd out(n, 2);
    for (int i = 0; i < n; ++i) {
        out(i, 0) = prior.beta0_mean + prior.beta0_sd * gauss(rng);
        out(i, 1) = gamma_draw(rng);
    }
    return out;
}

Eigen::MatrixXd sample_hierarchical_prior(const HierarchicalPrior& prior, int n, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd out(n, 2);
    for (int i = 0; i < n; ++i) {
        out(i, 0) = prior.mu_z_sd * gauss(rng);
        out(i, 1) = prior.tau_z_scale * std::tan(M_PI * 0.5 * unif(rng));  // half-Cauchy
    }
    return out;
}

namespace {

EssResult ess_from_probs(const std::vector<Eigen::VectorXd>& probs_per_regimen) {
    EssResult res;
    const int K = static_cast<int>(probs_per_regimen.size());
    res.per_regimen = Eigen::VectorXd::Constant(K, std::numeric_limits<double>::quiet_NaN());
    double acc = 0.0;
    for (int k = 0; k < K; ++k) {
        const auto& p = probs_per_regimen[k];
        const double m = p.mean();
        const double v = (p.array() - m).square().sum() / (p.size() - 1.0);
        const BetaMatch bm = beta_moment_match(m, v);
        if (!bm.feasible) continue;  // regimen skipped
        res.per_regimen[k] = bm.ess();
        acc += bm.ess();
        res.n_feasible += 1;
    }
    if (res.n_feasible == 0)
        throw CalibrationError("ess_approx: beta moment matching infeasible for every regimen");
    res.mean = acc / res.n_feasible;
    return res;
}

}  // namespace

EssResult ess_approx(const LogisticPrior& prior, const Eigen::VectorXd& ref_peaks,
                     int n_prior_draws, Rng& rng) {
    if (ref_peaks.size() == 0) throw std::invalid_argument("ess_approx: empty reference peaks");
    const Eigen::MatrixXd draws = sample_logistic_prior(prior, n_prior_draws, rng);
    std::vector<Eigen::VectorXd> probs(ref_peaks.size());
    for (Eigen::Index k = 0; k < ref_peaks.size(); ++k) {
        probs[k].resize(n_prior_draws);
        for (int i = 0; i < n_prior_draws; ++i)
            probs[k][i] = logistic_prob(draws(i, 0), draws(i, 1), ref_peaks[k], prior.ref_peak);
    }
    return ess_from_probs(probs);
}

EssResult ess_approx(const HierarchicalPrior& prior, const Eigen::VectorXd& ref_peaks,
                     int n_prior_draws, Rng& rng) {
    if (ref_peaks.size() == 0) throw std::invalid_argument("ess_approx: empty reference peaks");
    const Eigen::MatrixXd draws = sample_hierarchical_prior(prior, n_prior_draws, rng);
    std::vector<Eigen::VectorXd> probs(ref_peaks.size());
    for (Eigen::Index k = 0; k < ref_peaks.size(); ++k) {
        probs[k].resize(n_prior_draws);
        for (int i = 0; i < n_prior_draws; ++i)
            probs[k][i] = hierarchical_prob(draws(i, 0), draws(i, 1), ref_peaks[k], prior.ref_peak);
    }
    return ess_from_probs(probs);
}

}  // namespace drtox
