#pragma once

#include <Eigen/Dense>
#include <vector>

#include "drtox/mcmc.hpp"
#include "drtox/rng.hpp"
#include "drtox/toxgen.hpp"

namespace drtox {

// ----------------------------------------------------------- logistic model
// P(Y_i = 1) = invlogit(beta0 + beta1 log(r^M_i / ref_peak)), beta1 > 0.

struct LogisticPrior {
    double beta0_mean = 0.0;  // logit(delta_T) after calibration
    double beta0_sd = 2.0;
    double beta1_shape = 5.0;    // gamma shape; rate = shape / beta1_mean
    double beta1_mean = 1.0;
    int ref_index_kT = 0;        // 0-based panel index guessed to sit at delta_T
    double ref_peak = 0.0;       // r_bar^M at that regimen

    void validate() const;
};

double logistic_prob(double beta0, double beta1, double r_m, double ref_peak);

enum class CalibrationMode { Single, Neighbors };

// Prior calibration from initial toxicity guesses: beta0_mean = logit(delta_t)
// exactly; beta1_mean by least squares over the reference regimen's
// neighbors, or the closed-form single-regimen solve.
LogisticPrior calibrate_logistic_prior(const Eigen::VectorXd& initial_guesses,
                                       const Eigen::VectorXd& ref_peaks, int kT, double delta_t,
                                       double beta0_sd, double beta1_shape, CalibrationMode mode,
                                       int single_k = -1);

struct LogisticDatum {
    int toxic = 0;
    double r_max = 0.0;  // predicted summary endpoint r_hat^M_i
};

PosteriorDraws logistic_posterior(const std::vector<LogisticDatum>& data,
                                  const LogisticPrior& prior, int m_iter, Rng& rng,
                                  const McmcConfig& mcmc = {});

// -------------------------------------------------------- hierarchical model
// Latent toxicity threshold Z_i ~ N(mu_z, tau_z^2); toxicity at j iff
// Z_i <= u_{i,j} = log(r_{i,j}/ref_peak); Z_i integrated out analytically.

struct HierarchicalPrior {
    double mu_z_sd = 1.0;
    double tau_z_scale = 1.0;  // half-Cauchy scale
    int ref_index_k50 = 0;     // 0-based panel index guessed to sit at 0.5
    double ref_peak = 0.0;

    void validate() const;
};

double hierarchical_prob(double mu_z, double tau_z, double r_m, double ref_peak);

struct HierarchicalDatum {
    Eigen::VectorXd peaks;  // predicted per-administration peaks on the received regimen
    ToxicityOutcome outcome;
};

// Marginal log-likelihood of one patient. Throws ModelInconsistencyError when
// a toxic administration's peak does not exceed every earlier peak (the
// outcome has probability zero under the model).
double hierarchical_patient_loglik(double mu_z, double tau_z, const Eigen::VectorXd& peaks,
                                   const ToxicityOutcome& outcome, double ref_peak);

// Data-level consistency check; returns offending patient indices.
std::vector<int> hierarchical_inconsistent_patients(const std::vector<HierarchicalDatum>& data,
                                                    double ref_peak);

PosteriorDraws hierarchical_posterior(const std::vector<HierarchicalDatum>& data,
                                      const HierarchicalPrior& prior, int m_iter, Rng& rng,
                                      const McmcConfig& mcmc = {});

// ------------------------------------------------------------ prior ESS

struct EssResult {
    Eigen::VectorXd per_regimen;  // a+b per regimen; NaN where moment matching is infeasible
    double mean = 0.0;            // over feasible regimens
    int n_feasible = 0;
};

// Approximate prior effective sample size: prior draws of the model
// parameters -> toxicity probabilities at each reference peak -> Beta moment
// matching; ESS_k = a + b.
EssResult ess_approx(const LogisticPrior& prior, const Eigen::VectorXd& ref_peaks,
                     int n_prior_draws, Rng& rng);
EssResult ess_approx(const HierarchicalPrior& prior, const Eigen::VectorXd& ref_peaks,
                     int n_prior_draws, Rng& rng);

// Prior draws in natural space (column 0/1 = the two model parameters).
Eigen::MatrixXd sample_logistic_prior(const LogisticPrior& prior, int n, Rng& rng);
Eigen::MatrixXd sample_hierarchical_prior(const HierarchicalPrior& prior, int n, Rng& rng);

}  // namespace drtox
