#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "drtox/escalation.hpp"
#include "drtox/pkpd.hpp"

namespace drtox {

struct EstimationConfig {
    // components whose random effects are estimated; all others keep eta = 0
    std::array<bool, kNParams> random_effects{};
    // fixed effects never updated (no random effect also means no update channel)
    std::array<bool, kNParams> frozen_mu{};
    int max_outer = 50;
    double outer_tol = 1e-3;
    int nm_max_evals = 300;
    double nm_tol = 1e-6;
    double omega_floor_var = 1e-4;
    double loq_conc = 0.0;  // 0 disables censoring
    double loq_cyt = 0.0;
    SimSettings sim;

    // Estimation layout used in the simulation study: random effects on
    // Cl, Emax, kdeg, K; EC50, Imax, IC50 frozen.
    static EstimationConfig defaults();
};

struct NlmeFit {
    ParamVec mu_hat = ParamVec::Zero();
    ParamVec omega_hat = ParamVec::Zero();  // log-scale SDs
    std::vector<IndividualParams> theta_hat;
    std::vector<ParamVec> eta_hat;
    bool converged = false;
    std::vector<double> objective_trace;  // loss after each outer iteration; nonincreasing
    std::vector<int> failed_patients;

    PopulationParams as_population(double b_pk, double b_pd) const;
};

// Posterior-mode random effects for one patient: maximizes proportional-error
// log-likelihood plus the log-normal prior over the components with omega > 0.
// Derivative-free (Nelder-Mead) from eta = 0, multistart on failure.
IndividualParams map_individual(const ObservedSamples& pk_obs, const ObservedSamples& pd_obs,
                                const DoseRegimen& received, const PopulationParams& pop,
                                const EstimationConfig& config, ParamVec* eta_out = nullptr);

// Iterative two-stage population fit: alternate per-patient MAP with
// geometric-mean fixed-effect updates and empirical random-effect variances.
NlmeFit fit_population(const TrialDataset& dataset, const PopulationParams& init,
                       const EstimationConfig& config);

struct PeakPrediction {
    Eigen::VectorXd received_peaks;  // R_hat_i on the received regimen
    double r_max_received = 0.0;     // r_hat^M_i
    Eigen::VectorXd planned_peaks;   // full planned regimen (equals received when complete)
    double r_max_planned = 0.0;
};

// Model-predicted PD endpoints per patient at the fitted individual
// parameters.
std::vector<PeakPrediction> predict_peaks(const NlmeFit& fit, const TrialDataset& dataset,
                                          const SimSettings& sim);

}  // namespace drtox
