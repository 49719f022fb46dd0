#pragma once

#include <Eigen/Dense>

#include "drtox/pkpd.hpp"
#include "drtox/regimen.hpp"
#include "drtox/rng.hpp"

namespace drtox {

// Ground-truth toxicity mechanism: patient i is toxic at administration j
// when alpha_i * r_{i,j} >= tau_t, alpha_i = exp(eta), eta ~ N(0, omega_alpha^2).
struct ToxicityGround {
    double tau_t = 0.0;        // cytokine threshold (pg/mL)
    double omega_alpha = 0.0;  // SD of log subject sensitivity

    void validate() const;
};

struct ToxicityOutcome {
    Eigen::VectorXi per_admin;  // Y_{i,j}; at most the last entry is 1
    int stop_index = 0;         // 1-based index of last administration received
    int global = 0;             // Y_i

    void validate() const;
};

// Scans administrations in order; the first threshold crossing stops dosing.
ToxicityOutcome simulate_toxicity(const Eigen::VectorXd& peaks, const ToxicityGround& ground,
                                  Rng& rng);

// Single-patient toxicity probability given the summary peak r^M:
// P(alpha * r^M >= tau) = 1 - Phi((log tau - log r^M)/omega_alpha).
double tox_prob_given_peak(double r_max, const ToxicityGround& ground);

// True regimen toxicity probability by Monte Carlo over individual
// parameters (residual error excluded).
double true_tox_prob(const DoseRegimen& regimen, const PopulationParams& pop,
                     const ToxicityGround& ground, int n_mc, const SimSettings& settings,
                     Rng& rng);

struct CalibrationResult {
    double tau_t = 0.0;
    Eigen::VectorXd true_curve;  // p_T(S_k) at the calibrated threshold
};

// Finds tau_t placing the MTD-regimen (argmin |p_T - delta_t|) at
// target_index (0-based) with p_T there as close to delta_t as possible.
// Reuses one r^M sample per regimen across all tau evaluations.
CalibrationResult calibrate_threshold(const RegimenPanel& panel, const PopulationParams& pop,
                                      double omega_alpha, int target_index, double delta_t,
                                      int n_mc, const SimSettings& settings, Rng& rng,
                                      int n_threads = 1);

// r^M sample for one regimen (n_mc individual-parameter draws); the Monte
// Carlo backbone shared by true_tox_prob and calibrate_threshold.
Eigen::VectorXd sample_max_peaks(const DoseRegimen& regimen, const PopulationParams& pop,
                                 int n_mc, const SimSettings& settings, Rng& rng,
                                 int n_threads = 1);

// Mean of tox_prob_given_peak over an r^M sample at a given threshold.
double tox_prob_from_sample(const Eigen::VectorXd& r_max_sample, const ToxicityGround& ground);

}  // namespace drtox
