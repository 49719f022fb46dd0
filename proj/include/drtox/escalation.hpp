#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "drtox/mcmc.hpp"
#include "drtox/pkpd.hpp"
#include "drtox/regimen.hpp"
#include "drtox/toxgen.hpp"

namespace drtox {

// ---------------------------------------------------------------- 3+3 design

struct LevelCounts {
    int treated = 0;
    int toxicities = 0;
};

enum class ThreePlusThreeAction { Escalate, StayExpand, Deescalate, Declare, StopNoMtd };

struct ThreePlusThreeDecision {
    ThreePlusThreeAction action;
    int level = -1;  // cohort target or declared MTD level (unused for StopNoMtd)
};

// One decision of the 3+3 rules given the per-level counts and the level of
// the cohort just completed. See docs/design_notes.md for the truth table.
ThreePlusThreeDecision three_plus_three_step(const std::vector<LevelCounts>& counts,
                                             int current);

struct ThreePlusThreeConfig {
    int cohort_size = 3;
};

// ------------------------------------------------------------------- CRM

struct CrmPriorSpec {
    double intercept_mean = 0.0;
    double intercept_sd = 2.0;
    double slope_shape = 5.0;
    double slope_mean = 1.0;  // gamma rate = shape / mean
};

struct CrmConfig {
    Eigen::VectorXd skeleton;  // strictly increasing prior guesses in (0,1)
    double target = 0.3;
    int cohort_size = 3;
    int n_max = 30;
    CrmPriorSpec prior;
    McmcConfig mcmc;

    void validate() const;
};

struct CrmObservation {
    int regimen_index = 0;  // 0-based
    int toxic = 0;          // global toxicity Y_i
};

// Standardized dose labels: x_k solves E_prior[invlogit(a + b x_k)] = p_k,
// so the prior-predictive curve reproduces the skeleton.
Eigen::VectorXd crm_dose_labels(const Eigen::VectorXd& skeleton, const CrmPriorSpec& prior);

struct CrmPosterior {
    PosteriorDraws draws;        // columns: intercept, slope
    Eigen::VectorXd prob_means;  // posterior mean toxicity probability per regimen
};

CrmPosterior crm_posterior(const std::vector<CrmObservation>& data, const CrmConfig& config,
                           int m_iter, Rng& rng);

// Next allocation: argmin_k |posterior mean - target| with no dose skipping
// (ties to the lower index). max_administered = -1 means nothing given yet.
int crm_next(const std::vector<CrmObservation>& data, const CrmConfig& config, int m_iter,
             int max_administered, Rng& rng);

// --------------------------------------------------------------- trial runner

struct ObservationSchedule {
    int pk_per_admin = 2;     // end of infusion + trough per administration
    int pd_per_window = 6;    // equally spaced cytokine samples per window
};

struct PatientRecord {
    DoseRegimen planned;
    int planned_index = -1;  // panel index
    DoseRegimen received;
    ToxicityOutcome outcome;
    ObservedSamples pk_obs;
    ObservedSamples pd_obs;
    IndividualParams theta_true;  // simulation-only; estimators must not read it
};

struct CohortLog {
    int cohort = 0;
    int level = 0;  // panel index treated
    std::string decision;
};

struct TrialDataset {
    std::vector<PatientRecord> patients;
    std::vector<CohortLog> design_log;
    RegimenPanel panel;
    std::vector<int> administered_set;  // 0-based regimen indices with >= 1 patient
    std::optional<int> declared;        // design's own recommendation
    bool no_mtd = false;                // 3+3 stopped below the lowest level
    Eigen::VectorXd design_curve;       // CRM final posterior means (empty for 3+3)

    int n() const { return static_cast<int>(patients.size()); }
};

using DesignConfig = std::variant<ThreePlusThreeConfig, CrmConfig>;

struct TrialContext {
    RegimenPanel panel;
    PopulationParams pop;
    ToxicityGround ground;
    SimSettings sim;
    DesignConfig design;
    ObservationSchedule schedule;
};

// Simulates one complete dose-escalation trial: cohort allocation per the
// design, patient-level PK/PD simulation, toxicity, truncation, noisy
// observation sampling.
TrialDataset run_trial(const TrialContext& ctx, std::uint64_t master_seed,
                       std::uint64_t trial_index);

// Observation times for one patient on a received regimen.
Eigen::VectorXd pk_sample_times(const DoseRegimen& received, const SimSettings& sim,
                                const ObservationSchedule& schedule);
Eigen::VectorXd pd_sample_times(const DoseRegimen& received, const SimSettings& sim,
                                const ObservationSchedule& schedule);

}  // namespace drtox
