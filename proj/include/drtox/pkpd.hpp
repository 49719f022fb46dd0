#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>

#include "drtox/regimen.hpp"
#include "drtox/rng.hpp"

namespace drtox {

// Component order of the PK/PD parameter vector.
enum class Param { Cl, V, Emax, Ec50, H, Imax, Ic50, Kdeg, Kprime };
constexpr int kNParams = 9;
using ParamVec = Eigen::Array<double, kNParams, 1>;

inline const std::array<std::string, kNParams>& param_names() {
    static const std::array<std::string, kNParams> names = {
        "cl", "v", "emax", "ec50", "h", "imax", "ic50", "kdeg", "kprime"};
    return names;
}

struct PkParams {
    double cl = 0.0;  // clearance (L/h)
    double v = 0.0;   // distribution volume (L)

    void validate() const;
};

struct PdParams {
    double emax = 0.0;    // max cytokine release rate (pg/mL/h)
    double ec50 = 0.0;    // drug exposure for half-max release (ng/mL)
    double h = 0.0;       // Hill coefficient
    double imax = 0.0;    // max inhibition fraction, in [0,1)
    double ic50 = 0.0;    // cytokine exposure for half-max inhibition (pg/mL*h)
    double kdeg = 0.0;    // cytokine degradation rate (1/h)
    double kprime = 0.0;  // priming factor strengthening inhibition per administration

    void validate() const;
};

struct IndividualParams {
    PkParams pk;
    PdParams pd;

    void validate() const;
    ParamVec as_vec() const;
    static IndividualParams from_vec(const ParamVec& v);
};

// Population model: theta_i = mu * exp(eta_i), eta_i ~ N(0, diag(omega^2)),
// plus proportional residual error on both observation channels.
struct PopulationParams {
    ParamVec mu = ParamVec::Zero();
    ParamVec omega = ParamVec::Zero();  // log-scale random-effect SDs
    double b_pk = 0.0;                  // proportional residual SD, concentration
    double b_pd = 0.0;                  // proportional residual SD, cytokine

    void validate() const;
    IndividualParams individual(const ParamVec& eta) const;
    IndividualParams at_mode() const { return individual(ParamVec::Zero()); }

    // Table-style defaults used throughout the simulation study.
    static PopulationParams defaults();
};

// Exact log-normal SD for a given coefficient of variation (percent).
inline double cv_percent_to_omega(double cv_percent) {
    const double cv = cv_percent / 100.0;
    return std::sqrt(std::log1p(cv * cv));
}

struct SimSettings {
    double body_weight_kg = 70.0;
    double infusion_hours = 4.0;
    double horizon_h = 96.0;  // observation window after the last administration
    double rtol = 1e-8;
    double atol = 1e-10;
    int grid_per_window = 200;

    void validate() const;
};

struct PdProfile {
    Eigen::VectorXd grid;      // time points (h)
    Eigen::VectorXd conc;      // drug concentration (ng/mL)
    Eigen::VectorXd cytokine;  // cytokine E(t) (pg/mL)
    Eigen::VectorXd auc_e;     // cumulative cytokine exposure (pg/mL*h)
};

// Closed-form 1-compartment infusion concentration at time t (ng/mL),
// superposed over all administrations up to t.
double concentration(const PkParams& pk, const DoseRegimen& regimen, double body_weight_kg,
                     double infusion_hours, double t);

// Integrates the cytokine system on a dense grid covering every
// administration window plus the trailing horizon.
PdProfile simulate_pd(const IndividualParams& theta, const DoseRegimen& regimen,
                      const SimSettings& settings);

// Model values at arbitrary times without the dense grid; used where only
// observation-time values are needed (likelihood evaluation).
struct PdPointValues {
    Eigen::VectorXd conc;
    Eigen::VectorXd cytokine;
};
PdPointValues simulate_at(const IndividualParams& theta, const DoseRegimen& regimen,
                          const Eigen::VectorXd& times, const SimSettings& settings);

// Per-administration cytokine peaks r_{i,j}: max of E over each
// administration window, golden-section refined around the grid argmax.
Eigen::VectorXd cytokine_peaks(const IndividualParams& theta, const DoseRegimen& regimen,
                               const SimSettings& settings);

// Summary PD endpoint r^M: the highest per-administration peak.
double max_peak(const Eigen::VectorXd& peaks);

IndividualParams sample_individual(const PopulationParams& pop, Rng& rng);

struct ObservedSamples {
    Eigen::VectorXd times;
    Eigen::VectorXd conc;
    Eigen::VectorXd cytokine;
};

// Proportional-error observations at sample_times, values linearly
// interpolated from the profile grid.
ObservedSamples observe_with_error(const PdProfile& profile, const Eigen::VectorXd& sample_times,
                                   const PopulationParams& pop, Rng& rng);

// Reference summary endpoints r_bar^M_k: max cytokine peak per panel regimen
// simulated at the population fixed effects (no random effects, no noise).
Eigen::VectorXd reference_peaks(const PopulationParams& pop, const RegimenPanel& panel,
                                const SimSettings& settings);

}  // namespace drtox
