#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "drtox/drtox_model.hpp"
#include "drtox/nlme.hpp"
#include "drtox/regimen.hpp"

namespace drtox {

enum class ToxModel { Logistic, Hierarchical };

// Posterior toxicity probability of one regimen: M = m_iter x m_predict
// cross-product draws, their mean, and a central 95% interval.
struct PosteriorToxicity {
    std::string regimen_label;
    Eigen::VectorXd draws;
    double mean = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

// Sampling distribution of the summary PD endpoint for new patients under a
// regimen, simulated from the fitted population (no residual error).
Eigen::VectorXd predict_peak_distribution(const NlmeFit& fit, const DoseRegimen& regimen,
                                          int m_predict, const SimSettings& sim, Rng& rng,
                                          int n_threads = 1);

PosteriorToxicity posterior_tox_one(const PosteriorDraws& draws, ToxModel model,
                                    const Eigen::VectorXd& peak_sample, double ref_peak,
                                    const std::string& label);

// Full cross-product curve over the panel's peak samples.
std::vector<PosteriorToxicity> posterior_tox_curve(const PosteriorDraws& draws, ToxModel model,
                                                   const std::vector<Eigen::VectorXd>& peak_samples,
                                                   double ref_peak,
                                                   const std::vector<std::string>& labels);

// argmin |mean - delta_t| restricted to administered regimens; ties to the
// lower index.
int select_mtd(const std::vector<PosteriorToxicity>& curve, const std::vector<int>& administered,
               double delta_t);

// Composition of predict_peak_distribution and posterior_tox_one for a
// regimen outside the panel.
PosteriorToxicity predict_new_regimen(const NlmeFit& fit, const PosteriorDraws& draws,
                                      ToxModel model, const DoseRegimen& regimen_new,
                                      double ref_peak, int m_predict, const SimSettings& sim,
                                      Rng& rng, int n_threads = 1);

}  // namespace drtox
