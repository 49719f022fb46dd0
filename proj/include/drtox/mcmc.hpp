#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "drtox/rng.hpp"

namespace drtox {

struct McmcConfig {
    int n_chains = 4;
    int m_iter = 4000;  // kept draws across all chains
    int thin = 5;       // raw post-warmup iterations per kept draw
    double target_accept = 0.3;
    double rhat_max = 1.05;
};

// Posterior sample plus mixing diagnostics. params rows are draws in the
// caller's natural parameter space.
struct PosteriorDraws {
    Eigen::MatrixXd params;
    Eigen::VectorXd rhat;         // split-Rhat per parameter
    Eigen::VectorXd ess;          // effective draw count per parameter
    Eigen::VectorXd accept_rate;  // per chain
    int m_iter() const { return static_cast<int>(params.rows()); }
};

using LogDensity = std::function<double(const Eigen::VectorXd&)>;
using Transform = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Adaptive random-walk Metropolis on an unconstrained parameterization.
// log_target must include any change-of-variables terms; to_natural maps an
// unconstrained point to the stored parameter vector. Proposal covariance and
// global scale adapt during warmup only (warmup length equals the raw
// sampling length, i.e. half the iterations); throws DiagnosticsError when
// split-Rhat exceeds rhat_max.
PosteriorDraws sample_rwm(const LogDensity& log_target, const Transform& to_natural,
                          const std::vector<Eigen::VectorXd>& chain_inits,
                          const McmcConfig& config, Rng& rng);

// Split-Rhat and a Geyer-style effective sample size on per-chain sequences.
double split_rhat(const std::vector<Eigen::VectorXd>& chains);
double effective_draws(const std::vector<Eigen::VectorXd>& chains);

}  // namespace drtox
