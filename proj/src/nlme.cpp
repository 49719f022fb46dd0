#include "drtox/nlme.hpp"

#include <algorithm>
#include <cmath>

#include "drtox/errors.hpp"
#include "drtox/optim.hpp"
#include "drtox/stats.hpp"

namespace drtox {

EstimationConfig EstimationConfig::defaults() {
    EstimationConfig c;
    auto set = [](std::array<bool, kNParams>& arr, std::initializer_list<Param> ps) {
        for (Param p : ps) arr[static_cast<int>(p)] = true;
    };
    set(c.random_effects, {Param::Cl, Param::Emax, Param::Kdeg, Param::Kprime});
    set(c.frozen_mu, {Param::Ec50, Param::Imax, Param::Ic50});
    return c;
}

PopulationParams NlmeFit::as_population(double b_pk, double b_pd) const {
    PopulationParams p;
    p.mu = mu_hat;
    p.omega = omega_hat;
    p.b_pk = b_pk;
    p.b_pd = b_pd;
    return p;
}

namespace {

// proportional-error log density with an SD floor so near-zero model values
// cannot produce infinite precision
double prop_error_logpdf(double obs, double model, double b, double loq) {
    double o = obs;
    if (loq > 0.0 && o < loq) o = 0.5 * loq;
    const double sd = b * std::max(model, std::max(0.5 * loq, 1e-12));
    return normal_logpdf(o, model, sd);
}

struct MapProblem {
    const ObservedSamples* pk_obs;
    const ObservedSamples* pd_obs;
    const DoseRegimen* received;
    const PopulationParams* pop;
    const EstimationConfig* config;
    std::vector<int> free_components;  // random_effects && omega > 0

    // z is eta standardized by omega over the free components
    ParamVec eta_from_z(const Eigen::VectorXd& z) const {
        ParamVec eta = ParamVec::Zero();
        for (size_t d = 0; d < free_components.size(); ++d)
            eta[free_components[d]] = z[static_cast<Eigen::Index>(d)] *
                                      pop->omega[free_components[d]];
        return eta;
    }

    double data_loglik(const ParamVec& eta) const {
        const IndividualParams theta = pop->individual(eta);
        double ll = 0.0;
        for (Eigen::Index i = 0; i < pk_obs->times.size(); ++i) {
            const double c = concentration(theta.pk, *received, config->sim.body_weight_kg,
                                           config->sim.infusion_hours, pk_obs->times[i]);
            ll += prop_error_logpdf(pk_obs->conc[i], c, pop->b_pk, config->loq_conc);
        }
        if (pd_obs->times.size() > 0) {
            const auto vals = simulate_at(theta, *received, pd_obs->times, config->sim);
            for (Eigen::Index i = 0; i < pd_obs->times.size(); ++i)
                ll += prop_error_logpdf(pd_obs->cytokine[i], vals.cytokine[i], pop->b_pd,
                                        config->loq_cyt);
        }
        return ll;
    }

    double prior_loglik(const ParamVec& eta) const {
        double ll = 0.0;
        for (int c : free_components) ll += normal_logpdf(eta[c], 0.0, pop->omega[c]);
        return ll;
    }

    // negative joint density in z-space
    double loss(const Eigen::VectorXd& z) const {
        const ParamVec eta = eta_from_z(z);
        const double ll = data_loglik(eta) + prior_loglik(eta);
        return std::isfinite(ll) ? -ll : kInf;
    }
};

std::vector<int> free_components(const PopulationParams& pop, const EstimationConfig& config) {
    std::vector<int> out;
    for (int i = 0; i < kNParams; ++i)
        if (config.random_effects[i] && pop.omega[i] > 0.0) out.push_back(i);
    return out;
}

// MAP in z-space with deterministic multistart; returns (z, loss)
std::pair<Eigen::VectorXd, double> solve_map(const MapProblem& prob, const Eigen::VectorXd& z0) {
    const int dim = static_cast<int>(prob.free_components.size());
    auto f = [&prob](const Eigen::VectorXd& z) { return prob.loss(z); };

    Eigen::VectorXd best_z = z0;
    double best_loss = prob.loss(z0);
    bool have_finite = std::isfinite(best_loss);

    std::vector<Eigen::VectorXd> starts = {z0, Eigen::VectorXd::Constant(dim, 0.7),
                                           Eigen::VectorXd::Constant(dim, -0.7)};
    for (size_t s = 0; s < starts.size(); ++s) {
        const auto res = nelder_mead(f, starts[s], 0.5, prob.config->nm_tol,
                                     prob.config->nm_max_evals);
        if (std::isfinite(res.fx) && res.fx < best_loss) {
            best_z = res.x;
            best_loss = res.fx;
            have_finite = true;
        }
        // first start good enough: skip the remaining restarts
        if (s == 0 && have_finite && res.converged) break;
    }
    if (!have_finite) throw PatientFitError("map_individual: no finite objective found");
    return {best_z, best_loss};
}

}  // namespace

IndividualParams map_individual(const ObservedSamples& pk_obs, const ObservedSamples& pd_obs,
                                const DoseRegimen& received, const PopulationParams& pop,
                                const EstimationConfig& config, ParamVec* eta_out) {
    if (pk_obs.times.size() + pd_obs.times.size() == 0)
        throw std::invalid_argument("map_individual: no observations");
    pop.validate();

    MapProblem prob{&pk_obs, &pd_obs, &received, &pop, &config,
                    free_components(pop, config)};
    if (prob.free_components.empty()) {
        if (eta_out) *eta_out = ParamVec::Zero();
        return pop.at_mode();
    }
    const auto [z, loss] = solve_map(prob, Eigen::VectorXd::Zero(
                                               static_cast<Eigen::Index>(prob.free_components.size())));
    const ParamVec eta = prob.eta_from_z(z);
    if (eta_out) *eta_out = eta;
    return pop.individual(eta);
}

NlmeFit fit_population(const TrialDataset& dataset, const PopulationParams& init,
                       const EstimationConfig& config) {
    const int n = dataset.n();
    if (n == 0) throw EstimationError("fit_population: empty dataset");
    init.validate();

    PopulationParams pop = init;
    const std::vector<int> free = free_components(init, config);

    NlmeFit fit;
    fit.eta_hat.assign(n, ParamVec::Zero());
    std::vector<bool> active(n, true);
    std::vector<double> data_ll(n, 0.0);
    std::vector<Eigen::VectorXd> warm_z(n, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(free.size())));

    for (int outer = 0; outer < config.max_outer; ++outer) {
        // step (i): per-patient posterior modes at the current (mu, omega)
        for (int i = 0; i < n; ++i) {
            if (!active[i]) continue;
            MapProblem prob{&dataset.patients[i].pk_obs, &dataset.patients[i].pd_obs,
                            &dataset.patients[i].received, &pop, &config, free};
            try {
                auto [z, loss] = solve_map(prob, warm_z[i]);
                // never accept a worse point than the warm start
                if (loss <= prob.loss(warm_z[i])) warm_z[i] = z;
                fit.eta_hat[i] = prob.eta_from_z(warm_z[i]);
                data_ll[i] = prob.data_loglik(fit.eta_hat[i]);
            } catch (const PatientFitError&) {
                if (outer == 0) {
                    active[i] = false;
                    fit.failed_patients.push_back(i);
                }
                // later failures keep the previous iterate
            }
        }
        const int n_active = static_cast<int>(std::count(active.begin(), active.end(), true));
        if (n_active < 3)
            throw EstimationError("fit_population: fewer than 3 patients with usable fits");

        // step (ii): geometric-mean fixed-effect update, empirical variances
        ParamVec mu_new = pop.mu;
        ParamVec omega_new = pop.omega;
        for (int c : free) {
            double shift = 0.0;
            if (!config.frozen_mu[c]) {
                double mean_eta = 0.0;
                for (int i = 0; i < n; ++i)
                    if (active[i]) mean_eta += fit.eta_hat[i][c];
                mean_eta /= n_active;
                mu_new[c] = pop.mu[c] * std::exp(mean_eta);
                shift = mean_eta;
            }
            double ss = 0.0;
            for (int i = 0; i < n; ++i) {
                if (!active[i]) continue;
                fit.eta_hat[i][c] -= shift;
                ss += fit.eta_hat[i][c] * fit.eta_hat[i][c];
            }
            omega_new[c] = std::sqrt(std::max(ss / n_active, config.omega_floor_var));
        }

        // joint loss after the population step; theta (hence data_ll) unchanged
        double joint = 0.0;
        for (int i = 0; i < n; ++i) {
            if (!active[i]) continue;
            joint += data_ll[i];
            for (int c : free) joint += normal_logpdf(fit.eta_hat[i][c], 0.0, omega_new[c]);
        }
        fit.objective_trace.push_back(-joint);

        double rel_change = 0.0;
        for (int c : free) {
            rel_change = std::max(rel_change, std::abs(mu_new[c] - pop.mu[c]) / pop.mu[c]);
            rel_change = std::max(rel_change,
                                  std::abs(omega_new[c] * omega_new[c] - pop.omega[c] * pop.omega[c]) /
                                      std::max(pop.omega[c] * pop.omega[c], 1e-8));
        }
        pop.mu = mu_new;
        pop.omega = omega_new;
        for (int i = 0; i < n; ++i)
            for (size_t d = 0; d < free.size(); ++d)
                warm_z[i][static_cast<Eigen::Index>(d)] =
                    fit.eta_hat[i][free[d]] / pop.omega[free[d]];

        if (rel_change < config.outer_tol) {
            fit.converged = true;
            break;
        }
    }

    fit.mu_hat = pop.mu;
    fit.omega_hat = pop.omega;
    fit.theta_hat.reserve(n);
    for (int i = 0; i < n; ++i) {
        if (!active[i]) fit.eta_hat[i] = ParamVec::Zero();
        fit.theta_hat.push_back(pop.individual(fit.eta_hat[i]));
    }
    return fit;
}

std::vector<PeakPrediction> predict_peaks(const NlmeFit& fit, const TrialDataset& dataset,
                                          const SimSettings& sim) {
    if (fit.theta_hat.size() != static_cast<size_t>(dataset.n()))
        throw std::invalid_argument("predict_peaks: fit does not match the dataset");
    std::vector<PeakPrediction> out;
    out.reserve(dataset.n());
    for (int i = 0; i < dataset.n(); ++i) {
        const auto& rec = dataset.patients[i];
        PeakPrediction p;
        p.received_peaks = cytokine_peaks(fit.theta_hat[i], rec.received, sim);
        p.r_max_received = max_peak(p.received_peaks);
        if (rec.received.n_admin() < rec.planned.n_admin()) {
            p.planned_peaks = cytokine_peaks(fit.theta_hat[i], rec.planned, sim);
            p.r_max_planned = max_peak(p.planned_peaks);
        } else {
            p.planned_peaks = p.received_peaks;
            p.r_max_planned = p.r_max_received;
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace drtox
