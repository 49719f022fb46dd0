#include "drtox/escalation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "drtox/optim.hpp"
#include "drtox/stats.hpp"

namespace drtox {

// ---------------------------------------------------------------- 3+3 design

namespace {

bool too_toxic(const LevelCounts& c) { return c.treated >= 3 && c.toxicities >= 2; }

// Level `k` proved too toxic: walk down to the first acceptable level.
ThreePlusThreeDecision resolve_deescalation(const std::vector<LevelCounts>& counts, int k) {
    for (int j = k - 1; j >= 0; --j) {
        const auto& c = counts[j];
        if (c.treated >= 6) {
            if (c.toxicities <= 1) return {ThreePlusThreeAction::Declare, j};
            continue;
        }
        if (c.treated == 3) {
            if (c.toxicities <= 1) return {ThreePlusThreeAction::Deescalate, j};
            continue;
        }
    }
    return {ThreePlusThreeAction::StopNoMtd, -1};
}

}  // namespace

ThreePlusThreeDecision three_plus_three_step(const std::vector<LevelCounts>& counts,
                                             int current) {
    const int K = static_cast<int>(counts.size());
    if (current < 0 || current >= K)
        throw std::invalid_argument("three_plus_three_step: level out of range");
    for (const auto& c : counts) {
        if (c.treated != 0 && c.treated != 3 && c.treated != 6)
            throw std::invalid_argument("three_plus_three_step: treated count not in {0,3,6}");
        if (c.toxicities < 0 || c.toxicities > c.treated)
            throw std::invalid_argument("three_plus_three_step: inconsistent toxicity count");
    }
    const auto& c = counts[current];
    if (c.treated == 0)
        throw std::invalid_argument("three_plus_three_step: current level untreated");

    const bool top = current == K - 1;
    const bool blocked_above = !top && (too_toxic(counts[current + 1]) ||
                                        counts[current + 1].treated > 0);

    if (c.treated == 3) {
        if (c.toxicities == 0) {
            if (top) return {ThreePlusThreeAction::Declare, current};
            if (blocked_above) return {ThreePlusThreeAction::StayExpand, current};
            return {ThreePlusThreeAction::Escalate, current + 1};
        }
        if (c.toxicities == 1) return {ThreePlusThreeAction::StayExpand, current};
        return resolve_deescalation(counts, current);
    }
    // treated == 6
    if (c.toxicities <= 1) {
        if (top || blocked_above) return {ThreePlusThreeAction::Declare, current};
        return {ThreePlusThreeAction::Escalate, current + 1};
    }
    return resolve_deescalation(counts, current);
}

// ------------------------------------------------------------------- CRM

void CrmConfig::validate() const {
    if (skeleton.size() < 1) throw std::invalid_argument("crm: empty skeleton");
    for (Eigen::Index k = 0; k < skeleton.size(); ++k) {
        if (!(skeleton[k] > 0.0 && skeleton[k] < 1.0))
            throw std::invalid_argument("crm: skeleton entries must lie in (0,1)");
        if (k > 0 && skeleton[k] <= skeleton[k - 1])
            throw std::invalid_argument("crm: skeleton must be strictly increasing");
    }
    if (!(target > 0.0 && target < 1.0)) throw std::invalid_argument("crm: target outside (0,1)");
    if (cohort_size < 1) throw std::invalid_argument("crm: cohort_size must be >= 1");
    if (n_max < cohort_size || n_max % cohort_size != 0)
        throw std::invalid_argument("crm: n_max must be a positive multiple of cohort_size");
    if (prior.intercept_sd <= 0.0 || prior.slope_shape <= 0.0 || prior.slope_mean <= 0.0)
        throw std::invalid_argument("crm: invalid prior spec");
}

namespace {

// Fixed prior sample shared by every dose-label backsolve; deterministic so
// the labels are a pure function of (skeleton, prior).
void crm_prior_sample(const CrmPriorSpec& prior, Eigen::VectorXd& a, Eigen::VectorXd& b) {
    const int n = 20000;
    Rng rng = make_rng({0xC3A11B5ULL});
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::gamma_distribution<double> gamma(prior.slope_shape,
                                          prior.slope_mean / prior.slope_shape);
    a.resize(n);
    b.resize(n);
    for (int i = 0; i < n; ++i) {
        a[i] = prior.intercept_mean + prior.intercept_sd * gauss(rng);
        b[i] = gamma(rng);
    }
}

}  // namespace

Eigen::VectorXd crm_dose_labels(const Eigen::VectorXd& skeleton, const CrmPriorSpec& prior) {
    Eigen::VectorXd a, b;
    crm_prior_sample(prior, a, b);
    auto prior_mean_prob = [&](double x) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < a.size(); ++i) acc += inv_logit(a[i] + b[i] * x);
        return acc / static_cast<double>(a.size());
    };
    Eigen::VectorXd labels(skeleton.size());
    for (Eigen::Index k = 0; k < skeleton.size(); ++k) {
        const double p = skeleton[k];
        labels[k] =
            bisect_root([&](double x) { return prior_mean_prob(x) - p; }, -60.0, 60.0, 1e-10);
    }
    return labels;
}

CrmPosterior crm_posterior(const std::vector<CrmObservation>& data, const CrmConfig& config,
                           int m_iter, Rng& rng) {
    config.validate();
    const Eigen::VectorXd labels = crm_dose_labels(config.skeleton, config.prior);
    const auto& prior = config.prior;

    // unconstrained parameterization (a, log b)
    auto log_target = [&](const Eigen::VectorXd& u) {
        const double a = u[0];
        const double logb = u[1];
        const double b = std::exp(logb);
        double lp = normal_logpdf(a, prior.intercept_mean, prior.intercept_sd) +
                    gamma_logpdf(b, prior.slope_shape, prior.slope_shape / prior.slope_mean) +
                    logb;
        for (const auto& obs : data) {
            const double eta = a + b * labels[obs.regimen_index];
            // log Bernoulli(y; invlogit(eta)) = y*eta - log(1+e^eta)
            lp += obs.toxic * eta - (eta > 0.0 ? eta + std::log1p(std::exp(-eta))
                                               : std::log1p(std::exp(eta)));
        }
        return lp;
    };
    auto to_natural = [](const Eigen::VectorXd& u) {
        Eigen::VectorXd nat(2);
        nat << u[0], std::exp(u[1]);
        return nat;
    };

    McmcConfig mcfg = config.mcmc;
    mcfg.m_iter = m_iter;
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::gamma_distribution<double> gamma_draw(prior.slope_shape,
                                               prior.slope_mean / prior.slope_shape);
    std::vector<Eigen::VectorXd> inits;
    for (int c = 0; c < mcfg.n_chains; ++c) {
        Eigen::VectorXd u(2);
        u << prior.intercept_mean + prior.intercept_sd * gauss(rng),
            std::log(std::max(gamma_draw(rng), 1e-6));
        inits.push_back(u);
    }

    CrmPosterior out;
    out.draws = sample_rwm(log_target, to_natural, inits, mcfg, rng);
    out.prob_means.resize(config.skeleton.size());
    for (Eigen::Index k = 0; k < config.skeleton.size(); ++k) {
        double acc = 0.0;
        for (Eigen::Index m = 0; m < out.draws.params.rows(); ++m)
            acc += inv_logit(out.draws.params(m, 0) + out.draws.params(m, 1) * labels[k]);
        out.prob_means[k] = acc / static_cast<double>(out.draws.params.rows());
    }
    return out;
}

int crm_next(const std::vector<CrmObservation>& data, const CrmConfig& config, int m_iter,
             int max_administered, Rng& rng) {
    const auto post = crm_posterior(data, config, m_iter, rng);
    int best = 0;
    for (Eigen::Index k = 1; k < post.prob_means.size(); ++k)
        if (std::abs(post.prob_means[k] - config.target) <
            std::abs(post.prob_means[best] - config.target))
            best = static_cast<int>(k);
    return std::min(best, max_administered + 1);  // no dose skipping
}

// --------------------------------------------------------------- trial runner

Eigen::VectorXd pk_sample_times(const DoseRegimen& received, const SimSettings& sim,
                                const ObservationSchedule& schedule) {
    const Eigen::Index J = received.n_admin();
    std::vector<double> ts;
    for (Eigen::Index j = 0; j < J; ++j) {
        const double w1 =
            (j + 1 < J) ? received.times[j + 1] : received.times[J - 1] + sim.horizon_h;
        if (schedule.pk_per_admin >= 1)
            ts.push_back(std::min(received.times[j] + sim.infusion_hours, w1));
        if (schedule.pk_per_admin >= 2) ts.push_back(w1);  // trough just before next dose
    }
    return Eigen::Map<Eigen::VectorXd>(ts.data(), static_cast<Eigen::Index>(ts.size()));
}

Eigen::VectorXd pd_sample_times(const DoseRegimen& received, const SimSettings& sim,
                                const ObservationSchedule& schedule) {
    const Eigen::Index J = received.n_admin();
    const int m = schedule.pd_per_window;
    std::vector<double> ts;
    for (Eigen::Index j = 0; j < J; ++j) {
        const double w0 = received.times[j];
        const double w1 =
            (j + 1 < J) ? received.times[j + 1] : received.times[J - 1] + sim.horizon_h;
        for (int k = 1; k <= m; ++k) ts.push_back(w0 + (w1 - w0) * k / m);
    }
    return Eigen::Map<Eigen::VectorXd>(ts.data(), static_cast<Eigen::Index>(ts.size()));
}

namespace {

PatientRecord simulate_patient(const TrialContext& ctx, int planned_index,
                               std::uint64_t master_seed, std::uint64_t trial_index,
                               std::uint64_t patient_id) {
    Rng rng = make_rng({master_seed, trial_index, stream::patient, patient_id});

    PatientRecord rec;
    rec.planned = ctx.panel.regimens[planned_index];
    rec.planned_index = planned_index;
    rec.theta_true = sample_individual(ctx.pop, rng);

    const Eigen::VectorXd peaks = cytokine_peaks(rec.theta_true, rec.planned, ctx.sim);
    rec.outcome = simulate_toxicity(peaks, ctx.ground, rng);
    rec.received = truncate_at_toxicity(rec.planned, rec.outcome.stop_index);

    const PdProfile prof = simulate_pd(rec.theta_true, rec.received, ctx.sim);
    const Eigen::VectorXd pk_times = pk_sample_times(rec.received, ctx.sim, ctx.schedule);
    const Eigen::VectorXd pd_times = pd_sample_times(rec.received, ctx.sim, ctx.schedule);
    rec.pk_obs = observe_with_error(prof, pk_times, ctx.pop, rng);
    rec.pd_obs = observe_with_error(prof, pd_times, ctx.pop, rng);
    return rec;
}

void finalize_administered(TrialDataset& ds) {
    for (const auto& p : ds.patients) ds.administered_set.push_back(p.planned_index);
    std::sort(ds.administered_set.begin(), ds.administered_set.end());
    ds.administered_set.erase(std::unique(ds.administered_set.begin(), ds.administered_set.end()),
                              ds.administered_set.end());
}

const char* action_name(ThreePlusThreeAction a) {
    switch (a) {
        case ThreePlusThreeAction::Escalate: return "escalate";
        case ThreePlusThreeAction::StayExpand: return "stay-expand";
        case ThreePlusThreeAction::Deescalate: return "deescalate";
        case ThreePlusThreeAction::Declare: return "declare";
        case ThreePlusThreeAction::StopNoMtd: return "stop-no-mtd";
    }
    return "?";
}

TrialDataset run_three_plus_three(const TrialContext& ctx, const ThreePlusThreeConfig& cfg,
                                  std::uint64_t master_seed, std::uint64_t trial_index) {
    TrialDataset ds;
    ds.panel = ctx.panel;
    std::vector<LevelCounts> counts(ctx.panel.size());
    int cur = 0;
    std::uint64_t patient_id = 0;
    int cohort = 0;
    for (;;) {
        for (int i = 0; i < cfg.cohort_size; ++i) {
            auto rec = simulate_patient(ctx, cur, master_seed, trial_index, patient_id++);
            counts[cur].treated += 1;
            counts[cur].toxicities += rec.outcome.global;
            ds.patients.push_back(std::move(rec));
        }
        const auto d = three_plus_three_step(counts, cur);
        ds.design_log.push_back({cohort++, cur, action_name(d.action)});
        switch (d.action) {
            case ThreePlusThreeAction::Escalate:
            case ThreePlusThreeAction::Deescalate:
            case ThreePlusThreeAction::StayExpand:
                cur = d.level;
                break;
            case ThreePlusThreeAction::Declare:
                ds.declared = d.level;
                finalize_administered(ds);
                return ds;
            case ThreePlusThreeAction::StopNoMtd:
                ds.no_mtd = true;
                finalize_administered(ds);
                return ds;
        }
    }
}

TrialDataset run_crm(const TrialContext& ctx, const CrmConfig& cfg, std::uint64_t master_seed,
                     std::uint64_t trial_index) {
    cfg.validate();
    if (cfg.skeleton.size() != ctx.panel.size())
        throw std::invalid_argument("crm: skeleton length does not match the panel");

    TrialDataset ds;
    ds.panel = ctx.panel;
    std::vector<CrmObservation> data;
    int cur = 0;
    int max_admin = -1;
    std::uint64_t patient_id = 0;
    const int n_cohorts = cfg.n_max / cfg.cohort_size;
    for (int cohort = 0; cohort < n_cohorts; ++cohort) {
        for (int i = 0; i < cfg.cohort_size; ++i) {
            auto rec = simulate_patient(ctx, cur, master_seed, trial_index, patient_id++);
            data.push_back({cur, rec.outcome.global});
            ds.patients.push_back(std::move(rec));
        }
        max_admin = std::max(max_admin, cur);
        if (cohort + 1 < n_cohorts) {
            Rng rng = make_rng({master_seed, trial_index, stream::design,
                                static_cast<std::uint64_t>(cohort)});
            cur = crm_next(data, cfg, cfg.mcmc.m_iter, max_admin, rng);
            ds.design_log.push_back({cohort, cur, "allocate"});
        }
    }

    // final recommendation restricted to administered regimens
    Rng rng = make_rng({master_seed, trial_index, stream::design, 0xF1A1ULL});
    const auto post = crm_posterior(data, cfg, cfg.mcmc.m_iter, rng);
    ds.design_curve = post.prob_means;
    finalize_administered(ds);
    int best = ds.administered_set.front();
    for (int k : ds.administered_set)
        if (std::abs(post.prob_means[k] - cfg.target) < std::abs(post.prob_means[best] - cfg.target))
            best = k;
    ds.declared = best;
    return ds;
}

}  // namespace

TrialDataset run_trial(const TrialContext& ctx, std::uint64_t master_seed,
                       std::uint64_t trial_index) {
    ctx.panel.validate();
    ctx.pop.validate();
    ctx.ground.validate();
    ctx.sim.validate();
    if (std::holds_alternative<ThreePlusThreeConfig>(ctx.design))
        return run_three_plus_three(ctx, std::get<ThreePlusThreeConfig>(ctx.design), master_seed,
                                    trial_index);
    return run_crm(ctx, std::get<CrmConfig>(ctx.design), master_seed, trial_index);
}

}  // namespace drtox
