#include "drtox/posterior.hpp"

#include <algorithm>
#include <cmath>

#include "drtox/parallel.hpp"
#include "drtox/stats.hpp"

namespace drtox {

Eigen::VectorXd predict_peak_distribution(const NlmeFit& fit, const DoseRegimen& regimen,
                                          int m_predict, const SimSettings& sim, Rng& rng,
                                          int n_threads) {
    if (m_predict < 1) throw std::invalid_argument("predict_peak_distribution: m_predict < 1");
    const PopulationParams pop = fit.as_population(0.0, 0.0);
    pop.validate();
    const std::uint64_t base = rng();
    Eigen::VectorXd out(m_predict);
    parallel_for(m_predict, n_threads, [&](long i) {
        Rng sub = make_rng({base, static_cast<std::uint64_t>(i)});
        const IndividualParams theta = sample_individual(pop, sub);
        out[i] = max_peak(cytokine_peaks(theta, regimen, sim));
    });
    return out;
}

PosteriorToxicity posterior_tox_one(const PosteriorDraws& draws, ToxModel model,
                                    const Eigen::VectorXd& peak_sample, double ref_peak,
                                    const std::string& label) {
    if (draws.params.rows() == 0) throw std::invalid_argument("posterior_tox_one: no draws");
    if ((peak_sample.array() <= 0.0).any())
        throw std::invalid_argument("posterior_tox_one: nonpositive peak sample");

    const Eigen::Index mi = draws.params.rows();
    const Eigen::Index mp = peak_sample.size();
    PosteriorToxicity out;
    out.regimen_label = label;
    out.draws.resize(mi * mp);

    // precompute the log peak ratios once; the cross product is closed-form
    Eigen::VectorXd u(mp);
    for (Eigen::Index p = 0; p < mp; ++p) u[p] = std::log(peak_sample[p] / ref_peak);

    Eigen::Index idx = 0;
    if (model == ToxModel::Logistic) {
        for (Eigen::Index m = 0; m < mi; ++m) {
            const double b0 = draws.params(m, 0);
            const double b1 = draws.params(m, 1);
            for (Eigen::Index p = 0; p < mp; ++p) out.draws[idx++] = inv_logit(b0 + b1 * u[p]);
        }
    } else {
        for (Eigen::Index m = 0; m < mi; ++m) {
            const double mu_z = draws.params(m, 0);
            const double inv_tau = 1.0 / draws.params(m, 1);
            for (Eigen::Index p = 0; p < mp; ++p)
                out.draws[idx++] = normal_cdf((u[p] - mu_z) * inv_tau);
        }
    }
    out.mean = out.draws.mean();
    Eigen::VectorXd sorted = out.draws;
    std::sort(sorted.data(), sorted.data() + sorted.size());
    const auto q = [&](double p) {
        const double h = p * static_cast<double>(sorted.size() - 1);
        const auto lo = static_cast<Eigen::Index>(std::floor(h));
        const auto hi = std::min<Eigen::Index>(lo + 1, sorted.size() - 1);
        return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
    };
    out.ci_lo = q(0.025);
    out.ci_hi = q(0.975);
    return out;
}

std::vector<PosteriorToxicity> posterior_tox_curve(const PosteriorDraws& draws, ToxModel model,
                                                   const std::vector<Eigen::VectorXd>& peak_samples,
                                                   double ref_peak,
                                                   const std::vector<std::string>& labels) {
    if (labels.size() != peak_samples.size())
        throw std::invalid_argument("posterior_tox_curve: labels/samples length mismatch");
    std::vector<PosteriorToxicity> curve;
    curve.reserve(peak_samples.size());
    for (size_t k = 0; k < peak_samples.size(); ++k)
        curve.push_back(posterior_tox_one(draws, model, peak_samples[k], ref_peak, labels[k]));
    return curve;
}

int select_mtd(const std::vector<PosteriorToxicity>& curve, const std::vector<int>& administered,
               double delta_t) {
    if (administered.empty()) throw std::invalid_argument("select_mtd: empty administered set");
    int best = -1;
    for (int k : administered) {
        if (k < 0 || k >= static_cast<int>(curve.size()))
            throw std::invalid_argument("select_mtd: administered index outside the curve");
        if (best < 0 ||
            std::abs(curve[k].mean - delta_t) < std::abs(curve[best].mean - delta_t))
            best = k;
    }
    return best;
}

PosteriorToxicity predict_new_regimen(const NlmeFit& fit, const PosteriorDraws& draws,
                                      ToxModel model, const DoseRegimen& regimen_new,
                                      double ref_peak, int m_predict, const SimSettings& sim,
                                      Rng& rng, int n_threads) {
    regimen_new.validate();
    const Eigen::VectorXd peaks =
        predict_peak_distribution(fit, regimen_new, m_predict, sim, rng, n_threads);
    return posterior_tox_one(draws, model, peaks, ref_peak, regimen_new.label);
}

}  // namespace drtox
