#include "drtox/mcmc.hpp"

#include <cmath>
#include <numeric>

#include "drtox/errors.hpp"
#include "drtox/stats.hpp"

namespace drtox {

namespace {

struct ChainResult {
    Eigen::MatrixXd kept;  // kept_per_chain x dim
    double accept = 0.0;
};

ChainResult run_chain(const LogDensity& log_target, const Eigen::VectorXd& init,
                      int kept_per_chain, int thin, double target_accept, Rng rng) {
    const int dim = static_cast<int>(init.size());
    const int n_sampling = kept_per_chain * thin;
    const int n_warmup = n_sampling;

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Eigen::VectorXd x = init;
    double lp = log_target(x);
    if (!std::isfinite(lp)) {
        // nudge toward the origin until the density is finite
        for (int tries = 0; tries < 60 && !std::isfinite(lp); ++tries) {
            x *= 0.5;
            lp = log_target(x);
        }
        if (!std::isfinite(lp)) throw DiagnosticsError("mcmc: no finite starting point", {});
    }

    // proposal: x + scale * L z, with L from the running warmup covariance
    double log_scale = std::log(2.38 / std::sqrt(double(dim)));
    Eigen::MatrixXd chol = Eigen::MatrixXd::Identity(dim, dim);
    Eigen::VectorXd run_mean = x;
    Eigen::MatrixXd run_cov = Eigen::MatrixXd::Identity(dim, dim) * 0.1;

    ChainResult out;
    out.kept.resize(kept_per_chain, dim);
    long n_accept = 0;

    const int total = n_warmup + n_sampling;
    for (int it = 0; it < total; ++it) {
        Eigen::VectorXd z(dim);
        for (int d = 0; d < dim; ++d) z[d] = gauss(rng);
        const Eigen::VectorXd prop = x + std::exp(log_scale) * (chol * z);
        const double lp_prop = log_target(prop);
        const double log_alpha = lp_prop - lp;
        const bool accept = std::isfinite(lp_prop) && std::log(unif(rng)) < log_alpha;
        if (accept) {
            x = prop;
            lp = lp_prop;
        }

        if (it < n_warmup) {
            // Robbins-Monro on the global scale, running covariance for shape
            const double gamma = 1.0 / std::pow(it + 10.0, 0.6);
            log_scale += gamma * ((accept ? 1.0 : 0.0) - target_accept);
            const double w = 1.0 / (it + 2.0);
            const Eigen::VectorXd delta = x - run_mean;
            run_mean += w * delta;
            run_cov = (1.0 - w) * run_cov + w * delta * delta.transpose();
            if ((it + 1) % 25 == 0) {
                Eigen::LLT<Eigen::MatrixXd> llt(
                    run_cov + 1e-8 * Eigen::MatrixXd::Identity(dim, dim));
                if (llt.info() == Eigen::Success) chol = llt.matrixL();
            }
        } else {
            const int s = it - n_warmup;
            if ((s + 1) % thin == 0) out.kept.row((s + 1) / thin - 1) = x.transpose();
            n_accept += accept ? 1 : 0;
        }
    }
    out.accept = static_cast<double>(n_accept) / n_sampling;
    return out;
}

// split each chain in half; variance decomposition over the half-sequences
void split_halves(const std::vector<Eigen::VectorXd>& chains,
                  std::vector<Eigen::VectorXd>& halves) {
    for (const auto& c : chains) {
        const Eigen::Index m = c.size() / 2;
        halves.push_back(c.head(m));
        halves.push_back(c.segment(m, m));
    }
}

}  // namespace

double split_rhat(const std::vector<Eigen::VectorXd>& chains) {
    std::vector<Eigen::VectorXd> seqs;
    split_halves(chains, seqs);
    const double m = static_cast<double>(seqs.size());
    const double n = static_cast<double>(seqs.front().size());

    double grand = 0.0;
    for (const auto& s : seqs) grand += s.mean();
    grand /= m;

    double b = 0.0, w = 0.0;
    for (const auto& s : seqs) {
        const double mu = s.mean();
        b += (mu - grand) * (mu - grand);
        w += (s.array() - mu).square().sum() / (n - 1.0);
    }
    b *= n / (m - 1.0);
    w /= m;
    if (w <= 0.0) return kInf;
    const double var_plus = (n - 1.0) / n * w + b / n;
    return std::sqrt(var_plus / w);
}

double effective_draws(const std::vector<Eigen::VectorXd>& chains) {
    std::vector<Eigen::VectorXd> seqs;
    split_halves(chains, seqs);
    const Eigen::Index n = seqs.front().size();
    const double m = static_cast<double>(seqs.size());

    double grand = 0.0, b = 0.0, w = 0.0;
    for (const auto& s : seqs) grand += s.mean();
    grand /= m;
    for (const auto& s : seqs) {
        const double mu = s.mean();
        b += (mu - grand) * (mu - grand);
        w += (s.array() - mu).square().sum() / (n - 1.0);
    }
    b *= n / (m - 1.0);
    w /= m;
    const double var_plus = (n - 1.0) / n * w + b / n;
    if (var_plus <= 0.0) return 0.0;

    // combined autocorrelations, Geyer initial-monotone truncation
    double tau = 1.0;
    double prev_pair = kInf;
    for (Eigen::Index t = 1; t + 1 < n; t += 2) {
        double rho_t = 0.0, rho_t1 = 0.0;
        for (const auto& s : seqs) {
            const double mu = s.mean();
            double acv_t = 0.0, acv_t1 = 0.0;
            for (Eigen::Index i = 0; i + t < n; ++i) acv_t += (s[i] - mu) * (s[i + t] - mu);
            for (Eigen::Index i = 0; i + t + 1 < n; ++i)
                acv_t1 += (s[i] - mu) * (s[i + t + 1] - mu);
            rho_t += acv_t / n;
            rho_t1 += acv_t1 / n;
        }
        rho_t = 1.0 - (w - rho_t / m) / var_plus;
        rho_t1 = 1.0 - (w - rho_t1 / m) / var_plus;
        const double pair = rho_t + rho_t1;
        if (pair < 0.0) break;
        tau += 2.0 * std::min(pair, prev_pair);
        prev_pair = pair;
    }
    return m * static_cast<double>(n) / tau;
}

PosteriorDraws sample_rwm(const LogDensity& log_target, const Transform& to_natural,
                          const std::vector<Eigen::VectorXd>& chain_inits,
                          const McmcConfig& config, Rng& rng) {
    const int n_chains = static_cast<int>(chain_inits.size());
    if (n_chains < 2) throw std::invalid_argument("mcmc: need at least 2 chains");
    const int dim = static_cast<int>(chain_inits.front().size());
    const int kept_per_chain = (config.m_iter + n_chains - 1) / n_chains;

    std::vector<std::uint64_t> seeds(n_chains);
    for (auto& s : seeds) s = rng();

    std::vector<ChainResult> results(n_chains);
    for (int c = 0; c < n_chains; ++c)
        results[c] = run_chain(log_target, chain_inits[c], kept_per_chain, config.thin,
                               config.target_accept, Rng(seeds[c]));

    PosteriorDraws out;
    out.rhat.resize(dim);
    out.ess.resize(dim);
    out.accept_rate.resize(n_chains);
    for (int c = 0; c < n_chains; ++c) out.accept_rate[c] = results[c].accept;

    std::vector<double> bad_rhat;
    for (int d = 0; d < dim; ++d) {
        std::vector<Eigen::VectorXd> per_chain;
        per_chain.reserve(n_chains);
        for (const auto& r : results) per_chain.push_back(r.kept.col(d));
        out.rhat[d] = split_rhat(per_chain);
        out.ess[d] = effective_draws(per_chain);
        bad_rhat.push_back(out.rhat[d]);
    }
    for (int d = 0; d < dim; ++d)
        if (!(out.rhat[d] < config.rhat_max))
            throw DiagnosticsError("mcmc: split-Rhat " + std::to_string(out.rhat[d]) +
                                       " exceeds " + std::to_string(config.rhat_max) +
                                       " for parameter " + std::to_string(d),
                                   bad_rhat);

    out.params.resize(config.m_iter, dim);
    Eigen::Index row = 0;
    for (int k = 0; k < kept_per_chain && row < config.m_iter; ++k)
        for (int c = 0; c < n_chains && row < config.m_iter; ++c)
            out.params.row(row++) = to_natural(results[c].kept.row(k).transpose()).transpose();
    return out;
}

}  // namespace drtox
