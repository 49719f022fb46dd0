#include "drtox/pkpd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "drtox/odeint.hpp"
#include "drtox/optim.hpp"

namespace drtox {

namespace {

void require_positive(double x, const char* name) {
    if (!(x > 0.0)) throw std::invalid_argument(std::string(name) + " must be positive");
}

}  // namespace

void PkParams::validate() const {
    require_positive(cl, "cl");
    require_positive(v, "v");
}

void PdParams::validate() const {
    if (emax < 0.0) throw std::invalid_argument("emax must be >= 0");
    require_positive(ec50, "ec50");
    require_positive(h, "h");
    require_positive(ic50, "ic50");
    require_positive(kdeg, "kdeg");
    require_positive(kprime, "kprime");
    if (imax < 0.0 || imax >= 1.0) throw std::invalid_argument("imax must be in [0,1)");
}

void IndividualParams::validate() const {
    pk.validate();
    pd.validate();
}

ParamVec IndividualParams::as_vec() const {
    ParamVec v;
    v << pk.cl, pk.v, pd.emax, pd.ec50, pd.h, pd.imax, pd.ic50, pd.kdeg, pd.kprime;
    return v;
}

IndividualParams IndividualParams::from_vec(const ParamVec& v) {
    IndividualParams th;
    th.pk = {v[0], v[1]};
    th.pd = {v[2], v[3], v[4], v[5], v[6], v[7], v[8]};
    return th;
}

void PopulationParams::validate() const {
    at_mode().validate();
    if ((omega < 0.0).any()) throw std::invalid_argument("omega entries must be >= 0");
    if (b_pk < 0.0 || b_pd < 0.0) throw std::invalid_argument("residual SDs must be >= 0");
}

IndividualParams PopulationParams::individual(const ParamVec& eta) const {
    return IndividualParams::from_vec(mu * eta.exp());
}

PopulationParams PopulationParams::defaults() {
    PopulationParams p;
    p.mu << 1.36, 3.4, 3.59e5, 1.0e4, 0.92, 0.995, 1.82e4, 0.18, 2.83;
    ParamVec cv;
    cv << 41.9, 0.0, 14.0, 0.0, 0.0, 0.0, 0.0, 13.0, 36.0;
    for (int i = 0; i < kNParams; ++i) p.omega[i] = cv_percent_to_omega(cv[i]);
    p.b_pk = 0.1;
    p.b_pd = 0.1;
    return p;
}

void SimSettings::validate() const {
    require_positive(body_weight_kg, "body_weight_kg");
    require_positive(infusion_hours, "infusion_hours");
    require_positive(horizon_h, "horizon_h");
    require_positive(rtol, "rtol");
    require_positive(atol, "atol");
    if (grid_per_window < 2) throw std::invalid_argument("grid_per_window must be >= 2");
}

double concentration(const PkParams& pk, const DoseRegimen& regimen, double body_weight_kg,
                     double infusion_hours, double t) {
    if (t < 0.0) throw std::invalid_argument("concentration: negative time");
    const double ke = pk.cl / pk.v;
    double c = 0.0;
    for (Eigen::Index j = 0; j < regimen.n_admin(); ++j) {
        const double dt = t - regimen.times[j];
        if (dt <= 0.0) continue;
        const double rate = regimen.doses[j] * body_weight_kg / infusion_hours;  // ug/h
        if (dt < infusion_hours) {
            c += rate / pk.cl * (1.0 - std::exp(-ke * dt));
        } else {
            c += rate / pk.cl * (1.0 - std::exp(-ke * infusion_hours)) *
                 std::exp(-ke * (dt - infusion_hours));
        }
    }
    return c;  // ug/L == ng/mL
}

namespace {

// Piecewise-smooth integration driver: pins every administration start and
// infusion end, holds the priming index constant per smooth piece. The
// concentration superposition is hoisted per segment: completed infusions
// collapse into one exponential anchored at the segment start.
class CytokineSystem {
public:
    CytokineSystem(const IndividualParams& theta, const DoseRegimen& regimen,
                   const SimSettings& settings)
        : theta_(theta), regimen_(regimen), s_(settings), ode_({settings.rtol, settings.atol}) {
        for (Eigen::Index j = 0; j < regimen.n_admin(); ++j) {
            events_.push_back(regimen.times[j]);
            events_.push_back(regimen.times[j] + settings.infusion_hours);
        }
        std::sort(events_.begin(), events_.end());
        ke_ = theta.pk.cl / theta.pk.v;
        ec50_pow_h_ = std::pow(theta.pd.ec50, theta.pd.h);
    }

    using State = Eigen::Vector2d;  // (E, AUC_E)

    // Advance state from t0 to t1, splitting at interior events.
    void advance(double& t0, double t1, State& y, double& h_hint) const {
        auto it = std::upper_bound(events_.begin(), events_.end(), t0);
        while (t0 < t1) {
            double seg_end = t1;
            if (it != events_.end() && *it < t1) {
                seg_end = *it;
                ++it;
            }
            if (seg_end > t0) {
                integrate_segment(t0, seg_end, y, h_hint);
            }
            t0 = seg_end;
        }
    }

    int admin_count(double t) const {
        int j = 0;
        while (j < regimen_.n_admin() && regimen_.times[j] <= t) ++j;
        return j;
    }

private:
    void integrate_segment(double t0, double t1, State& y, double& h_hint) const {
        const double mid = 0.5 * (t0 + t1);
        const int n_admin = admin_count(mid);
        const double ic50_eff =
            theta_.pd.ic50 / std::pow(theta_.pd.kprime, std::max(n_admin - 1, 0));

        // decayed tail of completed infusions, anchored at t0 to avoid overflow
        double tail = 0.0;
        double active_rate = 0.0, active_start = 0.0;
        const double tinf = s_.infusion_hours;
        for (Eigen::Index j = 0; j < n_admin; ++j) {
            const double rate = regimen_.doses[j] * s_.body_weight_kg / tinf;
            const double t_end = regimen_.times[j] + tinf;
            if (t_end <= mid) {
                tail += rate / theta_.pk.cl * (1.0 - std::exp(-ke_ * tinf)) *
                        std::exp(-ke_ * (t0 - t_end));
            } else {
                active_rate = rate;
                active_start = regimen_.times[j];
            }
        }

        const double emax = theta_.pd.emax, hill = theta_.pd.h, imax = theta_.pd.imax,
                     kdeg = theta_.pd.kdeg, cl = theta_.pk.cl;
        auto rhs = [&](double t, const State& s) -> State {
            double c = tail * std::exp(-ke_ * (t - t0));
            if (active_rate > 0.0)
                c += active_rate / cl * (1.0 - std::exp(-ke_ * (t - active_start)));
            double production = 0.0;
            if (c > 0.0) {
                const double ch = std::pow(c, hill);
                const double stim = emax * ch / (ec50_pow_h_ + ch);
                const double inhib = 1.0 - imax * s[1] / (ic50_eff + s[1]);
                production = stim * inhib;
            }
            return {production - kdeg * s[0], s[0]};
        };
        h_hint = ode_.integrate(rhs, t0, t1, y, h_hint);
    }

    const IndividualParams& theta_;
    const DoseRegimen& regimen_;
    const SimSettings& s_;
    Dopri5<2> ode_;
    std::vector<double> events_;
    double ke_ = 0.0;
    double ec50_pow_h_ = 0.0;
};

// Dense grid: per-window uniform points, window boundaries, infusion ends,
// and the trailing horizon; sorted and deduplicated.
Eigen::VectorXd build_grid(const DoseRegimen& regimen, const SimSettings& s) {
    const Eigen::Index J = regimen.n_admin();
    std::vector<double> pts;
    for (Eigen::Index j = 0; j < J; ++j) {
        const double w0 = regimen.times[j];
        const double w1 = (j + 1 < J) ? regimen.times[j + 1] : regimen.times[j] + s.horizon_h;
        for (int i = 0; i < s.grid_per_window; ++i)
            pts.push_back(w0 + (w1 - w0) * i / s.grid_per_window);
        const double inf_end = w0 + s.infusion_hours;
        if (inf_end < w1) pts.push_back(inf_end);
    }
    pts.push_back(regimen.times[J - 1] + s.horizon_h);
    std::sort(pts.begin(), pts.end());
    const double eps = 1e-9 * (pts.back() - pts.front() + 1.0);
    std::vector<double> out;
    out.reserve(pts.size());
    for (double p : pts)
        if (out.empty() || p - out.back() > eps) out.push_back(p);
    return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

}  // namespace

PdProfile simulate_pd(const IndividualParams& theta, const DoseRegimen& regimen,
                      const SimSettings& settings) {
    regimen.validate();
    theta.validate();
    settings.validate();

    PdProfile prof;
    prof.grid = build_grid(regimen, settings);
    const Eigen::Index n = prof.grid.size();
    prof.conc.resize(n);
    prof.cytokine.resize(n);
    prof.auc_e.resize(n);

    CytokineSystem sys(theta, regimen, settings);
    CytokineSystem::State y(0.0, 0.0);
    double t = prof.grid[0];
    double h_hint = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        sys.advance(t, prof.grid[i], y, h_hint);
        prof.conc[i] = concentration(theta.pk, regimen, settings.body_weight_kg,
                                     settings.infusion_hours, prof.grid[i]);
        prof.cytokine[i] = std::max(y[0], 0.0);
        prof.auc_e[i] = y[1];
    }
    return prof;
}

PdPointValues simulate_at(const IndividualParams& theta, const DoseRegimen& regimen,
                          const Eigen::VectorXd& times, const SimSettings& settings) {
    regimen.validate();
    for (Eigen::Index i = 0; i < times.size(); ++i)
        if (times[i] < 0.0) throw std::invalid_argument("simulate_at: negative time");

    std::vector<Eigen::Index> order(times.size());
    for (Eigen::Index i = 0; i < times.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return times[a] < times[b]; });

    PdPointValues out;
    out.conc.resize(times.size());
    out.cytokine.resize(times.size());

    CytokineSystem sys(theta, regimen, settings);
    CytokineSystem::State y(0.0, 0.0);
    double t = regimen.times[0];
    double h_hint = 0.0;
    for (Eigen::Index k : order) {
        if (times[k] > t) sys.advance(t, times[k], y, h_hint);
        out.conc[k] = concentration(theta.pk, regimen, settings.body_weight_kg,
                                    settings.infusion_hours, times[k]);
        out.cytokine[k] = (times[k] < regimen.times[0]) ? 0.0 : std::max(y[0], 0.0);
    }
    return out;
}

Eigen::VectorXd cytokine_peaks(const IndividualParams& theta, const DoseRegimen& regimen,
                               const SimSettings& settings) {
    const PdProfile prof = simulate_pd(theta, regimen, settings);
    const Eigen::Index J = regimen.n_admin();
    const Eigen::Index n = prof.grid.size();

    CytokineSystem sys(theta, regimen, settings);
    // E at arbitrary t inside (grid[i], grid[i+1]) by re-integrating from the
    // stored state at grid[i]; grid intervals contain no interior events.
    auto cytokine_at = [&](Eigen::Index i0, double t) {
        CytokineSystem::State y(prof.cytokine[i0], prof.auc_e[i0]);
        double t0 = prof.grid[i0];
        double h = 0.0;
        sys.advance(t0, t, y, h);
        return std::max(y[0], 0.0);
    };

    Eigen::VectorXd peaks(J);
    Eigen::Index i = 0;
    for (Eigen::Index j = 0; j < J; ++j) {
        const double w1 =
            (j + 1 < J) ? regimen.times[j + 1] : regimen.times[J - 1] + settings.horizon_h;
        const Eigen::Index i_begin = i;
        Eigen::Index best = i;
        while (i < n && prof.grid[i] <= w1 + 1e-12) {
            if (prof.cytokine[i] > prof.cytokine[best]) best = i;
            ++i;
        }
        const Eigen::Index i_end = i - 1;  // last grid point of this window
        i = i_end;                         // window boundary belongs to both windows

        double r = prof.cytokine[best];
        if (best > i_begin && best < i_end) {
            const Eigen::Index lo = best - 1;
            auto neg_e = [&](double t) {
                return -cytokine_at(lo, std::min(t, prof.grid[best + 1]));
            };
            auto [t_star, fneg] =
                golden_section_min(neg_e, prof.grid[lo], prof.grid[best + 1], 1e-10, 60);
            r = std::max(r, -fneg);
        }
        peaks[j] = r;
    }
    return peaks;
}

double max_peak(const Eigen::VectorXd& peaks) {
    if (peaks.size() == 0) throw std::invalid_argument("max_peak: empty peak vector");
    return peaks.maxCoeff();
}

IndividualParams sample_individual(const PopulationParams& pop, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    ParamVec eta = ParamVec::Zero();
    for (int i = 0; i < kNParams; ++i)
        if (pop.omega[i] > 0.0) eta[i] = pop.omega[i] * gauss(rng);
    return pop.individual(eta);
}

namespace {

double lin_interp(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys, double x) {
    const auto* begin = xs.data();
    const auto* end = xs.data() + xs.size();
    const auto* it = std::lower_bound(begin, end, x);
    if (it == begin) return ys[0];
    if (it == end) return ys[ys.size() - 1];
    const Eigen::Index hi = it - begin;
    const double w = (x - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
    return (1.0 - w) * ys[hi - 1] + w * ys[hi];
}

}  // namespace

ObservedSamples observe_with_error(const PdProfile& profile, const Eigen::VectorXd& sample_times,
                                   const PopulationParams& pop, Rng& rng) {
    const double t_lo = profile.grid[0];
    const double t_hi = profile.grid[profile.grid.size() - 1];
    std::normal_distribution<double> gauss(0.0, 1.0);

    ObservedSamples out;
    out.times = sample_times;
    out.conc.resize(sample_times.size());
    out.cytokine.resize(sample_times.size());
    for (Eigen::Index i = 0; i < sample_times.size(); ++i) {
        const double t = sample_times[i];
        if (t < t_lo - 1e-9 || t > t_hi + 1e-9)
            throw std::invalid_argument("observe_with_error: sample time outside profile grid");
        const double c = lin_interp(profile.grid, profile.conc, t);
        const double e = lin_interp(profile.grid, profile.cytokine, t);
        out.conc[i] = c * (1.0 + pop.b_pk * gauss(rng));
        out.cytokine[i] = e * (1.0 + pop.b_pd * gauss(rng));
    }
    return out;
}

Eigen::VectorXd reference_peaks(const PopulationParams& pop, const RegimenPanel& panel,
                                const SimSettings& settings) {
    if (panel.regimens.empty()) throw std::invalid_argument("reference_peaks: empty panel");
    const IndividualParams mode = pop.at_mode();
    Eigen::VectorXd out(panel.size());
    for (int k = 0; k < panel.size(); ++k)
        out[k] = max_peak(cytokine_peaks(mode, panel.regimens[k], settings));
    return out;
}

}  // namespace drtox
