#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace drtox {

// A planned sequence of doses with administration times. Immutable value
// type; the unit the trial escalates over.
struct DoseRegimen {
    Eigen::VectorXd doses;  // ug/kg, one per administration
    Eigen::VectorXd times;  // hours from trial start, strictly increasing
    std::string label;

    Eigen::Index n_admin() const { return doses.size(); }

    void validate() const {
        if (doses.size() == 0 || doses.size() != times.size())
            throw std::invalid_argument("regimen '" + label +
                                        "': doses/times must have equal nonzero length");
        for (Eigen::Index j = 0; j < doses.size(); ++j) {
            if (doses[j] < 0.0)
                throw std::invalid_argument("regimen '" + label + "': negative dose");
            if (j > 0 && times[j] <= times[j - 1])
                throw std::invalid_argument("regimen '" + label +
                                            "': times not strictly increasing");
        }
    }

    static DoseRegimen from_days(Eigen::VectorXd doses, const Eigen::VectorXd& days,
                                 std::string label = {}) {
        DoseRegimen r{std::move(doses), days * 24.0, std::move(label)};
        r.validate();
        return r;
    }
};

// First j administrations of a regimen.
inline DoseRegimen subregimen(const DoseRegimen& regimen, Eigen::Index j) {
    if (j < 1 || j > regimen.n_admin())
        throw std::invalid_argument("subregimen: administration index out of range");
    return {regimen.doses.head(j), regimen.times.head(j), regimen.label};
}

// Regimen actually received when administration stops at j_stop.
inline DoseRegimen truncate_at_toxicity(const DoseRegimen& regimen, Eigen::Index j_stop) {
    if (j_stop < 1 || j_stop > regimen.n_admin())
        throw std::invalid_argument("truncate_at_toxicity: stop index out of range");
    return subregimen(regimen, j_stop);
}

// Ordered panel of candidate regimens plus the underlying dose set.
struct RegimenPanel {
    std::vector<DoseRegimen> regimens;
    std::vector<double> dose_set;  // sorted unique dose amounts (ug/kg)

    int size() const { return static_cast<int>(regimens.size()); }

    void validate() const {
        if (regimens.empty()) throw std::invalid_argument("panel: no regimens");
        for (const auto& r : regimens) {
            r.validate();
            for (Eigen::Index j = 0; j < r.doses.size(); ++j) {
                if (!std::binary_search(dose_set.begin(), dose_set.end(), r.doses[j]))
                    throw std::invalid_argument("panel: dose " + std::to_string(r.doses[j]) +
                                                " of regimen '" + r.label +
                                                "' not in dose set");
            }
        }
    }

    static RegimenPanel from_regimens(std::vector<DoseRegimen> regimens) {
        RegimenPanel p{std::move(regimens), {}};
        for (const auto& r : p.regimens)
            for (Eigen::Index j = 0; j < r.doses.size(); ++j)
                p.dose_set.push_back(r.doses[j]);
        std::sort(p.dose_set.begin(), p.dose_set.end());
        p.dose_set.erase(std::unique(p.dose_set.begin(), p.dose_set.end()), p.dose_set.end());
        p.validate();
        return p;
    }
};

}  // namespace drtox
