#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace drtox {

// Numeric ODE integration failed (step collapse or non-finite state).
class OdeError : public std::runtime_error {
public:
    OdeError(const std::string& what, double t_fail)
        : std::runtime_error(what + " at t=" + std::to_string(t_fail) + " h"),
          t_fail_(t_fail) {}
    double failing_time() const { return t_fail_; }

private:
    double t_fail_;
};

// MCMC chains did not mix (split-Rhat above threshold or non-finite draws).
class DiagnosticsError : public std::runtime_error {
public:
    DiagnosticsError(const std::string& what, std::vector<double> rhat)
        : std::runtime_error(what), rhat_(std::move(rhat)) {}
    const std::vector<double>& rhat() const { return rhat_; }

private:
    std::vector<double> rhat_;
};

// Hierarchical model cannot assign positive probability to the observed data
// (toxic-administration peak does not exceed all earlier peaks).
class ModelInconsistencyError : public std::runtime_error {
public:
    explicit ModelInconsistencyError(const std::string& what,
                                     std::vector<int> patients = {})
        : std::runtime_error(what), patients_(std::move(patients)) {}
    const std::vector<int>& patients() const { return patients_; }

private:
    std::vector<int> patients_;
};

// Threshold calibration cannot place the MTD-regimen at the requested index.
class CalibrationError : public std::runtime_error {
public:
    CalibrationError(const std::string& what, std::vector<int> achievable = {})
        : std::runtime_error(what), achievable_(std::move(achievable)) {}
    const std::vector<int>& achievable_indices() const { return achievable_; }

private:
    std::vector<int> achievable_;
};

// Population fit cannot proceed (too few usable patients).
class EstimationError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Per-patient MAP fit failed after multistart.
class PatientFitError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scenario/config file problem; message carries file:line anchors.
class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace drtox
