#pragma once

#include <stdexcept>
#include <string>

namespace evspike {

/* Invalid or inconsistent input to an operation (bad parameters, malformed
 * documents).  what() names the offending field where one exists. */
class SpecError : public std::invalid_argument {
public:
    SpecError(const std::string& field, const std::string& reason)
        : std::invalid_argument(field + ": " + reason), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/* Numerical method failed (blow-up, impossible conditioning). */
class SolverFailure : public std::runtime_error {
public:
    explicit SolverFailure(const std::string& msg) : std::runtime_error(msg) {}
};

class DegenerateConditioning : public SolverFailure {
public:
    explicit DegenerateConditioning(const std::string& msg) : SolverFailure(msg) {}
};

/* Runtime guard: unbounded cascade of simultaneous events. */
class AvalancheDetected : public std::runtime_error {
public:
    explicit AvalancheDetected(double at_time)
        : std::runtime_error("avalanche detected at t=" + std::to_string(at_time)),
          time_(at_time) {}
    double time() const { return time_; }

private:
    double time_;
};

/* No finite countdown and no pending delivery: nothing can ever happen. */
class SimulationQuiescent : public std::runtime_error {
public:
    SimulationQuiescent() : std::runtime_error("no pending event") {}
};

}  // namespace evspike
