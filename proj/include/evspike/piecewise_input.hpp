#pragma once

#include <vector>

namespace evspike {

/* Right-continuous piecewise-constant function of absolute time.
 * value(t) = values[k] for the largest k with breakpoints[k] <= t; before the
 * first breakpoint the first value applies.  A constant current is the
 * single-segment case. */
class PiecewiseInput {
public:
    PiecewiseInput() : breaks_{0.0}, values_{0.0} {}
    explicit PiecewiseInput(double constant) : breaks_{0.0}, values_{constant} {}
    PiecewiseInput(std::vector<double> breakpoints, std::vector<double> values);

    double value(double t) const;
    /* integral over [a, b], a <= b */
    double integral(double a, double b) const;
    bool constant_on(double a, double b) const;
    bool is_constant() const { return values_.size() == 1; }

    const std::vector<double>& breakpoints() const { return breaks_; }
    const std::vector<double>& values() const { return values_; }

    bool operator==(const PiecewiseInput&) const = default;

private:
    std::vector<double> breaks_;
    std::vector<double> values_;
};

}  // namespace evspike
