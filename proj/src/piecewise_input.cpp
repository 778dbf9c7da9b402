#include "evspike/piecewise_input.hpp"

#include <algorithm>

#include "evspike/errors.hpp"

namespace evspike {

PiecewiseInput::PiecewiseInput(std::vector<double> breakpoints, std::vector<double> values)
    : breaks_(std::move(breakpoints)), values_(std::move(values)) {
    if (breaks_.empty() || breaks_.size() != values_.size())
        throw SpecError("input", "breakpoints and values must be nonempty and equal-length");
    if (breaks_.front() != 0.0)
        throw SpecError("input", "first breakpoint must be 0");
    for (std::size_t i = 1; i < breaks_.size(); ++i)
        if (!(breaks_[i] > breaks_[i - 1]))
            throw SpecError("input", "breakpoints must be strictly increasing");
}

double PiecewiseInput::value(double t) const {
    if (values_.size() == 1 || t <= breaks_.front()) return values_.front();
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
    return values_[static_cast<std::size_t>(it - breaks_.begin()) - 1];
}

double PiecewiseInput::integral(double a, double b) const {
    if (b <= a) return 0.0;
    if (values_.size() == 1) return values_.front() * (b - a);
    double acc = 0.0;
    double lo = a;
    for (std::size_t i = 0; i < breaks_.size() && lo < b; ++i) {
        double seg_end = (i + 1 < breaks_.size()) ? breaks_[i + 1] : b;
        if (seg_end <= lo) continue;
        double hi = std::min(seg_end, b);
        if (hi > lo) acc += values_[i] * (hi - lo);
        lo = hi;
    }
    return acc;
}

bool PiecewiseInput::constant_on(double a, double b) const {
    if (values_.size() == 1) return true;
    double v = value(a);
    for (std::size_t i = 1; i < breaks_.size(); ++i) {
        if (breaks_[i] > a && breaks_[i] < b && values_[i] != v) return false;
    }
    return true;
}

}  // namespace evspike
