#include "evspike/fpt/gauss_markov.hpp"

#include <algorithm>
#include <cmath>

#include "evspike/errors.hpp"

namespace evspike::fpt {

void GaussMarkovSpec::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw SpecError("sigma", "noise must be > 0");
    if (kind == GmKind::OrnsteinUhlenbeck) {
        if (!(tau > 0.0) || !std::isfinite(tau))
            throw SpecError("tau", "membrane timescale must be > 0");
        if (!std::isfinite(rest_mu)) throw SpecError("rest_mu", "must be finite");
    }
}

double GaussMarkovSpec::mean(double y, double s, double t) const {
    if (t <= s) return y;
    if (kind == GmKind::Brownian) return y + input.integral(s, t);
    /* relax toward the segment equilibrium across each constant piece */
    double m = y;
    double lo = s;
    const auto& bp = input.breakpoints();
    const auto& vv = input.values();
    for (std::size_t i = 0; i < bp.size() && lo < t; ++i) {
        double seg_end = (i + 1 < bp.size()) ? bp[i + 1] : t;
        if (seg_end <= lo) continue;
        double hi = std::min(seg_end, t);
        double eq = rest_mu + vv[i];
        m = eq + (m - eq) * std::exp(-(hi - lo) / tau);
        lo = hi;
    }
    return m;
}

double GaussMarkovSpec::mean_deriv(double m, double t) const { return drift(m, t); }

double GaussMarkovSpec::variance(double dt) const {
    if (dt <= 0.0) return 0.0;
    if (kind == GmKind::Brownian) return sigma * sigma * dt;
    return sigma * sigma / (2.0 * tau) * -std::expm1(-2.0 * dt / tau);
}

double GaussMarkovSpec::variance_deriv(double dt) const {
    if (kind == GmKind::Brownian) return sigma * sigma;
    return sigma * sigma / (tau * tau) * std::exp(-2.0 * dt / tau);
}

double GaussMarkovSpec::drift(double x, double t) const {
    if (kind == GmKind::Brownian) return input.value(t);
    return (rest_mu - x + input.value(t)) / tau;
}

}  // namespace evspike::fpt
