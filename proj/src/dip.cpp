#include "evspike/fpt/dip.hpp"

#include <algorithm>
#include <cmath>

#include "evspike/errors.hpp"

namespace evspike::fpt {

void DipSpec::validate() const {
    if (!(tau_s > 0.0) || !std::isfinite(tau_s)) throw SpecError("tau_s", "must be > 0");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw SpecError("sigma", "must be > 0");
    if (leaky && (!(tau > 0.0) || !std::isfinite(tau))) throw SpecError("tau", "must be > 0");
    if (!std::isfinite(input)) throw SpecError("input", "must be finite");
}

namespace {

DipMoments pif_moments(const DipSpec& sp, double v0, double is0, double dt) {
    double e1 = std::exp(-dt / sp.tau_s);
    double e2 = e1 * e1;
    double s2 = sp.sigma * sp.sigma;
    DipMoments m;
    m.mean_i = is0 * e1;
    m.mean_v = v0 + sp.input * dt + is0 * sp.tau_s * (1.0 - e1);
    m.var_i = s2 / (2.0 * sp.tau_s) * (1.0 - e2);
    m.cov_vi = 0.5 * s2 * (1.0 - e1) * (1.0 - e1);
    m.var_v = s2 * (dt - 2.0 * sp.tau_s * (1.0 - e1) + 0.5 * sp.tau_s * (1.0 - e2));
    return m;
}

struct MomentState {
    double mv, mi, pv, pc, pi;
};

MomentState deriv(const DipSpec& sp, const MomentState& s) {
    double it = 1.0 / sp.tau, is = 1.0 / sp.tau_s;
    double q = sp.sigma * sp.sigma * is * is;
    return {(-s.mv + sp.input + s.mi) * it,
            -s.mi * is,
            2.0 * (-s.pv + s.pc) * it,
            (s.pi - s.pc) * it - s.pc * is,
            -2.0 * s.pi * is + q};
}

DipMoments lif_moments(const DipSpec& sp, double v0, double is0, double dt) {
    int n = std::clamp(static_cast<int>(dt / (std::min(sp.tau, sp.tau_s) / 32.0)), 32, 4096);
    double h = dt / n;
    MomentState s{v0, is0, 0.0, 0.0, 0.0};
    for (int k = 0; k < n; ++k) {
        MomentState k1 = deriv(sp, s);
        MomentState s2{s.mv + 0.5 * h * k1.mv, s.mi + 0.5 * h * k1.mi, s.pv + 0.5 * h * k1.pv,
                       s.pc + 0.5 * h * k1.pc, s.pi + 0.5 * h * k1.pi};
        MomentState k2 = deriv(sp, s2);
        MomentState s3{s.mv + 0.5 * h * k2.mv, s.mi + 0.5 * h * k2.mi, s.pv + 0.5 * h * k2.pv,
                       s.pc + 0.5 * h * k2.pc, s.pi + 0.5 * h * k2.pi};
        MomentState k3 = deriv(sp, s3);
        MomentState s4{s.mv + h * k3.mv, s.mi + h * k3.mi, s.pv + h * k3.pv,
                       s.pc + h * k3.pc, s.pi + h * k3.pi};
        MomentState k4 = deriv(sp, s4);
        s.mv += h / 6.0 * (k1.mv + 2.0 * k2.mv + 2.0 * k3.mv + k4.mv);
        s.mi += h / 6.0 * (k1.mi + 2.0 * k2.mi + 2.0 * k3.mi + k4.mi);
        s.pv += h / 6.0 * (k1.pv + 2.0 * k2.pv + 2.0 * k3.pv + k4.pv);
        s.pc += h / 6.0 * (k1.pc + 2.0 * k2.pc + 2.0 * k3.pc + k4.pc);
        s.pi += h / 6.0 * (k1.pi + 2.0 * k2.pi + 2.0 * k3.pi + k4.pi);
    }
    return {s.mv, s.mi, s.pv, s.pc, s.pi};
}

}  // namespace

DipMoments dip_moments(const DipSpec& spec, double v0, double is0, double dt) {
    spec.validate();
    if (!(dt > 0.0)) return {v0, is0, 0.0, 0.0, 0.0};
    return spec.leaky ? lif_moments(spec, v0, is0, dt) : pif_moments(spec, v0, is0, dt);
}

FptTable dip_fpt_mc(Rng& rng, const DipSpec& spec, double v0, double is0, double theta,
                    double dt, double horizon, int n_paths) {
    spec.validate();
    if (!(dt > 0.0) || !(horizon > dt)) throw SpecError("dt", "need 0 < dt < horizon");
    if (n_paths < 1) throw SpecError("n_paths", "need >= 1");
    if (!(v0 < theta)) throw SpecError("v0", "must start below the threshold");

    int steps = static_cast<int>(std::ceil(horizon / dt - 1e-9));
    std::vector<long> hits(static_cast<std::size_t>(steps) + 1, 0);
    double decay = std::exp(-dt / spec.tau_s);
    double noise_sd = spec.sigma * std::sqrt((1.0 - decay * decay) / (2.0 * spec.tau_s));
    for (int p = 0; p < n_paths; ++p) {
        double v = v0, cur = is0;
        for (int k = 1; k <= steps; ++k) {
            double nxt = cur * decay + noise_sd * rng.normal();
            if (spec.leaky)
                v += dt * (-v + spec.input + cur) / spec.tau;
            else
                v += dt * (spec.input + 0.5 * (cur + nxt));
            cur = nxt;
            if (v >= theta) {
                ++hits[static_cast<std::size_t>(k)];
                break;
            }
        }
    }

    /* exact empirical cdf at the step edges; density by centered differences */
    FptTable t;
    t.grid.resize(static_cast<std::size_t>(steps) + 1);
    t.cdf.resize(t.grid.size());
    t.density.resize(t.grid.size());
    long acc = 0;
    for (int k = 0; k <= steps; ++k) {
        acc += hits[static_cast<std::size_t>(k)];
        t.grid[static_cast<std::size_t>(k)] = k * dt;
        t.cdf[static_cast<std::size_t>(k)] = static_cast<double>(acc) / n_paths;
    }
    for (int k = 0; k <= steps; ++k) {
        double lo = t.cdf[static_cast<std::size_t>(std::max(0, k - 1))];
        double hi = t.cdf[static_cast<std::size_t>(std::min(steps, k + 1))];
        double span = dt * ((k > 0 ? 1 : 0) + (k < steps ? 1 : 0));
        t.density[static_cast<std::size_t>(k)] = span > 0.0 ? (hi - lo) / span : 0.0;
    }
    t.hit_mass = t.cdf.back();
    return t;
}

FptTable dip_fpt_mc(Rng& rng, double tau_s, double sigma, double input, double v0,
                    double is0, double theta, double dt, double horizon, int n_paths) {
    DipSpec spec;
    spec.leaky = false;
    spec.tau_s = tau_s;
    spec.sigma = sigma;
    spec.input = input;
    return dip_fpt_mc(rng, spec, v0, is0, theta, dt, horizon, n_paths);
}

std::optional<DipHit> dip_hit_sample(Rng& rng, const DipSpec& spec, double v0, double is0,
                                     double theta, double dt, double horizon) {
    if (v0 >= theta) return DipHit{0.0, is0};
    int steps = static_cast<int>(std::ceil(horizon / dt - 1e-9));
    double decay = std::exp(-dt / spec.tau_s);
    double noise_sd = spec.sigma * std::sqrt((1.0 - decay * decay) / (2.0 * spec.tau_s));
    double v = v0, cur = is0;
    for (int k = 1; k <= steps; ++k) {
        double nxt = cur * decay + noise_sd * rng.normal();
        if (spec.leaky)
            v += dt * (-v + spec.input + cur) / spec.tau;
        else
            v += dt * (spec.input + 0.5 * (cur + nxt));
        cur = nxt;
        if (v >= theta) return DipHit{k * dt, cur};
    }
    return std::nullopt;
}

}  // namespace evspike::fpt
