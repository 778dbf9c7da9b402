#include "evspike/fpt/conditioned.hpp"

#include <algorithm>
#include <cmath>

#include "evspike/errors.hpp"
#include "evspike/fpt/ig.hpp"
#include "evspike/fpt/volterra.hpp"

namespace evspike::fpt {
namespace {

/* invert a linear density on [0,1] ramping w0 -> w1 at mass fraction f */
double linear_cell_invert(double w0, double w1, double f) {
    double dw = w1 - w0;
    if (std::fabs(dw) < 1e-300) return f;
    double disc = w0 * w0 + dw * f * (w0 + w1);
    return (std::sqrt(std::max(0.0, disc)) - w0) / dw;
}

}  // namespace

void ConditionedValueDensity::validate() const {
    if (grid.size() < 2 || grid.size() != weights.size())
        throw SpecError("grid", "need >= 2 grid points matching weights");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw SpecError("grid", "must be strictly increasing");
    double total = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        total += 0.5 * (grid[i] - grid[i - 1]) * (weights[i] + weights[i - 1]);
    for (double w : weights)
        if (!(w >= 0.0) || !std::isfinite(w)) throw SpecError("weights", "must be finite, >= 0");
    if (!(std::fabs(total - 1.0) < 1e-6)) throw SpecError("weights", "must integrate to 1");
}

double ConditionedValueDensity::sample(Rng& rng) const {
    double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        double dx = grid[i] - grid[i - 1];
        double cell = 0.5 * dx * (weights[i] + weights[i - 1]);
        if (acc + cell >= u && cell > 0.0) {
            double f = (u - acc) / cell;
            return grid[i - 1] + dx * linear_cell_invert(weights[i - 1], weights[i], f);
        }
        acc += cell;
    }
    return grid[grid.size() - 2];  // roundoff fallthrough: stay inside the support
}

ConditionedValueDensity conditioned_value_density(const GaussMarkovSpec& process,
                                                  double v_last, double t_last,
                                                  double t_star, double hit_time,
                                                  double theta, int v_grid_size) {
    process.validate();
    if (!(t_last < t_star) || !(t_star < hit_time))
        throw SpecError("t_star", "need t_last < t_star < hit_time");
    if (!(v_last < theta)) throw SpecError("v_last", "must be below the threshold");
    if (v_grid_size < 8) throw SpecError("v_grid_size", "too few points");

    double m = process.mean(v_last, t_last, t_star);
    double var = process.variance(t_star - t_last);
    double sd = std::sqrt(var);
    double lo = std::min(m, theta) - 8.0 * sd;
    std::size_t n = static_cast<std::size_t>(v_grid_size);

    ConditionedValueDensity d;
    d.theta = theta;
    d.grid.resize(n);
    d.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        d.grid[i] = lo + (theta - lo) * static_cast<double>(i) / static_cast<double>(n - 1);

    /* hit-at-hit_time likelihood for each candidate value */
    double lag = hit_time - t_star;
    std::vector<double> hit_lik(n, 0.0);
    bool bm_const = process.kind == GmKind::Brownian && process.input.constant_on(t_star, hit_time);
    if (bm_const) {
        double mu = process.input.value(t_star);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            double a = theta - d.grid[i];
            if (a > 0.0) hit_lik[i] = ig_density(lag, {a, mu, process.sigma});
        }
    } else {
        int k = static_cast<int>(std::clamp(lag / 0.004, 128.0, 512.0));
        VolterraSolver solver(process, theta, t_star, lag / k, lag);
        std::vector<double> starts(d.grid.begin(), d.grid.end() - 1);
        std::vector<double> dens = solver.density_at_horizon(starts);
        std::copy(dens.begin(), dens.end(), hit_lik.begin());
    }

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double z = (d.grid[i] - m) / sd;
        d.weights[i] = std::exp(-0.5 * z * z) * hit_lik[i];
    }
    for (std::size_t i = 1; i < n; ++i)
        total += 0.5 * (d.grid[i] - d.grid[i - 1]) * (d.weights[i] + d.weights[i - 1]);
    if (!(total > 1e-300) || !std::isfinite(total))
        throw DegenerateConditioning("conditioned value density has no mass");
    for (double& w : d.weights) w /= total;
    return d;
}

std::optional<double> excitatory_next_fpt(Rng& rng, const GaussMarkovSpec& process,
                                          const ConditionedValueDensity& cond,
                                          double t_star, double w, double theta,
                                          double horizon) {
    double u = cond.sample(rng);
    double v_new = u + w;
    if (v_new >= theta) return 0.0;  // jump across the threshold: fire now
    double budget = horizon - t_star;
    if (!(budget > 0.0)) return std::nullopt;
    if (process.kind == GmKind::Brownian && process.input.constant_on(t_star, horizon)) {
        double mu = process.input.value(t_star);
        return ig_sample(rng, {theta - v_new, mu, process.sigma}, budget);
    }
    int k = static_cast<int>(std::clamp(budget / 0.002, 256.0, 1024.0));
    VolterraSolver solver(process, theta, t_star, budget / k, budget);
    FptTable table = solver.solve(v_new);
    return table_sample(rng, table);
}

std::optional<double> excitatory_next_fpt(Rng& rng, const GaussMarkovSpec& process,
                                          const ConditioningWindow& cond, double w,
                                          double theta, double horizon) {
    if (!(w > 0.0)) throw SpecError("w", "excitatory branch needs w > 0");
    ConditionedValueDensity d = conditioned_value_density(
        process, cond.v_last, cond.t_last, cond.t_star, cond.hit_time, theta);
    return excitatory_next_fpt(rng, process, d, cond.t_star, w, theta, horizon);
}

void ConditionedJointDensity::validate() const {
    if (v_grid.size() < 2 || i_grid.size() < 2 ||
        weights.size() != v_grid.size() * i_grid.size())
        throw SpecError("grid", "bad joint grid shape");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw SpecError("weights", "must be finite, >= 0");
        total += w;
    }
    if (!(std::fabs(total - 1.0) < 1e-6)) throw SpecError("weights", "must sum to 1");
}

std::pair<double, double> ConditionedJointDensity::sample(Rng& rng) const {
    double u = rng.uniform();
    double acc = 0.0;
    std::size_t ni = i_grid.size();
    for (std::size_t c = 0; c < weights.size(); ++c) {
        acc += weights[c];
        if (acc >= u) {
            std::size_t iv = c / ni, ii = c % ni;
            double dv = iv + 1 < v_grid.size() ? v_grid[iv + 1] - v_grid[iv]
                                               : v_grid[iv] - v_grid[iv - 1];
            double di = ii + 1 < ni ? i_grid[ii + 1] - i_grid[ii] : i_grid[ii] - i_grid[ii - 1];
            double v = std::min(v_grid[iv] + (rng.uniform() - 0.5) * dv, theta);
            return {v, i_grid[ii] + (rng.uniform() - 0.5) * di};
        }
    }
    return {v_grid[v_grid.size() - 2], i_grid[ni / 2]};
}

ConditionedJointDensity conditioned_joint_density(const DipSpec& process, double v_last,
                                                  double i_last, double t_last,
                                                  double t_star, double hit_time,
                                                  double theta, int grid) {
    process.validate();
    if (!(t_last < t_star) || !(t_star < hit_time))
        throw SpecError("t_star", "need t_last < t_star < hit_time");
    if (grid < 8) throw SpecError("grid", "too few points");

    DipMoments m1 = dip_moments(process, v_last, i_last, t_star - t_last);
    double sdv = std::sqrt(std::max(m1.var_v, 1e-300));
    double sdi = std::sqrt(std::max(m1.var_i, 1e-300));

    ConditionedJointDensity d;
    d.theta = theta;
    std::size_t n = static_cast<std::size_t>(grid);
    d.v_grid.resize(n);
    d.i_grid.resize(n);
    double v_lo = std::min(m1.mean_v, theta) - 6.0 * sdv;
    double i_lo = m1.mean_i - 6.0 * sdi, i_hi = m1.mean_i + 6.0 * sdi;
    for (std::size_t i = 0; i < n; ++i) {
        d.v_grid[i] = v_lo + (theta - v_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        d.i_grid[i] = i_lo + (i_hi - i_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }

    /* bivariate normal weight x tangent-crossing hit surrogate */
    double det = m1.var_v * m1.var_i - m1.cov_vi * m1.cov_vi;
    det = std::max(det, 1e-300);
    double lag2 = hit_time - t_star;
    d.weights.assign(n * n, 0.0);
    double total = 0.0;
    for (std::size_t iv = 0; iv < n; ++iv) {
        for (std::size_t ii = 0; ii < n; ++ii) {
            double dv = d.v_grid[iv] - m1.mean_v;
            double di = d.i_grid[ii] - m1.mean_i;
            double quad = (dv * dv * m1.var_i - 2.0 * dv * di * m1.cov_vi + di * di * m1.var_v) / det;
            double gauss = std::exp(-0.5 * quad);
            DipMoments m2 = dip_moments(process, d.v_grid[iv], d.i_grid[ii], lag2);
            double uvar = std::max(m2.var_v, 1e-300);
            double su = std::sqrt(uvar);
            double z = (theta - m2.mean_v) / su;
            double mean_i_lag = d.i_grid[ii] * std::exp(-lag2 / process.tau_s);
            double mp = process.leaky
                            ? (-m2.mean_v + process.input + mean_i_lag) / process.tau
                            : process.input + mean_i_lag;
            double up = process.leaky
                            ? 2.0 * (-m2.var_v + m2.cov_vi) / process.tau
                            : 2.0 * m2.cov_vi;
            double flux = std::exp(-0.5 * z * z) * (mp / su + z * up / (2.0 * uvar));
            double val = gauss * std::max(flux, 0.0);
            if (iv + 1 == n) val = 0.0;  // V(t_star) = theta is incompatible with a later first hit
            d.weights[iv * n + ii] = val;
            total += val;
        }
    }
    if (!(total > 1e-300) || !std::isfinite(total))
        throw DegenerateConditioning("conditioned joint density has no mass");
    for (double& w : d.weights) w /= total;
    return d;
}

}  // namespace evspike::fpt
