#include "evspike/mc/euler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "evspike/errors.hpp"
#include "evspike/parallel.hpp"

namespace evspike::mc {
namespace {

const double kInf = std::numeric_limits<double>::infinity();

}  // namespace

void McConfig::validate(double horizon_limit) const {
    if (!(dt > 0.0)) throw SpecError("dt", "must be > 0");
    if (n_paths < 1) throw SpecError("n_paths", "must be >= 1");
    if (horizon < 0.0) throw SpecError("horizon", "must be >= 0");
    if (horizon > 0.0 && horizon > horizon_limit + 1e-12)
        throw SpecError("horizon", "exceeds the spec horizon");
    if (max_threads < 0) throw SpecError("max_threads", "must be >= 0");
}

bool gobet_crossing(Rng& rng, double v_lo, double v_hi, double theta, double sigma,
                    double dt) {
    if (v_lo >= theta || v_hi >= theta) return true;
    double p = std::exp(-2.0 * (theta - v_lo) * (theta - v_hi) / (sigma * sigma * dt));
    return rng.uniform() < p;
}

std::vector<core::SpikeTrain> euler_run(const models::NetworkSpec& spec,
                                        const std::vector<double>& v0,
                                        const McConfig& cfg) {
    spec.validate();
    cfg.validate(spec.horizon);
    std::size_t n = spec.neurons.size();
    if (!v0.empty() && v0.size() != n)
        throw SpecError("v0", "length must match the neuron count");
    double horizon = cfg.horizon > 0.0 ? cfg.horizon : spec.horizon;
    double dt = cfg.dt;
    long n_steps = std::llround(horizon / dt);
    if (n_steps < 1 || std::fabs(n_steps * dt - horizon) > 1e-9 * std::max(1.0, horizon))
        throw SpecError("dt", "horizon must be a whole number of steps");

    /* per-neuron constants hoisted out of the path loop */
    std::vector<double> v_diff(n), hold_steps(n);
    std::vector<bool> leaky(n), expsyn(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& nr = spec.neurons[i];
        leaky[i] = models::model_is_leaky(nr.model);
        expsyn[i] = models::model_has_exp_synapse(nr.model);
        /* V-diffusion: sigma for drifted-BM membranes, sigma/tau for leaky
         * ones; exp-synapse noise enters through the filter instead */
        v_diff[i] = expsyn[i] ? 0.0 : (leaky[i] ? nr.sigma / nr.tau : nr.sigma);
        hold_steps[i] = std::ceil(nr.refractory / dt - 1e-9);
    }

    struct Due {
        long step;
        int syn;
    };

    std::vector<core::SpikeTrain> out(static_cast<std::size_t>(cfg.n_paths));
    parallel_for(
        static_cast<std::size_t>(cfg.n_paths),
        [&](std::size_t path) {
            Rng noise(derive_seed(cfg.seed, path));
            /* bridge decisions come from their own stream so Euler and
             * EulerGobet walk identical noise paths */
            Rng bridge(derive_seed(cfg.seed,
                                   static_cast<std::uint64_t>(cfg.n_paths) + path));
            std::vector<double> V(n), I(n), last_spike(n, -kInf);
            std::vector<long> hold_until(n, -1);
            std::vector<Due> pending;
            core::SpikeTrain& train = out[path];

            for (std::size_t i = 0; i < n; ++i) {
                V[i] = v0.empty() ? spec.neurons[i].v0 : v0[i];
                I[i] = spec.neurons[i].is0;
            }

            for (long k = 1; k <= n_steps; ++k) {
                double t_prev = (k - 1) * dt, t = k * dt;
                for (std::size_t i = 0; i < n; ++i) {
                    const auto& nr = spec.neurons[i];
                    double z = noise.normal();  // drawn every step to keep streams aligned
                    double i_prev = I[i];
                    if (expsyn[i]) {
                        double zi = noise.normal();
                        I[i] += -I[i] / nr.tau_s * dt +
                                nr.sigma / nr.tau_s * std::sqrt(dt) * zi;
                    }
                    if (k <= hold_until[i]) continue;  // clamped at reset
                    double ext = nr.input.value(t_prev);
                    double drive = ext + (expsyn[i] ? i_prev : 0.0);
                    double v_old = V[i];
                    if (leaky[i])
                        V[i] += (nr.rest_mu - V[i] + drive) / nr.tau * dt;
                    else
                        V[i] += drive * dt;
                    V[i] += v_diff[i] * std::sqrt(dt) * z;

                    bool crossed = V[i] >= nr.theta;
                    if (!crossed && cfg.scheme == McScheme::EulerGobet &&
                        v_diff[i] > 0.0)
                        crossed = gobet_crossing(bridge, v_old, V[i], nr.theta,
                                                 v_diff[i], dt);
                    if (crossed) {
                        train.add(t, nr.id);
                        last_spike[i] = t;
                        V[i] = nr.v_reset;
                        hold_until[i] = k + static_cast<long>(hold_steps[i]);
                        for (std::size_t s = 0; s < spec.synapses.size(); ++s) {
                            const auto& sy = spec.synapses[s];
                            if (sy.pre != nr.id) continue;
                            long due = static_cast<long>(
                                std::ceil((t + sy.delay) / dt - 1e-9));
                            pending.push_back({due, static_cast<int>(s)});
                        }
                    }
                }
                /* deliveries land at the first grid point at/after their due
                 * time, after integration, before the next step; kappa alone
                 * decides whether a kick lands (zero inside the refractory) */
                int cascade = 0;
                for (std::size_t p = 0; p < pending.size();) {
                    if (pending[p].step > k) {
                        ++p;
                        continue;
                    }
                    const auto& sy =
                        spec.synapses[static_cast<std::size_t>(pending[p].syn)];
                    std::size_t j =
                        static_cast<std::size_t>(spec.index_of(sy.post));
                    const auto& nr = spec.neurons[j];
                    double kappa = nr.kappa.factor(t - last_spike[j], nr.refractory);
                    double w = sy.weight * kappa;
                    if (w != 0.0) {
                        if (++cascade > 1000 * static_cast<int>(n))
                            throw AvalancheDetected(t);
                        if (expsyn[j]) {
                            I[j] += w;
                        } else {
                            V[j] += w;
                            if (V[j] >= nr.theta) {
                                train.add(t, nr.id);
                                last_spike[j] = t;
                                V[j] = nr.v_reset;
                                hold_until[j] = k + static_cast<long>(hold_steps[j]);
                                for (std::size_t s = 0; s < spec.synapses.size(); ++s) {
                                    const auto& sy2 = spec.synapses[s];
                                    if (sy2.pre != nr.id) continue;
                                    long due = static_cast<long>(
                                        std::ceil((t + sy2.delay) / dt - 1e-9));
                                    pending.push_back({due, static_cast<int>(s)});
                                }
                            }
                        }
                    }
                    pending[p] = pending.back();
                    pending.pop_back();
                }
            }
            std::sort(train.records.begin(), train.records.end(),
                      [](const core::SpikeRecord& a, const core::SpikeRecord& b) {
                          return a.time < b.time ||
                                 (a.time == b.time && a.neuron < b.neuron);
                      });
        },
        static_cast<unsigned>(cfg.max_threads));
    return out;
}

Histogram histogram(const std::vector<core::SpikeTrain>& trains,
                    const std::vector<int>& neuron_ids, double bin_width,
                    double window_lo, double window_hi) {
    if (!(bin_width > 0.0)) throw SpecError("bin_width", "must be > 0");
    if (!(window_hi > window_lo)) throw SpecError("window", "empty window");
    if (trains.empty()) throw SpecError("trains", "empty ensemble");
    int nb = static_cast<int>(std::ceil((window_hi - window_lo) / bin_width - 1e-9));
    Histogram h{bin_width, window_lo, window_hi, neuron_ids, {}};
    h.bins.assign(neuron_ids.size(), std::vector<double>(static_cast<std::size_t>(nb), 0.0));
    for (std::size_t c = 0; c < neuron_ids.size(); ++c) {
        double total = 0.0;
        for (const auto& train : trains)
            for (const auto& r : train.records) {
                if (r.neuron != neuron_ids[c] || r.time < window_lo ||
                    r.time >= window_hi)
                    continue;
                int b = std::min(nb - 1, static_cast<int>((r.time - window_lo) / bin_width));
                h.bins[c][static_cast<std::size_t>(b)] += 1.0;
                total += 1.0;
            }
        if (total > 0.0)
            for (double& x : h.bins[c]) x /= total;
    }
    return h;
}

void Histogram::write_csv(std::ostream& out) const {
    out << "bin_start,bin_end";
    for (int id : neuron_ids) out << ",neuron_" << id;
    out << '\n';
    char buf[40];
    for (int b = 0; b < n_bins(); ++b) {
        std::snprintf(buf, sizeof buf, "%.17g", window_lo + b * bin_width);
        out << buf;
        std::snprintf(buf, sizeof buf, "%.17g",
                      std::min(window_hi, window_lo + (b + 1) * bin_width));
        out << ',' << buf;
        for (std::size_t c = 0; c < bins.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", bins[c][static_cast<std::size_t>(b)]);
            out << ',' << buf;
        }
        out << '\n';
    }
}

}  // namespace evspike::mc
