#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "evspike/core/state.hpp"
#include "evspike/models/network.hpp"
#include "evspike/rng.hpp"

namespace evspike::mc {

enum class McScheme { Euler, EulerGobet };

struct McConfig {
    double dt = 1e-3;
    int n_paths = 1;
    McScheme scheme = McScheme::Euler;
    std::uint64_t seed = 0;
    double horizon = 0.0;  // 0 -> spec horizon
    int max_threads = 0;

    void validate(double horizon_limit) const;
};

/* Brownian-bridge maximum law: given step endpoints below the barrier, the
 * within-step crossing probability is exp(-2(theta-v_lo)(theta-v_hi)/(sigma^2 dt)).
 * Endpoint at or above the barrier always crosses. */
bool gobet_crossing(Rng& rng, double v_lo, double v_hi, double theta, double sigma,
                    double dt);

/* Time-stepped reference: Euler-Maruyama on the full network SDE with
 * threshold detection at grid points (EulerGobet adds the bridge check from a
 * separate decision stream so both schemes share noise paths), reset with
 * refractory hold, and kappa-weighted delayed deliveries. */
std::vector<core::SpikeTrain> euler_run(const models::NetworkSpec& spec,
                                        const std::vector<double>& v0,
                                        const McConfig& cfg);

/* Per-neuron spike-time histograms, probability per bin (normalized by the
 * in-window spike count of that neuron). */
struct Histogram {
    double bin_width;
    double window_lo, window_hi;
    std::vector<int> neuron_ids;
    std::vector<std::vector<double>> bins;  // parallel to neuron_ids

    int n_bins() const { return bins.empty() ? 0 : static_cast<int>(bins[0].size()); }
    void write_csv(std::ostream& out) const;  // bin_start, bin_end, columns
};
Histogram histogram(const std::vector<core::SpikeTrain>& trains,
                    const std::vector<int>& neuron_ids, double bin_width,
                    double window_lo, double window_hi);

}  // namespace evspike::mc
