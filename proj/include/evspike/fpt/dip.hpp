#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "evspike/fpt/table.hpp"
#include "evspike/rng.hpp"

namespace evspike::fpt {

/* Doubly-integrated-process passage: membrane V driven by a filtered current
 * I_s which itself relaxes with timescale tau_s while receiving white noise,
 *   PIF:  dV = (input + I_s) dt
 *   LIF:  tau dV = (-V + input + I_s) dt          (rest folded into input)
 *   both: tau_s dI_s = -I_s dt + sigma dW
 * V alone is not Markov, so passage times come from simulating the pair. */

struct DipSpec {
    bool leaky = false;     // false: PIF form, true: LIF with timescale tau
    double tau = 1.0;       // membrane timescale (leaky only)
    double tau_s = 1.0;     // synaptic filter timescale
    double sigma = 1.0;     // noise amplitude feeding the filter
    double input = 0.0;     // constant external drive
    void validate() const;
};

/* Mean and covariance of (V, I_s) at lag dt from (v0, is0); exact closed
 * form for the PIF case, RK4 moment integration for the leaky case. */
struct DipMoments {
    double mean_v, mean_i;
    double var_v, cov_vi, var_i;
};
DipMoments dip_moments(const DipSpec& spec, double v0, double is0, double dt);

/* Monte-Carlo passage-time table from n_paths Euler paths of the pair; the
 * I_s update is the exact OU step, the V update is trapezoidal in I_s.
 * Returned table lives on the step grid {0, dt, 2dt, ...}. */
FptTable dip_fpt_mc(Rng& rng, double tau_s, double sigma, double input, double v0,
                    double is0, double theta, double dt, double horizon,
                    int n_paths);
FptTable dip_fpt_mc(Rng& rng, const DipSpec& spec, double v0, double is0,
                    double theta, double dt, double horizon, int n_paths);

/* One path, one draw: first hit time and the filter value at that moment.
 * nullopt = no hit within horizon.  This is what the event engine uses so the
 * post-spike chain state keeps the correlated I_s. */
struct DipHit {
    double t;
    double i_s;
};
std::optional<DipHit> dip_hit_sample(Rng& rng, const DipSpec& spec, double v0,
                                     double is0, double theta, double dt,
                                     double horizon);

}  // namespace evspike::fpt
