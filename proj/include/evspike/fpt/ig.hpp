#pragma once

#include <optional>

#include "evspike/rng.hpp"

namespace evspike::fpt {

/* First-passage problem of a drifted Brownian motion to a constant barrier,
 * barrier measured as a positive distance above the start point; signs are
 * folded into the drift. */
struct DriftedBmFptParams {
    double a;      // barrier distance > 0
    double mu;     // drift (any sign)
    double sigma;  // noise > 0

    void validate() const;
};

/* Hit-time density a/(sigma*sqrt(2*pi*t^3)) * exp(-(a-mu*t)^2/(2*t*sigma^2)).
 * Defective when mu <= 0: integrates to exp(2*mu*a/sigma^2) < 1. */
double ig_density(double t, const DriftedBmFptParams& p);

/* Probability of hitting by time t (sub-CDF when defective). */
double ig_cdf(double t, const DriftedBmFptParams& p);

/* Total hit probability: 1 for mu >= 0, exp(2*mu*a/sigma^2) otherwise. */
double ig_total_mass(const DriftedBmFptParams& p);

/* Exact draw from the (possibly defective) hit-time law; nullopt = no hit
 * within horizon.  Transformation-method sampler for the mu != 0 case,
 * 1/Z^2 scaling for mu = 0. */
std::optional<double> ig_sample(Rng& rng, const DriftedBmFptParams& p, double horizon);

}  // namespace evspike::fpt
