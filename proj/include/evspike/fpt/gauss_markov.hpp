#pragma once

#include "evspike/piecewise_input.hpp"

namespace evspike::fpt {

enum class GmKind { Brownian, OrnsteinUhlenbeck };

/* Free membrane process driving every first-passage computation.
 *   Brownian:           dV = input(t) dt + sigma dW
 *   OrnsteinUhlenbeck:  tau dV = (rest_mu - V + input(t)) dt + sigma dW
 * input is piecewise-constant in absolute time. */
struct GaussMarkovSpec {
    GmKind kind = GmKind::Brownian;
    double tau = 1.0;      // OU only
    double sigma = 1.0;
    PiecewiseInput input;
    double rest_mu = 0.0;  // OU only

    void validate() const;

    /* conditional mean of V(t) given V(s) = y, s <= t */
    double mean(double y, double s, double t) const;
    /* d/dt of the conditional mean = drift evaluated at (mean, t) */
    double mean_deriv(double m, double t) const;
    /* conditional variance of V(t) given V(s); depends on t-s only */
    double variance(double dt) const;
    double variance_deriv(double dt) const;
    /* drift field at (x, t) */
    double drift(double x, double t) const;
    /* diffusion coefficient of the SDE in reduced form */
    double diffusion() const { return kind == GmKind::Brownian ? sigma : sigma / tau; }
};

}  // namespace evspike::fpt
