#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "evspike/fpt/dip.hpp"
#include "evspike/fpt/gauss_markov.hpp"
#include "evspike/rng.hpp"

namespace evspike::fpt {

inline constexpr int kConditionedGridSize = 512;

/* Density of the membrane value at t_star given the value at t_last and the
 * first hit of theta happening at hit_time; voltage grid strictly below
 * theta, trapezoid-normalized to 1. */
struct ConditionedValueDensity {
    std::vector<double> grid;
    std::vector<double> weights;
    double theta = 0.0;

    void validate() const;
    double sample(Rng& rng) const;  // inverse-CDF over the trapezoid cells
};

/* Inputs identifying the conditioning window. */
struct ConditioningWindow {
    double v_last;
    double t_last;
    double t_star;
    double hit_time;
};

/* weights(u) ~ fpt_density(hit_time | u at t_star) * gaussian_transition(u at
 * t_star | v_last at t_last), on a uniform grid of v_grid_size points spanning
 * [mean - 8*sd, theta).  The FPT factor is the closed form for Brownian kind
 * and a batch Volterra solve for OU. */
ConditionedValueDensity conditioned_value_density(const GaussMarkovSpec& process,
                                                  double v_last, double t_last,
                                                  double t_star, double hit_time,
                                                  double theta,
                                                  int v_grid_size = kConditionedGridSize);

/* Two-step excitatory draw: u from the conditioned density, then a fresh
 * first-passage time of the process restarted at u + w.  u + w >= theta
 * returns 0 (immediate spike); nullopt = no hit within horizon. */
std::optional<double> excitatory_next_fpt(Rng& rng, const GaussMarkovSpec& process,
                                          const ConditioningWindow& cond, double w,
                                          double theta, double horizon);

/* Same draw from a prebuilt density (hot path for repeated sampling). */
std::optional<double> excitatory_next_fpt(Rng& rng, const GaussMarkovSpec& process,
                                          const ConditionedValueDensity& cond,
                                          double t_star, double w, double theta,
                                          double horizon);

inline constexpr int kConditionedJointGrid = 128;

/* Exp-synapse analogue: joint density of (V, I_s) at t_star given the state at
 * t_last and the scheduled hit at hit_time.  The hit-likelihood factor uses a
 * Gaussian tangent-crossing surrogate (approximate; grid is v-major). */
struct ConditionedJointDensity {
    std::vector<double> v_grid;
    std::vector<double> i_grid;
    std::vector<double> weights;  // v_grid.size() * i_grid.size(), row-major
    double theta = 0.0;

    void validate() const;
    std::pair<double, double> sample(Rng& rng) const;  // (v, i_s)
};

ConditionedJointDensity conditioned_joint_density(const DipSpec& process,
                                                  double v_last, double i_last,
                                                  double t_last, double t_star,
                                                  double hit_time, double theta,
                                                  int grid = kConditionedJointGrid);

}  // namespace evspike::fpt
