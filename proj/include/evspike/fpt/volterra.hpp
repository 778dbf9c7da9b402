#pragma once

#include <optional>
#include <vector>

#include "evspike/fpt/gauss_markov.hpp"
#include "evspike/fpt/table.hpp"
#include "evspike/rng.hpp"

namespace evspike::fpt {

inline constexpr int kVolterraDefaultGridCount = 4096;

/* First-passage density of a Gauss-Markov process to a constant level theta,
 * as the solution of a second-kind Volterra equation:
 *
 *   g(t) = G0(t) - 2 * Integral_{t_start}^{t} g(s) K(t,s) ds
 *   G0(t) = 2*[Psi(t|x0,t_start) - b(t)/2 * f(theta,t|x0,t_start)]
 *   K(t,s) = Psi(t|theta,s) - b(t)/2 * f(theta,t|theta,s)
 *
 * where f is the Gaussian transition density, Psi(t|y,s) = -phi(z) dz/dt with
 * z = (theta - mean)/sqrt(var), and b(t) the drift at the threshold.  The
 * b/2*f subtraction removes the diagonal singularity (the kernel tends to 0
 * as s->t and vanishes identically for constant-input Brownian motion, where
 * G0 is then the closed-form hit density).  Discretized by the trapezoid rule
 * on a uniform grid.
 *
 * The solver precomputes the kernel once per (process, theta, grid); solving
 * for another start point x0 only costs the triangular substitution, which is
 * what conditioned_value_density exploits. */
class VolterraSolver {
public:
    VolterraSolver(const GaussMarkovSpec& process, double theta, double t_start,
                   double grid_step, double horizon);

    /* arbitrary nondecreasing grid offsets from t_start (offsets[0] = 0);
     * graded grids resolve starts close to the threshold */
    VolterraSolver(const GaussMarkovSpec& process, double theta, double t_start,
                   std::vector<double> grid_offsets);

    /* full density table for start value x0 (relative times from t_start) */
    FptTable solve(double x0) const;

    /* density at the final grid point only, for a batch of start values */
    std::vector<double> density_at_horizon(const std::vector<double>& starts) const;

    int grid_count() const { return K_; }
    double grid_step() const { return h_; }
    double theta() const { return theta_; }
    double horizon() const { return grid_.back(); }

private:
    void build_kernel();
    void solve_density(double x0, std::vector<double>& g) const;
    double kernel_at(int k, int j) const;

    GaussMarkovSpec proc_;
    double theta_ = 0.0, t_start_ = 0.0, h_ = 0.0;  // h_ = 0 for nonuniform grids
    int K_ = 0;                   // number of steps; grid has K_+1 points
    bool stationary_ = false;     // kernel depends on t-s only
    std::vector<double> grid_;    // offsets from t_start, grid_[0] = 0
    std::vector<double> trapw_;   // interior trapezoid weights, index j
    std::vector<double> ker1d_;   // uniform+stationary kernel, index = lag
    std::vector<double> ker2d_;   // row-major [k][j] otherwise (small grids)
};

/* One-call interface per the operation contract. */
FptTable volterra_fpt(const GaussMarkovSpec& process, double x0, double theta,
                      double t_start, double grid_step, double horizon);

/* Hitting laws for a whole range of start values, sampled by quantile
 * interpolation between the two bracketing tables.  Built once per neuron so
 * the event loop can draw post-delivery waits in O(log grid) instead of
 * re-solving the integral equation. */
class FptFamily {
public:
    FptFamily() = default;
    FptFamily(std::vector<double> starts, const std::vector<FptTable>& tables,
              int levels = 1024);

    /* tables over [lo, hi] from a shared solver (stationary kernel reused) */
    static FptFamily build(const VolterraSolver& solver, double lo, double hi,
                           int n_starts, int levels = 1024);

    bool empty() const { return starts_.empty(); }
    double lo() const { return starts_.front(); }
    double hi() const { return starts_.back(); }

    double cdf(double start, double t) const;
    std::optional<double> sample(Rng& rng, double start, double budget) const;

private:
    std::vector<double> starts_;
    std::vector<QuantileLaw> laws_;
};

}  // namespace evspike::fpt
