#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "evspike/rng.hpp"

namespace evspike::fpt {

/* Tabulated (possibly defective) first-passage law on [0, horizon].
 * grid[0] = 0, cdf is the trapezoidal integral of density, cdf.back() =
 * hit_mass <= 1; 1 - hit_mass is the probability of never hitting within
 * the horizon. */
struct FptTable {
    std::vector<double> grid;
    std::vector<double> density;
    std::vector<double> cdf;
    double hit_mass = 0.0;

    /* build cdf/hit_mass from grid+density (clamps tiny negative density) */
    static FptTable from_density(std::vector<double> grid, std::vector<double> density);

    void validate() const;
    void write_csv(std::ostream& os) const;
    static FptTable read_csv(std::istream& is);
};

/* Inverse-CDF draw with linear interpolation; nullopt with probability
 * 1 - hit_mass. */
std::optional<double> table_sample(Rng& rng, const FptTable& table);

/* Sampling-oriented form of a table: conditional-on-hit quantiles on a
 * uniform probability grid, so a draw is O(1) instead of a binary search.
 * Draws beyond `budget` count as never-hit (horizon truncation). */
struct QuantileLaw {
    double mass = 0.0;
    std::vector<double> q;  // quantile at p = i/(q.size()-1), conditional on hit

    static QuantileLaw from_table(const FptTable& table, int levels = 1024);
    double quantile(double p) const;  // p in [0,1], conditional on hit
    double cdf(double t) const;
    std::optional<double> sample(Rng& rng, double budget) const;
};

}  // namespace evspike::fpt
