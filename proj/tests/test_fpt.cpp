#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <vector>

#include "evspike/errors.hpp"
#include "evspike/fpt/conditioned.hpp"
#include "evspike/fpt/dip.hpp"
#include "evspike/fpt/gauss_markov.hpp"
#include "evspike/fpt/ig.hpp"
#include "evspike/fpt/table.hpp"
#include "evspike/fpt/volterra.hpp"
#include "evspike/rng.hpp"

using namespace evspike;
using namespace evspike::fpt;

namespace {

double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/* reference hit-probability of drifted BM: Phi((mu t - a)/(s sqrt t)) +
 * exp(2 mu a / s^2) Phi(-(mu t + a)/(s sqrt t)) */
double ig_cdf_ref(double t, double a, double mu, double s) {
    if (t <= 0.0) return 0.0;
    double rt = std::sqrt(t);
    return phi_cdf((mu * t - a) / (s * rt)) +
           std::exp(2.0 * mu * a / (s * s)) * phi_cdf(-(mu * t + a) / (s * rt));
}

/* composite Simpson over [a,b], n even */
template <class F>
double simpson(F f, double a, double b, int n) {
    double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

/* one-sample KS of possibly-defective draws against a sub-CDF callable;
 * hits are the successful draws out of n_total attempts */
template <class F>
double ks_vs_cdf(std::vector<double> hits, std::size_t n_total, F cdf) {
    std::sort(hits.begin(), hits.end());
    double n = static_cast<double>(n_total);
    double d = 0.0;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        double f = cdf(hits[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
    }
    return d;
}

/* linear interpolation of a table's cdf column */
double table_cdf_at(const FptTable& t, double x) {
    if (x <= t.grid.front()) return 0.0;
    if (x >= t.grid.back()) return t.hit_mass;
    auto it = std::upper_bound(t.grid.begin(), t.grid.end(), x);
    std::size_t k = static_cast<std::size_t>(it - t.grid.begin());
    double f = (x - t.grid[k - 1]) / (t.grid[k] - t.grid[k - 1]);
    return t.cdf[k - 1] + f * (t.cdf[k] - t.cdf[k - 1]);
}

double two_sample_ks(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    return d;
}

GaussMarkovSpec brownian(double input, double sigma) {
    GaussMarkovSpec g;
    g.kind = GmKind::Brownian;
    g.sigma = sigma;
    g.input = PiecewiseInput(input);
    return g;
}

GaussMarkovSpec ou(double tau, double input, double sigma, double rest = 0.0) {
    GaussMarkovSpec g;
    g.kind = GmKind::OrnsteinUhlenbeck;
    g.tau = tau;
    g.sigma = sigma;
    g.input = PiecewiseInput(input);
    g.rest_mu = rest;
    return g;
}

}  // namespace

/* ---------------------------------------------------------------- drifted BM */

TEST_CASE("hit density integrates to the quoted total mass") {
    DriftedBmFptParams up{1.0, 1.0, 1.0};
    double m_up = simpson([&](double t) { return t <= 0 ? 0.0 : ig_density(t, up); },
                          0.0, 60.0, 60000);
    CHECK(m_up == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(ig_total_mass(up) == 1.0);

    DriftedBmFptParams down{1.0, -1.0, 1.0};
    double m_down = simpson([&](double t) { return t <= 0 ? 0.0 : ig_density(t, down); },
                            0.0, 60.0, 60000);
    CHECK(m_down == doctest::Approx(std::exp(-2.0)).epsilon(1e-3));
    CHECK(ig_total_mass(down) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("hit cdf equals the integral of the density") {
    for (double mu : {1.0, 0.0, -1.0}) {
        DriftedBmFptParams p{1.0, mu, 0.7};
        for (double t : {0.3, 1.0, 2.5, 5.0}) {
            double num = simpson([&](double s) { return s <= 0 ? 0.0 : ig_density(s, p); },
                                 0.0, t, 20000);
            CHECK(ig_cdf(t, p) == doctest::Approx(num).epsilon(1e-6));
            CHECK(ig_cdf(t, p) == doctest::Approx(ig_cdf_ref(t, p.a, p.mu, p.sigma))
                                      .epsilon(1e-10));
        }
    }
    CHECK(ig_cdf(0.0, {1.0, 1.0, 1.0}) == 0.0);
}

TEST_CASE("parameter validation rejects nonpositive barrier and noise") {
    CHECK_THROWS_AS((DriftedBmFptParams{0.0, 1.0, 1.0}.validate()), SpecError);
    CHECK_THROWS_AS((DriftedBmFptParams{-1.0, 1.0, 1.0}.validate()), SpecError);
    CHECK_THROWS_AS((DriftedBmFptParams{1.0, 1.0, 0.0}.validate()), SpecError);
}

TEST_CASE("sampler matches the closed-form law under positive drift") {
    DriftedBmFptParams p{1.0, 1.0, 1.0};
    Rng rng(2024);
    std::vector<double> hits;
    const int n = 100000;
    hits.reserve(n);
    for (int i = 0; i < n; ++i) {
        auto t = ig_sample(rng, p, 1e9);
        REQUIRE(t.has_value());
        hits.push_back(*t);
    }
    double ks = ks_vs_cdf(hits, n, [&](double t) { return ig_cdf(t, p); });
    CHECK(ks <= 0.01);
    double mean = 0.0;
    for (double t : hits) mean += t;
    mean /= n;
    CHECK(mean == doctest::Approx(1.0).epsilon(0.02));  // E[T] = a/mu
}

TEST_CASE("sampler matches the zero-drift law") {
    DriftedBmFptParams p{1.0, 0.0, 1.0};
    Rng rng(555);
    std::vector<double> hits;
    const int n = 100000;
    int never = 0;
    for (int i = 0; i < n; ++i) {
        auto t = ig_sample(rng, p, 1e6);
        if (t)
            hits.push_back(*t);
        else
            ++never;
    }
    /* heavy 1/t^{3/2} tail: a visible fraction really does sit past 1e6 */
    double tail = 1.0 - ig_cdf(1e6, p);
    CHECK(std::abs(never / double(n) - tail) <= 0.005);
    double ks = ks_vs_cdf(hits, n, [&](double t) { return ig_cdf(t, p); });
    CHECK(ks <= 0.01);
}

TEST_CASE("never-hit frequency under negative drift matches the defect") {
    DriftedBmFptParams p{1.0, -1.0, 1.0};
    Rng rng(99);
    const int n = 1000000;
    int never = 0;
    for (int i = 0; i < n; ++i)
        if (!ig_sample(rng, p, 1e9)) ++never;
    double expect = 1.0 - std::exp(-2.0);
    CHECK(std::abs(never / double(n) - expect) <= 0.005);
}

TEST_CASE("horizon truncation turns late hits into never") {
    DriftedBmFptParams p{1.0, 1.0, 1.0};
    const double horizon = 0.5;
    Rng rng(7);
    const int n = 200000;
    int never = 0;
    double max_seen = 0.0;
    for (int i = 0; i < n; ++i) {
        auto t = ig_sample(rng, p, horizon);
        if (!t)
            ++never;
        else
            max_seen = std::max(max_seen, *t);
    }
    CHECK(max_seen <= horizon);
    CHECK(std::abs(never / double(n) - (1.0 - ig_cdf(horizon, p))) <= 0.01);
}

TEST_CASE("sampler is a pure function of the generator state") {
    DriftedBmFptParams p{0.8, 0.5, 1.3};
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        auto x = ig_sample(a, p, 10.0);
        auto y = ig_sample(b, p, 10.0);
        REQUIRE(x.has_value() == y.has_value());
        if (x) REQUIRE(*x == *y);
    }
}

/* ------------------------------------------------------------------- tables */

TEST_CASE("uniform-density table samples uniformly") {
    const int k = 1000;
    std::vector<double> grid(k + 1), dens(k + 1, 1.0);
    for (int i = 0; i <= k; ++i) grid[i] = i / double(k);
    FptTable t = FptTable::from_density(grid, dens);
    t.validate();
    CHECK(t.hit_mass == doctest::Approx(1.0).epsilon(1e-9));

    Rng rng(31);
    std::vector<double> draws;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        auto x = table_sample(rng, t);
        REQUIRE(x.has_value());
        draws.push_back(*x);
    }
    double ks = ks_vs_cdf(draws, n, [](double x) { return std::clamp(x, 0.0, 1.0); });
    CHECK(ks <= 0.01);
}

TEST_CASE("tabulated hit law agrees with the exact sampler") {
    DriftedBmFptParams p{1.0, 1.0, 1.0};
    const int k = 4096;
    const double horizon = 8.0;
    std::vector<double> grid(k + 1), dens(k + 1);
    for (int i = 0; i <= k; ++i) {
        grid[i] = horizon * i / double(k);
        dens[i] = i == 0 ? 0.0 : ig_density(grid[i], p);
    }
    FptTable t = FptTable::from_density(grid, dens);
    t.validate();

    Rng rng(17);
    std::vector<double> from_table, from_exact;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
        if (auto x = table_sample(rng, t)) from_table.push_back(*x);
    for (int i = 0; i < n; ++i)
        if (auto x = ig_sample(rng, p, horizon)) from_exact.push_back(*x);
    CHECK(two_sample_ks(from_table, from_exact) <= 0.01);

    /* empirical cdf of table draws vs the table's own cdf: inside the
     * Dvoretzky-Kiefer-Wolfowitz band at alpha = 0.01 with slack 1.5 */
    double band = 1.5 * std::sqrt(std::log(2.0 / 0.01) / (2.0 * n));
    double ks = ks_vs_cdf(from_table, n, [&](double x) { return table_cdf_at(t, x); });
    CHECK(ks <= band);
}

TEST_CASE("zero-mass table never produces a hit") {
    std::vector<double> grid{0.0, 0.5, 1.0}, dens{0.0, 0.0, 0.0};
    FptTable t = FptTable::from_density(grid, dens);
    CHECK(t.hit_mass == 0.0);
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) CHECK_FALSE(table_sample(rng, t).has_value());
}

TEST_CASE("defective table reproduces its never-mass in sampling") {
    DriftedBmFptParams p{1.0, -1.0, 1.0};
    const int k = 2000;
    const double horizon = 40.0;
    std::vector<double> grid(k + 1), dens(k + 1);
    for (int i = 0; i <= k; ++i) {
        grid[i] = horizon * i / double(k);
        dens[i] = i == 0 ? 0.0 : ig_density(grid[i], p);
    }
    FptTable t = FptTable::from_density(grid, dens);
    CHECK(t.hit_mass == doctest::Approx(std::exp(-2.0)).epsilon(1e-3));

    Rng rng(11);
    const int n = 100000;
    int never = 0;
    for (int i = 0; i < n; ++i)
        if (!table_sample(rng, t)) ++never;
    CHECK(std::abs(never / double(n) - (1.0 - t.hit_mass)) <= 0.01);
}

TEST_CASE("table csv round trip") {
    std::vector<double> grid{0.0, 0.25, 0.5, 1.0}, dens{0.0, 0.4, 1.3, 0.2};
    FptTable t = FptTable::from_density(grid, dens);
    std::stringstream ss;
    t.write_csv(ss);
    FptTable back = FptTable::read_csv(ss);
    REQUIRE(back.grid.size() == t.grid.size());
    for (std::size_t i = 0; i < t.grid.size(); ++i) {
        CHECK(back.grid[i] == t.grid[i]);
        CHECK(back.density[i] == t.density[i]);
        CHECK(back.cdf[i] == t.cdf[i]);
    }
    CHECK(back.hit_mass == t.hit_mass);
}

TEST_CASE("quantile form of a table preserves its law") {
    DriftedBmFptParams p{1.0, 1.0, 0.5};
    const int k = 4096;
    const double horizon = 4.0;
    std::vector<double> grid(k + 1), dens(k + 1);
    for (int i = 0; i <= k; ++i) {
        grid[i] = horizon * i / double(k);
        dens[i] = i == 0 ? 0.0 : ig_density(grid[i], p);
    }
    FptTable t = FptTable::from_density(grid, dens);
    QuantileLaw law = QuantileLaw::from_table(t);
    CHECK(law.mass == doctest::Approx(t.hit_mass).epsilon(1e-12));

    double sup = 0.0;
    for (double x = 0.1; x < horizon; x += 0.1)
        sup = std::max(sup, std::abs(law.cdf(x) - table_cdf_at(t, x)));
    CHECK(sup <= 2e-3);

    /* draws beyond the budget count as never-hit */
    Rng rng(23);
    const double budget = 1.0;
    const int n = 20000;
    int never = 0;
    for (int i = 0; i < n; ++i) {
        auto x = law.sample(rng, budget);
        if (!x)
            ++never;
        else
            CHECK(*x <= budget);
    }
    CHECK(std::abs(never / double(n) - (1.0 - table_cdf_at(t, budget))) <= 0.02);
}

/* ------------------------------------------------------ integral-equation FPT */

TEST_CASE("constant-drift Brownian density from the integral equation is exact") {
    GaussMarkovSpec g = brownian(1.0, 1.0);
    VolterraSolver solver(g, 1.0, 0.0, 1e-3, 4.0);
    FptTable t = solver.solve(0.0);
    t.validate();
    double sup = 0.0;
    for (std::size_t i = 0; i < t.grid.size(); ++i) {
        double ref = t.grid[i] <= 0 ? 0.0 : ig_density(t.grid[i], {1.0, 1.0, 1.0});
        sup = std::max(sup, std::abs(t.density[i] - ref));
    }
    CHECK(sup <= 1e-3);

    /* same law from a shifted start point and time origin */
    VolterraSolver shifted(g, 1.0, 2.5, 1e-3, 4.0);
    FptTable t2 = shifted.solve(0.3);
    sup = 0.0;
    for (std::size_t i = 0; i < t2.grid.size(); ++i) {
        double ref = t2.grid[i] <= 0 ? 0.0 : ig_density(t2.grid[i], {0.7, 1.0, 1.0});
        sup = std::max(sup, std::abs(t2.density[i] - ref));
    }
    CHECK(sup <= 1e-3);
}

TEST_CASE("mean-reverting hit density is stable under grid refinement") {
    GaussMarkovSpec g = ou(1.0, 1.5, 1.0);
    FptTable coarse = VolterraSolver(g, 1.0, 0.0, 4e-3, 4.0).solve(0.0);
    FptTable fine = VolterraSolver(g, 1.0, 0.0, 2e-3, 4.0).solve(0.0);
    double sup = 0.0;
    for (std::size_t i = 0; i < coarse.grid.size(); ++i)
        sup = std::max(sup, std::abs(table_cdf_at(fine, coarse.grid[i]) - coarse.cdf[i]));
    CHECK(sup <= 2e-3);
    /* equilibrium 1.5 sits above the threshold, so nearly every path hits */
    CHECK(fine.hit_mass >= 0.995);
    CHECK(fine.hit_mass <= 1.0 + 1e-9);
}

TEST_CASE("mean-reverting hit law matches a bridge-corrected path simulation") {
    /* independent oracle: Euler paths of dV = (1.5 - V) dt + dW with a
     * Brownian-bridge crossing check inside every step */
    const double theta = 1.0, dt = 1e-3, horizon = 3.0;
    const int n_paths = 20000;
    std::vector<double> hits;
    Rng rng(40404);
    for (int p = 0; p < n_paths; ++p) {
        double v = 0.0;
        for (int k = 0; k * dt < horizon; ++k) {
            double v2 = v + (1.5 - v) * dt + std::sqrt(dt) * rng.normal();
            if (v2 >= theta) {
                hits.push_back((k + 1) * dt);
                break;
            }
            double pcross = std::exp(-2.0 * (theta - v) * (theta - v2) / dt);
            if (rng.uniform() < pcross) {
                hits.push_back((k + 1) * dt);
                break;
            }
            v = v2;
        }
    }
    FptTable t = VolterraSolver(ou(1.0, 1.5, 1.0), theta, 0.0, 1e-3, horizon).solve(0.0);
    double ks = ks_vs_cdf(hits, n_paths, [&](double x) { return table_cdf_at(t, x); });
    CHECK(ks <= 0.02);
}

TEST_CASE("start at or above the threshold is rejected") {
    GaussMarkovSpec g = brownian(1.0, 1.0);
    VolterraSolver solver(g, 1.0, 0.0, 1e-2, 2.0);
    CHECK_THROWS_AS((void)solver.solve(1.0), SpecError);
    CHECK_THROWS_AS((void)solver.solve(1.5), SpecError);
    CHECK_THROWS_AS(VolterraSolver(g, 1.0, 0.0, -0.1, 2.0), SpecError);
}

TEST_CASE("batch horizon-density equals the per-start solve") {
    GaussMarkovSpec g = ou(0.8, 1.2, 0.6);
    VolterraSolver solver(g, 1.0, 0.0, 5e-3, 2.0);
    std::vector<double> starts{-0.2, 0.0, 0.4, 0.9};
    std::vector<double> batch = solver.density_at_horizon(starts);
    REQUIRE(batch.size() == starts.size());
    for (std::size_t i = 0; i < starts.size(); ++i) {
        FptTable t = solver.solve(starts[i]);
        CHECK(batch[i] == doctest::Approx(t.density.back()).epsilon(1e-10));
    }
}

TEST_CASE("interpolated start-family reproduces the per-start laws") {
    GaussMarkovSpec g = brownian(1.0, 1.0);
    VolterraSolver solver(g, 1.0, 0.0, 2e-3, 6.0);
    FptFamily fam = FptFamily::build(solver, 0.0, 0.8, 64);
    REQUIRE_FALSE(fam.empty());
    CHECK(fam.lo() == 0.0);
    CHECK(fam.hi() == 0.8);

    /* on a tabulated start the family must match the closed form; between
     * tabulated starts quantile interpolation adds a small blend error */
    double on_grid = 0.8 * 29 / 63.0;
    double sup_on = 0.0, sup_mid = 0.0;
    for (double t = 0.25; t <= 5.0; t += 0.25) {
        sup_on = std::max(sup_on, std::abs(fam.cdf(on_grid, t) -
                                           ig_cdf_ref(t, 1.0 - on_grid, 1.0, 1.0)));
        double mid = 0.8 * 29.5 / 63.0;
        sup_mid = std::max(sup_mid, std::abs(fam.cdf(mid, t) -
                                             ig_cdf_ref(t, 1.0 - mid, 1.0, 1.0)));
    }
    CHECK(sup_on <= 2e-3);
    CHECK(sup_mid <= 6e-3);

    Rng rng(5);
    const double budget = 0.5, start = 0.4;
    const int n = 10000;
    int never = 0;
    for (int i = 0; i < n; ++i) {
        auto x = fam.sample(rng, start, budget);
        if (!x)
            ++never;
        else
            CHECK(*x <= budget);
    }
    CHECK(std::abs(never / double(n) - (1.0 - fam.cdf(start, budget))) <= 0.02);
}

/* --------------------------------------------------- conditioned-value density */

TEST_CASE("conditioned value density is normalized with support below threshold") {
    GaussMarkovSpec g = brownian(1.0, 0.2);
    ConditionedValueDensity d = conditioned_value_density(g, 0.0, 0.0, 0.5, 1.0, 1.0);
    d.validate();
    REQUIRE(d.grid.size() == static_cast<std::size_t>(kConditionedGridSize));
    double mass = 0.0;
    for (std::size_t i = 1; i < d.grid.size(); ++i)
        mass += 0.5 * (d.grid[i] - d.grid[i - 1]) * (d.weights[i] + d.weights[i - 1]);
    CHECK(std::abs(mass - 1.0) <= 1e-9);
    CHECK(d.grid.back() <= d.theta);
    CHECK(d.weights.back() == 0.0);  // no mass on the barrier itself

    Rng rng(8);
    for (int i = 0; i < 5000; ++i) CHECK(d.sample(rng) < 1.0);
}

TEST_CASE("conditioning window collapsing to the known value pins the mode") {
    GaussMarkovSpec g = brownian(1.0, 0.2);
    ConditionedValueDensity d = conditioned_value_density(g, 0.0, 0.0, 1e-6, 1.0, 1.0);
    std::size_t arg = 0;
    for (std::size_t i = 0; i < d.weights.size(); ++i)
        if (d.weights[i] > d.weights[arg]) arg = i;
    double cell = d.grid[1] - d.grid[0];
    CHECK(std::abs(d.grid[arg] - 0.0) <= cell);
}

TEST_CASE("conditioned value density matches rejection-filtered path simulation") {
    /* oracle: Brownian paths with drift 1, noise 0.2, stepped at 0.01 with
     * exact bridge crossing checks; keep paths whose first hit of 1 lands
     * within +-0.01 of t = 1 and histogram their value at t = 0.5 */
    const double sigma = 0.2, dt = 0.01, theta = 1.0, delta = 0.01;
    const int n_paths = 500000, record_step = 50;
    GaussMarkovSpec g = brownian(1.0, sigma);
    ConditionedValueDensity d = conditioned_value_density(g, 0.0, 0.0, 0.5, 1.0, theta);

    Rng rng(606060);
    std::vector<double> accepted;
    for (int p = 0; p < n_paths; ++p) {
        double v = 0.0, v_mid = 0.0;
        double hit = -1.0;
        for (int k = 0; k < 150; ++k) {
            double v2 = v + 1.0 * dt + sigma * std::sqrt(dt) * rng.normal();
            bool crossed = v2 >= theta;
            if (!crossed) {
                double pc = std::exp(-2.0 * (theta - v) * (theta - v2) / (sigma * sigma * dt));
                crossed = rng.uniform() < pc;
            }
            if (crossed) {
                hit = (k + 0.5) * dt;  // midpoint of the crossing step
                break;
            }
            v = v2;
            if (k + 1 == record_step) v_mid = v;
        }
        if (hit > 0.5 && std::abs(hit - 1.0) <= delta) accepted.push_back(v_mid);
    }
    REQUIRE(accepted.size() > 10000);

    /* compare on 64 equal-width bins across the density's own grid */
    const int nb = 64;
    double lo = d.grid.front(), hi = theta, bw = (hi - lo) / nb;
    std::vector<double> q(nb, 0.0), pmass(nb, 0.0);
    for (double u : accepted) {
        int b = std::clamp(static_cast<int>((u - lo) / bw), 0, nb - 1);
        q[b] += 1.0 / accepted.size();
    }
    for (std::size_t i = 1; i < d.grid.size(); ++i) {
        double m = 0.5 * (d.grid[i] - d.grid[i - 1]) * (d.weights[i] + d.weights[i - 1]);
        double mid = 0.5 * (d.grid[i] + d.grid[i - 1]);
        int b = std::clamp(static_cast<int>((mid - lo) / bw), 0, nb - 1);
        pmass[b] += m;
    }
    double l1 = 0.0;
    for (int b = 0; b < nb; ++b) l1 += std::abs(q[b] - pmass[b]);
    CHECK(l1 <= 0.1);
}

TEST_CASE("degenerate conditioning windows are rejected") {
    GaussMarkovSpec g = brownian(1.0, 0.2);
    CHECK_THROWS_AS((void)conditioned_value_density(g, 0.0, 0.0, 0.5, 0.5, 1.0),
                    SpecError);
    CHECK_THROWS_AS((void)conditioned_value_density(g, 0.0, 0.0, 0.5, 0.3, 1.0),
                    SpecError);
    CHECK_THROWS_AS((void)conditioned_value_density(g, 0.0, 0.6, 0.5, 1.0, 1.0),
                    SpecError);
    CHECK_THROWS_AS((void)conditioned_value_density(g, 1.2, 0.0, 0.5, 1.0, 1.0),
                    SpecError);
    /* ordered but impossible: a hit a split second after t_star cannot be
     * reached from anywhere on the value grid */
    CHECK_THROWS_AS((void)conditioned_value_density(g, 0.0, 0.0, 0.5, 0.5 + 1e-8, 1.0),
                    DegenerateConditioning);
}

TEST_CASE("vanishing excitatory weight leaves the scheduled hit in place") {
    GaussMarkovSpec g = brownian(1.0, 0.2);
    ConditioningWindow w{0.0, 0.0, 0.5, 1.0};
    Rng rng(909);
    std::vector<double> draws;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        auto t = excitatory_next_fpt(rng, g, w, 1e-9, 1.0, 4.0);
        REQUIRE(t.has_value());
        draws.push_back(*t);
    }
    std::nth_element(draws.begin(), draws.begin() + n / 2, draws.end());
    double median = draws[n / 2];
    /* the remaining wait should stay the originally scheduled 0.5 */
    CHECK(std::abs(median - 0.5) <= 2.0 * (4.0 / 4096.0));
}

TEST_CASE("excitatory jump across the threshold fires immediately") {
    GaussMarkovSpec g = brownian(1.0, 0.2);
    ConditioningWindow w{0.0, 0.0, 0.5, 1.0};
    Rng rng(13);
    for (int i = 0; i < 2000; ++i) {
        auto t = excitatory_next_fpt(rng, g, w, 2.5, 1.0, 4.0);
        REQUIRE(t.has_value());
        CHECK(*t == 0.0);
    }
}

TEST_CASE("excitatory draw requires a positive weight") {
    GaussMarkovSpec g = brownian(1.0, 0.2);
    ConditioningWindow w{0.0, 0.0, 0.5, 1.0};
    Rng rng(1);
    CHECK_THROWS_AS((void)excitatory_next_fpt(rng, g, w, -0.1, 1.0, 4.0), SpecError);
    CHECK_THROWS_AS((void)excitatory_next_fpt(rng, g, w, 0.0, 1.0, 4.0), SpecError);
}

TEST_CASE("one-shot and prebuilt-density excitatory draws coincide") {
    GaussMarkovSpec g = brownian(1.0, 0.2);
    ConditioningWindow w{0.0, 0.0, 0.5, 1.0};
    ConditionedValueDensity d = conditioned_value_density(g, 0.0, 0.0, 0.5, 1.0, 1.0);
    Rng a(777), b(777);
    for (int i = 0; i < 200; ++i) {
        auto x = excitatory_next_fpt(a, g, w, 0.15, 1.0, 4.0);
        auto y = excitatory_next_fpt(b, g, d, 0.5, 0.15, 1.0, 4.0);
        REQUIRE(x.has_value() == y.has_value());
        if (x) CHECK(*x == *y);
    }
}

/* --------------------------------------------------------- filtered-noise FPT */

namespace {

/* test-local Euler moments of the (V, I_s) pair */
struct PairMoments {
    double mv, mi, vv, cvi, vi;
};

PairMoments em_pair_moments(bool leaky, double tau, double tau_s, double sigma,
                            double input, double v0, double is0, double t_end,
                            double dt, int n_paths, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> vs(n_paths), is(n_paths);
    int steps = static_cast<int>(std::lround(t_end / dt));
    for (int p = 0; p < n_paths; ++p) {
        double v = v0, cur = is0;
        for (int k = 0; k < steps; ++k) {
            double dv = leaky ? ((-v + input + cur) / tau) * dt : (input + cur) * dt;
            double di = (-cur / tau_s) * dt + (sigma / tau_s) * std::sqrt(dt) * rng.normal();
            v += dv;
            cur += di;
        }
        vs[p] = v;
        is[p] = cur;
    }
    PairMoments m{};
    for (int p = 0; p < n_paths; ++p) {
        m.mv += vs[p];
        m.mi += is[p];
    }
    m.mv /= n_paths;
    m.mi /= n_paths;
    for (int p = 0; p < n_paths; ++p) {
        m.vv += (vs[p] - m.mv) * (vs[p] - m.mv);
        m.cvi += (vs[p] - m.mv) * (is[p] - m.mi);
        m.vi += (is[p] - m.mi) * (is[p] - m.mi);
    }
    m.vv /= n_paths - 1;
    m.cvi /= n_paths - 1;
    m.vi /= n_paths - 1;
    return m;
}

}  // namespace

TEST_CASE("pair moments match path statistics") {
    DipSpec spec;
    spec.leaky = false;
    spec.tau_s = 0.5;
    spec.sigma = 0.8;
    spec.input = 0.7;
    const double v0 = 0.2, is0 = 0.3, t = 0.6;
    DipMoments m = dip_moments(spec, v0, is0, t);
    PairMoments em = em_pair_moments(false, 1.0, 0.5, 0.8, 0.7, v0, is0, t, 1e-4,
                                     200000, 5150);
    CHECK(m.mean_v == doctest::Approx(em.mv).epsilon(0.01));
    CHECK(std::abs(m.mean_i - em.mi) <= 0.006);
    CHECK(m.var_v == doctest::Approx(em.vv).epsilon(0.03));
    CHECK(m.cov_vi == doctest::Approx(em.cvi).epsilon(0.03));
    CHECK(m.var_i == doctest::Approx(em.vi).epsilon(0.03));

    DipSpec leaky = spec;
    leaky.leaky = true;
    leaky.tau = 0.8;
    DipMoments lm = dip_moments(leaky, v0, is0, t);
    PairMoments lem = em_pair_moments(true, 0.8, 0.5, 0.8, 0.7, v0, is0, t, 1e-4,
                                      200000, 5151);
    CHECK(lm.mean_v == doctest::Approx(lem.mv).epsilon(0.01));
    CHECK(std::abs(lm.mean_i - lem.mi) <= 0.006);
    CHECK(lm.var_v == doctest::Approx(lem.vv).epsilon(0.03));
    CHECK(lm.cov_vi == doctest::Approx(lem.cvi).epsilon(0.03));
    CHECK(lm.var_i == doctest::Approx(lem.vi).epsilon(0.03));
}

TEST_CASE("short-time membrane variance grows cubically") {
    DipSpec spec;
    spec.tau_s = 0.5;
    spec.sigma = 0.8;
    spec.input = 0.0;
    const double t = 0.005;
    DipMoments m = dip_moments(spec, 0.0, 0.0, t);
    double asym = spec.sigma * spec.sigma * t * t * t / (3.0 * spec.tau_s * spec.tau_s);
    CHECK(m.var_v == doctest::Approx(asym).epsilon(0.05));
}

TEST_CASE("huge membrane timescale freezes the leaky membrane") {
    /* the leak drift carries a 1/tau prefactor on the whole drive, so
     * tau -> infinity pins V at v0 while the filter runs free */
    DipSpec pif;
    pif.tau_s = 0.4;
    pif.sigma = 0.9;
    pif.input = 1.1;
    DipSpec lif = pif;
    lif.leaky = true;
    lif.tau = 1e6;
    DipMoments a = dip_moments(pif, 0.1, -0.2, 0.8);
    DipMoments b = dip_moments(lif, 0.1, -0.2, 0.8);
    CHECK(b.mean_v == doctest::Approx(0.1).epsilon(1e-4));
    CHECK(std::abs(b.var_v) <= 1e-5);
    CHECK(std::abs(b.cov_vi) <= 1e-5);
    /* filter marginals do not feel the membrane at all */
    CHECK(b.mean_i == doctest::Approx(a.mean_i).scale(1.0).epsilon(1e-6));
    CHECK(b.var_i == doctest::Approx(a.var_i).epsilon(1e-6));

    /* moment covariances must satisfy the Cauchy-Schwarz bound */
    DipSpec mid = pif;
    mid.leaky = true;
    mid.tau = 0.8;
    DipMoments c = dip_moments(mid, 0.1, -0.2, 0.8);
    CHECK(c.cov_vi * c.cov_vi <= c.var_v * c.var_i * (1.0 + 1e-9));
}

TEST_CASE("unreachable threshold yields an empty hit table") {
    Rng rng(60);
    FptTable t = dip_fpt_mc(rng, 0.5, 1.0, 1.0, 0.0, 0.0, 1e6, 1e-2, 2.0, 2000);
    CHECK(t.hit_mass <= 1e-3);
}

TEST_CASE("fast filter limit recovers the instantaneous-noise hit law") {
    /* tau_s -> 0 with fixed sigma: integrated filter noise converges to a
     * Brownian motion with the same sigma, so the hit law approaches the
     * closed form for drifted BM */
    Rng rng(61);
    FptTable t = dip_fpt_mc(rng, 1e-3, 1.0, 1.0, 0.0, 0.0, 1.0, 1e-4, 4.0, 20000);
    double sup = 0.0;
    for (std::size_t i = 0; i < t.grid.size(); i += 16)
        sup = std::max(sup, std::abs(t.cdf[i] - ig_cdf_ref(t.grid[i], 1.0, 1.0, 1.0)));
    CHECK(sup <= 0.03);
}

TEST_CASE("hit table is stable under step halving") {
    Rng r1(62), r2(63);
    DipSpec spec;
    spec.tau_s = 0.5;
    spec.sigma = 1.0;
    spec.input = 1.0;
    FptTable coarse = dip_fpt_mc(r1, spec, 0.0, 0.0, 1.0, 2e-3, 6.0, 100000);
    FptTable fine = dip_fpt_mc(r2, spec, 0.0, 0.0, 1.0, 1e-3, 6.0, 100000);
    double sup = 0.0;
    for (std::size_t i = 0; i < coarse.grid.size(); i += 4)
        sup = std::max(sup, std::abs(table_cdf_at(fine, coarse.grid[i]) - coarse.cdf[i]));
    CHECK(sup <= 0.01);
}

TEST_CASE("hit table is deterministic in the seed") {
    DipSpec spec;
    spec.tau_s = 0.3;
    spec.sigma = 0.7;
    spec.input = 1.2;
    Rng a(64), b(64);
    FptTable t1 = dip_fpt_mc(a, spec, 0.0, 0.0, 1.0, 5e-3, 3.0, 5000);
    FptTable t2 = dip_fpt_mc(b, spec, 0.0, 0.0, 1.0, 5e-3, 3.0, 5000);
    REQUIRE(t1.grid.size() == t2.grid.size());
    CHECK(t1.hit_mass == t2.hit_mass);
    for (std::size_t i = 0; i < t1.cdf.size(); i += 32) CHECK(t1.cdf[i] == t2.cdf[i]);
}

TEST_CASE("single-draw hits follow the tabulated law and carry the filter") {
    DipSpec spec;
    spec.tau_s = 0.5;
    spec.sigma = 1.0;
    spec.input = 1.0;
    const double dt = 1e-3, horizon = 6.0;

    Rng rng(65);
    std::vector<double> hits;
    double i_sum = 0.0;
    const int n = 20000;
    int got = 0;
    for (int i = 0; i < n; ++i) {
        auto h = dip_hit_sample(rng, spec, 0.0, 0.0, 1.0, dt, horizon);
        if (h) {
            hits.push_back(h->t);
            REQUIRE(std::isfinite(h->i_s));
            i_sum += h->i_s;
            ++got;
        }
    }
    REQUIRE(got > n / 2);
    Rng oracle_rng(66);
    FptTable t = dip_fpt_mc(oracle_rng, spec, 0.0, 0.0, 1.0, dt, horizon, 20000);
    double ks = ks_vs_cdf(hits, n, [&](double x) { return table_cdf_at(t, x); });
    CHECK(ks <= 0.025);
    /* upward crossings are driven by positive filter excursions */
    CHECK(i_sum / got > 0.0);

    Rng a(67), b(67);
    for (int i = 0; i < 200; ++i) {
        auto x = dip_hit_sample(a, spec, 0.0, 0.0, 1.0, dt, horizon);
        auto y = dip_hit_sample(b, spec, 0.0, 0.0, 1.0, dt, horizon);
        REQUIRE(x.has_value() == y.has_value());
        if (x) {
            CHECK(x->t == y->t);
            CHECK(x->i_s == y->i_s);
        }
    }
}

TEST_CASE("joint conditioned density is normalized and samplable") {
    DipSpec spec;
    spec.tau_s = 0.5;
    spec.sigma = 0.5;
    spec.input = 1.0;
    ConditionedJointDensity d =
        conditioned_joint_density(spec, 0.0, 0.0, 0.0, 0.5, 1.2, 1.0);
    d.validate();
    REQUIRE(d.v_grid.size() == static_cast<std::size_t>(kConditionedJointGrid));
    REQUIRE(d.weights.size() == d.v_grid.size() * d.i_grid.size());

    double mass = 0.0;
    for (double w : d.weights) mass += w;  // cell masses
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));

    Rng rng(68);
    for (int i = 0; i < 2000; ++i) {
        auto [v, cur] = d.sample(rng);
        CHECK(v <= d.theta);
        CHECK(std::isfinite(cur));
    }
}
