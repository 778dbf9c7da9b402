#include "evspike/fpt/table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "evspike/errors.hpp"

namespace evspike::fpt {

FptTable FptTable::from_density(std::vector<double> grid, std::vector<double> density) {
    FptTable t;
    t.grid = std::move(grid);
    t.density = std::move(density);
    for (double& d : t.density)
        if (d < 0.0) d = 0.0;  // trapezoid/solver jitter
    t.cdf.resize(t.grid.size());
    double acc = 0.0;
    t.cdf[0] = 0.0;
    for (std::size_t k = 1; k < t.grid.size(); ++k) {
        acc += 0.5 * (t.grid[k] - t.grid[k - 1]) * (t.density[k] + t.density[k - 1]);
        t.cdf[k] = std::fmin(acc, 1.0);
    }
    t.hit_mass = t.cdf.empty() ? 0.0 : t.cdf.back();
    return t;
}

void FptTable::validate() const {
    if (grid.size() < 2) throw SpecError("grid", "need at least two points");
    if (grid.size() != density.size() || grid.size() != cdf.size())
        throw SpecError("grid", "grid/density/cdf sizes differ");
    if (grid.front() != 0.0) throw SpecError("grid", "must start at 0");
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (!(grid[k] > grid[k - 1])) throw SpecError("grid", "must be strictly increasing");
        if (cdf[k] < cdf[k - 1] - 1e-12) throw SpecError("cdf", "must be nondecreasing");
    }
    for (double d : density)
        if (!(d >= 0.0) || !std::isfinite(d)) throw SpecError("density", "must be finite and >= 0");
    if (!(hit_mass >= 0.0) || hit_mass > 1.0 + 1e-9)
        throw SpecError("hit_mass", "must lie in [0, 1]");
    if (std::fabs(cdf.back() - hit_mass) > 1e-9)
        throw SpecError("hit_mass", "must equal cdf at the horizon");
}

void FptTable::write_csv(std::ostream& os) const {
    os << "t,density,cdf\n";
    char buf[96];
    for (std::size_t k = 0; k < grid.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", grid[k], density[k], cdf[k]);
        os << buf;
    }
}

FptTable FptTable::read_csv(std::istream& is) {
    FptTable t;
    std::string line;
    if (!std::getline(is, line) || line.rfind("t,density,cdf", 0) != 0)
        throw SpecError("csv", "missing t,density,cdf header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        double g, d, c;
        if (std::sscanf(line.c_str(), "%lg,%lg,%lg", &g, &d, &c) != 3)
            throw SpecError("csv", "bad row: " + line);
        t.grid.push_back(g);
        t.density.push_back(d);
        t.cdf.push_back(c);
    }
    t.hit_mass = t.cdf.empty() ? 0.0 : t.cdf.back();
    t.validate();
    return t;
}

std::optional<double> table_sample(Rng& rng, const FptTable& table) {
    double u = rng.uniform();
    if (u > table.hit_mass) return std::nullopt;
    auto it = std::lower_bound(table.cdf.begin(), table.cdf.end(), u);
    std::size_t k = static_cast<std::size_t>(it - table.cdf.begin());
    if (k == 0) return table.grid.front();
    double c0 = table.cdf[k - 1], c1 = table.cdf[k];
    if (c1 <= c0) return table.grid[k];
    double f = (u - c0) / (c1 - c0);
    return table.grid[k - 1] + f * (table.grid[k] - table.grid[k - 1]);
}

QuantileLaw QuantileLaw::from_table(const FptTable& table, int levels) {
    QuantileLaw law;
    law.mass = table.hit_mass;
    if (!(law.mass > 0.0)) return law;  // empty q: never hits
    law.q.resize(static_cast<std::size_t>(levels) + 1);
    std::size_t k = 1;
    for (int i = 0; i <= levels; ++i) {
        double target = law.mass * static_cast<double>(i) / levels;
        while (k + 1 < table.cdf.size() && table.cdf[k] < target) ++k;
        double c0 = table.cdf[k - 1], c1 = table.cdf[k];
        double f = (c1 > c0) ? (target - c0) / (c1 - c0) : 1.0;
        if (f < 0.0) f = 0.0;
        if (f > 1.0) f = 1.0;
        law.q[static_cast<std::size_t>(i)] =
            table.grid[k - 1] + f * (table.grid[k] - table.grid[k - 1]);
    }
    return law;
}

double QuantileLaw::quantile(double p) const {
    if (q.empty()) return std::numeric_limits<double>::infinity();
    double levels = static_cast<double>(q.size() - 1);
    double x = p * levels;
    if (x <= 0.0) return q.front();
    if (x >= levels) return q.back();
    std::size_t i = static_cast<std::size_t>(x);
    double f = x - static_cast<double>(i);
    return q[i] + f * (q[i + 1] - q[i]);
}

double QuantileLaw::cdf(double t) const {
    if (q.empty() || t < q.front()) return 0.0;
    if (t >= q.back()) return mass;
    auto it = std::upper_bound(q.begin(), q.end(), t);
    std::size_t i = static_cast<std::size_t>(it - q.begin());  // q[i-1] <= t < q[i]
    double t0 = q[i - 1], t1 = q[i];
    double f = (t1 > t0) ? (t - t0) / (t1 - t0) : 1.0;
    return mass * (static_cast<double>(i - 1) + f) / static_cast<double>(q.size() - 1);
}

std::optional<double> QuantileLaw::sample(Rng& rng, double budget) const {
    double u = rng.uniform();
    if (u > mass) return std::nullopt;
    double t = quantile(u / mass);
    if (!(t <= budget)) return std::nullopt;
    return t;
}

}  // namespace evspike::fpt
