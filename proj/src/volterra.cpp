#include "evspike/fpt/volterra.hpp"

#include <algorithm>
#include <cmath>

#include "evspike/errors.hpp"

namespace evspike::fpt {
namespace {

const double kInvSqrt2Pi = 0.39894228040143267794;

struct PsiF {
    double psi;  // -d/dt P(V(t) <= theta | V(s) = y), the crossing flux
    double f;    // Gaussian transition density at the threshold
};

inline PsiF psi_f(const GaussMarkovSpec& p, double theta, double y, double s, double t) {
    double m = p.mean(y, s, t);
    double u = p.variance(t - s);
    double su = std::sqrt(u);
    double z = (theta - m) / su;
    double phi = kInvSqrt2Pi * std::exp(-0.5 * z * z);
    double f = phi / su;
    double psi = phi * (p.mean_deriv(m, t) / su + z * p.variance_deriv(t - s) / (2.0 * u));
    return {psi, f};
}

}  // namespace

VolterraSolver::VolterraSolver(const GaussMarkovSpec& process, double theta,
                               double t_start, double grid_step, double horizon)
    : proc_(process), theta_(theta), t_start_(t_start) {
    proc_.validate();
    if (!(grid_step > 0.0) || !(horizon > grid_step))
        throw SpecError("grid_step", "need 0 < grid_step < horizon");
    K_ = std::max(2, static_cast<int>(std::lround(horizon / grid_step)));
    h_ = horizon / K_;
    grid_.resize(static_cast<std::size_t>(K_) + 1);
    for (int k = 0; k <= K_; ++k) grid_[static_cast<std::size_t>(k)] = k * h_;
    build_kernel();
}

VolterraSolver::VolterraSolver(const GaussMarkovSpec& process, double theta,
                               double t_start, std::vector<double> grid_offsets)
    : proc_(process), theta_(theta), t_start_(t_start), grid_(std::move(grid_offsets)) {
    proc_.validate();
    if (grid_.size() < 3 || grid_.front() != 0.0)
        throw SpecError("grid", "need offsets starting at 0 with at least 3 points");
    for (std::size_t k = 1; k < grid_.size(); ++k)
        if (!(grid_[k] > grid_[k - 1]))
            throw SpecError("grid", "offsets must be strictly increasing");
    K_ = static_cast<int>(grid_.size()) - 1;
    build_kernel();
}

void VolterraSolver::build_kernel() {
    stationary_ = proc_.input.constant_on(t_start_, t_start_ + grid_.back());
    trapw_.assign(grid_.size(), 0.0);
    for (int j = 1; j < K_; ++j)
        trapw_[static_cast<std::size_t>(j)] =
            0.5 * (grid_[static_cast<std::size_t>(j) + 1] - grid_[static_cast<std::size_t>(j) - 1]);

    auto ker = [&](double toff, double soff) {
        double t = t_start_ + toff, s = t_start_ + soff;
        PsiF v = psi_f(proc_, theta_, theta_, s, t);
        return v.psi - 0.5 * proc_.drift(theta_, t) * v.f;
    };
    if (stationary_ && h_ > 0.0) {
        ker1d_.assign(grid_.size(), 0.0);
        for (int l = 1; l <= K_; ++l) ker1d_[static_cast<std::size_t>(l)] = ker(l * h_, 0.0);
    } else if (grid_.size() <= 1300) {
        std::size_t n = grid_.size();
        ker2d_.assign(n * n, 0.0);
        for (int k = 2; k <= K_; ++k)
            for (int j = 1; j < k; ++j)
                ker2d_[static_cast<std::size_t>(k) * n + static_cast<std::size_t>(j)] =
                    ker(grid_[static_cast<std::size_t>(k)], grid_[static_cast<std::size_t>(j)]);
    }
    // else: kernel evaluated on the fly inside the recursion
}

double VolterraSolver::kernel_at(int k, int j) const {
    if (!ker1d_.empty()) return ker1d_[static_cast<std::size_t>(k - j)];
    if (!ker2d_.empty())
        return ker2d_[static_cast<std::size_t>(k) * grid_.size() + static_cast<std::size_t>(j)];
    double t = t_start_ + grid_[static_cast<std::size_t>(k)];
    double s = t_start_ + grid_[static_cast<std::size_t>(j)];
    PsiF v = psi_f(proc_, theta_, theta_, s, t);
    return v.psi - 0.5 * proc_.drift(theta_, t) * v.f;
}

void VolterraSolver::solve_density(double x0, std::vector<double>& g) const {
    if (!(x0 < theta_)) throw SpecError("x0", "start must be below the threshold");
    g.assign(grid_.size(), 0.0);
    for (int k = 1; k <= K_; ++k) {
        double t = t_start_ + grid_[static_cast<std::size_t>(k)];
        PsiF v = psi_f(proc_, theta_, x0, t_start_, t);
        double g0 = 2.0 * (v.psi - 0.5 * proc_.drift(theta_, t) * v.f);
        double sum = 0.0;
        if (!ker1d_.empty()) {
            const double* kr = ker1d_.data();
            const double* gv = g.data();
            for (int j = 1; j < k; ++j) sum += gv[j] * kr[k - j];
            sum *= h_;  // uniform interior weights
        } else {
            for (int j = 1; j < k; ++j)
                sum += trapw_[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(j)] *
                       kernel_at(k, j);
        }
        g[static_cast<std::size_t>(k)] = g0 - 2.0 * sum;
    }
}

FptTable VolterraSolver::solve(double x0) const {
    std::vector<double> g;
    solve_density(x0, g);
    return FptTable::from_density(grid_, std::move(g));
}

std::vector<double> VolterraSolver::density_at_horizon(const std::vector<double>& starts) const {
    std::vector<double> out;
    out.reserve(starts.size());
    std::vector<double> g;
    for (double x0 : starts) {
        solve_density(x0, g);
        out.push_back(std::max(0.0, g.back()));
    }
    return out;
}

FptTable volterra_fpt(const GaussMarkovSpec& process, double x0, double theta,
                      double t_start, double grid_step, double horizon) {
    VolterraSolver solver(process, theta, t_start, grid_step, horizon);
    return solver.solve(x0);
}

FptFamily::FptFamily(std::vector<double> starts, const std::vector<FptTable>& tables,
                     int levels)
    : starts_(std::move(starts)) {
    if (starts_.size() != tables.size() || starts_.size() < 2)
        throw SpecError("starts", "need >= 2 start values matching the tables");
    for (std::size_t i = 1; i < starts_.size(); ++i)
        if (!(starts_[i] > starts_[i - 1]))
            throw SpecError("starts", "must be strictly increasing");
    laws_.reserve(tables.size());
    for (const auto& t : tables) laws_.push_back(QuantileLaw::from_table(t, levels));
}

FptFamily FptFamily::build(const VolterraSolver& solver, double lo, double hi,
                           int n_starts, int levels) {
    if (!(lo < hi) || n_starts < 2) throw SpecError("starts", "need lo < hi and >= 2 starts");
    std::vector<double> starts(static_cast<std::size_t>(n_starts));
    std::vector<FptTable> tables;
    tables.reserve(starts.size());
    for (int i = 0; i < n_starts; ++i) {
        starts[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n_starts - 1);
        tables.push_back(solver.solve(starts[static_cast<std::size_t>(i)]));
    }
    return FptFamily(std::move(starts), tables, levels);
}

double FptFamily::cdf(double start, double t) const {
    double s = std::clamp(start, starts_.front(), starts_.back());
    auto it = std::upper_bound(starts_.begin(), starts_.end(), s);
    std::size_t i = std::min(starts_.size() - 2,
                             static_cast<std::size_t>(std::max<std::ptrdiff_t>(
                                 0, it - starts_.begin() - 1)));
    double f = (s - starts_[i]) / (starts_[i + 1] - starts_[i]);
    return (1.0 - f) * laws_[i].cdf(t) + f * laws_[i + 1].cdf(t);
}

std::optional<double> FptFamily::sample(Rng& rng, double start, double budget) const {
    double s = std::clamp(start, starts_.front(), starts_.back());
    auto it = std::upper_bound(starts_.begin(), starts_.end(), s);
    std::size_t i = std::min(starts_.size() - 2,
                             static_cast<std::size_t>(std::max<std::ptrdiff_t>(
                                 0, it - starts_.begin() - 1)));
    double f = (s - starts_[i]) / (starts_[i + 1] - starts_[i]);
    double mass = (1.0 - f) * laws_[i].mass + f * laws_[i + 1].mass;
    double u = rng.uniform();
    if (u > mass) return std::nullopt;
    double p = u / mass;
    double t = (1.0 - f) * laws_[i].quantile(p) + f * laws_[i + 1].quantile(p);
    if (!(t <= budget)) return std::nullopt;
    return t;
}

}  // namespace evspike::fpt
