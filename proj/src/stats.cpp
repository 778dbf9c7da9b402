#include "evspike/cli/stats.hpp"

#include <algorithm>
#include <cmath>

#include "evspike/errors.hpp"

namespace evspike::cli {

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty())
        throw SpecError("samples", "KS statistic needs two nonempty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t ia = 0, ib = 0;
    double d = 0.0;
    while (ia < a.size() && ib < b.size()) {
        double x = std::min(a[ia], b[ib]);
        while (ia < a.size() && a[ia] <= x) ++ia;
        while (ib < b.size() && b[ib] <= x) ++ib;
        d = std::max(d, std::fabs(ia / na - ib / nb));
    }
    return d;
}

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) throw SpecError("samples", "mean of an empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double median_of(std::vector<double> xs) {
    if (xs.empty()) throw SpecError("samples", "median of an empty sample");
    std::size_t mid = xs.size() / 2;
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
    double hi = xs[mid];
    if (xs.size() % 2 == 1) return hi;
    double lo = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

}  // namespace evspike::cli
