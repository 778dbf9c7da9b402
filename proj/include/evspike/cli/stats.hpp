#pragma once

#include <vector>

namespace evspike::cli {

/* Two-sample Kolmogorov-Smirnov sup-distance between empirical CDFs.
 * Inputs need not be sorted; both must be nonempty. */
double ks_statistic(std::vector<double> a, std::vector<double> b);

/* Convenience summaries used in reports. */
double mean_of(const std::vector<double>& xs);
double median_of(std::vector<double> xs);

}  // namespace evspike::cli
