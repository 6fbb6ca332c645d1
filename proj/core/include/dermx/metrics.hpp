#ifndef DERMX_METRICS_HPP
#define DERMX_METRICS_HPP

#include <optional>
#include <string>
#include <vector>

#include "dermx/grid.hpp"

namespace dermx {

// Metrics with a zero denominator are undefined (not 0, not an exception);
// aggregation excludes them and reports how many were excluded.
using MetricValue = std::optional<double>;

struct BinaryMetrics {
    MetricValue f1;
    MetricValue sensitivity;
    MetricValue specificity;
    int support = 0;  // positives in the target
};

// Fuzzy overlap between an attention map A and a reference map M on a shared
// pixel grid, all values in [0,1]:
//   F1          = 2*sum(min(A,M)) / (sum(A) + sum(M))
//   sensitivity = sum(min(A,M)) / sum(M)
//   specificity = sum(min(1-A,1-M)) / sum(1-M)
MetricValue fuzzy_f1(const Grid& a, const Grid& m);
MetricValue fuzzy_sensitivity(const Grid& a, const Grid& m);
MetricValue fuzzy_specificity(const Grid& a, const Grid& m);

// Confusion-matrix metrics for equal-length bit vectors.
BinaryMetrics binary_prf(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& target);

// Cohen's kappa for two equal-length bit vectors; undefined when chance
// agreement p_e equals 1 (degenerate marginals).
MetricValue cohens_kappa(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b);

enum class StdMode { kPopulation, kSample };

struct Aggregate {
    MetricValue mean;
    MetricValue std;   // undefined for a single value under kSample
    int defined = 0;
    int excluded = 0;  // undefined inputs dropped before aggregation
};

Aggregate aggregate(const std::vector<MetricValue>& values, StdMode mode = StdMode::kPopulation);
Aggregate aggregate(const std::vector<double>& values, StdMode mode = StdMode::kPopulation);

}  // namespace dermx

#endif  // DERMX_METRICS_HPP
