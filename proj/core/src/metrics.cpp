#include "dermx/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "dermx/errors.hpp"

namespace dermx {

namespace {

void check_shapes(const Grid& a, const Grid& m) {
    if (!a.same_shape(m)) throw SchemaError("fuzzy metric inputs must share the pixel grid");
}

}  // namespace

MetricValue fuzzy_f1(const Grid& a, const Grid& m) {
    check_shapes(a, m);
    double inter = 0.0, sum_a = 0.0, sum_m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        inter += std::min(a[i], m[i]);
        sum_a += a[i];
        sum_m += m[i];
    }
    if (sum_a + sum_m == 0.0) return std::nullopt;
    return 2.0 * inter / (sum_a + sum_m);
}

MetricValue fuzzy_sensitivity(const Grid& a, const Grid& m) {
    check_shapes(a, m);
    double inter = 0.0, sum_m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        inter += std::min(a[i], m[i]);
        sum_m += m[i];
    }
    if (sum_m == 0.0) return std::nullopt;
    return inter / sum_m;
}

MetricValue fuzzy_specificity(const Grid& a, const Grid& m) {
    check_shapes(a, m);
    double inter = 0.0, sum_not_m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        inter += std::min(1.0 - a[i], 1.0 - m[i]);
        sum_not_m += 1.0 - m[i];
    }
    if (sum_not_m == 0.0) return std::nullopt;
    return inter / sum_not_m;
}

BinaryMetrics binary_prf(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& target) {
    if (pred.size() != target.size()) throw SchemaError("binary_prf inputs must have equal length");
    long tp = 0, fp = 0, fn = 0, tn = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] != 0, t = target[i] != 0;
        if (p && t) ++tp;
        else if (p && !t) ++fp;
        else if (!p && t) ++fn;
        else ++tn;
    }
    BinaryMetrics out;
    out.support = static_cast<int>(tp + fn);
    if (2 * tp + fp + fn > 0) out.f1 = 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
    if (tp + fn > 0) out.sensitivity = static_cast<double>(tp) / (tp + fn);
    if (tn + fp > 0) out.specificity = static_cast<double>(tn) / (tn + fp);
    return out;
}

MetricValue cohens_kappa(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b) {
    if (a.size() != b.size()) throw SchemaError("cohens_kappa inputs must have equal length");
    if (a.empty()) throw SchemaError("cohens_kappa requires n >= 1");
    const double n = static_cast<double>(a.size());
    double agree = 0.0, a_pos = 0.0, b_pos = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        agree += (a[i] != 0) == (b[i] != 0);
        a_pos += a[i] != 0;
        b_pos += b[i] != 0;
    }
    const double p_o = agree / n;
    const double p_e = (a_pos / n) * (b_pos / n) + (1.0 - a_pos / n) * (1.0 - b_pos / n);
    if (p_e == 1.0) return std::nullopt;
    return (p_o - p_e) / (1.0 - p_e);
}

Aggregate aggregate(const std::vector<MetricValue>& values, StdMode mode) {
    Aggregate out;
    double sum = 0.0;
    for (const auto& v : values) {
        if (!v.has_value()) {
            ++out.excluded;
            continue;
        }
        sum += *v;
        ++out.defined;
    }
    if (out.defined == 0) return out;
    const double mean = sum / out.defined;
    out.mean = mean;
    double ss = 0.0;
    for (const auto& v : values)
        if (v.has_value()) ss += (*v - mean) * (*v - mean);
    if (mode == StdMode::kPopulation) {
        out.std = std::sqrt(ss / out.defined);
    } else if (out.defined > 1) {
        out.std = std::sqrt(ss / (out.defined - 1));
    }
    return out;
}

Aggregate aggregate(const std::vector<double>& values, StdMode mode) {
    std::vector<MetricValue> wrapped(values.begin(), values.end());
    return aggregate(wrapped, mode);
}

}  // namespace dermx
