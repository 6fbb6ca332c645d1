#ifndef DERMX_BASELINES_HPP
#define DERMX_BASELINES_HPP

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dermx/folds.hpp"
#include "dermx/metrics.hpp"
#include "dermx/types.hpp"

namespace dermx {

// Interpretable diagnosis-from-characteristics baselines over binary
// presence vectors.
class BaselineModel {
public:
    virtual ~BaselineModel() = default;
    virtual void fit(const std::vector<std::vector<uint8_t>>& x, const std::vector<int>& y,
                     int n_classes) = 0;
    virtual int predict(const std::vector<uint8_t>& x) const = 0;
    virtual const std::string& name() const = 0;
};

// names: logistic_regression, decision_tree, knn5, categorical_nb
std::unique_ptr<BaselineModel> make_baseline(const std::string& name);
const std::vector<std::string>& baseline_names();

struct BaselineFoldResult {
    std::vector<MetricValue> per_fold_macro_f1;
    Aggregate macro_f1;
    std::vector<int> folds_with_missing_class;
};

struct BaselineReport {
    std::map<std::string, BaselineFoldResult> models;
};

BaselineReport train_interpretable_baselines(const std::vector<FusedLabels>& fused,
                                             const FoldPlan& folds);

}  // namespace dermx

#endif  // DERMX_BASELINES_HPP
