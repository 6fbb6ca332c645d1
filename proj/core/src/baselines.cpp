#include "dermx/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dermx/errors.hpp"

namespace dermx {

namespace {

class LogisticRegression final : public BaselineModel {
public:
    void fit(const std::vector<std::vector<uint8_t>>& x, const std::vector<int>& y,
             int n_classes) override {
        const size_t n = x.size(), d = x.empty() ? 0 : x[0].size();
        classes_ = n_classes;
        dim_ = d;
        w_.assign(static_cast<size_t>(n_classes) * (d + 1), 0.0);
        // full-batch gradient descent on the softmax objective with small L2
        const double lr = 0.5, l2 = 1e-4;
        std::vector<double> probs(static_cast<size_t>(n_classes));
        std::vector<double> grad(w_.size());
        for (int iter = 0; iter < 400; ++iter) {
            std::fill(grad.begin(), grad.end(), 0.0);
            for (size_t i = 0; i < n; ++i) {
                scores(x[i], probs);
                softmax_inplace(probs);
                for (int c = 0; c < n_classes; ++c) {
                    const double delta = probs[c] - (y[i] == c ? 1.0 : 0.0);
                    double* gw = &grad[static_cast<size_t>(c) * (d + 1)];
                    for (size_t j = 0; j < d; ++j) gw[j] += delta * x[i][j];
                    gw[d] += delta;
                }
            }
            for (size_t j = 0; j < w_.size(); ++j)
                w_[j] -= lr * (grad[j] / static_cast<double>(n) + l2 * w_[j]);
        }
    }

    int predict(const std::vector<uint8_t>& x) const override {
        std::vector<double> s(static_cast<size_t>(classes_));
        scores(x, s);
        return static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
    }

    const std::string& name() const override {
        static const std::string kName = "logistic_regression";
        return kName;
    }

private:
    void scores(const std::vector<uint8_t>& x, std::vector<double>& out) const {
        for (int c = 0; c < classes_; ++c) {
            const double* wc = &w_[static_cast<size_t>(c) * (dim_ + 1)];
            double s = wc[dim_];
            for (size_t j = 0; j < dim_; ++j) s += wc[j] * x[j];
            out[static_cast<size_t>(c)] = s;
        }
    }
    static void softmax_inplace(std::vector<double>& s) {
        const double mx = *std::max_element(s.begin(), s.end());
        double sum = 0;
        for (auto& v : s) sum += (v = std::exp(v - mx));
        for (auto& v : s) v /= sum;
    }

    int classes_ = 0;
    size_t dim_ = 0;
    std::vector<double> w_;  // per class: d weights + bias
};

class DecisionTree final : public BaselineModel {
public:
    void fit(const std::vector<std::vector<uint8_t>>& x, const std::vector<int>& y,
             int n_classes) override {
        classes_ = n_classes;
        nodes_.clear();
        std::vector<size_t> idx(x.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        build(x, y, idx);
    }

    int predict(const std::vector<uint8_t>& x) const override {
        int node = 0;
        while (nodes_[static_cast<size_t>(node)].feature >= 0) {
            const Node& nd = nodes_[static_cast<size_t>(node)];
            node = x[static_cast<size_t>(nd.feature)] ? nd.right : nd.left;
        }
        return nodes_[static_cast<size_t>(node)].label;
    }

    const std::string& name() const override {
        static const std::string kName = "decision_tree";
        return kName;
    }

private:
    struct Node {
        int feature = -1;  // -1: leaf
        int left = -1, right = -1;
        int label = 0;
    };

    double gini(const std::vector<int>& y, const std::vector<size_t>& idx) const {
        std::vector<double> counts(static_cast<size_t>(classes_), 0.0);
        for (size_t i : idx) counts[static_cast<size_t>(y[i])] += 1.0;
        double g = 1.0;
        for (double c : counts) {
            const double p = c / idx.size();
            g -= p * p;
        }
        return g;
    }

    int majority(const std::vector<int>& y, const std::vector<size_t>& idx) const {
        std::vector<int> counts(static_cast<size_t>(classes_), 0);
        for (size_t i : idx) ++counts[static_cast<size_t>(y[i])];
        return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    }

    int build(const std::vector<std::vector<uint8_t>>& x, const std::vector<int>& y,
              const std::vector<size_t>& idx) {
        const int me = static_cast<int>(nodes_.size());
        nodes_.push_back({});
        nodes_[me].label = majority(y, idx);

        const double impurity = gini(y, idx);
        if (impurity == 0.0 || idx.size() < 2) return me;

        const size_t d = x[0].size();
        double best_gain = 1e-12;
        int best_feature = -1;
        std::vector<size_t> best_left, best_right;
        for (size_t f = 0; f < d; ++f) {
            std::vector<size_t> left, right;
            for (size_t i : idx) (x[i][f] ? right : left).push_back(i);
            if (left.empty() || right.empty()) continue;
            const double split = (left.size() * gini(y, left) + right.size() * gini(y, right)) /
                                 idx.size();
            const double gain = impurity - split;
            if (gain > best_gain) {
                best_gain = gain;
                best_feature = static_cast<int>(f);
                best_left = std::move(left);
                best_right = std::move(right);
            }
        }
        if (best_feature < 0) return me;
        nodes_[me].feature = best_feature;
        const int l = build(x, y, best_left);
        const int r = build(x, y, best_right);
        nodes_[me].left = l;
        nodes_[me].right = r;
        return me;
    }

    int classes_ = 0;
    std::vector<Node> nodes_;
};

class Knn final : public BaselineModel {
public:
    explicit Knn(int k) : k_(k) {}

    void fit(const std::vector<std::vector<uint8_t>>& x, const std::vector<int>& y,
             int n_classes) override {
        if (static_cast<int>(x.size()) < k_)
            throw SchemaError("knn: k=" + std::to_string(k_) + " exceeds training size " +
                              std::to_string(x.size()));
        x_ = x;
        y_ = y;
        classes_ = n_classes;
    }

    int predict(const std::vector<uint8_t>& q) const override {
        // (distance, class) sorted ascending; ties by insertion order
        std::vector<std::pair<int, int>> dist;
        dist.reserve(x_.size());
        for (size_t i = 0; i < x_.size(); ++i) {
            int d = 0;
            for (size_t j = 0; j < q.size(); ++j) d += x_[i][j] != q[j];
            dist.emplace_back(d, y_[i]);
        }
        std::stable_sort(dist.begin(), dist.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<int> votes(static_cast<size_t>(classes_), 0);
        for (int i = 0; i < k_; ++i) ++votes[static_cast<size_t>(dist[static_cast<size_t>(i)].second)];
        return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    }

    const std::string& name() const override {
        static const std::string kName = "knn5";
        return kName;
    }

private:
    int k_;
    int classes_ = 0;
    std::vector<std::vector<uint8_t>> x_;
    std::vector<int> y_;
};

class CategoricalNaiveBayes final : public BaselineModel {
public:
    void fit(const std::vector<std::vector<uint8_t>>& x, const std::vector<int>& y,
             int n_classes) override {
        classes_ = n_classes;
        const size_t d = x.empty() ? 0 : x[0].size();
        const double alpha = 1.0;  // Laplace smoothing
        log_prior_.assign(static_cast<size_t>(n_classes), 0.0);
        log_on_.assign(static_cast<size_t>(n_classes) * d, 0.0);
        log_off_.assign(static_cast<size_t>(n_classes) * d, 0.0);
        std::vector<double> class_count(static_cast<size_t>(n_classes), 0.0);
        std::vector<double> on_count(static_cast<size_t>(n_classes) * d, 0.0);
        for (size_t i = 0; i < x.size(); ++i) {
            class_count[static_cast<size_t>(y[i])] += 1.0;
            for (size_t j = 0; j < d; ++j)
                if (x[i][j]) on_count[static_cast<size_t>(y[i]) * d + j] += 1.0;
        }
        for (int c = 0; c < n_classes; ++c) {
            log_prior_[c] = std::log((class_count[c] + alpha) / (x.size() + alpha * n_classes));
            for (size_t j = 0; j < d; ++j) {
                const double p_on =
                    (on_count[static_cast<size_t>(c) * d + j] + alpha) / (class_count[c] + 2 * alpha);
                log_on_[static_cast<size_t>(c) * d + j] = std::log(p_on);
                log_off_[static_cast<size_t>(c) * d + j] = std::log(1.0 - p_on);
            }
        }
        dim_ = d;
    }

    int predict(const std::vector<uint8_t>& x) const override {
        int best = 0;
        double best_score = -1e300;
        for (int c = 0; c < classes_; ++c) {
            double s = log_prior_[static_cast<size_t>(c)];
            for (size_t j = 0; j < dim_; ++j)
                s += x[j] ? log_on_[static_cast<size_t>(c) * dim_ + j]
                          : log_off_[static_cast<size_t>(c) * dim_ + j];
            if (s > best_score) {
                best_score = s;
                best = c;
            }
        }
        return best;
    }

    const std::string& name() const override {
        static const std::string kName = "categorical_nb";
        return kName;
    }

private:
    int classes_ = 0;
    size_t dim_ = 0;
    std::vector<double> log_prior_, log_on_, log_off_;
};

}  // namespace

std::unique_ptr<BaselineModel> make_baseline(const std::string& name) {
    if (name == "logistic_regression") return std::make_unique<LogisticRegression>();
    if (name == "decision_tree") return std::make_unique<DecisionTree>();
    if (name == "knn5") return std::make_unique<Knn>(5);
    if (name == "categorical_nb") return std::make_unique<CategoricalNaiveBayes>();
    throw SchemaError("unknown baseline '" + name + "'");
}

const std::vector<std::string>& baseline_names() {
    static const std::vector<std::string> kNames = {"logistic_regression", "decision_tree", "knn5",
                                                    "categorical_nb"};
    return kNames;
}

BaselineReport train_interpretable_baselines(const std::vector<FusedLabels>& fused,
                                             const FoldPlan& folds) {
    if (fused.empty()) throw SchemaError("no fused labels for baselines");
    BaselineReport report;
    for (const auto& name : baseline_names()) report.models[name] = {};

    for (int fold = 0; fold < folds.k; ++fold) {
        std::vector<std::vector<uint8_t>> x_train, x_test;
        std::vector<int> y_train, y_test;
        for (const auto& labels : fused) {
            const bool test = folds.fold_of(labels.image_id) == fold;
            (test ? x_test : x_train).push_back(labels.presence);
            (test ? y_test : y_train).push_back(static_cast<int>(labels.gold_diagnosis));
        }
        if (x_test.empty() || x_train.empty()) continue;

        std::set<int> train_classes(y_train.begin(), y_train.end());
        const bool missing_class = static_cast<int>(train_classes.size()) < kNumDiseases;

        for (const auto& name : baseline_names()) {
            auto model = make_baseline(name);
            model->fit(x_train, y_train, kNumDiseases);
            std::vector<int> pred;
            pred.reserve(x_test.size());
            for (const auto& x : x_test) pred.push_back(model->predict(x));

            std::vector<MetricValue> per_class;
            for (int d = 0; d < kNumDiseases; ++d) {
                std::vector<uint8_t> p, t;
                bool any = false;
                for (size_t i = 0; i < pred.size(); ++i) {
                    p.push_back(pred[i] == d);
                    t.push_back(y_test[i] == d);
                    any = any || y_test[i] == d;
                }
                if (!any) continue;  // class absent from this fold's test set
                per_class.push_back(binary_prf(p, t).f1);
            }
            auto& result = report.models[name];
            result.per_fold_macro_f1.push_back(aggregate(per_class).mean);
            if (missing_class) result.folds_with_missing_class.push_back(fold);
        }
    }
    for (auto& [name, result] : report.models)
        result.macro_f1 = aggregate(result.per_fold_macro_f1);
    return report;
}

}  // namespace dermx
