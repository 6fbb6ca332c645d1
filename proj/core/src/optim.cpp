#include "dermx/optim.hpp"

#include <cmath>

#include "dermx/errors.hpp"

namespace dermx {

AdamW::AdamW(std::vector<nn::Parameter>& params, double lr, double weight_decay, double beta1,
             double beta2, double eps)
    : params_(&params), lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params) {
        m_.emplace_back(p.tensor.numel(), 0.0);
        v_.emplace_back(p.tensor.numel(), 0.0);
    }
}

void AdamW::step(const std::vector<ad::Tensor>& grads) {
    if (grads.size() != params_->size()) throw SchemaError("AdamW: gradient count mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < params_->size(); ++i) {
        auto& p = (*params_)[i].tensor.leaf_data();
        const auto& g = grads[i].data();
        if (g.size() != p.size()) throw SchemaError("AdamW: gradient shape mismatch");
        auto& m = m_[i];
        auto& v = v_[i];
        for (size_t j = 0; j < p.size(); ++j) {
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + wd_ * p[j]);
        }
    }
}

CosineRestarts::CosineRestarts(double base_lr, int t0, int mult, double min_lr)
    : base_lr_(base_lr), min_lr_(min_lr), t0_(t0), mult_(mult) {
    if (t0 < 1 || mult < 1) throw SchemaError("CosineRestarts: bad period parameters");
}

double CosineRestarts::lr_at(int epoch) const {
    long period = t0_;
    long start = 0;
    while (epoch >= start + period) {
        start += period;
        period *= mult_;
    }
    const double t_cur = static_cast<double>(epoch - start);
    return min_lr_ + 0.5 * (base_lr_ - min_lr_) * (1.0 + std::cos(M_PI * t_cur / period));
}

}  // namespace dermx
