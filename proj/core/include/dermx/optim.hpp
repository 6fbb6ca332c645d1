#ifndef DERMX_OPTIM_HPP
#define DERMX_OPTIM_HPP

#include <vector>

#include "dermx/nn.hpp"

namespace dermx {

// Decoupled weight decay: p -= lr * (mhat/(sqrt(vhat)+eps) + wd*p).
class AdamW {
public:
    AdamW(std::vector<nn::Parameter>& params, double lr, double weight_decay = 0.01,
          double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step(const std::vector<ad::Tensor>& grads);
    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

private:
    std::vector<nn::Parameter>* params_;
    double lr_, wd_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

// Cosine annealing with warm restarts, per-epoch granularity. Periods are
// t0, t0*mult, t0*mult^2, ...
class CosineRestarts {
public:
    CosineRestarts(double base_lr, int t0 = 10, int mult = 2, double min_lr = 1e-6);
    double lr_at(int epoch) const;

private:
    double base_lr_, min_lr_;
    int t0_, mult_;
};

}  // namespace dermx

#endif  // DERMX_OPTIM_HPP
