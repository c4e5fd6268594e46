#pragma once

#include <cmath>
#include <vector>

#include "moedrive/params.hpp"

namespace moedrive {

/// Adam with coupled L2 weight decay (decay added to the gradient).
/// Moment buffers persist across calls; the stored Param::grad is read,
/// never modified, so gated-to-zero gradients stay exactly 0.0.
class Adam {
public:
    Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
         double weight_decay = 0.0)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), wd_(weight_decay) {}

    void step(ParamSet& ps) {
        if (state_.size() != ps.count()) {
            state_.clear();
            state_.resize(ps.count());
            for (std::size_t i = 0; i < ps.count(); ++i) {
                state_[i].m.assign(ps.at(i).size(), 0.0);
                state_[i].v.assign(ps.at(i).size(), 0.0);
            }
        }
        ++t_;
        double bc1 = 1.0 - std::pow(beta1_, double(t_));
        double bc2 = 1.0 - std::pow(beta2_, double(t_));
        for (std::size_t i = 0; i < ps.count(); ++i) {
            Param& p = ps.at(i);
            auto& st = state_[i];
            for (std::size_t k = 0; k < p.size(); ++k) {
                double g = p.grad[k] + wd_ * p.value[k];
                st.m[k] = beta1_ * st.m[k] + (1.0 - beta1_) * g;
                st.v[k] = beta2_ * st.v[k] + (1.0 - beta2_) * g * g;
                double mhat = st.m[k] / bc1;
                double vhat = st.v[k] / bc2;
                p.value[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

private:
    struct Moments {
        Tensor1 m, v;
    };
    double lr_, beta1_, beta2_, eps_, wd_;
    std::vector<Moments> state_;
    uint64_t t_ = 0;
};

} // namespace moedrive
