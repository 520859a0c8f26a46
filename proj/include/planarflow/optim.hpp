#pragma once

#include <cmath>
#include <vector>

#include "planarflow/error.hpp"

namespace planarflow {

// Adam with bias correction; `maximize` flips to gradient ascent.
class Adam {
public:
    explicit Adam(double lr, bool maximize = false, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), maximize_(maximize) {}

    void step(std::vector<double>& params, const std::vector<double>& grad) {
        if (params.size() != grad.size())
            raise(ErrorKind::shape_mismatch, "Adam: parameter/gradient size mismatch");
        if (m_.empty()) {
            m_.assign(params.size(), 0.0);
            v_.assign(params.size(), 0.0);
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        const double sign = maximize_ ? 1.0 : -1.0;
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
            params[i] += sign * lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
        }
    }

    double learning_rate() const { return lr_; }

private:
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    bool maximize_;
    long t_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

} // namespace planarflow
