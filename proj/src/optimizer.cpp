#include "remnet/optimizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace remnet::nn {

Adam::Adam(std::vector<ParamRef> params, AdamConfig cfg) : cfg_(cfg) {
    for (ParamRef& p : params) {
        if (!p.trainable) continue;
        params_.push_back(p);
        first_.emplace_back(p.tensor->numel(), 0.0);
        second_.emplace_back(p.tensor->numel(), 0.0);
    }
}

void Adam::step() {
    for (const ParamRef& p : params_) {
        if (!p.tensor->has_grad()) {
            throw std::runtime_error("adam: missing gradient for " + p.name);
        }
    }
    ++step_count_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& t = *params_[i].tensor;
        const std::vector<double>& g = t.grad();
        std::vector<double>& m = first_[i];
        std::vector<double>& v = second_[i];
        for (std::size_t j = 0; j < g.size(); ++j) {
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            t[j] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.eps);
        }
    }
}

void Adam::zero_grad() {
    for (const ParamRef& p : params_) p.tensor->zero_grad();
}

bool PlateauScheduler::observe(double metric, Adam& optimizer) {
    if (metric < best_ - tolerance_) {
        best_ = metric;
        bad_epochs_ = 0;
        return false;
    }
    ++bad_epochs_;
    if (bad_epochs_ >= patience_) {
        optimizer.set_learning_rate(optimizer.learning_rate() * factor_);
        bad_epochs_ = 0;
        return true;
    }
    return false;
}

}  // namespace remnet::nn
