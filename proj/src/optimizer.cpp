#include "mspl/optimizer.hpp"

#include <cmath>

#include "mspl/errors.hpp"

namespace mspl::ad {

Adam::Adam(std::vector<Parameter*> params, AdamOptions options) : params_(std::move(params)), options_(options) {
    if (!(options_.learning_rate >= 0.0)) throw UsageError("adam: learning rate must be >= 0");
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (auto* p : params_) {
        m_.emplace_back(p->value.shape());
        v_.emplace_back(p->value.shape());
    }
}

void Adam::zero_grad() {
    for (auto* p : params_) p->zero_grad();
}

void Adam::step() {
    for (auto* p : params_) {
        if (p->grad.shape() != p->value.shape())
            throw UsageError("adam: gradient shape " + shape_string(p->grad.shape()) + " does not match parameter " +
                             p->name + " " + shape_string(p->value.shape()));
        if (!p->grad.all_finite()) throw NumericalError("adam: non-finite gradient for parameter " + p->name);
    }

    ++step_;
    const double b1 = options_.beta1, b2 = options_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    const double lr = options_.learning_rate;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto w = params_[i]->value.data();
        auto g = params_[i]->grad.data();
        auto m = m_[i].data();
        auto v = v_[i].data();
        for (std::size_t k = 0; k < w.size(); ++k) {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            const double m_hat = m[k] / c1;
            const double v_hat = v[k] / c2;
            w[k] -= lr * m_hat / (std::sqrt(v_hat) + options_.epsilon);
        }
    }
}

}  // namespace mspl::ad
