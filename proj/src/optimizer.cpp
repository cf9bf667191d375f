#include "aelstm/optimizer.hpp"

#include <cmath>

#include "aelstm/errors.hpp"

namespace aelstm {

void OptimizerState::init(const std::vector<ParamGroup*>& params) {
    if (learning_rate <= 0.0) throw ConfigError("optimizer: learning rate must be positive");
    m.clear();
    v.clear();
    m.reserve(params.size());
    v.reserve(params.size());
    for (const ParamGroup* p : params) {
        m.emplace_back(p->value.rows(), p->value.cols());
        v.emplace_back(p->value.rows(), p->value.cols());
    }
    step_count = 0;
}

void OptimizerState::step(std::vector<ParamGroup*>& params) {
    if (m.size() != params.size())
        throw StateError("optimizer: init() not called for this parameter list");
    for (ParamGroup* p : params)
        if (!p->grad.all_finite())
            throw NumericError("optimizer: NaN or Inf gradient in parameter '" + p->name + "'");

    ++step_count;
    if (algo == OptAlgo::Sgd) {
        for (ParamGroup* p : params) {
            for (std::size_t i = 0; i < p->value.size(); ++i)
                p->value.at_flat(i) -= learning_rate * p->grad.at_flat(i);
            p->zero_grad();
        }
        return;
    }

    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (std::size_t gi = 0; gi < params.size(); ++gi) {
        ParamGroup* p = params[gi];
        Matrix& mi = m[gi];
        Matrix& vi = v[gi];
        require_same_shape(mi, p->value, "optimizer moment");
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double g = p->grad.at_flat(i);
            mi.at_flat(i) = beta1 * mi.at_flat(i) + (1.0 - beta1) * g;
            vi.at_flat(i) = beta2 * vi.at_flat(i) + (1.0 - beta2) * g * g;
            const double mhat = mi.at_flat(i) / bc1;
            const double vhat = vi.at_flat(i) / bc2;
            p->value.at_flat(i) -= learning_rate * mhat / (std::sqrt(vhat) + epsilon);
        }
        p->zero_grad();
    }
}

}  // namespace aelstm
