#include "aelstm/grad_check.hpp"

#include <cmath>

#include "aelstm/errors.hpp"

namespace aelstm {

GradCheckReport grad_check(const std::function<double(bool)>& loss_fn,
                           std::vector<ParamGroup*> params,
                           double epsilon,
                           double tolerance) {
    if (epsilon < 1e-6 || epsilon > 1e-4)
        throw ConfigError("grad_check: epsilon must lie in [1e-6, 1e-4]");
    if (tolerance <= 0.0) throw ConfigError("grad_check: tolerance must be positive");

    for (ParamGroup* p : params) p->zero_grad();
    const double base = loss_fn(true);
    if (!std::isfinite(base)) throw NumericError("grad_check: loss is not finite");

    std::vector<Matrix> analytic;
    analytic.reserve(params.size());
    for (ParamGroup* p : params) analytic.push_back(p->grad);

    const double replay1 = loss_fn(false);
    const double replay2 = loss_fn(false);
    if (replay1 != base || replay2 != base)
        throw DeterminismError("grad_check: loss_fn is not deterministic (re-evaluation mismatch)");

    GradCheckReport report;
    for (std::size_t gi = 0; gi < params.size(); ++gi) {
        ParamGroup* p = params[gi];
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double saved = p->value.at_flat(i);
            p->value.at_flat(i) = saved + epsilon;
            const double plus = loss_fn(false);
            p->value.at_flat(i) = saved - epsilon;
            const double minus = loss_fn(false);
            p->value.at_flat(i) = saved;

            const double fd = (plus - minus) / (2.0 * epsilon);
            const double an = analytic[gi].at_flat(i);
            const double denom = std::max({std::abs(an), std::abs(fd), 1e-4});
            const double rel = std::abs(an - fd) / denom;
            ++report.entries_checked;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst = {p->name, i, an, fd, rel};
            }
        }
    }
    return report;
}

}  // namespace aelstm
