#pragma once

#include <functional>
#include <string>
#include <vector>

#include "aelstm/tape.hpp"

namespace aelstm {

struct GradCheckEntry {
    std::string param;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    GradCheckEntry worst;
    std::size_t entries_checked = 0;

    bool passes(double tolerance) const { return max_rel_error < tolerance; }
};

// Central finite-difference oracle. `loss_fn(with_grad)` must evaluate the
// loss at the current parameter values; when with_grad is true it must also
// accumulate analytic gradients into each ParamGroup::grad. The loss is
// re-evaluated to detect nondeterminism before any perturbation runs.
//
// Relative error per entry is |analytic - fd| / max(|analytic|, |fd|, 1e-4);
// the floor keeps finite-difference roundoff on near-zero gradients from
// registering as disagreement.
GradCheckReport grad_check(const std::function<double(bool)>& loss_fn,
                           std::vector<ParamGroup*> params,
                           double epsilon,
                           double tolerance);

}  // namespace aelstm
