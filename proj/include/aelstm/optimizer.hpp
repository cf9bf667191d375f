#pragma once

#include <cstdint>
#include <vector>

#include "aelstm/tape.hpp"

namespace aelstm {

enum class OptAlgo { Adam, Sgd };

// Adaptive-moment optimizer state (plain gradient descent kept behind the
// `algo` switch). Moment buffers are parallel to the param list handed to
// init(); step() applies the update, zeroes the gradients and advances
// step_count.
struct OptimizerState {
    OptAlgo algo = OptAlgo::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step_count = 0;
    std::vector<Matrix> m;
    std::vector<Matrix> v;

    void init(const std::vector<ParamGroup*>& params);
    void step(std::vector<ParamGroup*>& params);
};

}  // namespace aelstm
