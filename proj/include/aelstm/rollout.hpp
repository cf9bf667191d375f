#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aelstm/lstm.hpp"
#include "aelstm/sim_env.hpp"

namespace aelstm {

// Everything needed to run one policy closed-loop.
struct TrainedStack {
    NormalizationStats scaler;
    AEParams ae_whole;
    AEParams ae_thumb;
    PolicyModel policy;
    std::uint64_t config_hash = 0;
};

struct TrialTraces {
    Matrix attention;              // T x 4 in layout order; empty when disabled
    Matrix hidden;                 // T x hidden
    Matrix commands;               // T x J (radians)
    std::vector<SubTask> phases;   // classifier labels per tick
    std::vector<double> cmd_delta; // max per-joint command change per tick
};

struct RolloutResult {
    EvalOutcome outcome;
    TrialTraces traces;
};

// Closed loop: observe, normalize, encode tactile, gate, step the cell and
// command the unscaled joint predictions back into the environment. The
// tactile and torque predictions are produced every step but never actuate.
// A non-finite command aborts the trial, which is then recorded as a failure
// with the reason attached.
RolloutResult rollout(CapOpeningEnv& env, const Scenario& scenario, TrainedStack& stack,
                      const JudgeConfig& judge_cfg);

// Trace export (CSV). Column order follows the external trace contracts:
// attention rows are (t, A_joint, A_torque, A_whole_tactile, A_thumb_tactile,
// subtask_label); hidden rows are (t, subtask_label, h_0..h_{n-1}).
void write_attention_trace(const std::string& path, const TrialTraces& traces,
                           std::uint64_t config_hash);
void write_hidden_trace(const std::string& path, const TrialTraces& traces,
                        std::uint64_t config_hash);

struct LoadedTrace {
    Matrix attention;  // T x 4 (joint, torque, whole, thumb order as stored)
    Matrix hidden;
    std::vector<SubTask> phases;
};
LoadedTrace read_attention_trace(const std::string& path);
LoadedTrace read_hidden_trace(const std::string& path);

}  // namespace aelstm
