#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "aelstm/attention.hpp"
#include "aelstm/autoencoder.hpp"
#include "aelstm/episode.hpp"
#include "aelstm/optimizer.hpp"

namespace aelstm {

// Single-layer LSTM with a fused gate affine over [x_lstm, h_prev] and a
// sigmoid readout predicting the next input frame (all modalities; only the
// joint block is ever used for control).
struct LSTMParams {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    ParamGroup w;   // (input + hidden) x 4*hidden, gate order [i, f, g, o]
    ParamGroup b;   // 1 x 4*hidden
    ParamGroup wy;  // hidden x output
    ParamGroup by;  // 1 x output

    void init(std::size_t input, std::size_t hidden, std::size_t output, Rng& rng);
    std::vector<ParamGroup*> all_params();
};

struct CellNodes {
    int h = -1, c = -1, y = -1;
};

CellNodes lstm_cell_nodes(Tape& t, int x, int h_prev, int c_prev, LSTMParams& params);

// Index pairs (t_start, t_end) into the hidden-state sequence h_0..h_T at
// which the loop constraint ||h(t_end) - h(t_start)||^2 applies.
struct SwitchSpec {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    void validate(std::size_t steps) const;
};

// Builds constraint pairs from per-step labels: one pair per contiguous
// try-open / retract / slide segment (the sub-tasks whose start and end
// postures the demonstrations align). Segments still open at the end of the
// episode are skipped.
SwitchSpec switch_spec_from_labels(const std::vector<SubTask>& labels);

struct LossConfig {
    double gamma = 0.01;      // constraint strength; 0 disables the term
    Matrix channel_weights;   // 1 x output, empty = uniform
    std::size_t horizon = 2;  // steps ahead the targets were shifted
    std::function<void(const std::string&)> warn;  // optional config warnings

    void validate() const;
};

// One training sequence in model space: rows of `inputs`/`targets` follow the
// modality layout (tactile latents first, then joints, then torques).
struct PolicySequence {
    Matrix inputs;
    Matrix targets;
    std::vector<SubTask> labels;
    SwitchSpec switches;
};

struct PolicyModel {
    std::size_t hidden_dim = 64;
    ModalityLayout layout;
    LSTMParams lstm;
    std::optional<AttentionParams> attention;

    void init(std::size_t latent_dim, std::size_t joint_dim, std::size_t hidden,
              std::size_t attention_hidden, bool use_attention, Rng& rng);
    std::size_t input_dim() const { return layout.total(); }
    bool has_attention() const { return attention.has_value(); }
    std::vector<ParamGroup*> all_params();
    std::vector<const ParamGroup*> all_params() const;
};

struct SeqLossParts {
    double total = 0.0;
    double weighted_mse = 0.0;
    double constraint = 0.0;  // un-scaled sum of switch-pair gaps
};

// Teacher-forced loss of one sequence:
//   sum_t sum_ch w_ch (yhat_ch(t) - y_ch(t))^2 + gamma * sum_(s,e) ||h(e)-h(s)||^2
// When `grad_sink` is given, gradients scaled by `grad_scale` are accumulated
// into it (slots must be assigned); `hidden_trace` receives h_0..h_T as rows.
SeqLossParts sequence_loss(Tape& tape, const PolicySequence& seq, PolicyModel& model,
                           const LossConfig& cfg, Matrix* hidden_trace = nullptr,
                           std::vector<Matrix>* grad_sink = nullptr, double grad_scale = 1.0);

Matrix teacher_forced_hidden_trace(PolicyModel& model, const PolicySequence& seq);

// Converts a normalized episode into model space: tactile columns are pushed
// through the (frozen) autoencoders, then blocks are assembled per the
// layout. Optional per-modality noise perturbs the inputs before encoding;
// targets always come from the clean frames.
PolicySequence assemble_sequence(const ProcessedEpisode& ep, const AEParams& ae_whole,
                                 const AEParams& ae_thumb, const ModalityLayout& layout,
                                 const std::array<double, 4>* noise_sigmas = nullptr,
                                 std::uint64_t noise_seed = 0);

// Per-output-channel loss weights: `strong` on the listed joint channels
// (and their torque twins stay at 1), 1 elsewhere.
Matrix policy_channel_weights(const ModalityLayout& layout,
                              const std::vector<std::size_t>& strong_joints, double strong);

struct PolicyTrainOptions {
    std::size_t epochs = 3000;
    double learning_rate = 1e-3;
    double gamma = 0.01;
    Matrix channel_weights;
    std::array<double, 4> noise_sigmas{0.01, 0.01, 0.02, 0.02};
    bool noise_per_epoch = true;
    std::uint64_t seed = 1;
    std::size_t jobs = 2;
    OptAlgo algo = OptAlgo::Adam;
    double max_grad_norm = 5.0;  // global-norm clip; 0 disables
};

struct PolicyTrainReport {
    std::vector<double> train_curve;       // mean per-episode total loss
    std::vector<double> val_curve;         // mean per-episode, length-normalized
    std::vector<double> constraint_curve;  // mean un-scaled constraint term
    std::size_t best_epoch = 0;
    double best_val = 0.0;
    OptimizerState optimizer;  // state after the final epoch
};

// Full-batch teacher-forced training with Eq.-style loss, joint attention
// training when the model has the attention head, and best-validation-epoch
// parameter selection. Episode gradients are computed in parallel over a
// fixed partition and reduced in deterministic order.
PolicyTrainReport train_policy(PolicyModel& model, const std::vector<ProcessedEpisode>& train_eps,
                               const std::vector<ProcessedEpisode>& val_eps,
                               const AEParams& ae_whole, const AEParams& ae_thumb,
                               const PolicyTrainOptions& opts);

// Stateful single-step executor for closed-loop control and small tests.
class PolicyRunner {
public:
    explicit PolicyRunner(PolicyModel& model);
    void reset();
    struct StepOut {
        Matrix y;          // 1 x output prediction
        Matrix attention;  // 1 x 4 weights; empty when attention is disabled
    };
    StepOut step(const Matrix& x_in);
    const Matrix& hidden() const { return h_; }
    const Matrix& cell() const { return c_; }

private:
    PolicyModel& model_;
    Tape tape_;
    Matrix h_, c_;
};

}  // namespace aelstm
