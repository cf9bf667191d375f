#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aelstm/optimizer.hpp"
#include "aelstm/random.hpp"
#include "aelstm/tape.hpp"

namespace aelstm {

// Fully connected autoencoder compressing one tactile stream to a
// low-dimensional latent. Hidden layers use tanh; the latent and the
// reconstruction use sigmoid so both live in (0,1), matching the 0.1..0.9
// input normalization (the LSTM readout is sigmoid-bounded and has to be
// able to hit latent targets).
struct AEConfig {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_dims;
    std::size_t latent_dim = 10;

    void validate() const;
};

struct AEParams {
    AEConfig config;
    std::vector<ParamGroup> weights;  // encoder layers then decoder layers
    std::vector<ParamGroup> biases;

    void init(const AEConfig& cfg, Rng& rng);
    std::vector<ParamGroup*> all_params();
    std::vector<const ParamGroup*> all_params() const;

    std::size_t encoder_layers() const { return config.hidden_dims.size() + 1; }
    std::size_t decoder_layers() const { return config.hidden_dims.size() + 1; }

    // Plain (untaped) forward passes; x may batch frames as rows.
    Matrix encode(const Matrix& x) const;
    Matrix decode(const Matrix& z) const;

    // Tape builders used by training and gradient checks.
    int encode_node(Tape& t, int x);
    int decode_node(Tape& t, int z);
};

struct AETrainOptions {
    std::size_t epochs = 1000;
    double learning_rate = 1e-3;
    double noise_sigma = 0.02;  // input augmentation, normalized units
    bool noise_per_epoch = true;
    std::uint64_t seed = 1;
    OptAlgo algo = OptAlgo::Adam;
};

struct AETrainReport {
    std::vector<double> train_curve;  // mean squared error per element
    std::vector<double> val_curve;
    std::size_t best_epoch = 0;
    double best_val_mse = 0.0;
    OptimizerState optimizer;  // state after the final epoch
};

// Frame-wise training with best-validation-epoch selection: the returned
// parameters are the ones from the epoch with minimum validation MSE, not
// the final epoch. Aborts with the epoch index if validation goes NaN.
AETrainReport train_ae(AEParams& params, const Matrix& train_frames, const Matrix& val_frames,
                       const AETrainOptions& opts);

double reconstruction_mse(const AEParams& params, const Matrix& frames);

}  // namespace aelstm
