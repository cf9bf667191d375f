#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "aelstm/optimizer.hpp"
#include "aelstm/sim_env.hpp"

namespace aelstm {

// Resolved run configuration. Everything that influences results lives here;
// the FNV-1a hash of the canonical JSON dump is embedded in every artifact so
// outputs are attributable, and re-running with the same config and seed
// reproduces them byte for byte. Schema documented in docs/config.md.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "runs/default";
    std::size_t jobs = 2;
    bool paper_scale = false;

    // environment
    EnvConfig env;

    // preprocessing
    double raw_rate_hz = 100.0;
    double model_rate_hz = 10.0;
    double clip_bound = 1000.0;
    std::array<double, 4> noise_sigmas{0.01, 0.01, 0.02, 0.02};  // joints, torques, whole, thumb
    bool noise_per_epoch = true;
    std::size_t horizon = 2;

    // autoencoders
    std::size_t latent_dim = 10;
    std::vector<std::size_t> ae_whole_hidden{64, 32};
    std::vector<std::size_t> ae_thumb_hidden{16};
    std::size_t ae_epochs = 1000;
    double ae_learning_rate = 1e-3;
    double ae_noise_sigma = 0.02;

    // policy
    std::size_t lstm_hidden = 64;
    std::size_t attention_hidden = 32;
    std::size_t policy_epochs = 3000;
    double policy_learning_rate = 1e-3;
    double gamma = 0.015;
    std::vector<std::size_t> strong_joints{1, 2, 3};  // slide joint + thumb joints
    double strong_weight = 2.0;
    std::string optimizer = "adam";  // or "sgd"
    double val_fraction = 0.2;

    // evaluation
    JudgeConfig judge;
    std::vector<std::uint64_t> eval_seeds{1, 2, 3};

    OptAlgo opt_algo() const;
    std::string to_json() const;
    static RunConfig from_json(const std::string& text);
    static RunConfig load(const std::string& path);
    void save(const std::string& path) const;
    std::uint64_t hash() const;

    // Applies the paper-scale knobs (16 joints, 368 taxels, 50k epochs).
    void apply_paper_scale();
    void validate() const;
};

std::uint64_t fnv1a64(const std::string& text);

}  // namespace aelstm
