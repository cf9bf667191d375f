#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "aelstm/random.hpp"
#include "aelstm/tape.hpp"

namespace aelstm {

inline constexpr std::size_t kModalityCount = 4;

enum class Modality : std::size_t { TactileWhole = 0, TactileThumb, Joints, Torques };

// Contiguous block layout of the LSTM input vector:
//   [whole tactile latent | thumb tactile latent | joints | torques]
// When the attention mechanism is disabled the thumb latent block is dropped
// (the whole-hand features already contain the thumb's taxels), giving the
// narrower baseline input.
struct ModalityLayout {
    std::array<std::size_t, kModalityCount> width{};
    bool thumb_present = true;

    static ModalityLayout with_attention(std::size_t latent_dim, std::size_t joint_dim);
    static ModalityLayout baseline(std::size_t latent_dim, std::size_t joint_dim);

    std::size_t offset(Modality m) const;
    std::size_t block_width(Modality m) const { return width[static_cast<std::size_t>(m)]; }
    std::size_t total() const;
    BlockWidths block_widths() const;
    static const char* modality_name(Modality m);
};

// Two fully connected layers producing one weight per modality; logits go
// through a softmax so the weights always lie on the probability simplex.
struct AttentionParams {
    ParamGroup w1, b1, w2, b2;

    void init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);
    std::vector<ParamGroup*> all_params();
    std::vector<const ParamGroup*> all_params() const;
    std::size_t hidden_dim() const { return w1.value.cols(); }
};

// A(t) = softmax(mlp(concat(h_prev, x_in))). `h_prev` is the LSTM hidden
// state from the previous step (zeros at t = 0) - the causal reading, since
// the gated input has to exist before the cell can update its state.
int attention_forward(Tape& t, int h_prev, int x_in, AttentionParams& params);

// x_lstm = blockwise A * x_in per the modality layout.
int apply_attention(Tape& t, int x_in, int attention, const ModalityLayout& layout);

}  // namespace aelstm
