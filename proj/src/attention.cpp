#include "aelstm/attention.hpp"

#include "aelstm/errors.hpp"

namespace aelstm {

ModalityLayout ModalityLayout::with_attention(std::size_t latent_dim, std::size_t joint_dim) {
    ModalityLayout l;
    l.width = {latent_dim, latent_dim, joint_dim, joint_dim};
    l.thumb_present = true;
    return l;
}

ModalityLayout ModalityLayout::baseline(std::size_t latent_dim, std::size_t joint_dim) {
    ModalityLayout l;
    l.width = {latent_dim, 0, joint_dim, joint_dim};
    l.thumb_present = false;
    return l;
}

std::size_t ModalityLayout::offset(Modality m) const {
    std::size_t off = 0;
    for (std::size_t k = 0; k < static_cast<std::size_t>(m); ++k) off += width[k];
    return off;
}

std::size_t ModalityLayout::total() const {
    std::size_t t = 0;
    for (std::size_t w : width) t += w;
    return t;
}

BlockWidths ModalityLayout::block_widths() const {
    if (!thumb_present)
        throw StateError("block_widths: attention gating requires all four modality blocks");
    BlockWidths bw;
    bw.count = kModalityCount;
    for (std::size_t k = 0; k < kModalityCount; ++k) bw.width[k] = width[k];
    return bw;
}

const char* ModalityLayout::modality_name(Modality m) {
    switch (m) {
        case Modality::TactileWhole: return "tactile_whole";
        case Modality::TactileThumb: return "tactile_thumb";
        case Modality::Joints: return "joints";
        case Modality::Torques: return "torques";
    }
    return "?";
}

void AttentionParams::init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
    if (input_dim == 0 || hidden_dim == 0)
        throw ConfigError("attention: layer dimensions must be positive");
    w1 = ParamGroup("attn.W1", input_dim, hidden_dim);
    b1 = ParamGroup("attn.b1", 1, hidden_dim);
    w2 = ParamGroup("attn.W2", hidden_dim, kModalityCount);
    b2 = ParamGroup("attn.b2", 1, kModalityCount);
    init_affine_weight(w1.value, rng);
    // output layer starts at zero so the gate opens uniform and only departs
    // from 1/4 weighting once the gradients ask for it
    w2.value.fill(0.0);
}

std::vector<ParamGroup*> AttentionParams::all_params() { return {&w1, &b1, &w2, &b2}; }

std::vector<const ParamGroup*> AttentionParams::all_params() const {
    return {&w1, &b1, &w2, &b2};
}

int attention_forward(Tape& t, int h_prev, int x_in, AttentionParams& params) {
    const int joint = t.concat(h_prev, x_in);
    const int hid = t.tanh_op(t.affine(joint, t.param(params.w1), t.param(params.b1)));
    const int logits = t.affine(hid, t.param(params.w2), t.param(params.b2));
    return t.softmax_row(logits);
}

int apply_attention(Tape& t, int x_in, int attention, const ModalityLayout& layout) {
    return t.block_scale(x_in, attention, layout.block_widths());
}

}  // namespace aelstm
