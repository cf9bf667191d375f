#include "aelstm/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "aelstm/errors.hpp"
#include "aelstm/preprocess.hpp"

namespace aelstm {

void LSTMParams::init(std::size_t input, std::size_t hidden, std::size_t output, Rng& rng) {
    if (input == 0 || hidden == 0 || output == 0)
        throw ConfigError("lstm: all dimensions must be positive");
    input_dim = input;
    hidden_dim = hidden;
    w = ParamGroup("lstm.W", input + hidden, 4 * hidden);
    b = ParamGroup("lstm.b", 1, 4 * hidden);
    wy = ParamGroup("lstm.Wy", hidden, output);
    by = ParamGroup("lstm.by", 1, output);
    init_affine_weight(w.value, rng);
    init_affine_weight(wy.value, rng);
    for (std::size_t k = 0; k < hidden; ++k) b.value(0, hidden + k) = 1.0;  // forget gate open
}

std::vector<ParamGroup*> LSTMParams::all_params() { return {&w, &b, &wy, &by}; }

CellNodes lstm_cell_nodes(Tape& t, int x, int h_prev, int c_prev, LSTMParams& p) {
    const std::size_t hd = p.hidden_dim;
    const int xh = t.concat(x, h_prev);
    const int gates = t.affine(xh, t.param(p.w), t.param(p.b));
    const int i = t.sigmoid(t.slice(gates, 0, hd));
    const int f = t.sigmoid(t.slice(gates, hd, hd));
    const int g = t.tanh_op(t.slice(gates, 2 * hd, hd));
    const int o = t.sigmoid(t.slice(gates, 3 * hd, hd));
    CellNodes out;
    out.c = t.add(t.mul(f, c_prev), t.mul(i, g));
    out.h = t.mul(o, t.tanh_op(out.c));
    out.y = t.sigmoid(t.affine(out.h, t.param(p.wy), t.param(p.by)));
    return out;
}

void SwitchSpec::validate(std::size_t steps) const {
    for (const auto& [s, e] : pairs) {
        if (s >= e) throw ConfigError("switch spec: pair start must precede end");
        if (e > steps) throw ConfigError("switch spec: pair end past sequence length");
    }
}

SwitchSpec switch_spec_from_labels(const std::vector<SubTask>& labels) {
    SwitchSpec spec;
    const std::size_t n = labels.size();
    std::size_t run_start = 0;
    for (std::size_t t = 1; t <= n; ++t) {
        if (t == n || labels[t] != labels[run_start]) {
            const SubTask phase = labels[run_start];
            const bool constrained = phase == SubTask::TryOpen || phase == SubTask::RetractThumb ||
                                     phase == SubTask::SlideLeft || phase == SubTask::SlideRight;
            if (constrained && t < n) spec.pairs.emplace_back(run_start, t);
            run_start = t;
        }
    }
    return spec;
}

void LossConfig::validate() const {
    if (gamma < 0.0 || !std::isfinite(gamma))
        throw ConfigError("loss: gamma must be finite and non-negative");
    if (!channel_weights.empty()) {
        for (std::size_t i = 0; i < channel_weights.size(); ++i) {
            const double w = channel_weights.at_flat(i);
            if (w < 0.0 || !std::isfinite(w))
                throw ConfigError("loss: channel weights must be finite and non-negative");
        }
    }
}

void PolicyModel::init(std::size_t latent_dim, std::size_t joint_dim, std::size_t hidden,
                       std::size_t attention_hidden, bool use_attention, Rng& rng) {
    hidden_dim = hidden;
    layout = use_attention ? ModalityLayout::with_attention(latent_dim, joint_dim)
                           : ModalityLayout::baseline(latent_dim, joint_dim);
    lstm.init(layout.total(), hidden, layout.total(), rng);
    if (use_attention) {
        attention.emplace();
        attention->init(hidden + layout.total(), attention_hidden, rng);
    } else {
        attention.reset();
    }
}

std::vector<ParamGroup*> PolicyModel::all_params() {
    std::vector<ParamGroup*> out = lstm.all_params();
    if (attention)
        for (ParamGroup* g : attention->all_params()) out.push_back(g);
    return out;
}

std::vector<const ParamGroup*> PolicyModel::all_params() const {
    std::vector<const ParamGroup*> out;
    for (const ParamGroup* g : {&lstm.w, &lstm.b, &lstm.wy, &lstm.by}) out.push_back(g);
    if (attention)
        for (const ParamGroup* g : attention->all_params()) out.push_back(g);
    return out;
}

SeqLossParts sequence_loss(Tape& tape, const PolicySequence& seq, PolicyModel& model,
                           const LossConfig& cfg, Matrix* hidden_trace,
                           std::vector<Matrix>* grad_sink, double grad_scale) {
    cfg.validate();
    const std::size_t steps = seq.inputs.rows();
    if (steps == 0) throw ConfigError("sequence_loss: empty sequence");
    if (seq.inputs.cols() != model.input_dim())
        throw DimensionError("sequence_loss: sequence width " +
                             std::to_string(seq.inputs.cols()) + " does not match model input " +
                             std::to_string(model.input_dim()));
    require_same_shape(seq.inputs, seq.targets, "sequence_loss inputs/targets");
    seq.switches.validate(steps);
    if (cfg.gamma > 0.0 && seq.switches.pairs.empty() && cfg.warn)
        cfg.warn("sequence_loss: gamma > 0 but the switch list is empty; constraint term is 0");

    tape.reset();
    const std::size_t hd = model.hidden_dim;
    std::vector<int> h_ids(steps + 1);
    int h = tape.zeros(1, hd);
    int c = tape.zeros(1, hd);
    h_ids[0] = h;

    int mse_acc = -1;
    Matrix x_row(1, seq.inputs.cols());
    Matrix t_row(1, seq.targets.cols());
    for (std::size_t t = 0; t < steps; ++t) {
        std::copy(seq.inputs.row_ptr(t), seq.inputs.row_ptr(t) + seq.inputs.cols(), x_row.data());
        std::copy(seq.targets.row_ptr(t), seq.targets.row_ptr(t) + seq.targets.cols(),
                  t_row.data());
        const int x = tape.input(x_row);
        int gated = x;
        if (model.attention) {
            const int attn = attention_forward(tape, h, x, *model.attention);
            gated = apply_attention(tape, x, attn, model.layout);
        }
        const CellNodes cell = lstm_cell_nodes(tape, gated, h, c, model.lstm);
        h = cell.h;
        c = cell.c;
        h_ids[t + 1] = h;
        const int step_loss = tape.weighted_sse(cell.y, t_row, cfg.channel_weights);
        mse_acc = (mse_acc < 0) ? step_loss : tape.add(mse_acc, step_loss);
    }

    int cons_acc = -1;
    for (const auto& [s, e] : seq.switches.pairs) {
        const int gap = tape.sum_sq_diff(h_ids[e], h_ids[s]);
        cons_acc = (cons_acc < 0) ? gap : tape.add(cons_acc, gap);
    }

    int total = mse_acc;
    if (cons_acc >= 0) total = tape.add(mse_acc, tape.scale(cons_acc, cfg.gamma));

    SeqLossParts parts;
    parts.weighted_mse = tape.scalar(mse_acc);
    parts.constraint = cons_acc >= 0 ? tape.scalar(cons_acc) : 0.0;
    parts.total = tape.scalar(total);
    if (!std::isfinite(parts.total))
        throw NumericError("sequence_loss: loss is not finite");

    if (hidden_trace) {
        hidden_trace->resize(steps + 1, hd);
        for (std::size_t t = 0; t <= steps; ++t) {
            const Matrix& hv = tape.value(h_ids[t]);
            std::copy(hv.data(), hv.data() + hd, hidden_trace->row_ptr(t));
        }
    }
    if (grad_sink) tape.backward_into(total, *grad_sink, grad_scale);
    return parts;
}

Matrix teacher_forced_hidden_trace(PolicyModel& model, const PolicySequence& seq) {
    Tape tape;
    Matrix trace;
    LossConfig cfg;
    cfg.gamma = 0.0;
    sequence_loss(tape, seq, model, cfg, &trace);
    return trace;
}

PolicySequence assemble_sequence(const ProcessedEpisode& ep, const AEParams& ae_whole,
                                 const AEParams& ae_thumb, const ModalityLayout& layout,
                                 const std::array<double, 4>* noise_sigmas,
                                 std::uint64_t noise_seed) {
    if (ep.targets.empty())
        throw StateError("assemble_sequence: episode has no targets; run make_targets first");
    const std::size_t steps = ep.steps();
    const std::size_t latent = layout.block_width(Modality::TactileWhole);
    const std::size_t jd = layout.block_width(Modality::Joints);
    if (jd != ep.joints_dim)
        throw DimensionError("assemble_sequence: layout joint width does not match episode");

    auto slice_cols = [&](const Matrix& src, std::size_t off, std::size_t width) {
        Matrix out(steps, width);
        for (std::size_t t = 0; t < steps; ++t)
            std::copy(src.row_ptr(t) + off, src.row_ptr(t) + off + width, out.row_ptr(t));
        return out;
    };

    Matrix inputs = ep.inputs;
    if (noise_sigmas) add_noise_in_place(inputs, ep, *noise_sigmas, noise_seed);

    auto build = [&](const Matrix& frames) {
        const Matrix whole = slice_cols(frames, ep.whole_offset(), ep.whole_dim);
        const Matrix thumb = slice_cols(frames, ep.thumb_offset(), ep.thumb_dim);
        const Matrix zw = ae_whole.encode(whole);
        Matrix out(steps, layout.total());
        std::size_t col = 0;
        auto paste = [&](const Matrix& block) {
            for (std::size_t t = 0; t < steps; ++t)
                std::copy(block.row_ptr(t), block.row_ptr(t) + block.cols(),
                          out.row_ptr(t) + col);
            col += block.cols();
        };
        paste(zw);
        if (layout.thumb_present) paste(ae_thumb.encode(thumb));
        paste(slice_cols(frames, ep.joints_offset(), ep.joints_dim));
        paste(slice_cols(frames, ep.torques_offset(), ep.torques_dim));
        return out;
    };

    PolicySequence seq;
    seq.inputs = build(inputs);
    seq.targets = build(ep.targets);
    seq.labels = ep.labels;
    seq.switches = switch_spec_from_labels(ep.labels);
    if (latent != ae_whole.config.latent_dim)
        throw DimensionError("assemble_sequence: layout latent width does not match autoencoder");
    return seq;
}

Matrix policy_channel_weights(const ModalityLayout& layout,
                              const std::vector<std::size_t>& strong_joints, double strong) {
    Matrix w(1, layout.total(), 1.0);
    const std::size_t joff = layout.offset(Modality::Joints);
    for (std::size_t j : strong_joints) {
        if (j >= layout.block_width(Modality::Joints))
            throw ConfigError("channel weights: joint index out of range");
        w(0, joff + j) = strong;
    }
    return w;
}

namespace {

struct Worker {
    Tape tape;
    std::vector<Matrix> sink;
    double loss_sum = 0.0;
    double constraint_sum = 0.0;
};

}  // namespace

PolicyTrainReport train_policy(PolicyModel& model, const std::vector<ProcessedEpisode>& train_eps,
                               const std::vector<ProcessedEpisode>& val_eps,
                               const AEParams& ae_whole, const AEParams& ae_thumb,
                               const PolicyTrainOptions& opts) {
    if (train_eps.empty() || val_eps.empty())
        throw ConfigError("train_policy: train and validation sets must be non-empty");

    auto params = model.all_params();
    assign_slots(params);
    OptimizerState opt;
    opt.algo = opts.algo;
    opt.learning_rate = opts.learning_rate;
    opt.init(params);

    LossConfig loss_cfg;
    loss_cfg.gamma = opts.gamma;
    loss_cfg.channel_weights = opts.channel_weights;

    // Warn once, up front, if the constraint can never bind.
    if (opts.gamma > 0.0) {
        bool any_pairs = false;
        for (const auto& ep : train_eps)
            if (!switch_spec_from_labels(ep.labels).pairs.empty()) any_pairs = true;
        if (!any_pairs)
            std::fprintf(stderr,
                         "train_policy: gamma > 0 but no episode has switch pairs; "
                         "constraint term will stay 0\n");
    }

    // Validation sequences are clean and never change; assemble them once.
    std::vector<PolicySequence> val_seqs;
    val_seqs.reserve(val_eps.size());
    for (const auto& ep : val_eps)
        val_seqs.push_back(assemble_sequence(ep, ae_whole, ae_thumb, model.layout));

    const std::size_t n_train = train_eps.size();
    const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, n_train));
    const std::size_t block = (n_train + jobs - 1) / jobs;

    std::vector<Worker> workers(jobs);
    for (Worker& w : workers) {
        w.sink.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i)
            w.sink[i].resize(params[i]->value.rows(), params[i]->value.cols());
    }

    PolicyTrainReport report;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<Matrix> best_values;
    const double grad_scale = 1.0 / static_cast<double>(n_train);

    Tape val_tape;
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        auto run_block = [&](std::size_t wi) {
            Worker& w = workers[wi];
            w.loss_sum = 0.0;
            w.constraint_sum = 0.0;
            for (Matrix& g : w.sink) g.fill(0.0);
            const std::size_t lo = wi * block;
            const std::size_t hi = std::min(n_train, lo + block);
            for (std::size_t e = lo; e < hi; ++e) {
                const std::uint64_t noise_seed =
                    Rng::mix(opts.seed, (opts.noise_per_epoch ? epoch + 1 : 1) * 1000003ULL + e);
                const PolicySequence seq = assemble_sequence(
                    train_eps[e], ae_whole, ae_thumb, model.layout, &opts.noise_sigmas,
                    noise_seed);
                const SeqLossParts parts =
                    sequence_loss(w.tape, seq, model, loss_cfg, nullptr, &w.sink, grad_scale);
                w.loss_sum += parts.total;
                w.constraint_sum += parts.constraint;
            }
        };

        if (jobs == 1) {
            run_block(0);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(jobs);
            for (std::size_t wi = 0; wi < jobs; ++wi) pool.emplace_back(run_block, wi);
            for (auto& th : pool) th.join();
        }

        double train_loss = 0.0, constraint = 0.0;
        for (std::size_t wi = 0; wi < jobs; ++wi) {  // fixed reduction order
            train_loss += workers[wi].loss_sum;
            constraint += workers[wi].constraint_sum;
            for (std::size_t gi = 0; gi < params.size(); ++gi)
                acc_scaled(params[gi]->grad, workers[wi].sink[gi], 1.0);
        }
        if (opts.max_grad_norm > 0.0) {
            double sq = 0.0;
            for (ParamGroup* g : params) sq += sum_squares(g->grad);
            const double norm = std::sqrt(sq);
            if (norm > opts.max_grad_norm) {
                const double scale = opts.max_grad_norm / norm;
                for (ParamGroup* g : params)
                    for (std::size_t i = 0; i < g->grad.size(); ++i) g->grad.at_flat(i) *= scale;
            }
        }
        opt.step(params);
        report.train_curve.push_back(train_loss / static_cast<double>(n_train));
        report.constraint_curve.push_back(constraint / static_cast<double>(n_train));

        double val_loss = 0.0;
        for (const PolicySequence& seq : val_seqs) {
            const SeqLossParts parts = sequence_loss(val_tape, seq, model, loss_cfg);
            val_loss += parts.total / static_cast<double>(seq.inputs.rows());
        }
        val_loss /= static_cast<double>(val_seqs.size());
        if (std::isnan(val_loss))
            throw NumericError("train_policy: validation loss is NaN at epoch " +
                               std::to_string(epoch));
        report.val_curve.push_back(val_loss);
        if (val_loss < best_val) {
            best_val = val_loss;
            report.best_epoch = epoch;
            best_values.clear();
            for (ParamGroup* g : params) best_values.push_back(g->value);
        }
    }

    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
    report.best_val = best_val;
    report.optimizer = std::move(opt);
    return report;
}

PolicyRunner::PolicyRunner(PolicyModel& model) : model_(model) { reset(); }

void PolicyRunner::reset() {
    h_.resize(1, model_.hidden_dim);
    c_.resize(1, model_.hidden_dim);
}

PolicyRunner::StepOut PolicyRunner::step(const Matrix& x_in) {
    if (x_in.rows() != 1 || x_in.cols() != model_.input_dim())
        throw DimensionError("policy step: input is " + x_in.shape_str() + ", expected 1x" +
                             std::to_string(model_.input_dim()));
    tape_.reset();
    const int x = tape_.input(x_in);
    const int hp = tape_.input(h_);
    const int cp = tape_.input(c_);
    int gated = x;
    int attn = -1;
    if (model_.attention) {
        attn = attention_forward(tape_, hp, x, *model_.attention);
        gated = apply_attention(tape_, x, attn, model_.layout);
    }
    const CellNodes cell = lstm_cell_nodes(tape_, gated, hp, cp, model_.lstm);
    StepOut out;
    out.y = tape_.value(cell.y);
    if (attn >= 0) out.attention = tape_.value(attn);
    h_ = tape_.value(cell.h);
    c_ = tape_.value(cell.c);
    return out;
}

}  // namespace aelstm
