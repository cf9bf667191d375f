#include "aelstm/autoencoder.hpp"

#include <cmath>

#include "aelstm/errors.hpp"

namespace aelstm {

void AEConfig::validate() const {
    if (input_dim == 0) throw ConfigError("autoencoder: input_dim must be positive");
    if (latent_dim == 0) throw ConfigError("autoencoder: latent_dim must be positive");
    if (latent_dim > input_dim)
        throw ConfigError("autoencoder: latent_dim " + std::to_string(latent_dim) +
                          " exceeds input_dim " + std::to_string(input_dim));
}

namespace {

std::vector<std::size_t> layer_sizes(const AEConfig& cfg) {
    // encoder: input -> hidden... -> latent; decoder mirrors back to input
    std::vector<std::size_t> dims;
    dims.push_back(cfg.input_dim);
    for (std::size_t h : cfg.hidden_dims) dims.push_back(h);
    dims.push_back(cfg.latent_dim);
    for (std::size_t i = cfg.hidden_dims.size(); i-- > 0;) dims.push_back(cfg.hidden_dims[i]);
    dims.push_back(cfg.input_dim);
    return dims;
}

inline double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// y = act(x W + b), rows batched
Matrix dense(const Matrix& x, const Matrix& w, const Matrix& b, bool use_tanh) {
    Matrix y = matmul(x, w);
    for (std::size_t r = 0; r < y.rows(); ++r) {
        double* row = y.row_ptr(r);
        for (std::size_t j = 0; j < y.cols(); ++j) {
            const double v = row[j] + b(0, j);
            row[j] = use_tanh ? std::tanh(v) : stable_sigmoid(v);
        }
    }
    return y;
}

}  // namespace

void AEParams::init(const AEConfig& cfg, Rng& rng) {
    cfg.validate();
    config = cfg;
    weights.clear();
    biases.clear();
    const auto dims = layer_sizes(cfg);
    const std::size_t enc = cfg.hidden_dims.size() + 1;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::string tag = (l < enc ? "enc" : "dec") + std::to_string(l < enc ? l : l - enc);
        weights.emplace_back(tag + ".W", dims[l], dims[l + 1]);
        biases.emplace_back(tag + ".b", 1, dims[l + 1]);
        init_affine_weight(weights.back().value, rng);
    }
}

std::vector<ParamGroup*> AEParams::all_params() {
    std::vector<ParamGroup*> out;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        out.push_back(&weights[i]);
        out.push_back(&biases[i]);
    }
    return out;
}

std::vector<const ParamGroup*> AEParams::all_params() const {
    std::vector<const ParamGroup*> out;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        out.push_back(&weights[i]);
        out.push_back(&biases[i]);
    }
    return out;
}

Matrix AEParams::encode(const Matrix& x) const {
    if (x.cols() != config.input_dim)
        throw DimensionError("encode: input is " + x.shape_str() + ", expected cols " +
                             std::to_string(config.input_dim));
    Matrix h = x;
    const std::size_t enc = encoder_layers();
    for (std::size_t l = 0; l < enc; ++l) {
        const bool last = (l + 1 == enc);
        h = dense(h, weights[l].value, biases[l].value, !last);
    }
    return h;
}

Matrix AEParams::decode(const Matrix& z) const {
    if (z.cols() != config.latent_dim)
        throw DimensionError("decode: latent is " + z.shape_str() + ", expected cols " +
                             std::to_string(config.latent_dim));
    Matrix h = z;
    const std::size_t enc = encoder_layers();
    for (std::size_t l = enc; l < weights.size(); ++l) {
        const bool last = (l + 1 == weights.size());
        h = dense(h, weights[l].value, biases[l].value, !last);
    }
    return h;
}

int AEParams::encode_node(Tape& t, int x) {
    int h = x;
    const std::size_t enc = encoder_layers();
    for (std::size_t l = 0; l < enc; ++l) {
        const int a = t.affine(h, t.param(weights[l]), t.param(biases[l]));
        h = (l + 1 == enc) ? t.sigmoid(a) : t.tanh_op(a);
    }
    return h;
}

int AEParams::decode_node(Tape& t, int z) {
    int h = z;
    const std::size_t enc = encoder_layers();
    for (std::size_t l = enc; l < weights.size(); ++l) {
        const int a = t.affine(h, t.param(weights[l]), t.param(biases[l]));
        h = (l + 1 == weights.size()) ? t.sigmoid(a) : t.tanh_op(a);
    }
    return h;
}

double reconstruction_mse(const AEParams& params, const Matrix& frames) {
    const Matrix rec = params.decode(params.encode(frames));
    double acc = 0.0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const double d = rec.at_flat(i) - frames.at_flat(i);
        acc += d * d;
    }
    return acc / static_cast<double>(frames.size());
}

AETrainReport train_ae(AEParams& params, const Matrix& train_frames, const Matrix& val_frames,
                       const AETrainOptions& opts) {
    if (train_frames.rows() == 0 || val_frames.rows() == 0)
        throw ConfigError("train_ae: train and validation sets must be non-empty");
    if (train_frames.cols() != params.config.input_dim)
        throw DimensionError("train_ae: frames are " + train_frames.shape_str() +
                             ", model expects cols " + std::to_string(params.config.input_dim));

    auto groups = params.all_params();
    OptimizerState opt;
    opt.algo = opts.algo;
    opt.learning_rate = opts.learning_rate;
    opt.init(groups);

    AETrainReport report;
    report.best_val_mse = std::numeric_limits<double>::infinity();
    std::vector<Matrix> best_values;

    const double inv_n = 1.0 / static_cast<double>(train_frames.size());
    Tape tape;
    Matrix noisy = train_frames;
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        if (opts.noise_sigma > 0.0 && (opts.noise_per_epoch || epoch == 0)) {
            Rng rng(Rng::mix(opts.seed, epoch + 1));
            for (std::size_t i = 0; i < noisy.size(); ++i)
                noisy.at_flat(i) = train_frames.at_flat(i) + opts.noise_sigma * rng.gaussian();
        }
        tape.reset();
        const int x = tape.input(noisy);
        const int rec = params.decode_node(tape, params.encode_node(tape, x));
        const int loss = tape.scale(tape.sse(rec, train_frames), inv_n);
        zero_grads(groups);
        tape.backward(loss);
        opt.step(groups);
        report.train_curve.push_back(tape.scalar(loss));

        const double val_mse = reconstruction_mse(params, val_frames);
        if (std::isnan(val_mse))
            throw NumericError("train_ae: validation loss is NaN at epoch " +
                               std::to_string(epoch));
        report.val_curve.push_back(val_mse);
        if (val_mse < report.best_val_mse) {
            report.best_val_mse = val_mse;
            report.best_epoch = epoch;
            best_values.clear();
            for (ParamGroup* g : groups) best_values.push_back(g->value);
        }
    }

    for (std::size_t i = 0; i < groups.size(); ++i) groups[i]->value = best_values[i];
    report.optimizer = std::move(opt);
    return report;
}

}  // namespace aelstm
