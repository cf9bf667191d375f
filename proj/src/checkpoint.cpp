#include "aelstm/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "aelstm/errors.hpp"

namespace aelstm {

namespace {

constexpr char kMagic[4] = {'A', 'E', 'L', 'C'};

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_u64(os, bits);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& is) {
    const std::uint64_t bits = get_u64(is);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

void put_matrix(std::ostream& os, const Matrix& m) {
    put_u32(os, static_cast<std::uint32_t>(m.rows()));
    put_u32(os, static_cast<std::uint32_t>(m.cols()));
    for (std::size_t i = 0; i < m.size(); ++i) put_f64(os, m.at_flat(i));
}

Matrix get_matrix(std::istream& is) {
    const std::uint32_t rows = get_u32(is);
    const std::uint32_t cols = get_u32(is);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.at_flat(i) = get_f64(is);
    return m;
}

}  // namespace

const LoadedGroup& LoadedCheckpoint::find(const std::string& name) const {
    for (const LoadedGroup& g : groups)
        if (g.name == name) return g;
    throw IoError("checkpoint: parameter group '" + name + "' not found");
}

void save_checkpoint(const std::string& path,
                     const std::vector<const ParamGroup*>& groups,
                     std::uint64_t config_hash,
                     const OptimizerState* opt) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("checkpoint: cannot open '" + path + "' for writing");

    os.write(kMagic, 4);
    put_u32(os, kCheckpointVersion);
    put_u64(os, config_hash);
    put_u32(os, opt ? 1u : 0u);
    put_u32(os, static_cast<std::uint32_t>(groups.size()));
    for (const ParamGroup* g : groups) {
        put_u32(os, static_cast<std::uint32_t>(g->name.size()));
        os.write(g->name.data(), static_cast<std::streamsize>(g->name.size()));
        put_matrix(os, g->value);
    }
    if (opt) {
        if (opt->m.size() != groups.size())
            throw StateError("checkpoint: optimizer moments do not match parameter list");
        put_u32(os, opt->algo == OptAlgo::Adam ? 0u : 1u);
        put_f64(os, opt->learning_rate);
        put_f64(os, opt->beta1);
        put_f64(os, opt->beta2);
        put_f64(os, opt->epsilon);
        put_u64(os, opt->step_count);
        for (std::size_t i = 0; i < groups.size(); ++i) {
            put_matrix(os, opt->m[i]);
            put_matrix(os, opt->v[i]);
        }
    }
    if (!os) throw IoError("checkpoint: write failed for '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open '" + path + "'");

    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("checkpoint: '" + path + "' is not a checkpoint file");

    LoadedCheckpoint out;
    out.version = get_u32(is);
    if (out.version != kCheckpointVersion)
        throw IoError("checkpoint: unsupported version " + std::to_string(out.version));
    out.config_hash = get_u64(is);
    const bool has_opt = get_u32(is) != 0;
    const std::uint32_t n = get_u32(is);
    out.groups.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t len = get_u32(is);
        std::string name(len, '\0');
        is.read(name.data(), len);
        LoadedGroup g;
        g.name = std::move(name);
        g.value = get_matrix(is);
        out.groups.push_back(std::move(g));
    }
    if (has_opt) {
        out.has_optimizer = true;
        out.algo = get_u32(is) == 0 ? OptAlgo::Adam : OptAlgo::Sgd;
        out.learning_rate = get_f64(is);
        out.beta1 = get_f64(is);
        out.beta2 = get_f64(is);
        out.epsilon = get_f64(is);
        out.step_count = get_u64(is);
        for (std::uint32_t i = 0; i < n; ++i) {
            out.m.push_back(get_matrix(is));
            out.v.push_back(get_matrix(is));
        }
    }
    if (!is) throw IoError("checkpoint: truncated file '" + path + "'");
    return out;
}

void restore_params(const LoadedCheckpoint& ckpt,
                    std::vector<ParamGroup*>& params,
                    OptimizerState* opt) {
    if (ckpt.groups.size() != params.size())
        throw IoError("checkpoint: file has " + std::to_string(ckpt.groups.size()) +
                      " groups, model expects " + std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const LoadedGroup& g = ckpt.find(params[i]->name);
        if (!g.value.same_shape(params[i]->value))
            throw IoError("checkpoint: group '" + g.name + "' is " + g.value.shape_str() +
                          ", model expects " + params[i]->value.shape_str());
        params[i]->value = g.value;
        params[i]->zero_grad();
    }
    if (opt && ckpt.has_optimizer) {
        opt->algo = ckpt.algo;
        opt->learning_rate = ckpt.learning_rate;
        opt->beta1 = ckpt.beta1;
        opt->beta2 = ckpt.beta2;
        opt->epsilon = ckpt.epsilon;
        opt->step_count = ckpt.step_count;
        opt->m = ckpt.m;
        opt->v = ckpt.v;
    }
}

}  // namespace aelstm
