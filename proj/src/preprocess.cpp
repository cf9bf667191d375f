#include "aelstm/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "aelstm/errors.hpp"
#include "aelstm/random.hpp"

namespace aelstm {

using nlohmann::json;

void NormalizationStats::rebuild_column_tables() {
    const std::size_t n = total_dim();
    col_min.assign(n, 0.0);
    col_max.assign(n, 0.0);
    col_degenerate.assign(n, false);
    for (const Group& g : groups) {
        for (std::size_t c : g.columns) {
            col_min[c] = g.min;
            col_max[c] = g.max;
            col_degenerate[c] = g.degenerate;
        }
    }
}

std::string NormalizationStats::to_json() const {
    json j;
    j["clip_bound"] = clip_bound;
    j["dims"] = {{"joints", joints_dim}, {"torques", torques_dim},
                 {"tactile_whole", whole_dim}, {"tactile_thumb", thumb_dim}};
    json gs = json::array();
    for (const Group& g : groups) {
        gs.push_back({{"name", g.name}, {"min", g.min}, {"max", g.max},
                      {"degenerate", g.degenerate}, {"columns", g.columns}});
    }
    j["groups"] = gs;
    return j.dump(2);
}

NormalizationStats NormalizationStats::from_json(const std::string& text) {
    const json j = json::parse(text);
    NormalizationStats s;
    s.clip_bound = j.at("clip_bound").get<double>();
    s.joints_dim = j.at("dims").at("joints").get<std::size_t>();
    s.torques_dim = j.at("dims").at("torques").get<std::size_t>();
    s.whole_dim = j.at("dims").at("tactile_whole").get<std::size_t>();
    s.thumb_dim = j.at("dims").at("tactile_thumb").get<std::size_t>();
    for (const json& gj : j.at("groups")) {
        Group g;
        g.name = gj.at("name").get<std::string>();
        g.min = gj.at("min").get<double>();
        g.max = gj.at("max").get<double>();
        g.degenerate = gj.at("degenerate").get<bool>();
        g.columns = gj.at("columns").get<std::vector<std::size_t>>();
        s.groups.push_back(std::move(g));
    }
    s.rebuild_column_tables();
    return s;
}

void NormalizationStats::save(const std::string& path, std::uint64_t config_hash) const {
    std::ofstream os(path);
    if (!os) throw IoError("scaler: cannot open '" + path + "' for writing");
    json j = json::parse(to_json());
    j["config_hash"] = config_hash;
    os << j.dump(2) << '\n';
}

NormalizationStats NormalizationStats::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DependencyError("scaler: missing file '" + path + "'; run the fit stage first");
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return from_json(text);
}

RawEpisode resample(const RawEpisode& ep, double target_rate_hz) {
    ep.validate();
    if (target_rate_hz <= 0.0) throw ConfigError("resample: target rate must be positive");
    const double ratio = ep.sample_rate_hz / target_rate_hz;
    const auto k = static_cast<std::size_t>(std::llround(ratio));
    if (k == 0 || std::abs(ratio - static_cast<double>(k)) > 1e-9)
        throw ConfigError("resample: target rate " + std::to_string(target_rate_hz) +
                          " Hz does not divide sample rate " + std::to_string(ep.sample_rate_hz));
    if (k == 1) return ep;

    const std::size_t t_raw = ep.steps();
    const std::size_t t_new = (t_raw + k - 1) / k;
    RawEpisode out;
    out.sample_rate_hz = target_rate_hz;
    out.joints.resize(t_new, ep.joints.cols());
    out.torques.resize(t_new, ep.torques.cols());
    out.tactile_whole.resize(t_new, ep.tactile_whole.cols());
    out.tactile_thumb.resize(t_new, ep.tactile_thumb.cols());
    out.labels.resize(t_new);
    for (std::size_t t = 0; t < t_new; ++t) {
        const std::size_t src = t * k;
        auto copy_row = [&](Matrix& dst, const Matrix& from) {
            for (std::size_t j = 0; j < dst.cols(); ++j) dst(t, j) = from(src, j);
        };
        copy_row(out.joints, ep.joints);
        copy_row(out.torques, ep.torques);
        copy_row(out.tactile_whole, ep.tactile_whole);
        copy_row(out.tactile_thumb, ep.tactile_thumb);
        out.labels[t] = ep.labels[src];
    }
    for (std::size_t m : ep.switch_marks) {
        const std::size_t snapped = (m + k - 1) / k;  // kept frame at or after the raw mark
        if (snapped < t_new &&
            (out.switch_marks.empty() || out.switch_marks.back() != snapped))
            out.switch_marks.push_back(snapped);
    }
    return out;
}

RawEpisode clip_tactile(const RawEpisode& ep, double bound) {
    if (bound <= 0.0) throw ConfigError("clip_tactile: bound must be positive");
    RawEpisode out = ep;
    auto clip = [&](Matrix& m) {
        for (std::size_t i = 0; i < m.size(); ++i)
            m.at_flat(i) = std::clamp(m.at_flat(i), -bound, bound);
    };
    clip(out.tactile_whole);
    clip(out.tactile_thumb);
    return out;
}

namespace {

void track_group(NormalizationStats::Group& g, const Matrix& m, std::size_t col) {
    for (std::size_t t = 0; t < m.rows(); ++t) {
        const double v = m(t, col);
        g.min = std::min(g.min, v);
        g.max = std::max(g.max, v);
    }
}

}  // namespace

NormalizationStats fit_scaler(std::span<const RawEpisode> episodes,
                              const TactileGrouping& whole,
                              const TactileGrouping& thumb,
                              double clip_bound) {
    if (episodes.empty()) throw ConfigError("fit_scaler: no episodes given");
    const RawEpisode& first = episodes.front();
    NormalizationStats s;
    s.clip_bound = clip_bound;
    s.joints_dim = first.joints.cols();
    s.torques_dim = first.torques.cols();
    s.whole_dim = first.tactile_whole.cols();
    s.thumb_dim = first.tactile_thumb.cols();
    if (whole.dim() != s.whole_dim)
        throw ConfigError("fit_scaler: whole tactile grouping covers " +
                          std::to_string(whole.dim()) + " columns, stream has " +
                          std::to_string(s.whole_dim));
    if (thumb.dim() != s.thumb_dim)
        throw ConfigError("fit_scaler: thumb tactile grouping covers " +
                          std::to_string(thumb.dim()) + " columns, stream has " +
                          std::to_string(s.thumb_dim));

    const double inf = std::numeric_limits<double>::infinity();
    auto fresh_group = [&](const std::string& name) {
        NormalizationStats::Group g;
        g.name = name;
        g.min = inf;
        g.max = -inf;
        return g;
    };

    for (std::size_t j = 0; j < s.joints_dim; ++j) {
        auto g = fresh_group("joint" + std::to_string(j));
        for (const RawEpisode& ep : episodes) track_group(g, ep.joints, j);
        g.columns = {s.joints_dim * 0 + j};
        s.groups.push_back(std::move(g));
    }
    for (std::size_t j = 0; j < s.torques_dim; ++j) {
        auto g = fresh_group("torque" + std::to_string(j));
        for (const RawEpisode& ep : episodes) track_group(g, ep.torques, j);
        g.columns = {s.joints_dim + j};
        s.groups.push_back(std::move(g));
    }
    auto tactile_groups = [&](const TactileGrouping& tg, std::size_t stream_offset,
                              const std::string& prefix, auto member) {
        for (std::size_t p = 0; p < tg.patches; ++p) {
            for (std::size_t a = 0; a < tg.axes; ++a) {
                auto g = fresh_group(prefix + "_patch" + std::to_string(p) + "_axis" +
                                     std::to_string(a));
                for (std::size_t k = 0; k < tg.taxels_per_patch; ++k) {
                    const std::size_t col = (p * tg.taxels_per_patch + k) * tg.axes + a;
                    for (const RawEpisode& ep : episodes) track_group(g, ep.*member, col);
                    g.columns.push_back(stream_offset + col);
                }
                s.groups.push_back(std::move(g));
            }
        }
    };
    tactile_groups(whole, s.joints_dim + s.torques_dim, "whole", &RawEpisode::tactile_whole);
    tactile_groups(thumb, s.joints_dim + s.torques_dim + s.whole_dim, "thumb",
                   &RawEpisode::tactile_thumb);

    for (auto& g : s.groups) {
        if (g.min == g.max) g.degenerate = true;
        if (g.min > g.max) throw NumericError("fit_scaler: empty group '" + g.name + "'");
    }
    s.rebuild_column_tables();
    return s;
}

double scale_value(double v, double mn, double mx, bool degenerate) {
    if (degenerate) return 0.5;
    const double t = (v - mn) / (mx - mn);
    return kScaleLo + t * (kScaleHi - kScaleLo);
}

double unscale_value(double y, double mn, double mx, bool degenerate) {
    if (degenerate) return mn;
    const double t = (y - kScaleLo) / (kScaleHi - kScaleLo);
    return mn + t * (mx - mn);
}

ProcessedEpisode apply_scaler(const RawEpisode& ep, const NormalizationStats& stats) {
    ep.validate();
    if (ep.joints.cols() != stats.joints_dim || ep.torques.cols() != stats.torques_dim ||
        ep.tactile_whole.cols() != stats.whole_dim || ep.tactile_thumb.cols() != stats.thumb_dim)
        throw DimensionError("apply_scaler: episode dimensions do not match the fitted stats");

    ProcessedEpisode out;
    out.joints_dim = stats.joints_dim;
    out.torques_dim = stats.torques_dim;
    out.whole_dim = stats.whole_dim;
    out.thumb_dim = stats.thumb_dim;
    out.labels = ep.labels;
    out.switch_marks = ep.switch_marks;

    const std::size_t t_len = ep.steps();
    const std::size_t dim = stats.total_dim();
    out.inputs.resize(t_len, dim);
    for (std::size_t t = 0; t < t_len; ++t) {
        double* row = out.inputs.row_ptr(t);
        std::size_t c = 0;
        auto emit = [&](const Matrix& m) {
            for (std::size_t j = 0; j < m.cols(); ++j, ++c)
                row[c] = scale_value(m(t, j), stats.col_min[c], stats.col_max[c],
                                     stats.col_degenerate[c]);
        };
        emit(ep.joints);
        emit(ep.torques);
        emit(ep.tactile_whole);
        emit(ep.tactile_thumb);
    }
    return out;
}

void unscale_columns(Matrix& values, std::size_t col_offset, const NormalizationStats& stats) {
    if (col_offset + values.cols() > stats.total_dim())
        throw DimensionError("unscale_columns: column range exceeds fitted layout");
    for (std::size_t r = 0; r < values.rows(); ++r) {
        for (std::size_t j = 0; j < values.cols(); ++j) {
            const std::size_t c = col_offset + j;
            values(r, j) = unscale_value(values(r, j), stats.col_min[c], stats.col_max[c],
                                         stats.col_degenerate[c]);
        }
    }
}

ProcessedEpisode make_targets(const ProcessedEpisode& ep, std::size_t horizon) {
    if (ep.steps() <= horizon)
        throw ConfigError("make_targets: episode shorter than prediction horizon");
    ProcessedEpisode out;
    out.joints_dim = ep.joints_dim;
    out.torques_dim = ep.torques_dim;
    out.whole_dim = ep.whole_dim;
    out.thumb_dim = ep.thumb_dim;
    const std::size_t t_new = ep.steps() - horizon;
    out.inputs.resize(t_new, ep.inputs.cols());
    out.targets.resize(t_new, ep.inputs.cols());
    for (std::size_t t = 0; t < t_new; ++t) {
        for (std::size_t j = 0; j < ep.inputs.cols(); ++j) {
            out.inputs(t, j) = ep.inputs(t, j);
            out.targets(t, j) = ep.inputs(t + horizon, j);
        }
    }
    out.labels.assign(ep.labels.begin(), ep.labels.begin() + static_cast<long>(t_new));
    for (std::size_t m : ep.switch_marks)
        if (m <= t_new) out.switch_marks.push_back(m);
    return out;
}

void add_noise_in_place(Matrix& inputs, const ProcessedEpisode& layout,
                        const std::array<double, 4>& sigma, std::uint64_t seed) {
    Rng rng(seed);
    const std::array<std::pair<std::size_t, std::size_t>, 4> spans = {{
        {layout.joints_offset(), layout.joints_dim},
        {layout.torques_offset(), layout.torques_dim},
        {layout.whole_offset(), layout.whole_dim},
        {layout.thumb_offset(), layout.thumb_dim},
    }};
    for (std::size_t t = 0; t < inputs.rows(); ++t) {
        double* row = inputs.row_ptr(t);
        for (std::size_t k = 0; k < 4; ++k) {
            if (sigma[k] == 0.0) continue;
            const auto [off, width] = spans[k];
            for (std::size_t j = 0; j < width; ++j) row[off + j] += sigma[k] * rng.gaussian();
        }
    }
}

ProcessedEpisode add_noise(const ProcessedEpisode& ep, const std::array<double, 4>& sigma,
                           std::uint64_t seed) {
    ProcessedEpisode out = ep;
    add_noise_in_place(out.inputs, ep, sigma, seed);
    return out;
}

}  // namespace aelstm
