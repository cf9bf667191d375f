#include "aelstm/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "aelstm/errors.hpp"

namespace aelstm {

namespace {

// Builds the model-space input row from one raw observation.
Matrix encode_observation(const Observation& obs, TrainedStack& stack) {
    const NormalizationStats& st = stack.scaler;
    const ModalityLayout& layout = stack.policy.layout;

    Matrix whole = obs.tactile_whole;
    Matrix thumb = obs.tactile_thumb;
    for (std::size_t i = 0; i < whole.size(); ++i)
        whole.at_flat(i) = std::clamp(whole.at_flat(i), -st.clip_bound, st.clip_bound);
    for (std::size_t i = 0; i < thumb.size(); ++i)
        thumb.at_flat(i) = std::clamp(thumb.at_flat(i), -st.clip_bound, st.clip_bound);

    const std::size_t jd = st.joints_dim;
    auto norm = [&](const Matrix& m, std::size_t col_offset) {
        Matrix out = m;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const std::size_t c = col_offset + j;
            out(0, j) = scale_value(m(0, j), st.col_min[c], st.col_max[c],
                                    st.col_degenerate[c]);
        }
        return out;
    };
    const Matrix joints_n = norm(obs.joints, 0);
    const Matrix torques_n = norm(obs.torques, jd);
    const Matrix whole_n = norm(whole, 2 * jd);
    const Matrix thumb_n = norm(thumb, 2 * jd + st.whole_dim);

    const Matrix zw = stack.ae_whole.encode(whole_n);
    Matrix x(1, layout.total());
    std::size_t col = 0;
    auto paste = [&](const Matrix& block) {
        std::copy(block.data(), block.data() + block.cols(), x.data() + col);
        col += block.cols();
    };
    paste(zw);
    if (layout.thumb_present) paste(stack.ae_thumb.encode(thumb_n));
    paste(joints_n);
    paste(torques_n);
    return x;
}

}  // namespace

RolloutResult rollout(CapOpeningEnv& env, const Scenario& scenario, TrainedStack& stack,
                      const JudgeConfig& judge_cfg) {
    RolloutResult res;
    Observation obs = env.reset(scenario);
    env.enable_phase_classifier(true);

    PolicyRunner runner(stack.policy);
    const std::size_t j_n = env.config().joints;
    const std::size_t joint_off = stack.policy.layout.offset(Modality::Joints);

    std::vector<double> attn_rows, hidden_rows, cmd_rows;
    Matrix prev_cmd = env.joints();
    std::string abort_reason;

    std::size_t t = 0;
    for (; t < judge_cfg.max_steps; ++t) {
        const Matrix x = encode_observation(obs, stack);
        const PolicyRunner::StepOut out = runner.step(x);

        // predicted joints (2 steps ahead) actuate; everything else is logged
        Matrix cmd(1, j_n);
        std::copy(out.y.data() + joint_off, out.y.data() + joint_off + j_n, cmd.data());
        unscale_columns(cmd, 0, stack.scaler);

        if (!cmd.all_finite()) {
            abort_reason = "policy produced a non-finite joint command";
            break;
        }

        double dmax = 0.0;
        for (std::size_t j = 0; j < j_n; ++j)
            dmax = std::max(dmax, std::abs(cmd(0, j) - prev_cmd(0, j)));
        res.traces.cmd_delta.push_back(dmax);
        prev_cmd = cmd;

        try {
            obs = env.step(cmd);
        } catch (const NumericError& e) {
            abort_reason = e.what();
            break;
        }

        if (!out.attention.empty())
            attn_rows.insert(attn_rows.end(), out.attention.data(),
                             out.attention.data() + out.attention.cols());
        hidden_rows.insert(hidden_rows.end(), runner.hidden().data(),
                           runner.hidden().data() + runner.hidden().cols());
        cmd_rows.insert(cmd_rows.end(), cmd.data(), cmd.data() + j_n);
        res.traces.phases.push_back(env.phase());
    }

    const std::size_t ticks = res.traces.phases.size();
    if (!attn_rows.empty()) {
        res.traces.attention.resize(ticks, kModalityCount);
        std::copy(attn_rows.begin(), attn_rows.end(), res.traces.attention.data());
    }
    res.traces.hidden.resize(ticks, stack.policy.hidden_dim);
    std::copy(hidden_rows.begin(), hidden_rows.end(), res.traces.hidden.data());
    res.traces.commands.resize(ticks, j_n);
    std::copy(cmd_rows.begin(), cmd_rows.end(), res.traces.commands.data());

    if (!abort_reason.empty()) {
        res.outcome.result = TrialResult::Failure;
        res.outcome.steps_used = t;
        res.outcome.reason = abort_reason;
        return res;
    }
    res.outcome = judge(res.traces.cmd_delta, env.open_tick(), judge_cfg);
    return res;
}

void write_attention_trace(const std::string& path, const TrialTraces& traces,
                           std::uint64_t config_hash) {
    if (traces.attention.empty())
        throw StateError("attention trace: model has no attention weights to export");
    std::ofstream os(path);
    if (!os) throw IoError("trace: cannot open '" + path + "'");
    os << "# config_hash=" << std::hex << config_hash << std::dec << "\n";
    os << "t,A_joint,A_torque,A_whole_tactile,A_thumb_tactile,subtask_label\n";
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    for (std::size_t t = 0; t < traces.attention.rows(); ++t) {
        os << t << ',';
        put(traces.attention(t, static_cast<std::size_t>(Modality::Joints)));
        os << ',';
        put(traces.attention(t, static_cast<std::size_t>(Modality::Torques)));
        os << ',';
        put(traces.attention(t, static_cast<std::size_t>(Modality::TactileWhole)));
        os << ',';
        put(traces.attention(t, static_cast<std::size_t>(Modality::TactileThumb)));
        os << ',' << subtask_name(traces.phases[t]) << "\n";
    }
}

void write_hidden_trace(const std::string& path, const TrialTraces& traces,
                        std::uint64_t config_hash) {
    std::ofstream os(path);
    if (!os) throw IoError("trace: cannot open '" + path + "'");
    os << "# config_hash=" << std::hex << config_hash << std::dec << "\n";
    os << "t,subtask_label";
    for (std::size_t i = 0; i < traces.hidden.cols(); ++i) os << ",h_" << i;
    os << "\n";
    char buf[40];
    for (std::size_t t = 0; t < traces.hidden.rows(); ++t) {
        os << t << ',' << subtask_name(traces.phases[t]);
        for (std::size_t i = 0; i < traces.hidden.cols(); ++i) {
            std::snprintf(buf, sizeof buf, ",%.17g", traces.hidden(t, i));
            os << buf;
        }
        os << "\n";
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string tok;
    std::istringstream ss(line);
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
}

}  // namespace

LoadedTrace read_attention_trace(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DependencyError("trace: missing file '" + path + "'");
    std::string line;
    std::vector<std::array<double, 4>> rows;
    LoadedTrace out;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("t,", 0) == 0) continue;
        const auto f = split_csv(line);
        if (f.size() != 6) throw IoError("trace: malformed row in '" + path + "'");
        rows.push_back({std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), std::stod(f[4])});
        out.phases.push_back(subtask_from_name(f[5]));
    }
    out.attention.resize(rows.size(), 4);
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t k = 0; k < 4; ++k) out.attention(t, k) = rows[t][k];
    return out;
}

LoadedTrace read_hidden_trace(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DependencyError("trace: missing file '" + path + "'");
    std::string line;
    std::vector<std::vector<double>> rows;
    LoadedTrace out;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("t,", 0) == 0) continue;
        const auto f = split_csv(line);
        if (f.size() < 3) throw IoError("trace: malformed row in '" + path + "'");
        out.phases.push_back(subtask_from_name(f[1]));
        std::vector<double> h;
        for (std::size_t i = 2; i < f.size(); ++i) h.push_back(std::stod(f[i]));
        rows.push_back(std::move(h));
    }
    if (!rows.empty()) {
        out.hidden.resize(rows.size(), rows[0].size());
        for (std::size_t t = 0; t < rows.size(); ++t)
            std::copy(rows[t].begin(), rows[t].end(), out.hidden.row_ptr(t));
    }
    return out;
}

}  // namespace aelstm
