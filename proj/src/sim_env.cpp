#include "aelstm/sim_env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "aelstm/errors.hpp"

namespace aelstm {

namespace {

constexpr double kJointLimit = 1.5;
constexpr double kAuxPosture[4] = {0.45, 0.35, 0.40, 0.30};
constexpr double kCapSigma = 0.12;    // cap contact footprint on the thumb pad
constexpr double kCapProxSigma = 0.2; // torque coupling with cap alignment
constexpr double kFingerSpan = 1.3;
constexpr double kThumbSpan = 0.2;

// expert phase durations, in control ticks
constexpr std::size_t kGraspTicks = 6;
constexpr std::size_t kTryOpenTicks = 12;
constexpr std::size_t kRetractTicks = 6;
constexpr std::size_t kSlideTicks = 12;
constexpr std::size_t kStopTicks = 10;
constexpr double kPressTarget = 0.70;
constexpr double kTwistTarget = 0.72;
constexpr double kSlideLoose = 0.5;
constexpr double kMaxStroke = 1.15;

double lerp(double a, double b, double t) { return a + (b - a) * t; }

double taxel_pos(std::size_t k, std::size_t count, double span) {
    if (count == 1) return 0.0;
    return lerp(-span, span, static_cast<double>(k) / static_cast<double>(count - 1));
}

double bump(double d, double sigma) { return std::exp(-d * d / (2.0 * sigma * sigma)); }

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

const char* trial_result_name(TrialResult r) {
    switch (r) {
        case TrialResult::CompleteSuccess: return "complete";
        case TrialResult::PartialSuccess: return "partial";
        case TrialResult::Failure: return "failure";
    }
    return "?";
}

TrialResult trial_result_from_name(const std::string& name) {
    if (name == "complete") return TrialResult::CompleteSuccess;
    if (name == "partial") return TrialResult::PartialSuccess;
    if (name == "failure") return TrialResult::Failure;
    throw IoError("unknown trial result '" + name + "'");
}

std::vector<std::size_t> EnvConfig::thumb_source_columns() const {
    // thumb stream taxel j mirrors patch-1 taxel 2j (a stride-2 sub-block)
    std::vector<std::size_t> cols;
    cols.reserve(thumb_dim());
    for (std::size_t j = 0; j < thumb_taxels; ++j)
        for (std::size_t a = 0; a < axes; ++a)
            cols.push_back((taxels_per_patch + 2 * j) * axes + a);
    return cols;
}

EvalOutcome judge(const std::vector<double>& cmd_max_delta,
                  std::optional<std::size_t> open_tick, const JudgeConfig& cfg) {
    EvalOutcome out;
    const std::size_t len = std::min(cmd_max_delta.size(), cfg.max_steps);
    out.steps_used = len;
    if (!open_tick || *open_tick >= len) {
        out.result = TrialResult::Failure;
        out.reason = "cap not opened within the step limit";
        return out;
    }
    out.open_step = *open_tick;
    const std::size_t o = *open_tick;
    for (std::size_t s = o; s <= o + cfg.grace_steps && s < len; ++s) {
        const std::size_t end = std::min(len, s + cfg.hold_steps);
        bool frozen = true;
        for (std::size_t t = s; t < end; ++t) {
            if (cmd_max_delta[t] >= cfg.freeze_eps) {
                frozen = false;
                break;
            }
        }
        if (frozen) {
            out.result = TrialResult::CompleteSuccess;
            out.stop_step = s;
            return out;
        }
    }
    out.result = TrialResult::PartialSuccess;
    out.reason = "cap opened but motion continued past the grace window";
    return out;
}

CapOpeningEnv::CapOpeningEnv(const EnvConfig& cfg) : cfg_(cfg), rng_(0) {
    if (cfg_.joints < 8) throw ConfigError("env: at least 8 joints required");
    if (cfg_.thumb_taxels * 2 > cfg_.taxels_per_patch)
        throw ConfigError("env: thumb stream wants more taxels than the thumb patch has");
}

Observation CapOpeningEnv::reset(const Scenario& scenario) {
    scenario_ = scenario;
    if (std::abs(scenario.initial_pos) > cfg_.reach)
        throw ConfigError("env: initial position outside reach");
    rng_ = Rng(Rng::mix(scenario.noise_seed, 0xE57ULL));
    joints_.resize(1, cfg_.joints);
    prev_cmd_.resize(1, cfg_.joints);
    object_pos_ = scenario.initial_pos;
    cap_open_ = false;
    twist_progress_ = 0.0;
    open_tick_.reset();
    phase_ = SubTask::Grasp;
    tick_ = 0;
    pos_delta_tick_ = 0.0;
    grip_delta_sub_ = twist_delta_sub_ = slip_sub_ = 0.0;
    still_ticks_ = 0;
    drift_tactile_.assign(2 * cfg_.axes, 0.0);
    drift_torque_.assign(cfg_.joints, 0.0);
    const double stationary = cfg_.gain_drift;
    for (double& d : drift_tactile_) d = stationary * rng_.gaussian();
    for (double& d : drift_torque_) d = stationary * rng_.gaussian();
    recording_ = false;
    rec_joints_.clear();
    rec_torques_.clear();
    rec_whole_.clear();
    rec_thumb_.clear();
    rec_labels_.clear();
    return observe();
}

void CapOpeningEnv::start_recording() { recording_ = true; }

RawEpisode CapOpeningEnv::finish_recording() {
    recording_ = false;
    RawEpisode out;
    out.sample_rate_hz = cfg_.raw_rate_hz;
    const std::size_t frames = rec_labels_.size();
    out.joints.resize(frames, cfg_.joints);
    out.torques.resize(frames, cfg_.joints);
    out.tactile_whole.resize(frames, cfg_.whole_dim());
    out.tactile_thumb.resize(frames, cfg_.thumb_dim());
    out.labels = rec_labels_;
    for (std::size_t t = 0; t < frames; ++t) {
        std::copy_n(rec_joints_.begin() + t * cfg_.joints, cfg_.joints, out.joints.row_ptr(t));
        std::copy_n(rec_torques_.begin() + t * cfg_.joints, cfg_.joints, out.torques.row_ptr(t));
        std::copy_n(rec_whole_.begin() + t * cfg_.whole_dim(), cfg_.whole_dim(),
                    out.tactile_whole.row_ptr(t));
        std::copy_n(rec_thumb_.begin() + t * cfg_.thumb_dim(), cfg_.thumb_dim(),
                    out.tactile_thumb.row_ptr(t));
    }
    for (std::size_t t = 1; t < frames; ++t)
        if (out.labels[t] != out.labels[t - 1]) out.switch_marks.push_back(t);
    rec_joints_.clear();
    rec_torques_.clear();
    rec_whole_.clear();
    rec_thumb_.clear();
    rec_labels_.clear();
    return out;
}

EnvState CapOpeningEnv::state() const {
    EnvState s;
    s.object_pos = object_pos_;
    s.cap_open = cap_open_;
    s.joints = joints_;
    s.phase = phase_;
    s.tick = tick_;
    return s;
}

void CapOpeningEnv::advance_substep(const Matrix& cmd) {
    // slow sensor-gain drift (sensitivity wander, common per patch and axis)
    const double innov = cfg_.gain_drift * std::sqrt(1.0 - cfg_.drift_rho * cfg_.drift_rho);
    for (double& d : drift_tactile_) d = cfg_.drift_rho * d + innov * rng_.gaussian();
    for (double& d : drift_torque_) d = cfg_.drift_rho * d + innov * rng_.gaussian();

    const double old_j1 = joints_(0, 1);
    for (std::size_t j = 0; j < cfg_.joints; ++j) {
        const double target = std::clamp(cmd(0, j), -kJointLimit, kJointLimit);
        const double delta = std::clamp(target - joints_(0, j), -cfg_.rate_limit, cfg_.rate_limit);
        if (j == 0) grip_delta_sub_ = delta;
        if (j == 3) twist_delta_sub_ = delta;
        joints_(0, j) += delta;
    }

    slip_sub_ = 0.0;
    if (joints_(0, 0) >= cfg_.grip_hold) {
        const double moved = scenario_.object.slide_gain * (joints_(0, 1) - old_j1);
        const double fresh = std::clamp(object_pos_ + moved, -cfg_.reach, cfg_.reach);
        slip_sub_ = fresh - object_pos_;
        object_pos_ = fresh;
        pos_delta_tick_ += slip_sub_;
    }

    if (!cap_open_) {
        // leaky accumulator: only a sustained press-and-twist gesture with the
        // bottle held in the window opens the cap; command jitter decays away.
        // The thumb grips the cap best dead-center, so accumulation scales
        // with alignment and sloppy positioning stalls the attempt.
        const bool pressed =
            joints_(0, 2) >= cfg_.press_threshold && joints_(0, 0) >= cfg_.grip_hold;
        const bool in_window = std::abs(object_pos_) <= scenario_.object.window_halfwidth;
        twist_progress_ *= 0.97;
        if (pressed && in_window) {
            const double alignment = bump(object_pos_, 0.15);
            twist_progress_ += std::max(0.0, twist_delta_sub_) * alignment;
        }
        if (twist_progress_ >= cfg_.twist_required) {
            cap_open_ = true;
            open_tick_ = tick_;
        }
    }
}

Observation CapOpeningEnv::observe() {
    const std::size_t j_n = cfg_.joints;
    const double gain = scenario_.object.tactile_gain;
    const double noise = cfg_.sensor_noise;
    Observation obs;
    obs.joints.resize(1, j_n);
    obs.torques.resize(1, j_n);
    obs.tactile_whole.resize(1, cfg_.whole_dim());
    obs.tactile_thumb.resize(1, cfg_.thumb_dim());

    const double grip = clamp01((joints_(0, 0) - 0.05) / (cfg_.grip_closed - 0.05));
    const double press = clamp01((joints_(0, 2) - 0.1) / 0.5);
    const double resist = cap_open_ ? cfg_.open_cap_resist : 1.0;
    const double spike = 1.0 + cfg_.contact_spike * std::max(0.0, grip_delta_sub_) / cfg_.rate_limit;
    const double v_norm =
        slip_sub_ / (scenario_.object.slide_gain * cfg_.rate_limit);  // in [-1, 1]
    const double twist_rate = twist_delta_sub_ / cfg_.rate_limit;
    const double cap_prox = bump(object_pos_, kCapProxSigma);
    const double sigma_obj = scenario_.object.length / 2.2;
    double aux_mean = 0.0;
    for (std::size_t j = 4; j < 8; ++j) aux_mean += joints_(0, j);
    aux_mean = clamp01(aux_mean / (4.0 * 0.4));

    for (std::size_t j = 0; j < j_n; ++j)
        obs.joints(0, j) = joints_(0, j) + 0.002 * noise * rng_.gaussian();

    obs.torques(0, 0) = 1.5 * grip * (1.0 + 0.4 * std::max(0.0, grip_delta_sub_) / cfg_.rate_limit);
    obs.torques(0, 1) = 0.9 * grip * std::abs(v_norm);
    obs.torques(0, 2) = 1.2 * press * (0.15 + 0.85 * cap_prox * resist);
    obs.torques(0, 3) = 1.6 * press * cap_prox * resist * std::abs(twist_rate);
    for (std::size_t j = 4; j < j_n; ++j) obs.torques(0, j) = 0.25 * joints_(0, j);
    for (std::size_t j = 0; j < j_n; ++j)
        obs.torques(0, j) = obs.torques(0, j) * (1.0 + drift_torque_[j]) +
                            0.015 * noise * rng_.gaussian();

    // patch 0: finger strip along the slide axis
    for (std::size_t k = 0; k < cfg_.taxels_per_patch; ++k) {
        const double xk = taxel_pos(k, cfg_.taxels_per_patch, kFingerSpan);
        const double b = bump(xk - object_pos_, sigma_obj);
        const std::size_t base = k * cfg_.axes;
        obs.tactile_whole(0, base + 0) = -0.9 * gain * grip * b * v_norm;
        obs.tactile_whole(0, base + 1) = 0.15 * gain * grip * b * aux_mean;
        obs.tactile_whole(0, base + 2) = gain * grip * b * spike;
    }
    // patch 1: thumb pad over the cap
    const std::size_t patch1 = cfg_.taxels_per_patch * cfg_.axes;
    for (std::size_t k = 0; k < cfg_.taxels_per_patch; ++k) {
        const double tk = taxel_pos(k, cfg_.taxels_per_patch, kThumbSpan);
        const double b = bump(tk - object_pos_, kCapSigma);
        const std::size_t base = patch1 + k * cfg_.axes;
        const double rest = cap_open_ ? cfg_.cap_rest_contact * gain * b : 0.0;
        obs.tactile_whole(0, base + 0) = 0.8 * gain * press * b * resist * twist_rate;
        obs.tactile_whole(0, base + 1) = 0.02 * gain * grip * b;
        obs.tactile_whole(0, base + 2) = gain * press * b * resist + rest;
    }
    for (std::size_t p = 0; p < 2; ++p)
        for (std::size_t k = 0; k < cfg_.taxels_per_patch; ++k)
            for (std::size_t a = 0; a < cfg_.axes; ++a) {
                const std::size_t col = (p * cfg_.taxels_per_patch + k) * cfg_.axes + a;
                obs.tactile_whole(0, col) *= 1.0 + drift_tactile_[p * cfg_.axes + a];
            }
    for (std::size_t i = 0; i < cfg_.whole_dim(); ++i)
        obs.tactile_whole(0, i) += 3.0 * noise * rng_.gaussian();

    const auto src = cfg_.thumb_source_columns();
    for (std::size_t i = 0; i < src.size(); ++i)
        obs.tactile_thumb(0, i) = obs.tactile_whole(0, src[i]);
    return obs;
}

void CapOpeningEnv::record_frame() {
    const Observation obs = observe();
    rec_joints_.insert(rec_joints_.end(), obs.joints.data(), obs.joints.data() + cfg_.joints);
    rec_torques_.insert(rec_torques_.end(), obs.torques.data(), obs.torques.data() + cfg_.joints);
    rec_whole_.insert(rec_whole_.end(), obs.tactile_whole.data(),
                      obs.tactile_whole.data() + cfg_.whole_dim());
    rec_thumb_.insert(rec_thumb_.end(), obs.tactile_thumb.data(),
                      obs.tactile_thumb.data() + cfg_.thumb_dim());
    rec_labels_.push_back(phase_);
}

SubTask CapOpeningEnv::classify(const Matrix& cmd) const {
    double dmax = 0.0;
    for (std::size_t j = 0; j < cfg_.joints; ++j)
        dmax = std::max(dmax, std::abs(cmd(0, j) - prev_cmd_(0, j)));
    const bool thumb_active = cmd(0, 2) > 0.2 || cmd(0, 3) > 0.05;
    const bool prev_slide = phase_ == SubTask::SlideLeft || phase_ == SubTask::SlideRight;

    if (dmax < 0.004) return still_ticks_ >= 4 ? SubTask::Stop : phase_;
    if (thumb_active) return SubTask::TryOpen;
    if (std::abs(pos_delta_tick_) > 0.005)
        return pos_delta_tick_ > 0 ? SubTask::SlideRight : SubTask::SlideLeft;
    if (prev_slide && (std::abs(cmd(0, 1) - prev_cmd_(0, 1)) > 0.003 ||
                       std::abs(cmd(0, 0) - prev_cmd_(0, 0)) > 0.003))
        return phase_;
    if (std::abs(cmd(0, 0) - prev_cmd_(0, 0)) > 0.005)
        return phase_ == SubTask::TryOpen ? SubTask::RetractThumb : SubTask::Grasp;
    if (std::abs(cmd(0, 1) - prev_cmd_(0, 1)) > 0.005)
        return cmd(0, 1) > prev_cmd_(0, 1) ? SubTask::SlideRight : SubTask::SlideLeft;
    return phase_;
}

Observation CapOpeningEnv::step(const Matrix& joint_cmd) {
    if (joint_cmd.rows() != 1 || joint_cmd.cols() != cfg_.joints)
        throw DimensionError("env step: command is " + joint_cmd.shape_str() + ", expected 1x" +
                             std::to_string(cfg_.joints));
    if (!joint_cmd.all_finite())
        throw NumericError("env step: non-finite joint command at tick " + std::to_string(tick_));

    pos_delta_tick_ = 0.0;
    for (std::size_t s = 0; s < cfg_.substeps; ++s) {
        if (recording_) record_frame();
        advance_substep(joint_cmd);
    }

    double dmax = 0.0;
    for (std::size_t j = 0; j < cfg_.joints; ++j)
        dmax = std::max(dmax, std::abs(joint_cmd(0, j) - prev_cmd_(0, j)));
    still_ticks_ = dmax < 0.004 ? still_ticks_ + 1 : 0;
    if (classify_) phase_ = classify(joint_cmd);
    prev_cmd_ = joint_cmd;
    ++tick_;
    return observe();
}

ExpertPolicy::ExpertPolicy(const EnvConfig& cfg) : cfg_(cfg) { reset(); }

void ExpertPolicy::reset() {
    phase_ = SubTask::Grasp;
    tick_in_phase_ = 0;
    phase_start_ = Matrix();
    slide_stroke_ = 0.0;
}

namespace {

std::size_t phase_duration(SubTask p) {
    switch (p) {
        case SubTask::Grasp: return kGraspTicks;
        case SubTask::TryOpen: return kTryOpenTicks;
        case SubTask::RetractThumb: return kRetractTicks;
        case SubTask::SlideLeft:
        case SubTask::SlideRight: return kSlideTicks;
        case SubTask::Stop: return kStopTicks;
    }
    return 1;
}

}  // namespace

void ExpertPolicy::enter(SubTask phase, const CapOpeningEnv& env) {
    phase_ = phase;
    tick_in_phase_ = 0;
    phase_start_ = env.joints();
    if (phase == SubTask::SlideLeft || phase == SubTask::SlideRight) {
        const double need = -env.object_pos();  // slide the cap under the thumb
        slide_stroke_ = std::clamp(need / env.scenario().object.slide_gain, -kMaxStroke,
                                   kMaxStroke);
    }
}

ExpertPolicy::Decision ExpertPolicy::act(const CapOpeningEnv& env) {
    if (phase_start_.empty()) phase_start_ = env.joints();
    if (tick_in_phase_ >= phase_duration(phase_)) {
        SubTask next = phase_;
        switch (phase_) {
            case SubTask::Grasp: next = SubTask::TryOpen; break;
            case SubTask::TryOpen:
                next = env.cap_open() ? SubTask::Stop : SubTask::RetractThumb;
                break;
            case SubTask::RetractThumb:
                next = env.object_pos() < 0 ? SubTask::SlideRight : SubTask::SlideLeft;
                break;
            case SubTask::SlideLeft:
            case SubTask::SlideRight: next = SubTask::TryOpen; break;
            case SubTask::Stop: next = SubTask::Stop; break;
        }
        enter(next, env);
    }

    const std::size_t t = tick_in_phase_;
    const Matrix& s = phase_start_;
    Matrix cmd = s;
    auto seg = [&](std::size_t lo, std::size_t hi, double from, double to) {
        // linear move over ticks [lo, hi]; returns the command for tick t
        if (t < lo) return from;
        if (t > hi) return to;
        const double frac = static_cast<double>(t - lo + 1) / static_cast<double>(hi - lo + 1);
        return lerp(from, to, frac);
    };

    switch (phase_) {
        case SubTask::Grasp: {
            cmd(0, 0) = seg(0, 3, s(0, 0), cfg_.grip_closed);
            for (std::size_t j = 4; j < 8; ++j) cmd(0, j) = seg(0, 3, s(0, j), kAuxPosture[j - 4]);
            cmd(0, 1) = s(0, 1);
            cmd(0, 2) = 0.0;
            cmd(0, 3) = 0.0;
            break;
        }
        case SubTask::TryOpen: {
            cmd(0, 2) = t <= 6 ? seg(0, 2, s(0, 2), kPressTarget) : seg(7, 9, kPressTarget, 0.0);
            cmd(0, 3) = t <= 2 ? s(0, 3)
                                : (t <= 6 ? seg(3, 6, s(0, 3), kTwistTarget)
                                          : seg(7, 9, kTwistTarget, 0.0));
            break;
        }
        case SubTask::RetractThumb: {
            cmd(0, 2) = 0.0;
            cmd(0, 3) = 0.0;
            cmd(0, 0) = t <= 1 ? seg(0, 1, s(0, 0), 0.62) : seg(2, 3, 0.62, cfg_.grip_closed);
            break;
        }
        case SubTask::SlideLeft:
        case SubTask::SlideRight: {
            cmd(0, 1) = t <= 4 ? seg(0, 4, s(0, 1), s(0, 1) + slide_stroke_)
                               : seg(6, 9, s(0, 1) + slide_stroke_, s(0, 1));
            cmd(0, 0) = t <= 4 ? s(0, 0)
                                : (t <= 9 ? seg(5, 5, s(0, 0), kSlideLoose)
                                          : seg(10, 10, kSlideLoose, cfg_.grip_closed));
            break;
        }
        case SubTask::Stop:
            break;  // hold the posture captured at entry
    }

    ++tick_in_phase_;
    Decision d;
    d.command = cmd;
    d.phase = phase_;
    d.done = phase_ == SubTask::Stop && tick_in_phase_ >= phase_duration(SubTask::Stop);
    return d;
}

std::vector<ObjectSpec> trained_object_set() {
    return {
        {0, true, 0.60, 450.0, 0.15, 1.00, "bottle_a"},
        {1, true, 0.70, 400.0, 0.18, 1.05, "bottle_b"},
        {2, true, 0.52, 500.0, 0.13, 0.95, "bottle_c"},
        {3, true, 0.64, 430.0, 0.16, 1.02, "bottle_d"},
    };
}

std::vector<ObjectSpec> untrained_object_set() {
    // interpolations plus mild extrapolations of the trained set, the analog
    // of evaluating on unseen bottle sizes, shapes and materials
    return {
        {10, false, 0.56, 470.0, 0.14, 0.98, "jar_a"},
        {11, false, 0.68, 580.0, 0.17, 1.12, "jar_b"},
        {12, false, 0.46, 320.0, 0.12, 0.88, "jar_c"},
        {13, false, 0.76, 610.0, 0.21, 1.15, "jar_d"},
        {14, false, 0.61, 460.0, 0.10, 1.00, "jar_e"},
        {15, false, 0.54, 300.0, 0.19, 0.85, "jar_f"},
    };
}

std::vector<double> training_positions() { return {-1.0, -0.5, 0.0, 0.5, 1.0}; }
std::vector<double> trained_eval_positions() { return {-0.75, -0.25, 0.25, 0.75}; }
std::vector<double> untrained_eval_positions() { return {-0.8, 0.1, 0.7}; }

namespace {

std::vector<Scenario> build_scenarios(const std::vector<ObjectSpec>& objects,
                                      const std::vector<double>& positions, bool trained_pos,
                                      int trials, std::uint64_t seed, const char* tag) {
    std::vector<Scenario> out;
    std::size_t idx = 0;
    for (const ObjectSpec& obj : objects) {
        for (std::size_t pi = 0; pi < positions.size(); ++pi) {
            for (int trial = 0; trial < trials; ++trial, ++idx) {
                Scenario sc;
                sc.object = obj;
                sc.initial_pos = positions[pi];
                sc.trained_position = trained_pos;
                sc.trial = trial;
                sc.noise_seed = Rng::mix(seed, 0x5C0000ULL + idx);
                sc.id = std::string(tag) + "_" + obj.name + "_p" + std::to_string(pi) + "_t" +
                        std::to_string(trial);
                out.push_back(std::move(sc));
            }
        }
    }
    return out;
}

}  // namespace

std::vector<Scenario> training_scenarios(std::uint64_t seed) {
    return build_scenarios(trained_object_set(), training_positions(), true, 2, seed, "train");
}

std::vector<Scenario> evaluation_scenarios(bool trained_set, std::uint64_t seed) {
    if (trained_set)
        return build_scenarios(trained_object_set(), trained_eval_positions(), false, 2,
                               Rng::mix(seed, 1), "eval_tr");
    return build_scenarios(untrained_object_set(), untrained_eval_positions(), false, 2,
                           Rng::mix(seed, 2), "eval_un");
}

RawEpisode run_expert_episode(CapOpeningEnv& env, const Scenario& scenario) {
    env.reset(scenario);
    env.start_recording();
    ExpertPolicy expert(env.config());
    expert.reset();
    env.set_phase(SubTask::Grasp);
    for (std::size_t guard = 0; guard < 2000; ++guard) {
        const auto d = expert.act(env);
        env.set_phase(d.phase);
        env.step(d.command);
        if (d.done) return env.finish_recording();
    }
    throw StateError("expert episode did not terminate");
}

EvalOutcome run_expert_trial(CapOpeningEnv& env, const Scenario& scenario,
                             const JudgeConfig& judge_cfg) {
    env.reset(scenario);
    ExpertPolicy expert(env.config());
    expert.reset();
    std::vector<double> deltas;
    Matrix prev = env.joints();
    Matrix last_cmd;
    bool done = false;
    for (std::size_t guard = 0; guard < judge_cfg.max_steps && !done; ++guard) {
        const auto d = expert.act(env);
        double dmax = 0.0;
        for (std::size_t j = 0; j < d.command.cols(); ++j)
            dmax = std::max(dmax, std::abs(d.command(0, j) - prev(0, j)));
        deltas.push_back(dmax);
        prev = d.command;
        last_cmd = d.command;
        env.step(d.command);
        done = d.done;
    }
    // keep holding so the judge can observe the required stillness window
    for (std::size_t k = 0; k < judge_cfg.hold_steps + judge_cfg.grace_steps &&
                            deltas.size() < judge_cfg.max_steps;
         ++k) {
        deltas.push_back(0.0);
        env.step(last_cmd);
    }
    return judge(deltas, env.open_tick(), judge_cfg);
}

std::vector<RawEpisode> generate_dataset(const EnvConfig& cfg,
                                         const std::vector<Scenario>& scenarios) {
    std::vector<RawEpisode> out;
    out.reserve(scenarios.size());
    CapOpeningEnv env(cfg);
    for (const Scenario& sc : scenarios) out.push_back(run_expert_episode(env, sc));
    return out;
}

void write_scenario_csv(const std::string& path, const std::vector<Scenario>& scenarios,
                        std::uint64_t config_hash) {
    std::ofstream os(path);
    if (!os) throw IoError("scenario list: cannot open '" + path + "'");
    os << "# config_hash=" << std::hex << config_hash << std::dec << "\n";
    os << "scenario_id,object_id,object_name,trained_object,length,tactile_gain,"
          "window_halfwidth,slide_gain,initial_pos,trained_position,trial,noise_seed\n";
    for (const Scenario& sc : scenarios) {
        os << sc.id << ',' << sc.object.id << ',' << sc.object.name << ','
           << (sc.object.trained ? 1 : 0) << ',' << sc.object.length << ','
           << sc.object.tactile_gain << ',' << sc.object.window_halfwidth << ','
           << sc.object.slide_gain << ',' << sc.initial_pos << ','
           << (sc.trained_position ? 1 : 0) << ',' << sc.trial << ',' << sc.noise_seed << "\n";
    }
}

}  // namespace aelstm
