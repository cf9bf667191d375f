#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aelstm/episode.hpp"
#include "aelstm/preprocess.hpp"
#include "aelstm/random.hpp"

namespace aelstm {

// Deterministic kinematic stand-in for the multi-fingered cap-opening task.
// The world is one-dimensional: a bottle at a lateral position can be slid
// by the fingers while gripped, and its cap opens only when a press-and-
// twist thumb trajectory executes while the bottle sits inside the openable
// window under the thumb. Observations are joints, torques and two tactile
// patches (a finger strip that localizes the bottle and a thumb pad that
// feels the cap). Everything is seeded and bit-reproducible.

struct ObjectSpec {
    int id = 0;
    bool trained = true;
    double length = 0.6;            // contact footprint on the finger strip
    double tactile_gain = 450.0;    // raw sensor counts per unit force
    double window_halfwidth = 0.15; // openable position interval around 0
    double slide_gain = 1.0;        // object displacement per rad of slide joint
    std::string name;
};

struct Scenario {
    ObjectSpec object;
    double initial_pos = 0.0;
    bool trained_position = true;
    std::uint64_t noise_seed = 0;
    int trial = 0;
    std::string id;
};

struct EnvConfig {
    std::size_t joints = 8;            // j0 grip, j1 slide, j2 thumb press, j3 thumb twist, j4..j7 aux
    std::size_t taxels_per_patch = 16; // patch0 finger strip, patch1 thumb pad
    std::size_t thumb_taxels = 8;      // every other patch1 taxel, duplicated into the thumb stream
    std::size_t axes = 3;              // x shear, y shear, z normal
    std::size_t substeps = 10;         // raw frames per control tick
    double raw_rate_hz = 100.0;
    double control_rate_hz = 10.0;
    double rate_limit = 0.03;          // rad per raw substep
    double sensor_noise = 1.0;         // master noise scale
    double reach = 1.2;                // object positions live in [-reach, reach]
    double grip_closed = 0.8;
    double grip_hold = 0.6;            // grip needed for the object to follow the slide joint
    double press_threshold = 0.45;
    double twist_required = 0.30;      // decayed twist accumulation needed to open
    double open_cap_resist = 0.15;     // thumb contact scale once the cap has yielded
    double cap_rest_contact = 0.12;    // persistent loose-cap signature after opening
    double contact_spike = 2.0;        // onset transient multiplier on finger normals
    double gain_drift = 0.15;          // stationary std of the slow sensor-gain drift
    double drift_rho = 0.995;          // AR(1) pole per raw substep (~2 s time constant)

    std::size_t whole_dim() const { return 2 * taxels_per_patch * axes; }
    std::size_t thumb_dim() const { return thumb_taxels * axes; }
    TactileGrouping whole_grouping() const { return {2, taxels_per_patch, axes}; }
    TactileGrouping thumb_grouping() const { return {1, thumb_taxels, axes}; }
    // Columns of the whole stream that the thumb stream duplicates.
    std::vector<std::size_t> thumb_source_columns() const;
};

struct Observation {
    Matrix joints, torques, tactile_whole, tactile_thumb;  // all 1 x dim
};

struct EnvState {
    double object_pos = 0.0;
    bool cap_open = false;
    Matrix joints;
    SubTask phase = SubTask::Grasp;
    std::size_t tick = 0;
};

enum class TrialResult { CompleteSuccess, PartialSuccess, Failure };
const char* trial_result_name(TrialResult r);
TrialResult trial_result_from_name(const std::string& name);

struct EvalOutcome {
    TrialResult result = TrialResult::Failure;
    std::size_t steps_used = 0;
    std::optional<std::size_t> open_step;
    std::optional<std::size_t> stop_step;
    std::string reason;
};

struct JudgeConfig {
    std::size_t max_steps = 900;   // 90 s at 10 Hz
    std::size_t grace_steps = 20;  // "immediately stopped" window (2 s)
    std::size_t hold_steps = 50;   // stillness required to count as stopped
    double freeze_eps = 0.01;      // rad; commanded-motion threshold
};

// Classifies a trial from its commanded-motion trace. Complete success means
// the cap opened and the commands froze (max per-tick delta < freeze_eps,
// sustained for hold_steps) starting within grace_steps of the opening;
// opened-but-still-moving is partial; not opened within max_steps is failure.
EvalOutcome judge(const std::vector<double>& cmd_max_delta,
                  std::optional<std::size_t> open_tick, const JudgeConfig& cfg);

class CapOpeningEnv {
public:
    explicit CapOpeningEnv(const EnvConfig& cfg);

    Observation reset(const Scenario& scenario);
    // One control tick: rate-limited motion toward `joint_cmd` over
    // `substeps` raw frames, then a fresh observation of the new state.
    Observation step(const Matrix& joint_cmd);

    double object_pos() const { return object_pos_; }
    bool cap_open() const { return cap_open_; }
    std::size_t tick() const { return tick_; }
    std::optional<std::size_t> open_tick() const { return open_tick_; }
    const Matrix& joints() const { return joints_; }
    SubTask phase() const { return phase_; }
    EnvState state() const;
    const Scenario& scenario() const { return scenario_; }
    const EnvConfig& config() const { return cfg_; }

    void set_phase(SubTask p) { phase_ = p; }  // expert drives labels directly
    void enable_phase_classifier(bool on) { classify_ = on; }

    void start_recording();
    RawEpisode finish_recording();

private:
    void advance_substep(const Matrix& cmd);
    Observation observe();
    void record_frame();
    SubTask classify(const Matrix& cmd) const;

    EnvConfig cfg_;
    Scenario scenario_;
    Rng rng_;
    Matrix joints_, prev_cmd_;
    double object_pos_ = 0.0;
    double pos_delta_tick_ = 0.0;   // object movement over the current tick
    double grip_delta_sub_ = 0.0;   // grip change in the last substep
    double twist_delta_sub_ = 0.0;
    double slip_sub_ = 0.0;         // object movement in the last substep
    bool cap_open_ = false;
    double twist_progress_ = 0.0;  // leaky integral of positive twist while pressed in-window
    std::vector<double> drift_tactile_;  // per (patch, axis) gain drift
    std::vector<double> drift_torque_;   // per joint gain drift
    std::optional<std::size_t> open_tick_;
    SubTask phase_ = SubTask::Grasp;
    std::size_t tick_ = 0;
    std::size_t still_ticks_ = 0;
    bool classify_ = false;
    bool recording_ = false;
    std::vector<double> rec_joints_, rec_torques_, rec_whole_, rec_thumb_;
    std::vector<SubTask> rec_labels_;
};

// Scripted demonstrator. Reads true environment state at phase boundaries
// (grasp first, then try to open; on failure retract the thumb, slide the
// bottle into the window and try again; stop once the cap yields). Each
// phase ends settled so adjacent sub-task postures align.
class ExpertPolicy {
public:
    explicit ExpertPolicy(const EnvConfig& cfg);
    void reset();

    struct Decision {
        Matrix command;
        SubTask phase = SubTask::Grasp;
        bool done = false;  // true once the stop phase has played out
    };
    Decision act(const CapOpeningEnv& env);

private:
    void enter(SubTask phase, const CapOpeningEnv& env);

    EnvConfig cfg_;
    SubTask phase_ = SubTask::Grasp;
    std::size_t tick_in_phase_ = 0;
    Matrix phase_start_;  // joints at phase entry
    double slide_stroke_ = 0.0;
};

// --- scenario catalogs ---
std::vector<ObjectSpec> trained_object_set();
std::vector<ObjectSpec> untrained_object_set();
std::vector<double> training_positions();        // 5 markers
std::vector<double> trained_eval_positions();    // 4, interleaved between markers
std::vector<double> untrained_eval_positions();  // 3

std::vector<Scenario> training_scenarios(std::uint64_t seed);
std::vector<Scenario> evaluation_scenarios(bool trained_set, std::uint64_t seed);

// Runs the expert in `env` and returns the recorded raw episode.
RawEpisode run_expert_episode(CapOpeningEnv& env, const Scenario& scenario);
// Same trajectory, judged like an evaluation trial.
EvalOutcome run_expert_trial(CapOpeningEnv& env, const Scenario& scenario,
                             const JudgeConfig& judge_cfg);

std::vector<RawEpisode> generate_dataset(const EnvConfig& cfg,
                                         const std::vector<Scenario>& scenarios);

void write_scenario_csv(const std::string& path, const std::vector<Scenario>& scenarios,
                        std::uint64_t config_hash);

}  // namespace aelstm
