#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "aelstm/matrix.hpp"

namespace aelstm {

// Phases of the cap-opening flow. Switching between them is what the policy
// has to learn.
enum class SubTask : int { Grasp = 0, TryOpen, RetractThumb, SlideLeft, SlideRight, Stop };
inline constexpr int kSubTaskCount = 6;

const char* subtask_name(SubTask t);
SubTask subtask_from_name(const std::string& name);

// One recorded multi-modal time series. All streams share the same length;
// switch_marks are the frame indices at which the phase changes.
struct RawEpisode {
    double sample_rate_hz = 0.0;
    Matrix joints;         // T x J   (radians)
    Matrix torques;        // T x J
    Matrix tactile_whole;  // T x D_w (raw sensor counts)
    Matrix tactile_thumb;  // T x D_t
    std::vector<SubTask> labels;
    std::vector<std::size_t> switch_marks;

    std::size_t steps() const { return joints.rows(); }
    void validate() const;
};

// Normalized, target-shifted episode ready for model training. Inputs and
// targets are T' x (J + J + D_w + D_t) with per-channel values in [0.1, 0.9]
// (plus whatever augmentation noise adds); targets[t] is the clean frame
// `horizon` steps ahead of inputs[t].
struct ProcessedEpisode {
    Matrix inputs;
    Matrix targets;
    std::vector<SubTask> labels;
    std::vector<std::size_t> switch_marks;
    std::size_t joints_dim = 0, torques_dim = 0, whole_dim = 0, thumb_dim = 0;

    std::size_t steps() const { return inputs.rows(); }
    std::size_t joints_offset() const { return 0; }
    std::size_t torques_offset() const { return joints_dim; }
    std::size_t whole_offset() const { return joints_dim + torques_dim; }
    std::size_t thumb_offset() const { return joints_dim + torques_dim + whole_dim; }
    std::size_t total_dim() const { return joints_dim + torques_dim + whole_dim + thumb_dim; }
};

// Line-delimited text format: one header row declaring dimensions, rate and
// switch marks, then one record per timestep with fields ordered
// (t, subtask_label, joints..., torques..., tactile_whole..., tactile_thumb...).
void write_episode(const std::string& path, const RawEpisode& ep);
RawEpisode read_episode(const std::string& path);

}  // namespace aelstm
