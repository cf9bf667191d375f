#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aelstm/episode.hpp"

namespace aelstm {

// How tactile columns are grouped for normalization: one min/max pair per
// (patch, axis), matching the per-patch per-axis scaling of the recording
// hardware. Columns are taxel-major (taxel0 x,y,z, taxel1 x,y,z, ...).
struct TactileGrouping {
    std::size_t patches = 0;
    std::size_t taxels_per_patch = 0;
    std::size_t axes = 3;
    std::size_t dim() const { return patches * taxels_per_patch * axes; }
};

// Per-group min/max statistics for the 0.1..0.9 scaling. Groups are each
// joint channel, each torque channel, and each (patch, axis) tactile column
// set; degenerate groups (min == max) are flagged and map to 0.5.
struct NormalizationStats {
    struct Group {
        std::string name;
        double min = 0.0, max = 0.0;
        bool degenerate = false;
        std::vector<std::size_t> columns;  // indices into the concatenated layout
    };

    std::vector<Group> groups;
    double clip_bound = 0.0;
    std::size_t joints_dim = 0, torques_dim = 0, whole_dim = 0, thumb_dim = 0;
    // Flattened per-column copies of the group stats, for fast (un)scaling.
    std::vector<double> col_min, col_max;
    std::vector<bool> col_degenerate;

    std::size_t total_dim() const { return joints_dim + torques_dim + whole_dim + thumb_dim; }
    void rebuild_column_tables();

    std::string to_json() const;
    static NormalizationStats from_json(const std::string& text);
    void save(const std::string& path, std::uint64_t config_hash) const;
    static NormalizationStats load(const std::string& path);
};

inline constexpr double kScaleLo = 0.1;
inline constexpr double kScaleHi = 0.9;

// Decimates to target_rate by keeping every k-th frame starting at index 0.
// Switch marks snap to the nearest kept frame at or after the raw mark, so a
// resampled mark never precedes the physical switch.
RawEpisode resample(const RawEpisode& ep, double target_rate_hz);

// Clamps tactile channels to [-bound, +bound]; joints and torques untouched.
RawEpisode clip_tactile(const RawEpisode& ep, double bound);

NormalizationStats fit_scaler(std::span<const RawEpisode> episodes,
                              const TactileGrouping& whole,
                              const TactileGrouping& thumb,
                              double clip_bound);

// Linear map min -> 0.1, max -> 0.9 per group; exact at the group extremes.
ProcessedEpisode apply_scaler(const RawEpisode& ep, const NormalizationStats& stats);

double scale_value(double v, double mn, double mx, bool degenerate);
double unscale_value(double y, double mn, double mx, bool degenerate);

// Inverse map for a span of columns starting at `col_offset` in the
// concatenated layout. Exact inverse of apply_scaler on [0.1, 0.9].
void unscale_columns(Matrix& values, std::size_t col_offset, const NormalizationStats& stats);

// Drops the last `horizon` frames from inputs and aligns targets[t] with the
// clean frame t + horizon. Switch marks beyond the shortened range are
// dropped.
ProcessedEpisode make_targets(const ProcessedEpisode& ep, std::size_t horizon = 2);

// Per-modality Gaussian noise on inputs (targets stay clean). Sigmas are in
// normalized units and ordered (joints, torques, tactile_whole, tactile_thumb).
ProcessedEpisode add_noise(const ProcessedEpisode& ep,
                           const std::array<double, 4>& sigma_per_modality,
                           std::uint64_t seed);
void add_noise_in_place(Matrix& inputs, const ProcessedEpisode& layout,
                        const std::array<double, 4>& sigma_per_modality, std::uint64_t seed);

}  // namespace aelstm
