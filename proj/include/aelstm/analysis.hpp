#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "aelstm/episode.hpp"
#include "aelstm/matrix.hpp"
#include "aelstm/sim_env.hpp"

namespace aelstm {

// PCA over LSTM hidden states, fit by eigendecomposition of the covariance.
// Axes are orthonormal rows sorted by non-increasing explained variance; the
// first nonzero coefficient of each axis is made positive so plots are
// reproducible across runs.
struct PCAModel {
    Matrix mean;               // 1 x dim
    Matrix axes;               // dim x dim, rows are principal axes
    std::vector<double> explained_variance;

    Matrix project(const Matrix& data, std::size_t components = 2) const;
    Matrix reconstruct(const Matrix& projected) const;  // all components
};

PCAModel pca_fit(const std::vector<Matrix>& traces);

// Leave-one-out k-NN label accuracy in a low-dimensional projection. Points
// beyond `max_points` are subsampled with a fixed stride. Ties break toward
// the nearer neighbor set, then the smaller label id.
double knn_label_accuracy(const Matrix& points, const std::vector<SubTask>& labels,
                          std::size_t k = 5, std::size_t max_points = 6000);

// Mean squared hidden-state gap over switch pairs, the metric behind the
// loop-trajectory analysis. `traces` rows are h_0..h_T (teacher-forced) or
// h_1..h_T (rollout); pair indices must be valid rows of the trace.
double loop_gap(const std::vector<Matrix>& traces,
                const std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& switches);

// Per-subtask mean attention vectors plus the whole-trace mean, row-stacked
// per modality in layout order (whole, thumb, joints, torques).
struct AttentionSummary {
    std::array<std::array<double, 4>, kSubTaskCount> per_subtask{};
    std::array<std::size_t, kSubTaskCount> counts{};
    std::array<double, 4> overall{};
    std::size_t total = 0;
};

AttentionSummary attention_summary(const std::vector<Matrix>& attention_traces,
                                   const std::vector<std::vector<SubTask>>& phase_traces);

// Mean attention of one modality inside fixed-length windows that start right
// after each try-open segment ends.
double mean_attention_after_tryopen(const std::vector<Matrix>& attention_traces,
                                    const std::vector<std::vector<SubTask>>& phase_traces,
                                    std::size_t modality_index, std::size_t window);
double mean_attention_in_phase(const std::vector<Matrix>& attention_traces,
                               const std::vector<std::vector<SubTask>>& phase_traces,
                               std::size_t modality_index,
                               const std::vector<SubTask>& phases);
double mean_attention_overall(const std::vector<Matrix>& attention_traces,
                              std::size_t modality_index);

// Success-rate bookkeeping in Table-I shape: complete and partial rates per
// model per object set, with exact trial counts (partial counts include the
// complete successes).
struct AblationCell {
    std::size_t complete = 0;
    std::size_t partial = 0;  // opened at all
    std::size_t trials = 0;

    double complete_rate() const { return trials ? double(complete) / double(trials) : 0.0; }
    double partial_rate() const { return trials ? double(partial) / double(trials) : 0.0; }
};

struct AblationTable {
    // rows: model ids in order; cols: trained set, untrained set
    std::vector<std::string> model_ids;
    std::vector<std::array<AblationCell, 2>> cells;

    AblationCell& cell(const std::string& model, bool trained_set);
    const AblationCell& cell(const std::string& model, bool trained_set) const;
    void add_outcome(const std::string& model, bool trained_set, TrialResult result);
};

struct TrialRow {
    std::string model_id;
    std::uint64_t seed = 0;
    std::string scenario_id;
    bool trained_set = true;
    TrialResult result = TrialResult::Failure;
    std::size_t steps_used = 0;
    std::optional<std::size_t> open_step, stop_step;
};

AblationTable build_table(const std::vector<TrialRow>& rows,
                          const std::vector<std::string>& model_order);

void write_results_csv(const std::string& path, const std::vector<TrialRow>& rows,
                       std::uint64_t config_hash);
std::vector<TrialRow> read_results_csv(const std::string& path);
void write_table_csv(const std::string& path, const AblationTable& table,
                     std::uint64_t config_hash);
void write_attention_summary_csv(const std::string& path, const AttentionSummary& summary,
                                 std::uint64_t config_hash);
void write_pca_csv(const std::string& path, const Matrix& projected,
                   const std::vector<SubTask>& labels, const PCAModel& model,
                   std::uint64_t config_hash);

// Minimal SVG scatter/line plot helpers for the attention-trajectory and
// PCA-map figures. The images are a convenience; the CSVs are the contract.
void write_scatter_svg(const std::string& path, const Matrix& points2d,
                       const std::vector<SubTask>& labels, const std::string& title);
void write_attention_svg(const std::string& path, const Matrix& attention,
                         const std::vector<SubTask>& phases, const std::string& title);

}  // namespace aelstm
