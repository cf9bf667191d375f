#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "aelstm/analysis.hpp"
#include "aelstm/rollout.hpp"
#include "aelstm/run_config.hpp"

namespace aelstm {

// The four ablation models of the evaluation protocol.
struct ModelVariant {
    std::string id;       // "I".."IV"
    bool attention = false;
    bool constraint = false;
};
const std::array<ModelVariant, 4>& ablation_variants();
const ModelVariant& variant_by_id(const std::string& id);

// Canonical artifact layout under one output root.
struct RunPaths {
    std::string root;
    explicit RunPaths(std::string r) : root(std::move(r)) {}

    std::string config_file() const { return root + "/config.json"; }
    std::string manifest_file() const { return root + "/manifest.jsonl"; }
    std::string data_dir() const { return root + "/data"; }
    std::string scenarios_file() const { return data_dir() + "/scenarios.csv"; }
    std::string episode_file(std::size_t idx) const;
    std::string models_dir() const { return root + "/models"; }
    std::string scaler_file() const { return models_dir() + "/scaler.json"; }
    std::string ae_ckpt(const std::string& which, std::uint64_t seed) const;
    std::string policy_ckpt(const std::string& model, std::uint64_t seed) const;
    std::string curve_file(const std::string& name) const;
    std::string eval_dir() const { return root + "/eval"; }
    std::string results_file() const { return eval_dir() + "/results.csv"; }
    std::string traces_dir(const std::string& model, std::uint64_t seed) const;
    std::string analysis_dir() const { return root + "/analysis"; }

    void make_all_dirs() const;
};

// JSON-lines artifact registry; one row per file written by a run.
class Manifest {
public:
    Manifest(std::string path, std::uint64_t config_hash);
    void add(const std::string& file_path, const std::string& kind) const;

private:
    std::string path_;
    std::uint64_t hash_;
};

struct PreparedData {
    NormalizationStats stats;
    std::vector<ProcessedEpisode> all;
    std::vector<std::size_t> train_idx, val_idx;
    std::vector<ProcessedEpisode> train_set, val_set;
};

std::vector<Scenario> dataset_scenarios(const RunConfig& cfg);
std::vector<RawEpisode> generate_raw_dataset(const RunConfig& cfg);
// resample -> clip -> fit scaler on the full set -> scale -> shift targets
PreparedData prepare_data(const RunConfig& cfg, const std::vector<RawEpisode>& raw);

struct SeedModels {
    AEParams ae_whole, ae_thumb;
    AETrainReport whole_report, thumb_report;
};
SeedModels train_autoencoders(const RunConfig& cfg, const PreparedData& data,
                              std::uint64_t seed);

PolicyModel init_policy_model(const RunConfig& cfg, const ModelVariant& variant,
                              std::uint64_t seed);
PolicyTrainReport train_policy_variant(const RunConfig& cfg, const PreparedData& data,
                                       const SeedModels& models, const ModelVariant& variant,
                                       std::uint64_t seed, PolicyModel& out_model);

void save_policy_with_state(const RunPaths& paths, const RunConfig& cfg, PolicyModel& model,
                            const OptimizerState& opt, const std::string& model_id,
                            std::uint64_t seed, const Manifest* manifest);

// Mean validation-set loop gap (teacher forced) for the loop-closure check.
double validation_loop_gap(PolicyModel& model, const PreparedData& data,
                           const AEParams& ae_whole, const AEParams& ae_thumb);

struct EvalRun {
    std::vector<TrialRow> rows;
    std::vector<Matrix> attention_traces;
    std::vector<Matrix> hidden_traces;
    std::vector<std::vector<SubTask>> phase_traces;
    std::size_t simplex_violations = 0;  // attention rows off the simplex
    double max_hidden_abs = 0.0;         // for the boundedness invariant
};
EvalRun evaluate_stack(const RunConfig& cfg, TrainedStack& stack, const std::string& model_id,
                       std::uint64_t seed, bool keep_traces);

TrainedStack make_stack(const RunConfig& cfg, const PreparedData& data, const SeedModels& models,
                        PolicyModel policy);

// Checkpoint round-trips used by the CLI stages.
void save_seed_models(const RunPaths& paths, const RunConfig& cfg, const SeedModels& models,
                      std::uint64_t seed, const Manifest* manifest);
SeedModels load_autoencoders(const RunConfig& cfg, const RunPaths& paths, std::uint64_t seed);
void save_policy(const RunPaths& paths, const RunConfig& cfg, PolicyModel& model,
                 const std::string& model_id, std::uint64_t seed, const Manifest* manifest);
PolicyModel load_policy(const RunConfig& cfg, const RunPaths& paths, const std::string& model_id,
                        std::uint64_t seed);
TrainedStack load_stack(const RunConfig& cfg, const RunPaths& paths, const std::string& model_id,
                        std::uint64_t seed);

struct SeedOutcome {
    std::uint64_t seed = 0;
    std::array<double, 4> pooled_complete{};  // indexed like ablation_variants()
    std::array<double, 4> pooled_partial{};
    double loop_gap_constrained = 0.0;    // model I, teacher-forced validation
    double loop_gap_unconstrained = 0.0;  // model III twin
    double thumb_attn_after_tryopen = 0.0;
    double thumb_attn_overall = 0.0;
    double joint_attn_sliding = 0.0;
    double joint_attn_overall = 0.0;
    double knn_accuracy = 0.0;
};

struct ReproduceSummary {
    std::vector<SeedOutcome> seeds;
    AblationTable table;  // pooled over seeds
    std::vector<TrialRow> all_rows;
    std::size_t simplex_violations = 0;
    double max_hidden_abs = 0.0;

    double mean_complete(std::size_t variant_idx) const;
    double mean_partial(std::size_t variant_idx) const;
};

// Full protocol: dataset, autoencoders, the four ablations per seed,
// closed-loop evaluation, analysis exports. With write_artifacts the whole
// run lands under cfg.out_dir with a manifest.
ReproduceSummary reproduce_all(const RunConfig& cfg, bool write_artifacts, std::ostream* log);

}  // namespace aelstm
