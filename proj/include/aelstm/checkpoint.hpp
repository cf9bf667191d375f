#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aelstm/optimizer.hpp"
#include "aelstm/tape.hpp"

namespace aelstm {

// Versioned parameter container (see docs/formats.md for the byte layout).
// Each group is stored as (name, rows, cols, little-endian float64 payload);
// optimizer moments follow when present. The config hash of the run that
// produced the file is embedded so downstream stages can verify provenance.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct LoadedGroup {
    std::string name;
    Matrix value;
};

struct LoadedCheckpoint {
    std::uint32_t version = 0;
    std::uint64_t config_hash = 0;
    std::vector<LoadedGroup> groups;
    bool has_optimizer = false;
    OptAlgo algo = OptAlgo::Adam;
    double learning_rate = 0.0, beta1 = 0.0, beta2 = 0.0, epsilon = 0.0;
    std::uint64_t step_count = 0;
    std::vector<Matrix> m, v;

    const LoadedGroup& find(const std::string& name) const;
};

void save_checkpoint(const std::string& path,
                     const std::vector<const ParamGroup*>& groups,
                     std::uint64_t config_hash,
                     const OptimizerState* opt = nullptr);

LoadedCheckpoint load_checkpoint(const std::string& path);

// Copies values (and optimizer state when present in the file) back into an
// existing parameter list; shapes and names must line up.
void restore_params(const LoadedCheckpoint& ckpt,
                    std::vector<ParamGroup*>& params,
                    OptimizerState* opt = nullptr);

}  // namespace aelstm
