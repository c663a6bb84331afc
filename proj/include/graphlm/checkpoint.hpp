#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "graphlm/lm.hpp"
#include "graphlm/matrix.hpp"
#include "graphlm/model.hpp"
#include "graphlm/tag.hpp"

namespace graphlm {

// Versioned binary container: magic + version, named string entries, named
// tensors (row-major float64, little-endian). Loading then saving reproduces
// identical bytes.
struct CheckpointData {
    std::map<std::string, std::string> strings;
    std::vector<std::pair<std::string, Matrix>> tensors;

    const Matrix& tensor(const std::string& name) const;  // DataError if absent
    bool has_tensor(const std::string& name) const;
    const std::string& str(const std::string& name) const;
};

std::string serialize_checkpoint(const CheckpointData& data);
CheckpointData deserialize_checkpoint(const std::string& bytes);
void write_checkpoint(const std::string& path, const CheckpointData& data);
CheckpointData read_checkpoint(const std::string& path);
uint64_t file_digest(const std::string& path);

// Model checkpoint: every non-LM tensor plus the frozen-LM digest and a
// config snapshot.
void save_model_checkpoint(const std::string& path, const Model& model, uint64_t lm_digest);
struct LoadedModel {
    Model model;
    uint64_t lm_digest = 0;
};
LoadedModel load_model_checkpoint(const std::string& path);

// Adapter checkpoint: exactly the adaptation-tunable tensors, the task text,
// the recorded few-shot example node ids, and the base-checkpoint digest.
struct AdapterCheckpoint {
    std::vector<std::pair<std::string, Matrix>> tensors;
    std::string task_text;
    std::string task_kind;  // "classify" or "summarize"
    uint64_t base_digest = 0;
    std::vector<int64_t> example_node_ids;
};
void save_adapter_checkpoint(const std::string& path, const AdapterCheckpoint& adapter);
AdapterCheckpoint load_adapter_checkpoint(const std::string& path);

// Overwrites the base model's tensors with the adapter payload; names and
// shapes must match (ConfigError otherwise).
void apply_adapter(Model& model, const AdapterCheckpoint& adapter);

// LM checkpoint: config, vocabulary and all frozen tensors.
void save_lm_checkpoint(const std::string& path, const LmParams& lm);
LmParams load_lm_checkpoint(const std::string& path);

}  // namespace graphlm
