#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graphlm/matrix.hpp"

namespace graphlm {

// Undirected text-attributed graph. Nodes are addressed by external integer
// ids; internal storage is index-based with sorted neighbor lists. Immutable
// after construction.
class TextAttributedGraph {
public:
    struct NodeInit {
        int64_t id = 0;
        std::string text;
        std::optional<std::string> label;
    };

    // Edges are (id, id) pairs; duplicates are merged, self-loops rejected.
    TextAttributedGraph(std::vector<NodeInit> nodes,
                        const std::vector<std::pair<int64_t, int64_t>>& edges,
                        int feat_dim, uint64_t feature_seed);

    int num_nodes() const { return static_cast<int>(ids_.size()); }
    int feat_dim() const { return feat_dim_; }
    int64_t id_of(int index) const { return ids_[static_cast<size_t>(index)]; }
    int index_of(int64_t id) const;  // DataError if unknown
    bool has_id(int64_t id) const;

    const std::string& text(int index) const { return texts_[static_cast<size_t>(index)]; }
    const std::optional<std::string>& label(int index) const { return labels_[static_cast<size_t>(index)]; }
    const std::vector<double>& features(int index) const { return features_[static_cast<size_t>(index)]; }
    // Neighbor indices, ascending by external id.
    const std::vector<int>& neighbors(int index) const { return adj_[static_cast<size_t>(index)]; }
    bool has_edge(int u, int v) const;
    int64_t num_edges() const { return num_edges_; }

    // Distinct labels in first-seen order over ascending ids.
    std::vector<std::string> class_names() const;
    std::vector<int> nodes_with_label(const std::string& label) const;

private:
    std::vector<int64_t> ids_;     // ascending
    std::vector<std::string> texts_;
    std::vector<std::optional<std::string>> labels_;
    std::vector<std::vector<double>> features_;
    std::vector<std::vector<int>> adj_;
    int feat_dim_ = 0;
    int64_t num_edges_ = 0;
};

// Hop-annotated node set around a target, ordered by (hop, id).
struct NeighborhoodSubgraph {
    int64_t target = 0;
    std::vector<int64_t> members;          // target first
    std::vector<int> hop_of;               // parallel to members
    std::vector<std::vector<int>> local_adjacency;  // member-index lists, ascending
    std::vector<std::vector<double>> local_features;
    std::vector<std::string> local_texts;

    int size() const { return static_cast<int>(members.size()); }
};

struct SyntheticTagSpec {
    int num_classes = 2;
    int nodes_per_class = 1;
    double p_intra = 0.0;
    double p_inter = 0.0;
    int vocab_per_class = 1;
    int shared_vocab = 0;
    int text_len = 1;

    void validate() const;
};

struct FewShotExampleSet {
    std::vector<std::pair<int64_t, std::string>> pairs;  // (node id, class name)
    int shots = 0;
    std::vector<std::string> class_names;

    std::vector<int64_t> node_ids() const;
};

// BFS out to max_hops from target. When a hop's candidate set would push the
// non-target member count past max_neighbors, a uniform sample without
// replacement fills the remaining budget (earlier hops are filled first).
// Hops are then recomputed as shortest-path distances inside the induced
// member subgraph, and members re-sorted by (hop, id).
NeighborhoodSubgraph extract_neighborhood(const TextAttributedGraph& graph, int64_t target,
                                          int max_hops, int max_neighbors, uint64_t seed);

// Class-planted random graph with per-class vocabularies. Nodes take classes
// round-robin; every unordered pair draws an edge with p_intra or p_inter;
// texts are text_len tokens from the class vocabulary plus the shared one.
// Class names and vocabularies are derived from the seed.
TextAttributedGraph generate_synthetic_tag(const SyntheticTagSpec& spec, uint64_t seed,
                                           int feat_dim, uint64_t feature_seed);

// K labeled nodes per class, uniform without replacement, ascending ids.
FewShotExampleSet sample_few_shot(const TextAttributedGraph& graph,
                                  const std::vector<std::string>& class_names, int shots,
                                  uint64_t seed);

// JSON Lines persistence. Node record: {"id","text","label"}; edge record:
// {"src","dst"}. Inputs are symmetrized; self-loops and duplicate edges are
// dropped with a note to the warnings list when provided.
TextAttributedGraph load_tag_jsonl(const std::string& nodes_path, const std::string& edges_path,
                                   int feat_dim, uint64_t feature_seed,
                                   std::vector<std::string>* warnings = nullptr);
void save_tag_jsonl(const TextAttributedGraph& graph, const std::string& nodes_path,
                    const std::string& edges_path);

// Leading words of the node text, used as the reference summary.
std::string node_title(const TextAttributedGraph& graph, int index, int title_len = 4);

}  // namespace graphlm
