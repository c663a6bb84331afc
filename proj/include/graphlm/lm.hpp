#pragma once
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "graphlm/autodiff.hpp"
#include "graphlm/matrix.hpp"
#include "graphlm/rng.hpp"
#include "graphlm/templates.hpp"
#include "graphlm/vocab.hpp"

namespace graphlm {

struct LmConfig {
    int dim = 64;
    int blocks = 2;
    int heads = 2;
    int ffn_dim = 256;
    int context = 256;
    int vocab_cap = 2000;

    void validate() const;
};

// Decoder-only transformer (pre-LN, learned positions, untied output head).
// Bootstrapped once on plain text, then frozen for every later stage.
struct LmParams {
    struct Block {
        Matrix wq, wk, wv, wo;              // [d x d]
        Matrix ln1_g, ln1_b, ln2_g, ln2_b;  // [1 x d]
        Matrix w1, b1;                      // [ffn x d], [1 x ffn]
        Matrix w2, b2;                      // [d x ffn], [1 x d]
    };

    LmConfig config;
    Vocabulary vocab;
    Matrix tok_emb;  // [V x d]
    Matrix pos_emb;  // [context x d]
    std::vector<Block> blocks;
    Matrix lnf_g, lnf_b;  // [1 x d]
    Matrix head;          // [V x d]

    static LmParams init(const LmConfig& cfg, const Vocabulary& vocab, Rng& rng);
    // Fixed-order tensor walk, used by checkpoints, digests and the optimizer.
    std::vector<std::pair<std::string, const Matrix*>> named_tensors() const;
    std::vector<std::pair<std::string, Matrix*>> named_tensors();
    uint64_t digest() const;
};

// One task query: language-token slots interleaved with injected node-token
// slots, plus the half-open range of supervised answer positions.
struct MixedSequence {
    struct Slot {
        bool is_node = false;
        int token_id = 0;    // valid when !is_node
        int node_index = 0;  // row into the provided node-embedding matrix
    };
    std::vector<Slot> slots;
    int answer_begin = 0;
    int answer_end = 0;

    int length() const { return static_cast<int>(slots.size()); }
    int num_node_slots() const;
    bool has_answer() const { return answer_end > answer_begin; }
    std::vector<int> token_ids_or_pad() const;
};

// LM tensors bound onto a tape; frozen stages bind with trainable = false.
struct LmVars {
    Var tok_emb, pos_emb;
    struct BlockVars {
        Var wq, wk, wv, wo, ln1_g, ln1_b, ln2_g, ln2_b, w1, b1, w2, b2;
    };
    std::vector<BlockVars> blocks;
    Var lnf_g, lnf_b, head;
};

LmVars bind_lm(Tape& tape, const LmParams& lm, bool trainable);

struct LmRun {
    Var hidden;  // [T x d], post final layer norm
    Var logits;  // [T x V]
};

// node_embeddings must be a [num_node_slots x d] var when the sequence has
// node slots.
LmRun lm_forward(Tape& tape, const MixedSequence& seq, const LmConfig& cfg, const LmVars& vars,
                 std::optional<Var> node_embeddings);

// Mean of final-layer hidden states over BOS + tokens; the text encoding
// used as the node-matching target. Empty text encodes BOS alone.
Matrix lm_encode_text(const std::string& text, const LmParams& lm);

// Template instantiation into a mixed sequence. The first node slot carries
// the target node; answer span is left empty. num_nodes_2 > 0 selects the
// two-run form used by link prediction.
MixedSequence build_task_query(int num_nodes, int num_nodes_2, const std::string& target_text,
                               const std::string& target_text_2, const std::string& task_text,
                               const PromptTemplate& tpl, const Vocabulary& vocab);

// Appends the answer tokens plus EOS and marks them as the supervised span.
void append_answer(MixedSequence& seq, const std::string& answer, const Vocabulary& vocab);

// Mean next-token cross-entropy over the answer span only.
Var answer_cross_entropy(Tape& tape, const MixedSequence& seq, Var logits);

// Greedy decoding from the query; stops at EOS or max_new_tokens. The node
// embeddings are plain values here (inference only).
std::string generate(const MixedSequence& query, const LmParams& lm,
                     const std::optional<Matrix>& node_embeddings, int max_new_tokens);

struct BootstrapConfig {
    LmConfig lm;
    double lr = 1e-3;
    int max_epochs = 10;
    int max_steps = 1000000;
    double plateau_tol = 1e-3;  // relative epoch-loss improvement threshold
};

struct BootstrapResult {
    LmParams lm;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<double> epoch_losses;
};

// Next-token training of the tiny decoder on the corpus. The returned
// parameters are frozen for all subsequent stages.
BootstrapResult lm_bootstrap(const std::vector<std::string>& corpus, const BootstrapConfig& cfg,
                             uint64_t seed);

}  // namespace graphlm
