#include "graphlm/lm.hpp"

#include <algorithm>
#include <cmath>

#include "graphlm/digest.hpp"
#include "graphlm/errors.hpp"
#include "graphlm/optim.hpp"

namespace graphlm {

void LmConfig::validate() const {
    if (dim < 1 || blocks < 1 || heads < 1 || ffn_dim < 1 || context < 2 || vocab_cap < 1)
        throw ConfigError("lm config: all dimensions must be positive");
    if (dim % heads != 0) throw ConfigError("lm config: dim must be divisible by heads");
}

LmParams LmParams::init(const LmConfig& cfg, const Vocabulary& vocab, Rng& rng) {
    cfg.validate();
    LmParams p;
    p.config = cfg;
    p.vocab = vocab;
    const int V = vocab.size();
    const int d = cfg.dim;
    auto gauss = [&](Matrix& m, double s) {
        for (auto& x : m.a) x = rng.normal() * s;
    };
    p.tok_emb = Matrix(V, d);
    gauss(p.tok_emb, 0.02);
    p.pos_emb = Matrix(cfg.context, d);
    gauss(p.pos_emb, 0.01);
    for (int b = 0; b < cfg.blocks; ++b) {
        Block blk;
        blk.wq = Matrix(d, d);
        blk.wk = Matrix(d, d);
        blk.wv = Matrix(d, d);
        blk.wo = Matrix(d, d);
        gauss(blk.wq, 0.02);
        gauss(blk.wk, 0.02);
        gauss(blk.wv, 0.02);
        gauss(blk.wo, 0.02);
        blk.ln1_g = Matrix::full(1, d, 1.0);
        blk.ln1_b = Matrix(1, d);
        blk.ln2_g = Matrix::full(1, d, 1.0);
        blk.ln2_b = Matrix(1, d);
        blk.w1 = Matrix(cfg.ffn_dim, d);
        gauss(blk.w1, 0.02);
        blk.b1 = Matrix(1, cfg.ffn_dim);
        blk.w2 = Matrix(d, cfg.ffn_dim);
        gauss(blk.w2, 0.02);
        blk.b2 = Matrix(1, d);
        p.blocks.push_back(std::move(blk));
    }
    p.lnf_g = Matrix::full(1, d, 1.0);
    p.lnf_b = Matrix(1, d);
    p.head = Matrix(V, d);
    gauss(p.head, 0.02);
    return p;
}

template <typename P, typename M>
static std::vector<std::pair<std::string, M*>> walk_tensors(P& p) {
    std::vector<std::pair<std::string, M*>> out;
    out.push_back({"lm.tok_emb", &p.tok_emb});
    out.push_back({"lm.pos_emb", &p.pos_emb});
    for (size_t b = 0; b < p.blocks.size(); ++b) {
        auto& blk = p.blocks[b];
        std::string pre = "lm.b" + std::to_string(b) + ".";
        out.push_back({pre + "wq", &blk.wq});
        out.push_back({pre + "wk", &blk.wk});
        out.push_back({pre + "wv", &blk.wv});
        out.push_back({pre + "wo", &blk.wo});
        out.push_back({pre + "ln1_g", &blk.ln1_g});
        out.push_back({pre + "ln1_b", &blk.ln1_b});
        out.push_back({pre + "ln2_g", &blk.ln2_g});
        out.push_back({pre + "ln2_b", &blk.ln2_b});
        out.push_back({pre + "w1", &blk.w1});
        out.push_back({pre + "b1", &blk.b1});
        out.push_back({pre + "w2", &blk.w2});
        out.push_back({pre + "b2", &blk.b2});
    }
    out.push_back({"lm.lnf_g", &p.lnf_g});
    out.push_back({"lm.lnf_b", &p.lnf_b});
    out.push_back({"lm.head", &p.head});
    return out;
}

std::vector<std::pair<std::string, const Matrix*>> LmParams::named_tensors() const {
    return walk_tensors<const LmParams, const Matrix>(*this);
}

std::vector<std::pair<std::string, Matrix*>> LmParams::named_tensors() {
    return walk_tensors<LmParams, Matrix>(*this);
}

uint64_t LmParams::digest() const {
    Fnv1a f;
    for (const auto& [name, m] : named_tensors()) {
        f.update(name);
        f.update(*m);
    }
    for (const auto& t : vocab.tokens()) {
        f.update(t);
        f.update("\n");
    }
    return f.value();
}

int MixedSequence::num_node_slots() const {
    int n = 0;
    for (const auto& s : slots) n += s.is_node ? 1 : 0;
    return n;
}

std::vector<int> MixedSequence::token_ids_or_pad() const {
    std::vector<int> ids;
    ids.reserve(slots.size());
    for (const auto& s : slots) ids.push_back(s.is_node ? Vocabulary::kPad : s.token_id);
    return ids;
}

LmVars bind_lm(Tape& tape, const LmParams& lm, bool trainable) {
    LmVars v;
    v.tok_emb = tape.leaf(lm.tok_emb, trainable);
    v.pos_emb = tape.leaf(lm.pos_emb, trainable);
    for (const auto& blk : lm.blocks) {
        LmVars::BlockVars bv;
        bv.wq = tape.leaf(blk.wq, trainable);
        bv.wk = tape.leaf(blk.wk, trainable);
        bv.wv = tape.leaf(blk.wv, trainable);
        bv.wo = tape.leaf(blk.wo, trainable);
        bv.ln1_g = tape.leaf(blk.ln1_g, trainable);
        bv.ln1_b = tape.leaf(blk.ln1_b, trainable);
        bv.ln2_g = tape.leaf(blk.ln2_g, trainable);
        bv.ln2_b = tape.leaf(blk.ln2_b, trainable);
        bv.w1 = tape.leaf(blk.w1, trainable);
        bv.b1 = tape.leaf(blk.b1, trainable);
        bv.w2 = tape.leaf(blk.w2, trainable);
        bv.b2 = tape.leaf(blk.b2, trainable);
        v.blocks.push_back(bv);
    }
    v.lnf_g = tape.leaf(lm.lnf_g, trainable);
    v.lnf_b = tape.leaf(lm.lnf_b, trainable);
    v.head = tape.leaf(lm.head, trainable);
    return v;
}

LmRun lm_forward(Tape& tape, const MixedSequence& seq, const LmConfig& cfg, const LmVars& vars,
                 std::optional<Var> node_embeddings) {
    const int T = seq.length();
    if (T < 1) throw DataError("lm_forward: empty sequence");
    if (T > cfg.context)
        throw ConfigError("lm_forward: sequence length " + std::to_string(T) +
                          " exceeds context " + std::to_string(cfg.context));

    Var x = tape.gather_rows(vars.tok_emb, seq.token_ids_or_pad());

    std::vector<int> node_positions, node_sources;
    for (int t = 0; t < T; ++t) {
        if (seq.slots[static_cast<size_t>(t)].is_node) {
            node_positions.push_back(t);
            node_sources.push_back(seq.slots[static_cast<size_t>(t)].node_index);
        }
    }
    if (!node_positions.empty()) {
        if (!node_embeddings)
            throw ConfigError("lm_forward: sequence has node slots but no embeddings given");
        if (tape.value(*node_embeddings).cols != cfg.dim)
            throw ConfigError("lm_forward: node embedding dim != lm dim");
        Var rows = tape.gather_rows(*node_embeddings, node_sources);
        x = tape.splice_rows(x, rows, node_positions);
    }

    std::vector<int> iota(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) iota[static_cast<size_t>(t)] = t;
    x = tape.add(x, tape.gather_rows(vars.pos_emb, iota));

    const int dk = cfg.dim / cfg.heads;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
    for (const auto& bv : vars.blocks) {
        Var a = tape.layer_norm(x, bv.ln1_g, bv.ln1_b);
        Var q = tape.matmul_nt(a, bv.wq);
        Var k = tape.matmul_nt(a, bv.wk);
        Var v = tape.matmul_nt(a, bv.wv);
        Var heads_cat{-1};
        for (int h = 0; h < cfg.heads; ++h) {
            Var qh = tape.slice_cols(q, h * dk, (h + 1) * dk);
            Var kh = tape.slice_cols(k, h * dk, (h + 1) * dk);
            Var vh = tape.slice_cols(v, h * dk, (h + 1) * dk);
            Var p = tape.causal_softmax(tape.scale(tape.matmul_nt(qh, kh), inv_sqrt_dk));
            Var oh = tape.matmul(p, vh);
            heads_cat = (h == 0) ? oh : tape.concat_cols(heads_cat, oh);
        }
        x = tape.add(x, tape.matmul_nt(heads_cat, bv.wo));
        Var f = tape.layer_norm(x, bv.ln2_g, bv.ln2_b);
        Var ff = tape.relu(tape.add_rowvec(tape.matmul_nt(f, bv.w1), bv.b1));
        x = tape.add(x, tape.add_rowvec(tape.matmul_nt(ff, bv.w2), bv.b2));
    }
    LmRun run;
    run.hidden = tape.layer_norm(x, vars.lnf_g, vars.lnf_b);
    run.logits = tape.matmul_nt(run.hidden, vars.head);
    return run;
}

Matrix lm_encode_text(const std::string& text, const LmParams& lm) {
    MixedSequence seq;
    seq.slots.push_back({false, Vocabulary::kBos, 0});
    for (int id : tokenize(text, lm.vocab)) seq.slots.push_back({false, id, 0});
    if (seq.length() > lm.config.context) seq.slots.resize(static_cast<size_t>(lm.config.context));
    Tape tape;
    LmVars vars = bind_lm(tape, lm, false);
    LmRun run = lm_forward(tape, seq, lm.config, vars, std::nullopt);
    return tape.value(tape.mean_rows(run.hidden));
}

MixedSequence build_task_query(int num_nodes, int num_nodes_2, const std::string& target_text,
                               const std::string& target_text_2, const std::string& task_text,
                               const PromptTemplate& tpl, const Vocabulary& vocab) {
    std::string inst = instantiate_template(tpl, num_nodes, num_nodes_2, target_text,
                                            target_text_2, task_text);
    auto pieces = parse_node_markers(inst);
    const int total_nodes = num_nodes + std::max(0, num_nodes_2);

    MixedSequence seq;
    seq.slots.push_back({false, Vocabulary::kBos, 0});
    std::vector<char> used(static_cast<size_t>(total_nodes), 0);
    int markers = 0;
    for (const auto& piece : pieces) {
        if (piece.is_node) {
            int i = piece.node_index;
            if (i < 1 || i > total_nodes)
                throw DataError("build_task_query: marker <node_" + std::to_string(i) +
                                "> outside provided embeddings (" + std::to_string(total_nodes) +
                                ")");
            if (used[static_cast<size_t>(i - 1)])
                throw DataError("build_task_query: duplicate marker <node_" + std::to_string(i) +
                                ">");
            used[static_cast<size_t>(i - 1)] = 1;
            ++markers;
            seq.slots.push_back({true, 0, i - 1});
        } else {
            for (int id : tokenize(piece.text, vocab)) seq.slots.push_back({false, id, 0});
        }
    }
    if (markers != total_nodes)
        throw DataError("build_task_query: template used " + std::to_string(markers) +
                        " node markers, " + std::to_string(total_nodes) + " embeddings given");
    return seq;
}

void append_answer(MixedSequence& seq, const std::string& answer, const Vocabulary& vocab) {
    seq.answer_begin = seq.length();
    for (int id : tokenize(answer, vocab)) seq.slots.push_back({false, id, 0});
    seq.slots.push_back({false, Vocabulary::kEos, 0});
    seq.answer_end = seq.length();
}

Var answer_cross_entropy(Tape& tape, const MixedSequence& seq, Var logits) {
    if (!seq.has_answer()) throw DataError("answer_cross_entropy: empty answer span");
    if (seq.answer_begin < 1 || seq.answer_end > seq.length())
        throw DataError("answer_cross_entropy: answer span out of range");
    const int T = seq.length();
    std::vector<int> targets(static_cast<size_t>(T), -1);
    for (int t = seq.answer_begin; t < seq.answer_end; ++t) {
        const auto& s = seq.slots[static_cast<size_t>(t)];
        if (s.is_node) throw DataError("answer_cross_entropy: node slot inside answer span");
        targets[static_cast<size_t>(t - 1)] = s.token_id;
    }
    return tape.cross_entropy_rows(logits, std::move(targets));
}

std::string generate(const MixedSequence& query, const LmParams& lm,
                     const std::optional<Matrix>& node_embeddings, int max_new_tokens) {
    if (max_new_tokens < 1) throw DataError("generate: max_new_tokens must be >= 1");
    MixedSequence seq = query;
    std::vector<int> produced;
    for (int step = 0; step < max_new_tokens; ++step) {
        if (seq.length() >= lm.config.context) break;
        Tape tape;
        LmVars vars = bind_lm(tape, lm, false);
        std::optional<Var> emb;
        if (node_embeddings) emb = tape.leaf(*node_embeddings, false);
        LmRun run = lm_forward(tape, seq, lm.config, vars, emb);
        const Matrix& logits = tape.value(run.logits);
        int best = 0;
        const int last = logits.rows - 1;
        for (int cidx = 1; cidx < logits.cols; ++cidx)
            if (logits(last, cidx) > logits(last, best)) best = cidx;
        if (best == Vocabulary::kEos) break;
        produced.push_back(best);
        seq.slots.push_back({false, best, 0});
    }
    return detokenize(produced, lm.vocab);
}

// Leaf vars in the same order as named_tensors().
static std::vector<Var> lm_leaf_order(const LmVars& v) {
    std::vector<Var> out = {v.tok_emb, v.pos_emb};
    for (const auto& bv : v.blocks) {
        out.push_back(bv.wq);
        out.push_back(bv.wk);
        out.push_back(bv.wv);
        out.push_back(bv.wo);
        out.push_back(bv.ln1_g);
        out.push_back(bv.ln1_b);
        out.push_back(bv.ln2_g);
        out.push_back(bv.ln2_b);
        out.push_back(bv.w1);
        out.push_back(bv.b1);
        out.push_back(bv.w2);
        out.push_back(bv.b2);
    }
    out.push_back(v.lnf_g);
    out.push_back(v.lnf_b);
    out.push_back(v.head);
    return out;
}

BootstrapResult lm_bootstrap(const std::vector<std::string>& corpus, const BootstrapConfig& cfg,
                             uint64_t seed) {
    if (corpus.empty()) throw DataError("lm_bootstrap: empty corpus");
    cfg.lm.validate();

    Rng rng(seed);
    Vocabulary vocab = Vocabulary::build(corpus, cfg.lm.vocab_cap);
    BootstrapResult res;
    res.lm = LmParams::init(cfg.lm, vocab, rng);
    LmParams& lm = res.lm;

    std::vector<std::vector<int>> lines;
    for (const auto& text : corpus) {
        std::vector<int> ids;
        ids.push_back(Vocabulary::kBos);
        for (int id : tokenize(text, vocab)) ids.push_back(id);
        ids.push_back(Vocabulary::kEos);
        if (static_cast<int>(ids.size()) > cfg.lm.context)
            ids.resize(static_cast<size_t>(cfg.lm.context));
        if (ids.size() >= 2) lines.push_back(std::move(ids));
    }
    if (lines.empty()) throw DataError("lm_bootstrap: corpus has no usable lines");

    Adam opt(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
    Rng order_rng = rng.fork(101);
    int64_t steps = 0;
    double prev_epoch = 0.0;
    bool first_epoch = true;
    for (int epoch = 0; epoch < cfg.max_epochs && steps < cfg.max_steps; ++epoch) {
        std::vector<int> order(lines.size());
        for (size_t i = 0; i < lines.size(); ++i) order[i] = static_cast<int>(i);
        order_rng.shuffle(order);

        double total = 0.0;
        int count = 0;
        for (int li : order) {
            if (steps >= cfg.max_steps) break;
            const auto& ids = lines[static_cast<size_t>(li)];
            MixedSequence seq;
            for (int id : ids) seq.slots.push_back({false, id, 0});
            seq.answer_begin = 1;
            seq.answer_end = seq.length();

            Tape tape;
            LmVars vars = bind_lm(tape, lm, true);
            LmRun run = lm_forward(tape, seq, lm.config, vars, std::nullopt);
            Var loss = answer_cross_entropy(tape, seq, run.logits);
            tape.backward(loss);

            if (res.epoch_losses.empty() && count == 0 && epoch == 0)
                res.initial_loss = tape.value(loss)(0, 0);

            auto tensors = lm.named_tensors();
            auto leaves = lm_leaf_order(vars);
            for (size_t i = 0; i < tensors.size(); ++i)
                opt.step(tensors[i].first, *tensors[i].second, tape.grad(leaves[i]));

            total += tape.value(loss)(0, 0);
            ++count;
            ++steps;
        }
        if (count == 0) break;
        double mean = total / count;
        res.epoch_losses.push_back(mean);
        res.final_loss = mean;
        if (!first_epoch && prev_epoch - mean < cfg.plateau_tol * std::abs(prev_epoch)) break;
        prev_epoch = mean;
        first_epoch = false;
    }
    return res;
}

}  // namespace graphlm
