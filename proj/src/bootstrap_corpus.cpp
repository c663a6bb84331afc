#include "graphlm/bootstrap_corpus.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "graphlm/errors.hpp"
#include "graphlm/rng.hpp"
#include "graphlm/textproc.hpp"
#include "graphlm/train.hpp"

namespace graphlm {

namespace {

// Instantiated template with every <node_i> marker collapsed to the reserved
// <node> token, making it usable as plain corpus text.
std::string render_plain(const PromptTemplate& tpl, int n, int n2, const std::string& text,
                         const std::string& text2, const std::string& task_text) {
    auto pieces = parse_node_markers(instantiate_template(tpl, n, n2, text, text2, task_text));
    std::string out;
    for (const auto& p : pieces) out += p.is_node ? std::string("<node>") : p.text;
    return out;
}

// Same, but node slots carry the given words.
std::string render_with_slot_words(const PromptTemplate& tpl, const std::vector<std::string>& words,
                                   const std::string& text, const std::string& task_text) {
    auto pieces = parse_node_markers(
        instantiate_template(tpl, static_cast<int>(words.size()), 0, text, "", task_text));
    std::string out;
    for (const auto& p : pieces)
        out += p.is_node ? words[static_cast<size_t>(p.node_index - 1)] : p.text;
    return out;
}

}  // namespace

std::vector<std::string> build_bootstrap_corpus(
    const std::vector<const TextAttributedGraph*>& graphs, size_t primary_index,
    const ModelConfig& model_cfg, const BootstrapSection& cfg, const TemplateSet& templates,
    uint64_t seed, int title_len) {
    if (graphs.empty()) throw DataError("bootstrap corpus: no graphs");
    if (primary_index >= graphs.size()) throw DataError("bootstrap corpus: bad primary index");

    std::vector<std::string> corpus;
    Rng root(seed);

    // Raw node texts: the plain language-modeling slice of the corpus.
    for (const auto* g : graphs)
        for (int v = 0; v < g->num_nodes(); ++v) corpus.push_back(g->text(v));

    // Class-name lines seed every graph's label words into the vocabulary and
    // the answer-position statistics, without tying them to any node.
    for (const auto* g : graphs) {
        auto names = g->class_names();
        if (names.empty()) continue;
        std::string line = "the known categories are:";
        for (size_t i = 0; i < names.size(); ++i) {
            line += i ? ", " : " ";
            line += names[i];
        }
        corpus.push_back(line);
        for (const auto& n : names) corpus.push_back("answer: " + n);
    }

    const TextAttributedGraph& primary = *graphs[primary_index];
    auto sub_of = [&](int64_t id, uint64_t tag) {
        return extract_neighborhood(primary, id, model_cfg.max_hops, model_cfg.max_neighbors,
                                    derive_seed(seed, tag, static_cast<uint64_t>(id)));
    };

    std::set<std::string> pool_set;
    for (const auto* g : graphs) {
        for (int v = 0; v < g->num_nodes(); ++v)
            for (auto& w : split_words(g->text(v))) pool_set.insert(w);
        for (const auto& n : g->class_names()) pool_set.insert(n);
    }
    std::vector<std::string> pool(pool_set.begin(), pool_set.end());

    // Typical node-text length of the primary graph; scrambled text slots are
    // drawn at this length so line geometry matches real queries.
    int text_words = 1;
    {
        int64_t total = 0;
        for (int v = 0; v < primary.num_nodes(); ++v)
            total += static_cast<int64_t>(split_words(primary.text(v)).size());
        if (primary.num_nodes() > 0)
            text_words = std::max<int>(1, static_cast<int>(total / primary.num_nodes()));
    }
    auto scrambled_text = [&](Rng& rng) {
        std::string out;
        for (int i = 0; i < text_words; ++i) {
            if (i) out += ' ';
            out += pool[static_cast<size_t>(rng.below(pool.size()))];
        }
        return out;
    };

    // Supervised Q/A strings come from the primary graph only. Classification
    // lines scramble the text slot (random pool words): label words must bind
    // to the answer format here, not to content words, or the frozen decoder
    // would solve classification lexically and the node-token pathway would
    // get no gradient pressure during pre-training.
    auto class_names = primary.class_names();
    if (!class_names.empty() && cfg.classify_examples > 0 && !pool.empty()) {
        const std::string task = classification_task_text(class_names);
        std::vector<int> labeled;
        for (int v = 0; v < primary.num_nodes(); ++v)
            if (primary.label(v)) labeled.push_back(v);
        Rng rng = root.fork(1);
        int take = std::min<int>(cfg.classify_examples, static_cast<int>(labeled.size()));
        for (int k : rng.sample_indices(static_cast<int>(labeled.size()), take)) {
            int v = labeled[static_cast<size_t>(k)];
            auto sub = sub_of(primary.id_of(v), 41);
            corpus.push_back(render_plain(templates.get("classify"), sub.size(), 0,
                                          scrambled_text(rng), "", task) +
                             " " + *primary.label(v));
        }
    }

    if (cfg.link_examples > 0 && primary.num_edges() > 0) {
        Rng rng = root.fork(2);
        std::vector<std::pair<int, int>> edges;
        for (int u = 0; u < primary.num_nodes(); ++u)
            for (int v : primary.neighbors(u))
                if (v > u) edges.push_back({u, v});
        int per_side = cfg.link_examples / 2;
        for (int i = 0; i < per_side; ++i) {
            auto [u, v] = edges[static_cast<size_t>(rng.below(edges.size()))];
            auto su = sub_of(primary.id_of(u), 42);
            auto sv = sub_of(primary.id_of(v), 43);
            corpus.push_back(render_plain(templates.get("link_predict"), su.size(), sv.size(),
                                          primary.text(u), primary.text(v), link_task_text()) +
                             " yes");
        }
        int made = 0, guard = 0;
        while (made < per_side && guard < per_side * 200) {
            int u = static_cast<int>(rng.below(static_cast<uint64_t>(primary.num_nodes())));
            int v = static_cast<int>(rng.below(static_cast<uint64_t>(primary.num_nodes())));
            ++guard;
            if (u == v || primary.has_edge(u, v)) continue;
            auto su = sub_of(primary.id_of(u), 44);
            auto sv = sub_of(primary.id_of(v), 45);
            corpus.push_back(render_plain(templates.get("link_predict"), su.size(), sv.size(),
                                          primary.text(u), primary.text(v), link_task_text()) +
                             " no");
            ++made;
        }
    }

    if (cfg.summarize_examples > 0) {
        Rng rng = root.fork(3);
        int take = std::min<int>(cfg.summarize_examples, primary.num_nodes());
        for (int k : rng.sample_indices(primary.num_nodes(), take)) {
            auto sub = sub_of(primary.id_of(k), 46);
            corpus.push_back(render_plain(templates.get("summarize"), sub.size(), 0,
                                          primary.text(k), "", summary_task_text()) +
                             " " + node_title(primary, k, title_len));
        }
    }

    // Choice lines: random word lists with a random answer drawn from the
    // list. The pattern constrains generation to the offered options while
    // carrying no content signal.
    if (cfg.choice_lines > 0 && pool.size() >= 5) {
        Rng rng = root.fork(4);
        for (int i = 0; i < cfg.choice_lines; ++i) {
            std::vector<std::string> opts;
            std::set<size_t> seen;
            while (opts.size() < 5) {
                size_t k = static_cast<size_t>(rng.below(pool.size()));
                if (seen.insert(k).second) opts.push_back(pool[k]);
            }
            std::ostringstream line;
            line << "task: which of the following categories does this node belong to:";
            for (size_t k = 0; k < opts.size(); ++k) line << (k ? ", " : " ") << opts[k];
            line << "? answer: " << opts[static_cast<size_t>(rng.below(opts.size()))];
            corpus.push_back(line.str());
        }
    }

    // Pointer lines: classification-format renders whose node slots hold
    // plain words, with the first slot's word among the offered options and
    // as the answer. They instill the option-constrained copy circuit a large
    // pretrained decoder would already have: the answer follows the content
    // at the target node-token position. The downstream encoder is trained
    // against this interface. Slot counts and text length mirror real
    // queries so the circuit binds at the right positions.
    if (cfg.pointer_lines > 0 && pool.size() >= 8) {
        Rng rng = root.fork(5);
        const int max_slots = model_cfg.max_neighbors + 1;
        for (int i = 0; i < cfg.pointer_lines; ++i) {
            int slots = 2 + static_cast<int>(rng.below(static_cast<uint64_t>(max_slots - 1)));
            std::vector<std::string> words;
            for (int s = 0; s < slots; ++s)
                words.push_back(pool[static_cast<size_t>(rng.below(pool.size()))]);
            std::vector<std::string> opts = {words[0]};
            std::set<std::string> seen(opts.begin(), opts.end());
            while (opts.size() < 5) {
                const std::string& w = pool[static_cast<size_t>(rng.below(pool.size()))];
                if (seen.insert(w).second) opts.push_back(w);
            }
            rng.shuffle(opts);
            std::string task = "which of the following categories does this node belong to:";
            for (size_t k = 0; k < opts.size(); ++k) {
                task += k ? ", " : " ";
                task += opts[k];
            }
            task += "?";
            corpus.push_back(render_with_slot_words(templates.get("classify"), words,
                                                    scrambled_text(rng), task) +
                             " " + words[0]);
        }
    }
    return corpus;
}

}  // namespace graphlm
