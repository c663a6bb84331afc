#include "graphlm/tag.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "graphlm/errors.hpp"
#include "graphlm/rng.hpp"
#include "graphlm/textproc.hpp"
#include "json.hpp"

namespace graphlm {

TextAttributedGraph::TextAttributedGraph(std::vector<NodeInit> nodes,
                                         const std::vector<std::pair<int64_t, int64_t>>& edges,
                                         int feat_dim, uint64_t feature_seed)
    : feat_dim_(feat_dim) {
    if (feat_dim < 1) throw ConfigError("TextAttributedGraph: feat_dim must be >= 1");
    std::sort(nodes.begin(), nodes.end(),
              [](const NodeInit& a, const NodeInit& b) { return a.id < b.id; });
    for (size_t i = 1; i < nodes.size(); ++i)
        if (nodes[i].id == nodes[i - 1].id)
            throw DataError("duplicate node id " + std::to_string(nodes[i].id));

    ids_.reserve(nodes.size());
    for (auto& n : nodes) {
        ids_.push_back(n.id);
        texts_.push_back(std::move(n.text));
        labels_.push_back(std::move(n.label));
        features_.push_back(featurize_text(texts_.back(), feat_dim, feature_seed));
    }
    adj_.assign(ids_.size(), {});

    std::set<std::pair<int, int>> seen;
    for (const auto& [a, b] : edges) {
        int u = index_of(a);
        int v = index_of(b);
        if (u == v) throw DataError("self-loop on node " + std::to_string(a));
        if (u > v) std::swap(u, v);
        if (!seen.insert({u, v}).second) continue;
        adj_[static_cast<size_t>(u)].push_back(v);
        adj_[static_cast<size_t>(v)].push_back(u);
        ++num_edges_;
    }
    for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
}

int TextAttributedGraph::index_of(int64_t id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id)
        throw DataError("unknown node id " + std::to_string(id));
    return static_cast<int>(it - ids_.begin());
}

bool TextAttributedGraph::has_id(int64_t id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    return it != ids_.end() && *it == id;
}

bool TextAttributedGraph::has_edge(int u, int v) const {
    const auto& nb = adj_[static_cast<size_t>(u)];
    return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<std::string> TextAttributedGraph::class_names() const {
    std::vector<std::string> out;
    for (const auto& l : labels_)
        if (l && std::find(out.begin(), out.end(), *l) == out.end()) out.push_back(*l);
    return out;
}

std::vector<int> TextAttributedGraph::nodes_with_label(const std::string& label) const {
    std::vector<int> out;
    for (size_t i = 0; i < labels_.size(); ++i)
        if (labels_[i] && *labels_[i] == label) out.push_back(static_cast<int>(i));
    return out;
}

void SyntheticTagSpec::validate() const {
    if (num_classes < 2) throw DataError("synthetic spec: num_classes must be >= 2");
    if (nodes_per_class < 1) throw DataError("synthetic spec: nodes_per_class must be >= 1");
    if (p_intra < 0.0 || p_intra > 1.0) throw DataError("synthetic spec: p_intra must be in [0,1]");
    if (p_inter < 0.0 || p_inter > 1.0) throw DataError("synthetic spec: p_inter must be in [0,1]");
    if (vocab_per_class < 1) throw DataError("synthetic spec: vocab_per_class must be >= 1");
    if (shared_vocab < 0) throw DataError("synthetic spec: shared_vocab must be >= 0");
    if (text_len < 1) throw DataError("synthetic spec: text_len must be >= 1");
}

std::vector<int64_t> FewShotExampleSet::node_ids() const {
    std::vector<int64_t> out;
    out.reserve(pairs.size());
    for (const auto& [id, _] : pairs) out.push_back(id);
    return out;
}

NeighborhoodSubgraph extract_neighborhood(const TextAttributedGraph& graph, int64_t target,
                                          int max_hops, int max_neighbors, uint64_t seed) {
    if (max_hops < 0) throw DataError("extract_neighborhood: max_hops must be >= 0");
    if (max_neighbors < 0) throw DataError("extract_neighborhood: max_neighbors must be >= 0");
    const int t = graph.index_of(target);

    Rng rng(seed);
    std::vector<char> included(static_cast<size_t>(graph.num_nodes()), 0);
    included[static_cast<size_t>(t)] = 1;
    std::vector<int> selected = {t};
    std::vector<int> frontier = {t};
    int budget = max_neighbors;

    for (int hop = 1; hop <= max_hops && budget > 0 && !frontier.empty(); ++hop) {
        std::vector<int> candidates;
        for (int u : frontier)
            for (int v : graph.neighbors(u))
                if (!included[static_cast<size_t>(v)]) candidates.push_back(v);
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

        std::vector<int> chosen;
        if (static_cast<int>(candidates.size()) <= budget) {
            chosen = candidates;
        } else {
            for (int k : rng.sample_indices(static_cast<int>(candidates.size()), budget))
                chosen.push_back(candidates[static_cast<size_t>(k)]);
        }
        for (int v : chosen) included[static_cast<size_t>(v)] = 1;
        budget -= static_cast<int>(chosen.size());
        frontier = std::move(chosen);
    }

    for (int v = 0; v < graph.num_nodes(); ++v)
        if (included[static_cast<size_t>(v)] && v != t) selected.push_back(v);

    // Re-derive hops as BFS distances inside the induced member set; per-hop
    // sampling can admit a node through a longer route than the shortest one
    // the members themselves provide.
    std::map<int, int> pos;  // graph index -> member slot
    for (size_t i = 0; i < selected.size(); ++i) pos[selected[i]] = static_cast<int>(i);
    std::vector<int> hop(selected.size(), -1);
    hop[0] = 0;
    std::vector<int> queue = {0};
    for (size_t qi = 0; qi < queue.size(); ++qi) {
        int m = queue[qi];
        for (int v : graph.neighbors(selected[static_cast<size_t>(m)])) {
            auto it = pos.find(v);
            if (it == pos.end()) continue;
            int mv = it->second;
            if (hop[static_cast<size_t>(mv)] < 0) {
                hop[static_cast<size_t>(mv)] = hop[static_cast<size_t>(m)] + 1;
                queue.push_back(mv);
            }
        }
    }

    std::vector<int> order(selected.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (hop[static_cast<size_t>(a)] != hop[static_cast<size_t>(b)])
            return hop[static_cast<size_t>(a)] < hop[static_cast<size_t>(b)];
        return graph.id_of(selected[static_cast<size_t>(a)]) <
               graph.id_of(selected[static_cast<size_t>(b)]);
    });

    NeighborhoodSubgraph sub;
    sub.target = target;
    std::map<int, int> slot;  // graph index -> final member slot
    for (size_t i = 0; i < order.size(); ++i) {
        int gi = selected[static_cast<size_t>(order[i])];
        sub.members.push_back(graph.id_of(gi));
        sub.hop_of.push_back(hop[static_cast<size_t>(order[i])]);
        sub.local_features.push_back(graph.features(gi));
        sub.local_texts.push_back(graph.text(gi));
        slot[gi] = static_cast<int>(i);
    }
    sub.local_adjacency.resize(sub.members.size());
    for (size_t i = 0; i < order.size(); ++i) {
        int gi = selected[static_cast<size_t>(order[i])];
        for (int v : graph.neighbors(gi)) {
            auto it = slot.find(v);
            if (it != slot.end()) sub.local_adjacency[i].push_back(it->second);
        }
        std::sort(sub.local_adjacency[i].begin(), sub.local_adjacency[i].end());
    }
    return sub;
}

namespace {

const char* kClassWordList[] = {
    "amber", "basalt", "cobalt", "dune", "ember", "fjord", "garnet", "harbor",
    "iris", "juniper", "krill", "lagoon", "meadow", "nectar", "onyx", "pampas",
    "quartz", "reef", "sage", "tundra", "umber", "velvet", "willow", "xenon",
    "yarrow", "zephyr", "alder", "birch", "cedar", "damson", "elm", "fern",
    "ginkgo", "hazel", "ivy", "jade", "kelp", "laurel", "maple", "nutmeg",
    "oak", "pine", "quince", "rowan", "sorrel", "teak", "ume", "vetiver",
    "walnut", "xylem", "yew", "zinnia", "agate", "beryl", "coral", "diorite",
    "eclogite", "flint", "gypsum", "halite",
};
constexpr int kClassWordCount = static_cast<int>(sizeof(kClassWordList) / sizeof(kClassWordList[0]));

std::string random_word(Rng& rng, int len) {
    std::string w(static_cast<size_t>(len), 'a');
    for (auto& c : w) c = static_cast<char>('a' + rng.below(26));
    return w;
}

}  // namespace

TextAttributedGraph generate_synthetic_tag(const SyntheticTagSpec& spec, uint64_t seed,
                                           int feat_dim, uint64_t feature_seed) {
    spec.validate();
    Rng root(seed);
    Rng name_rng = root.fork(1);
    Rng vocab_rng = root.fork(2);
    Rng text_rng = root.fork(3);
    Rng edge_rng = root.fork(4);

    std::vector<std::string> names;
    int offset = static_cast<int>(name_rng.below(kClassWordCount));
    for (int c = 0; c < spec.num_classes; ++c) {
        if (c < kClassWordCount) {
            names.push_back(kClassWordList[(offset + c) % kClassWordCount]);
        } else {
            names.push_back("label" + std::to_string(c));
        }
    }

    std::set<std::string> used(names.begin(), names.end());
    auto fresh_word = [&](Rng& rng) {
        for (;;) {
            std::string w = random_word(rng, 6);
            if (used.insert(w).second) return w;
        }
    };
    std::vector<std::vector<std::string>> class_vocab(static_cast<size_t>(spec.num_classes));
    for (int c = 0; c < spec.num_classes; ++c)
        for (int j = 0; j < spec.vocab_per_class; ++j)
            class_vocab[static_cast<size_t>(c)].push_back(fresh_word(vocab_rng));
    std::vector<std::string> shared;
    for (int j = 0; j < spec.shared_vocab; ++j) shared.push_back(fresh_word(vocab_rng));

    const int n = spec.num_classes * spec.nodes_per_class;
    std::vector<TextAttributedGraph::NodeInit> nodes;
    nodes.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        int c = i % spec.num_classes;
        const auto& cv = class_vocab[static_cast<size_t>(c)];
        std::ostringstream text;
        for (int t = 0; t < spec.text_len; ++t) {
            size_t pool = cv.size() + shared.size();
            size_t k = static_cast<size_t>(text_rng.below(pool));
            if (t) text << ' ';
            text << (k < cv.size() ? cv[k] : shared[k - cv.size()]);
        }
        nodes.push_back({i, text.str(), names[static_cast<size_t>(c)]});
    }

    std::vector<std::pair<int64_t, int64_t>> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double p = (i % spec.num_classes == j % spec.num_classes) ? spec.p_intra : spec.p_inter;
            if (edge_rng.uniform01() < p) edges.push_back({i, j});
        }
    }
    return TextAttributedGraph(std::move(nodes), edges, feat_dim, feature_seed);
}

FewShotExampleSet sample_few_shot(const TextAttributedGraph& graph,
                                  const std::vector<std::string>& class_names, int shots,
                                  uint64_t seed) {
    if (shots < 1) throw DataError("sample_few_shot: shots must be >= 1");
    Rng rng(seed);
    FewShotExampleSet out;
    out.shots = shots;
    out.class_names = class_names;
    for (const auto& name : class_names) {
        auto pool = graph.nodes_with_label(name);
        if (static_cast<int>(pool.size()) < shots)
            throw DataError("sample_few_shot: class '" + name + "' has only " +
                            std::to_string(pool.size()) + " labeled nodes, need " +
                            std::to_string(shots));
        for (int k : rng.sample_indices(static_cast<int>(pool.size()), shots))
            out.pairs.push_back({graph.id_of(pool[static_cast<size_t>(k)]), name});
    }
    return out;
}

TextAttributedGraph load_tag_jsonl(const std::string& nodes_path, const std::string& edges_path,
                                   int feat_dim, uint64_t feature_seed,
                                   std::vector<std::string>* warnings) {
    auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back(msg);
    };

    std::ifstream nf(nodes_path);
    if (!nf) throw DataError("cannot open nodes file: " + nodes_path);
    std::vector<TextAttributedGraph::NodeInit> nodes;
    std::string line;
    size_t lineno = 0;
    while (std::getline(nf, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw DataError(nodes_path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.contains("id") || !j.contains("text"))
            throw DataError(nodes_path + ":" + std::to_string(lineno) + ": node record needs id and text");
        TextAttributedGraph::NodeInit n;
        n.id = j.at("id").get<int64_t>();
        n.text = j.at("text").get<std::string>();
        if (j.contains("label") && !j.at("label").is_null())
            n.label = j.at("label").get<std::string>();
        nodes.push_back(std::move(n));
    }

    std::ifstream ef(edges_path);
    if (!ef) throw DataError("cannot open edges file: " + edges_path);
    std::vector<std::pair<int64_t, int64_t>> edges;
    std::set<std::pair<int64_t, int64_t>> seen;
    size_t self_loops = 0, dups = 0;
    lineno = 0;
    while (std::getline(ef, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw DataError(edges_path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.contains("src") || !j.contains("dst"))
            throw DataError(edges_path + ":" + std::to_string(lineno) + ": edge record needs src and dst");
        int64_t a = j.at("src").get<int64_t>();
        int64_t b = j.at("dst").get<int64_t>();
        if (a == b) {
            ++self_loops;
            continue;
        }
        auto key = std::minmax(a, b);
        if (!seen.insert({key.first, key.second}).second) {
            ++dups;
            continue;
        }
        edges.push_back({a, b});
    }
    if (self_loops) warn("dropped " + std::to_string(self_loops) + " self-loop edge(s)");
    if (dups) warn("merged " + std::to_string(dups) + " duplicate/reverse edge(s) while symmetrizing");

    return TextAttributedGraph(std::move(nodes), edges, feat_dim, feature_seed);
}

void save_tag_jsonl(const TextAttributedGraph& graph, const std::string& nodes_path,
                    const std::string& edges_path) {
    std::ofstream nf(nodes_path);
    if (!nf) throw DataError("cannot write nodes file: " + nodes_path);
    for (int i = 0; i < graph.num_nodes(); ++i) {
        nlohmann::ordered_json j;
        j["id"] = graph.id_of(i);
        j["text"] = graph.text(i);
        if (graph.label(i))
            j["label"] = *graph.label(i);
        else
            j["label"] = nullptr;
        nf << j.dump() << '\n';
    }
    std::ofstream ef(edges_path);
    if (!ef) throw DataError("cannot write edges file: " + edges_path);
    for (int u = 0; u < graph.num_nodes(); ++u) {
        for (int v : graph.neighbors(u)) {
            if (v <= u) continue;
            nlohmann::ordered_json j;
            j["src"] = graph.id_of(u);
            j["dst"] = graph.id_of(v);
            ef << j.dump() << '\n';
        }
    }
}

std::string node_title(const TextAttributedGraph& graph, int index, int title_len) {
    auto words = split_words(graph.text(index));
    std::string out;
    for (int i = 0; i < title_len && i < static_cast<int>(words.size()); ++i) {
        if (i) out += ' ';
        out += words[static_cast<size_t>(i)];
    }
    return out;
}

}  // namespace graphlm
