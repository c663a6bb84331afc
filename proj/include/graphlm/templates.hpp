#pragma once
#include <map>
#include <string>
#include <vector>

namespace graphlm {

// Instruction templates. Files carry the markers <node_tokens>,
// <node_tokens_2>, <target_text>, <target_text_2>, <task_text> and
// <second_target_index>; instantiation expands the node-token runs into
// literal <node_1>, <node_2>, ... markers sized to the actual subgraph.
struct PromptTemplate {
    std::string id;
    std::string text;
};

class TemplateSet {
public:
    static TemplateSet builtin();
    // Reads <id>.txt files from a directory; ids not present fall back to
    // the builtin set.
    static TemplateSet load_dir(const std::string& dir);

    const PromptTemplate& get(const std::string& id) const;  // DataError if unknown
    bool has(const std::string& id) const;
    void write_dir(const std::string& dir) const;

private:
    std::map<std::string, PromptTemplate> templates_;
};

// Expands node-token runs and substitutes the text fields. The result still
// contains the literal <node_i> markers.
std::string instantiate_template(const PromptTemplate& tpl, int num_nodes, int num_nodes_2,
                                 const std::string& target_text,
                                 const std::string& target_text_2,
                                 const std::string& task_text);

// One segment of an instantiated prompt: either literal text or the slot for
// the embedding of node token i (1-based marker index).
struct PromptPiece {
    bool is_node = false;
    int node_index = 0;
    std::string text;
};

std::vector<PromptPiece> parse_node_markers(const std::string& instantiated);

}  // namespace graphlm
