#include "graphlm/templates.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "graphlm/errors.hpp"

namespace graphlm {

namespace {

const std::pair<const char*, const char*> kBuiltin[] = {
    {"classify",
     "Given a sequence of node tokens: <node_tokens>. Where the first token represents the "
     "target node. With the following information: Text: <target_text>. Task: <task_text>. "
     "Answer:"},
    {"link_predict",
     "Given two sequences of node tokens: <node_tokens> and <node_tokens_2>. Where the first "
     "token and the <second_target_index>-th token represent the target nodes. With the "
     "following information: Text1: <target_text>. Text2: <target_text_2>. Task: <task_text>. "
     "Answer:"},
    {"summarize",
     "Given a sequence of node tokens: <node_tokens>. Where the first token represents the "
     "target node. With the following information: Text: <target_text>. Task: <task_text>. "
     "Answer:"},
    {"node_match",
     "Given a sequence of node tokens: <node_tokens>. Where the first token represents the "
     "target node. Task: <task_text>."},
};

void replace_all(std::string& s, const std::string& from, const std::string& to) {
    size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

std::string node_run(int first, int count) {
    std::ostringstream os;
    for (int i = 0; i < count; ++i) {
        if (i) os << ", ";
        os << "<node_" << (first + i) << ">";
    }
    return os.str();
}

}  // namespace

TemplateSet TemplateSet::builtin() {
    TemplateSet ts;
    for (const auto& [id, text] : kBuiltin) ts.templates_[id] = PromptTemplate{id, text};
    return ts;
}

TemplateSet TemplateSet::load_dir(const std::string& dir) {
    TemplateSet ts = builtin();
    if (!std::filesystem::is_directory(dir))
        throw DataError("template directory not found: " + dir);
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".txt") continue;
        std::ifstream in(entry.path());
        std::ostringstream buf;
        buf << in.rdbuf();
        std::string text = buf.str();
        while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
        ts.templates_[entry.path().stem().string()] =
            PromptTemplate{entry.path().stem().string(), text};
    }
    return ts;
}

const PromptTemplate& TemplateSet::get(const std::string& id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) throw DataError("unknown template id: " + id);
    return it->second;
}

bool TemplateSet::has(const std::string& id) const { return templates_.count(id) > 0; }

void TemplateSet::write_dir(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [id, tpl] : templates_) {
        std::ofstream out(std::filesystem::path(dir) / (id + ".txt"));
        out << tpl.text << '\n';
    }
}

std::string instantiate_template(const PromptTemplate& tpl, int num_nodes, int num_nodes_2,
                                 const std::string& target_text,
                                 const std::string& target_text_2,
                                 const std::string& task_text) {
    if (num_nodes < 1) throw DataError("instantiate_template: need at least one node token");
    std::string s = tpl.text;
    if (s.find("<node_tokens_2>") != std::string::npos && num_nodes_2 < 1)
        throw DataError("instantiate_template: template '" + tpl.id +
                        "' needs a second node-token run");
    replace_all(s, "<node_tokens_2>", node_run(num_nodes + 1, num_nodes_2));
    replace_all(s, "<node_tokens>", node_run(1, num_nodes));
    replace_all(s, "<second_target_index>", std::to_string(num_nodes + 1));
    replace_all(s, "<target_text_2>", target_text_2);
    replace_all(s, "<target_text>", target_text);
    replace_all(s, "<task_text>", task_text);
    return s;
}

std::vector<PromptPiece> parse_node_markers(const std::string& s) {
    std::vector<PromptPiece> pieces;
    const std::string open = "<node_";
    size_t pos = 0;
    std::string pending;
    while (pos < s.size()) {
        size_t m = s.find(open, pos);
        if (m == std::string::npos) {
            pending += s.substr(pos);
            break;
        }
        size_t d = m + open.size();
        size_t e = d;
        while (e < s.size() && s[e] >= '0' && s[e] <= '9') ++e;
        if (e == d || e >= s.size() || s[e] != '>') {
            pending += s.substr(pos, m + 1 - pos);
            pos = m + 1;
            continue;
        }
        pending += s.substr(pos, m - pos);
        if (!pending.empty()) {
            pieces.push_back({false, 0, pending});
            pending.clear();
        }
        pieces.push_back({true, std::stoi(s.substr(d, e - d)), ""});
        pos = e + 1;
    }
    if (!pending.empty()) pieces.push_back({false, 0, pending});
    return pieces;
}

}  // namespace graphlm
