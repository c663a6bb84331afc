#include "graphlm/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "graphlm/digest.hpp"
#include "graphlm/errors.hpp"
#include "json.hpp"

namespace graphlm {

namespace {

constexpr char kMagic[4] = {'G', 'L', 'M', 'C'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct Reader {
    const std::string& s;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > s.size()) throw DataError("checkpoint: truncated file");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<unsigned char>(s[pos + static_cast<size_t>(i)])) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<uint64_t>(static_cast<unsigned char>(s[pos + static_cast<size_t>(i)])) << (8 * i);
        pos += 8;
        return v;
    }
    std::string bytes(size_t n) {
        need(n);
        std::string out = s.substr(pos, n);
        pos += n;
        return out;
    }
};

}  // namespace

const Matrix& CheckpointData::tensor(const std::string& name) const {
    for (const auto& [n, m] : tensors)
        if (n == name) return m;
    throw DataError("checkpoint: missing tensor '" + name + "'");
}

bool CheckpointData::has_tensor(const std::string& name) const {
    for (const auto& [n, _] : tensors)
        if (n == name) return true;
    return false;
}

const std::string& CheckpointData::str(const std::string& name) const {
    auto it = strings.find(name);
    if (it == strings.end()) throw DataError("checkpoint: missing entry '" + name + "'");
    return it->second;
}

std::string serialize_checkpoint(const CheckpointData& data) {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<uint32_t>(data.strings.size()));
    for (const auto& [name, value] : data.strings) {
        put_u32(out, static_cast<uint32_t>(name.size()));
        out += name;
        put_u64(out, value.size());
        out += value;
    }
    put_u32(out, static_cast<uint32_t>(data.tensors.size()));
    for (const auto& [name, m] : data.tensors) {
        put_u32(out, static_cast<uint32_t>(name.size()));
        out += name;
        put_u32(out, static_cast<uint32_t>(m.rows));
        put_u32(out, static_cast<uint32_t>(m.cols));
        for (double x : m.a) {
            uint64_t bits;
            std::memcpy(&bits, &x, 8);
            put_u64(out, bits);
        }
    }
    return out;
}

CheckpointData deserialize_checkpoint(const std::string& bytes) {
    Reader r{bytes};
    if (r.bytes(4) != std::string(kMagic, 4)) throw DataError("checkpoint: bad magic");
    uint32_t version = r.u32();
    if (version != kVersion)
        throw DataError("checkpoint: unsupported version " + std::to_string(version));
    CheckpointData data;
    uint32_t ns = r.u32();
    for (uint32_t i = 0; i < ns; ++i) {
        std::string name = r.bytes(r.u32());
        data.strings[name] = r.bytes(static_cast<size_t>(r.u64()));
    }
    uint32_t nt = r.u32();
    for (uint32_t i = 0; i < nt; ++i) {
        std::string name = r.bytes(r.u32());
        uint32_t rows = r.u32();
        uint32_t cols = r.u32();
        Matrix m(static_cast<int>(rows), static_cast<int>(cols));
        for (auto& x : m.a) {
            uint64_t bits = r.u64();
            std::memcpy(&x, &bits, 8);
        }
        data.tensors.push_back({std::move(name), std::move(m)});
    }
    if (r.pos != bytes.size()) throw DataError("checkpoint: trailing bytes");
    return data;
}

void write_checkpoint(const std::string& path, const CheckpointData& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    std::string bytes = serialize_checkpoint(data);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

CheckpointData read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_checkpoint(buf.str());
}

uint64_t file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return fnv1a64(buf.str());
}

void save_model_checkpoint(const std::string& path, const Model& model, uint64_t lm_digest) {
    CheckpointData data;
    data.strings["format"] = "model";
    data.strings["config"] = model.cfg.to_json();
    data.strings["lm_digest"] = hex64(lm_digest);
    for (const auto& [name, m] : model.named_tensors()) data.tensors.push_back({name, *m});
    write_checkpoint(path, data);
}

LoadedModel load_model_checkpoint(const std::string& path) {
    CheckpointData data = read_checkpoint(path);
    if (data.str("format") != "model") throw DataError("not a model checkpoint: " + path);
    LoadedModel out;
    out.model.cfg = ModelConfig::from_json(data.str("config"));
    out.lm_digest = std::stoull(data.str("lm_digest"), nullptr, 16);

    Model& m = out.model;
    m.gnn.layers.clear();
    for (int l = 0; l < m.cfg.gnn_layers; ++l)
        m.gnn.layers.push_back(data.tensor("gnn.w" + std::to_string(l)));
    m.hops.table = data.tensor("hops.table");
    m.gate.w_inv = data.tensor("gate.w_inv");
    m.gate.m_inv = data.tensor("gate.m_inv");
    m.gate.w_rel = data.tensor("gate.w_rel");
    m.gate.m_rel = data.tensor("gate.m_rel");
    m.gate.w_agg = data.tensor("gate.w_agg");
    m.alpha.projection = data.tensor("alpha.proj");
    m.proj.w = data.tensor("proj.w");
    m.proj.b = data.tensor("proj.b");
    m.validate();
    return out;
}

void save_adapter_checkpoint(const std::string& path, const AdapterCheckpoint& adapter) {
    CheckpointData data;
    data.strings["format"] = "adapter";
    data.strings["task_text"] = adapter.task_text;
    data.strings["task_kind"] = adapter.task_kind;
    data.strings["base_digest"] = hex64(adapter.base_digest);
    nlohmann::json ids = nlohmann::json::array();
    for (int64_t id : adapter.example_node_ids) ids.push_back(id);
    data.strings["example_node_ids"] = ids.dump();
    data.tensors = adapter.tensors;
    write_checkpoint(path, data);
}

AdapterCheckpoint load_adapter_checkpoint(const std::string& path) {
    CheckpointData data = read_checkpoint(path);
    if (data.str("format") != "adapter") throw DataError("not an adapter checkpoint: " + path);
    AdapterCheckpoint a;
    a.task_text = data.str("task_text");
    a.task_kind = data.str("task_kind");
    a.base_digest = std::stoull(data.str("base_digest"), nullptr, 16);
    for (const auto& id : nlohmann::json::parse(data.str("example_node_ids")))
        a.example_node_ids.push_back(id.get<int64_t>());
    a.tensors = std::move(data.tensors);
    return a;
}

void apply_adapter(Model& model, const AdapterCheckpoint& adapter) {
    std::map<std::string, Matrix*> by_name;
    for (auto& [name, m] : model.named_tensors()) by_name[name] = m;
    for (const auto& [name, m] : adapter.tensors) {
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw ConfigError("adapter: tensor '" + name + "' not present in base model");
        if (!it->second->same_shape(m))
            throw ConfigError("adapter: shape mismatch for tensor '" + name + "'");
        *it->second = m;
    }
}

void save_lm_checkpoint(const std::string& path, const LmParams& lm) {
    CheckpointData data;
    data.strings["format"] = "lm";
    nlohmann::ordered_json cfg;
    cfg["dim"] = lm.config.dim;
    cfg["blocks"] = lm.config.blocks;
    cfg["heads"] = lm.config.heads;
    cfg["ffn_dim"] = lm.config.ffn_dim;
    cfg["context"] = lm.config.context;
    cfg["vocab_cap"] = lm.config.vocab_cap;
    data.strings["config"] = cfg.dump();
    std::string vocab_blob;
    for (const auto& t : lm.vocab.tokens()) {
        vocab_blob += t;
        vocab_blob += '\n';
    }
    data.strings["vocab"] = vocab_blob;
    for (const auto& [name, m] : lm.named_tensors()) data.tensors.push_back({name, *m});
    write_checkpoint(path, data);
}

LmParams load_lm_checkpoint(const std::string& path) {
    CheckpointData data = read_checkpoint(path);
    if (data.str("format") != "lm") throw DataError("not an lm checkpoint: " + path);
    nlohmann::json cfg = nlohmann::json::parse(data.str("config"));
    LmParams lm;
    lm.config.dim = cfg.at("dim").get<int>();
    lm.config.blocks = cfg.at("blocks").get<int>();
    lm.config.heads = cfg.at("heads").get<int>();
    lm.config.ffn_dim = cfg.at("ffn_dim").get<int>();
    lm.config.context = cfg.at("context").get<int>();
    lm.config.vocab_cap = cfg.at("vocab_cap").get<int>();
    lm.config.validate();

    std::vector<std::string> tokens;
    std::istringstream vs(data.str("vocab"));
    std::string tok;
    while (std::getline(vs, tok)) tokens.push_back(tok);
    lm.vocab = Vocabulary::from_tokens(tokens);

    lm.blocks.resize(static_cast<size_t>(lm.config.blocks));
    for (auto& [name, m] : lm.named_tensors()) *m = data.tensor(name);
    return lm;
}

}  // namespace graphlm
