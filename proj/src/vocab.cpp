#include "graphlm/vocab.hpp"

#include <algorithm>
#include <map>

#include "graphlm/errors.hpp"
#include "graphlm/textproc.hpp"

namespace graphlm {

namespace {
const char* kReserved[] = {"<pad>", "<bos>", "<eos>", "<unk>", "<node>"};
}

Vocabulary::Vocabulary() {
    for (const char* r : kReserved) tokens_.push_back(r);
    rebuild_index();
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus, int cap) {
    if (cap < 1) throw ConfigError("vocabulary: cap must be >= 1");
    std::map<std::string, int64_t> counts;
    for (const auto& line : corpus)
        for (auto& w : split_words(line)) ++counts[w];
    for (const char* r : kReserved) counts.erase(r);

    std::vector<std::pair<std::string, int64_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary v;
    for (const auto& [w, _] : ranked) {
        if (static_cast<int>(v.tokens_.size()) >= kNumReserved + cap) break;
        v.tokens_.push_back(w);
    }
    v.rebuild_index();
    return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
    if (static_cast<int>(tokens.size()) < kNumReserved)
        throw DataError("vocabulary: token list shorter than the reserved set");
    for (int i = 0; i < kNumReserved; ++i)
        if (tokens[static_cast<size_t>(i)] != kReserved[i])
            throw DataError("vocabulary: reserved token mismatch at id " + std::to_string(i));
    Vocabulary v;
    v.tokens_ = tokens;
    v.rebuild_index();
    for (size_t i = 0; i + 1 < v.sorted_order_.size(); ++i)
        if (v.tokens_[static_cast<size_t>(v.sorted_order_[i])] ==
            v.tokens_[static_cast<size_t>(v.sorted_order_[i + 1])])
            throw DataError("vocabulary: duplicate token '" +
                            v.tokens_[static_cast<size_t>(v.sorted_order_[i])] + "'");
    return v;
}

void Vocabulary::rebuild_index() {
    sorted_order_.resize(tokens_.size());
    for (size_t i = 0; i < tokens_.size(); ++i) sorted_order_[i] = static_cast<int>(i);
    std::sort(sorted_order_.begin(), sorted_order_.end(),
              [&](int a, int b) { return tokens_[static_cast<size_t>(a)] < tokens_[static_cast<size_t>(b)]; });
}

int Vocabulary::id_of(const std::string& token) const {
    auto it = std::lower_bound(sorted_order_.begin(), sorted_order_.end(), token,
                               [&](int i, const std::string& t) { return tokens_[static_cast<size_t>(i)] < t; });
    if (it != sorted_order_.end() && tokens_[static_cast<size_t>(*it)] == token) return *it;
    return kUnk;
}

bool Vocabulary::contains(const std::string& token) const {
    auto it = std::lower_bound(sorted_order_.begin(), sorted_order_.end(), token,
                               [&](int i, const std::string& t) { return tokens_[static_cast<size_t>(i)] < t; });
    return it != sorted_order_.end() && tokens_[static_cast<size_t>(*it)] == token;
}

const std::string& Vocabulary::token_of(int id) const {
    if (id < 0 || id >= size()) throw DataError("vocabulary: id out of range");
    return tokens_[static_cast<size_t>(id)];
}

std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab) {
    std::vector<int> out;
    size_t i = 0;
    std::string word;
    auto flush = [&]() {
        if (!word.empty()) {
            out.push_back(vocab.id_of(word));
            word.clear();
        }
    };
    while (i < text.size()) {
        bool matched = false;
        if (text[i] == '<') {
            for (int r = 0; r < Vocabulary::kNumReserved; ++r) {
                const std::string marker = kReserved[r];
                if (text.compare(i, marker.size(), marker) == 0) {
                    flush();
                    out.push_back(r);
                    i += marker.size();
                    matched = true;
                    break;
                }
            }
        }
        if (matched) continue;
        char c = text[i];
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))
            word.push_back(c);
        else
            flush();
        ++i;
    }
    flush();
    return out;
}

std::string detokenize(const std::vector<int>& ids, const Vocabulary& vocab) {
    std::string out;
    for (int id : ids) {
        if (id == Vocabulary::kPad || id == Vocabulary::kBos || id == Vocabulary::kEos) continue;
        if (!out.empty()) out += ' ';
        out += vocab.token_of(id);
    }
    return out;
}

}  // namespace graphlm
