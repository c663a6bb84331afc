#pragma once
#include <string>
#include <vector>

namespace graphlm {

// Word-level vocabulary with fixed reserved ids. Token strings are the
// lowercase words produced by split_words, plus the five reserved markers
// which the tokenizer recognizes verbatim.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kUnk = 3;
    static constexpr int kNode = 4;  // placeholder for injected node tokens
    static constexpr int kNumReserved = 5;

    Vocabulary();

    // Most frequent words of the corpus, capped; ties break lexicographically.
    static Vocabulary build(const std::vector<std::string>& corpus, int cap);
    // Exact token list round-trip (reserved entries first).
    static Vocabulary from_tokens(const std::vector<std::string>& tokens);

    int size() const { return static_cast<int>(tokens_.size()); }
    int id_of(const std::string& token) const;  // kUnk when absent
    bool contains(const std::string& token) const;
    const std::string& token_of(int id) const;
    const std::vector<std::string>& tokens() const { return tokens_; }

private:
    std::vector<std::string> tokens_;
    std::vector<int> sorted_order_;  // indices sorted by token for lookup

    void rebuild_index();
};

// Lowercase word split with reserved-marker pass-through; unknown words map
// to kUnk. Text containing only separators yields an empty sequence.
std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab);

// Joins tokens with single spaces; skips PAD/BOS/EOS.
std::string detokenize(const std::vector<int>& ids, const Vocabulary& vocab);

}  // namespace graphlm
