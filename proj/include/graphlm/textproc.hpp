#pragma once
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace graphlm {

// Lowercase word splitter shared by the featurizer, the tokenizer, BLEU and
// answer parsing: maximal runs of [a-z0-9] after ASCII lowercasing; anything
// else is a separator and is dropped.
std::vector<std::string> split_words(std::string_view text);

// Seeded token hash (FNV-1a over the bytes, seed mixed into the offset).
uint64_t token_hash(std::string_view token, uint64_t seed);

// Signed hashed bag-of-words: each word adds +-1 to bucket h % dim with the
// sign taken from bit 32 of the hash. Not normalized.
std::vector<double> hashed_bag(const std::vector<std::string>& words, int dim, uint64_t seed);

// Hashed bag-of-words of the text, L2-normalized when nonzero.
// Empty or all-separator text yields the zero vector.
std::vector<double> featurize_text(std::string_view text, int dim, uint64_t seed);

}  // namespace graphlm
