#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gendet/vocab.hpp"

namespace gendet {

// Lowercased word split. A word is a run of ASCII letters/digits or non-ASCII
// bytes, optionally joined by internal apostrophes ("o'er", "i'll"). Every
// other non-space character is a one-character token.
std::vector<std::string> split_words(std::string_view text);

// No BOT/EOT is inserted; out-of-vocabulary words map to kUnk.
TokenSeq tokenize(std::string_view text, const Vocab& vocab);

// Appends `word` to `out`, choosing the separator from the previous token.
// Spacing depends only on (prev, word), so detokenizing a prefix always yields
// a prefix of the full detokenization.
void append_detokenized(std::string& out, std::string_view prev, std::string_view word);

std::string detokenize(const TokenSeq& tokens, const Vocab& vocab);

// Byte offset just past each token of a detokenized string. The reserved
// markers "<unk>", "<bot>" and "<eot>" count as one token each.
std::vector<std::size_t> token_end_offsets(std::string_view text);

}  // namespace gendet
