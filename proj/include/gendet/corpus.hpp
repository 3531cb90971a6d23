#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gendet/vocab.hpp"

namespace gendet {

// UTF-8 plain text; documents are separated by one (or more) blank lines.
std::vector<std::string> parse_corpus(std::string_view text);
std::vector<std::string> read_corpus(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

// FNV-1a over document contents, used to check that an LM and a human
// excerpt pool were drawn from the same declared corpus.
std::uint64_t corpus_hash(const std::vector<std::string>& documents);

// Disjoint partition of document indices into LM-training and held-out
// (human excerpt) pools. Deterministic in (n_docs, fraction, seed).
struct CorpusSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> heldout;
};
CorpusSplit split_corpus(std::size_t n_docs, double heldout_fraction, std::uint64_t seed);

// Each document becomes [BOT] tokens... [EOT].
std::vector<TokenSeq> tokenize_documents(const std::vector<std::string>& documents,
                                         const std::vector<std::size_t>& indices,
                                         const Vocab& vocab);

}  // namespace gendet
