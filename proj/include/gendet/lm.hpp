#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gendet/ngram.hpp"
#include "gendet/vocab.hpp"

namespace gendet {

// Where the LM's training text came from. build_paired_dataset draws human
// excerpts only from the held-out side of the same corpus.
struct LmProvenance {
  std::string corpus_hash;  // hex
  double heldout_fraction = 0.0;
  std::uint64_t split_seed = 0;
  std::size_t n_documents = 0;
};

struct LanguageModel {
  Vocab vocab;
  NGramModel ngram;
  LmProvenance provenance;
};

struct LmTrainConfig {
  int order = 3;
  double alpha = 0.01;
  int vocab_size = 5000;
  int min_count = 1;
  double heldout_fraction = 0.4;
  std::uint64_t seed = 1;
};

// Splits the corpus, builds the vocabulary on the training side and trains
// the n-gram model on it.
LanguageModel train_language_model(const std::vector<std::string>& documents, const LmTrainConfig& cfg);

void save_language_model(const std::string& path, const LanguageModel& lm);
LanguageModel load_language_model(const std::string& path);

// Line-delimited {"id", "positions": [{"t", "lp", "r"}, ...]}.
std::string scored_stream_to_line(const ScoredTokenStream& s);
ScoredTokenStream scored_stream_from_line(const std::string& line);
void save_scored_streams(const std::string& path, const std::vector<ScoredTokenStream>& streams);
std::vector<ScoredTokenStream> load_scored_streams(const std::string& path);

// Held-out human documents of `documents` under the LM's recorded split.
// Throws if the corpus hash does not match the LM's training corpus.
std::vector<std::size_t> heldout_documents(const std::vector<std::string>& documents, const LmProvenance& prov);

}  // namespace gendet
