#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gendet/decoding.hpp"
#include "gendet/excerpt.hpp"
#include "gendet/ngram.hpp"
#include "gendet/vocab.hpp"

namespace gendet {

using Dataset = std::vector<Excerpt>;

// Tokenized held-out documents with at least min_len tokens, cut to
// excerpt_len tokens. Ids are "human-<document index>".
Dataset make_human_excerpts(const std::vector<std::string>& documents, const std::vector<std::size_t>& heldout,
                            const Vocab& vocab, int min_len, int excerpt_len);

struct PairedDatasetConfig {
  DecodingConfig decoding;  // decoding.max_len is the excerpt length
  std::size_t n_pairs = 2000;
  int min_len = 128;
  int retry_cap = 20;
  std::uint64_t seed = 1;
  int jobs = 0;
};

// Interleaved [human_0, machine_0, human_1, machine_1, ...]. Human selection
// depends only on (humans, n_pairs, seed), so datasets built with the same
// seed for different strategies share their human excerpts. A generation that
// ends before min_len tokens is retried with a fresh derived seed.
struct GenerationTrace {
  std::string id;
  NucleusTrace trace;
};
Dataset build_paired_dataset(const Dataset& humans, const NGramModel& model, const Vocab& vocab,
                             const PairedDatasetConfig& config, std::vector<GenerationTrace>* traces = nullptr);

// Cuts every excerpt to its first L tokens. L must not exceed min_len.
Dataset truncate_to_length(const Dataset& dataset, int length, int min_len, const Vocab& vocab);

// {2, 4, 8, 16, 32, 48, 64, 96, 128, 192}, scaled by min_len / 192 when
// min_len < 192 (rounded, at least 1, duplicates removed).
std::vector<int> default_lengths(int min_len);

struct SplitSizes {
  std::size_t train = 0, valid = 0, test = 0;  // in pairs
};
struct SplitIds {
  std::vector<std::string> train, valid, test;
};
// Pairs stay together. Pair order is keyed on the human excerpt id, so every
// dataset sharing the same humans gets the same human partition.
SplitIds split_dataset(const Dataset& dataset, const SplitSizes& sizes, std::uint64_t seed);

Dataset select_ids(const Dataset& dataset, const std::vector<std::string>& ids);

// One pair per human excerpt: pair j (in split order) takes its machine
// excerpt from strategy j mod n. Inputs must share their human excerpts.
Dataset mix_datasets(const std::vector<Dataset>& datasets, std::uint64_t seed);

// Study items drawn from the given (test-split) datasets: n_human distinct
// human excerpts and n_per_strategy machine excerpts of each strategy.
Dataset build_study_set(const std::map<Strategy, Dataset>& by_strategy, std::size_t n_human,
                        std::size_t n_per_strategy, std::uint64_t seed);

// Line-delimited {"id", "label", "strategy", "priming", "pair_id", "tokens", "text"}.
std::string excerpt_to_line(const Excerpt& e);
Excerpt excerpt_from_line(const std::string& line);
void write_dataset(const std::string& path, const Dataset& dataset);
Dataset read_dataset(const std::string& path);
void write_ids(const std::string& path, const std::vector<std::string>& ids);
std::vector<std::string> read_ids(const std::string& path);

}  // namespace gendet
