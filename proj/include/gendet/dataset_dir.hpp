#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gendet/analysis.hpp"
#include "gendet/lm.hpp"

namespace gendet {

// The on-disk layout written by `build-dataset`:
//   meta.json              build parameters
//   dataset.jsonl          full-length excerpts
//   L<len>.jsonl           truncated copies
//   train.ids valid.ids test.ids
//   scores.jsonl           full-length score streams
//   traces.jsonl           per-step support sizes of the machine excerpts
struct DatasetDir {
  std::string path;
  nlohmann::json meta;
  Dataset data;
  ScoreIndex scores;
  SplitIds splits;
  int min_len = 0;

  Strategy strategy() const;
  Priming priming() const;
  const std::vector<std::string>& split(const std::string& name) const;
  // Excerpts of a split ("train", "valid", "test" or "all"), cut to `length`
  // (0 = full length), with aligned score streams.
  LabeledSet labeled(const std::string& split_name, int length, const Vocab& vocab) const;
};

DatasetDir load_dataset_dir(const std::string& path);

struct DatasetDirWrite {
  nlohmann::json meta;
  Dataset data;
  std::vector<ScoredTokenStream> scores;
  std::vector<GenerationTrace> traces;
  SplitIds splits;
  std::vector<int> lengths;
  int min_len = 0;
};
void write_dataset_dir(const std::string& path, const DatasetDirWrite& w, const Vocab& vocab);

}  // namespace gendet
