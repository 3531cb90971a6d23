#include "gendet/dataset_dir.hpp"

#include <filesystem>
#include <stdexcept>

#include "gendet/corpus.hpp"

namespace gendet {

namespace fs = std::filesystem;

Strategy DatasetDir::strategy() const { return parse_strategy(meta.at("strategy").get<std::string>()); }

Priming DatasetDir::priming() const { return parse_priming(meta.at("priming").get<std::string>()); }

const std::vector<std::string>& DatasetDir::split(const std::string& name) const {
  if (name == "train") return splits.train;
  if (name == "valid") return splits.valid;
  if (name == "test") return splits.test;
  throw std::invalid_argument("unknown split '" + name + "' (expected train, valid, test or all)");
}

LabeledSet DatasetDir::labeled(const std::string& split_name, int length, const Vocab& vocab) const {
  Dataset d = split_name == "all" ? data : select_ids(data, split(split_name));
  if (length > 0) d = truncate_to_length(d, length, min_len, vocab);
  LabeledSet out;
  out.scores = align_scores(d, scores);
  out.data = std::move(d);
  return out;
}

DatasetDir load_dataset_dir(const std::string& path) {
  DatasetDir d;
  d.path = path;
  const fs::path p(path);
  if (!fs::is_directory(p)) throw std::runtime_error("dataset directory " + path + " does not exist");
  d.meta = nlohmann::json::parse(read_file((p / "meta.json").string()));
  d.min_len = d.meta.at("min_len").get<int>();
  d.data = read_dataset((p / "dataset.jsonl").string());
  d.scores = index_scores(load_scored_streams((p / "scores.jsonl").string()));
  d.splits.train = read_ids((p / "train.ids").string());
  d.splits.valid = read_ids((p / "valid.ids").string());
  d.splits.test = read_ids((p / "test.ids").string());
  return d;
}

void write_dataset_dir(const std::string& path, const DatasetDirWrite& w, const Vocab& vocab) {
  const fs::path p(path);
  fs::create_directories(p);
  write_file((p / "meta.json").string(), w.meta.dump(2) + "\n");
  write_dataset((p / "dataset.jsonl").string(), w.data);
  for (int len : w.lengths)
    write_dataset((p / ("L" + std::to_string(len) + ".jsonl")).string(),
                  truncate_to_length(w.data, len, w.min_len, vocab));
  write_ids((p / "train.ids").string(), w.splits.train);
  write_ids((p / "valid.ids").string(), w.splits.valid);
  write_ids((p / "test.ids").string(), w.splits.test);
  save_scored_streams((p / "scores.jsonl").string(), w.scores);
  write_traces((p / "traces.jsonl").string(), w.traces);
}

}  // namespace gendet
