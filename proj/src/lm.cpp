#include "gendet/lm.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gendet/corpus.hpp"

namespace gendet {

using nlohmann::json;

LanguageModel train_language_model(const std::vector<std::string>& documents, const LmTrainConfig& cfg) {
  if (documents.empty()) throw std::invalid_argument("train-lm: empty corpus");
  const CorpusSplit split = split_corpus(documents.size(), cfg.heldout_fraction, cfg.seed);
  std::vector<std::string> train_docs;
  train_docs.reserve(split.train.size());
  for (std::size_t i : split.train) train_docs.push_back(documents[i]);

  LanguageModel lm;
  lm.vocab = Vocab::build(train_docs, cfg.vocab_size, cfg.min_count);
  const auto seqs = tokenize_documents(documents, split.train, lm.vocab);
  lm.ngram = NGramModel::train(seqs, lm.vocab.size(), cfg.order, cfg.alpha);
  lm.provenance = {hash_hex(corpus_hash(documents)), cfg.heldout_fraction, cfg.seed, documents.size()};
  return lm;
}

void save_language_model(const std::string& path, const LanguageModel& lm) {
  json j = {{"format", "gendet-lm/1"},
            {"vocab", lm.vocab.entries()},
            {"vocab_counts", lm.vocab.counts()},
            {"vocab_hash", hash_hex(lm.vocab.hash())},
            {"provenance",
             {{"corpus_hash", lm.provenance.corpus_hash},
              {"heldout_fraction", lm.provenance.heldout_fraction},
              {"split_seed", lm.provenance.split_seed},
              {"n_documents", lm.provenance.n_documents}}},
            {"ngram", lm.ngram.to_json()}};
  write_file(path, j.dump());
}

LanguageModel load_language_model(const std::string& path) {
  const json j = json::parse(read_file(path));
  if (j.value("format", "") != "gendet-lm/1") throw std::runtime_error("'" + path + "' is not a gendet LM file");
  LanguageModel lm;
  lm.vocab = Vocab::from_entries(j.at("vocab").get<std::vector<std::string>>(),
                                 j.at("vocab_counts").get<std::vector<std::int64_t>>());
  const auto& p = j.at("provenance");
  lm.provenance = {p.at("corpus_hash").get<std::string>(), p.at("heldout_fraction").get<double>(),
                   p.at("split_seed").get<std::uint64_t>(), p.at("n_documents").get<std::size_t>()};
  lm.ngram = NGramModel::from_json(j.at("ngram"));
  if (lm.ngram.vocab_size() != lm.vocab.size()) throw std::runtime_error("LM file: vocab/model size mismatch");
  return lm;
}

std::string scored_stream_to_line(const ScoredTokenStream& s) {
  json pos = json::array();
  for (const auto& p : s.positions) pos.push_back({{"t", p.token}, {"lp", p.logprob}, {"r", p.rank}});
  return json{{"id", s.id}, {"positions", std::move(pos)}}.dump();
}

ScoredTokenStream scored_stream_from_line(const std::string& line) {
  const json j = json::parse(line);
  ScoredTokenStream s;
  s.id = j.at("id").get<std::string>();
  for (const auto& p : j.at("positions")) {
    ScoredPosition sp{p.at("t").get<TokenId>(), p.at("lp").get<double>(), p.at("r").get<int>()};
    if (sp.logprob > 0.0) throw std::runtime_error("scored stream '" + s.id + "': positive logprob");
    if (sp.rank < 1) throw std::runtime_error("scored stream '" + s.id + "': rank < 1");
    s.positions.push_back(sp);
  }
  return s;
}

void save_scored_streams(const std::string& path, const std::vector<ScoredTokenStream>& streams) {
  std::string out;
  for (const auto& s : streams) {
    out += scored_stream_to_line(s);
    out += '\n';
  }
  write_file(path, out);
}

std::vector<ScoredTokenStream> load_scored_streams(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<ScoredTokenStream> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(scored_stream_from_line(line));
  return out;
}

std::vector<std::size_t> heldout_documents(const std::vector<std::string>& documents, const LmProvenance& prov) {
  if (hash_hex(corpus_hash(documents)) != prov.corpus_hash)
    throw std::invalid_argument(
        "human corpus differs from the LM's training corpus; human excerpts must come from the "
        "held-out side of the same corpus");
  return split_corpus(documents.size(), prov.heldout_fraction, prov.split_seed).heldout;
}

}  // namespace gendet
