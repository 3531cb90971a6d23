#include "gendet/detector.hpp"

#include <stdexcept>

#include "gendet/corpus.hpp"

namespace gendet {

using nlohmann::json;

std::string_view to_string(DetectorKind k) {
  switch (k) {
    case DetectorKind::bow: return "bow";
    case DetectorKind::hist4: return "hist4";
    case DetectorKind::hist50: return "hist50";
    case DetectorKind::totalprob: return "totalprob";
    case DetectorKind::combined: return "combined";
  }
  return "?";
}

DetectorKind parse_detector_kind(std::string_view s) {
  if (s == "bow") return DetectorKind::bow;
  if (s == "hist4") return DetectorKind::hist4;
  if (s == "hist50") return DetectorKind::hist50;
  if (s == "totalprob") return DetectorKind::totalprob;
  if (s == "combined") return DetectorKind::combined;
  throw std::invalid_argument("unknown detector kind '" + std::string(s) + "'");
}

namespace {

int feature_dims(DetectorKind kind, int vocab_size) {
  switch (kind) {
    case DetectorKind::bow: return vocab_size;
    case DetectorKind::hist4: return 4;
    case DetectorKind::hist50: return kHist50Bins;
    case DetectorKind::combined: return kHist50Bins + 4 + kCombinedExtra;
    case DetectorKind::totalprob: return 1;
  }
  return 0;
}

}  // namespace

FeatureVector featurize(DetectorKind kind, const Excerpt& e, const ScoredTokenStream& s, const Vocab& vocab,
                        int bow_min_freq) {
  switch (kind) {
    case DetectorKind::bow: return featurize_bow(e.tokens, vocab, bow_min_freq);
    case DetectorKind::hist4: return featurize_hist4(s);
    case DetectorKind::hist50: return featurize_hist50(s, vocab.size());
    case DetectorKind::combined: return featurize_combined(e, s, vocab);
    case DetectorKind::totalprob: break;
  }
  throw std::invalid_argument("totalprob has no feature vector");
}

double excerpt_loglik(const ScoredTokenStream& s, bool per_token_mean) {
  double sum = 0.0;
  for (const auto& p : s.positions) sum += p.logprob;
  if (per_token_mean) return s.positions.empty() ? 0.0 : sum / static_cast<double>(s.positions.size());
  return sum;
}

int Detector::dims() const { return feature_dims(kind, vocab_size); }

double Detector::machine_probability(const Excerpt& e, const ScoredTokenStream& s, const Vocab& vocab) const {
  if (kind == DetectorKind::totalprob)
    return totalprob_machine_probability(threshold, excerpt_loglik(s, threshold.per_token_mean));
  return logistic.predict(featurize(kind, e, s, vocab, bow_min_freq).values);
}

Label Detector::classify(const Excerpt& e, const ScoredTokenStream& s, const Vocab& vocab) const {
  if (kind == DetectorKind::totalprob)
    return classify_totalprob(threshold, excerpt_loglik(s, threshold.per_token_mean));
  return machine_probability(e, s, vocab) >= 0.5 ? Label::machine : Label::human;
}

json Detector::to_json() const {
  json j = {{"format", "gendet-detector/1"},
            {"kind", to_string(kind)},
            {"dims", dims()},
            {"vocab_size", vocab_size},
            {"vocab_hash", vocab_hash}};
  if (kind == DetectorKind::totalprob) {
    j["mu_machine"] = threshold.mu_machine;
    j["mu_human"] = threshold.mu_human;
    j["per_token_mean"] = threshold.per_token_mean;
  } else {
    j["weights"] = logistic.weights;
    j["bias"] = logistic.bias;
    j["train_config"] = logistic.config.to_json();
    j["bow_min_freq"] = bow_min_freq;
    j["loss_history_tail"] = loss_history.empty() ? json(nullptr) : json(loss_history.back());
  }
  return j;
}

Detector Detector::from_json(const json& j) {
  if (j.value("format", "") != "gendet-detector/1") throw std::runtime_error("not a gendet detector file");
  Detector d;
  d.kind = parse_detector_kind(j.at("kind").get<std::string>());
  d.vocab_size = j.at("vocab_size").get<int>();
  d.vocab_hash = j.at("vocab_hash").get<std::string>();
  if (d.kind == DetectorKind::totalprob) {
    d.threshold = {j.at("mu_machine").get<double>(), j.at("mu_human").get<double>(),
                   j.at("per_token_mean").get<bool>()};
  } else {
    d.logistic.weights = j.at("weights").get<std::vector<double>>();
    d.logistic.bias = j.at("bias").get<double>();
    d.logistic.config = LogRegConfig::from_json(j.at("train_config"));
    d.logistic.trained = true;
    d.bow_min_freq = j.value("bow_min_freq", 0);
    if (static_cast<int>(d.logistic.weights.size()) != d.dims())
      throw std::runtime_error("detector file: weight count does not match kind");
  }
  return d;
}

Detector train_detector(DetectorKind kind, const Dataset& dataset, const std::vector<ScoredTokenStream>& scores,
                        const Vocab& vocab, const DetectorTrainConfig& config) {
  if (scores.size() != dataset.size()) throw std::invalid_argument("train_detector: scores not aligned with dataset");
  Detector d;
  d.kind = kind;
  d.vocab_size = vocab.size();
  d.vocab_hash = hash_hex(vocab.hash());
  d.bow_min_freq = config.bow_min_freq;

  if (kind == DetectorKind::totalprob) {
    bool mixed = false;
    for (const auto& s : scores) mixed = mixed || s.positions.size() != scores.front().positions.size();
    std::vector<double> ll;
    std::vector<Label> labels;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      ll.push_back(excerpt_loglik(scores[i], mixed));
      labels.push_back(dataset[i].label);
    }
    d.threshold = fit_totalprob(ll, labels);
    d.threshold.per_token_mean = mixed;
    return d;
  }

  DesignMatrix x(d.dims());
  std::vector<int> y;
  y.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    x.add_row(featurize(kind, dataset[i], scores[i], vocab, config.bow_min_freq).values);
    y.push_back(dataset[i].label == Label::machine ? 1 : 0);
  }
  auto res = train_logreg(x, y, config.logreg);
  d.logistic = std::move(res.model);
  d.loss_history = std::move(res.loss_history);
  return d;
}

std::vector<double> predict_all(const Detector& d, const Dataset& dataset,
                                const std::vector<ScoredTokenStream>& scores, const Vocab& vocab) {
  if (scores.size() != dataset.size()) throw std::invalid_argument("predict_all: scores not aligned with dataset");
  if (d.vocab_size != vocab.size() || d.vocab_hash != hash_hex(vocab.hash()))
    throw std::invalid_argument("detector was trained with a different vocabulary");
  std::vector<double> out(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) out[i] = d.machine_probability(dataset[i], scores[i], vocab);
  return out;
}

ScoreIndex index_scores(std::vector<ScoredTokenStream> streams) {
  ScoreIndex idx;
  idx.reserve(streams.size());
  for (auto& s : streams) {
    std::string id = s.id;
    idx.insert_or_assign(std::move(id), std::move(s));
  }
  return idx;
}

std::vector<ScoredTokenStream> align_scores(const Dataset& dataset, const ScoreIndex& index) {
  std::vector<ScoredTokenStream> out;
  out.reserve(dataset.size());
  for (const auto& e : dataset) {
    auto it = index.find(e.id);
    if (it == index.end()) throw std::invalid_argument("no scored stream for excerpt '" + e.id + "'");
    const std::size_t want = e.tokens.size() - std::min(e.tokens.size(), e.priming_length());
    const auto& full = it->second.positions;
    if (full.size() < want) throw std::invalid_argument("scored stream for '" + e.id + "' is shorter than the excerpt");
    ScoredTokenStream s{e.id, {full.begin(), full.begin() + static_cast<std::ptrdiff_t>(want)}};
    for (std::size_t i = 0; i < want; ++i)
      if (s.positions[i].token != e.tokens[i + e.priming_length()])
        throw std::invalid_argument("scored stream for '" + e.id + "' does not match its tokens");
    out.push_back(std::move(s));
  }
  return out;
}

void save_detector(const std::string& path, const Detector& d) { write_file(path, d.to_json().dump(1)); }

Detector load_detector(const std::string& path) { return Detector::from_json(json::parse(read_file(path))); }

}  // namespace gendet
