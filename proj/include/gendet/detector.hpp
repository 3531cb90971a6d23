#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "gendet/dataset.hpp"
#include "gendet/features.hpp"
#include "gendet/logreg.hpp"
#include "gendet/totalprob.hpp"

namespace gendet {

enum class DetectorKind { bow, hist4, hist50, totalprob, combined };
std::string_view to_string(DetectorKind k);
DetectorKind parse_detector_kind(std::string_view s);

struct DetectorTrainConfig {
  LogRegConfig logreg;
  int bow_min_freq = 0;  // 0 keeps every vocabulary entry
};

// A featurizer + classifier stack (or the TotalProb threshold model).
struct Detector {
  DetectorKind kind = DetectorKind::bow;
  int vocab_size = 0;
  std::string vocab_hash;
  int bow_min_freq = 0;
  LogisticModel logistic;   // every kind except totalprob
  ThresholdModel threshold; // totalprob only
  std::vector<double> loss_history;

  int dims() const;
  double machine_probability(const Excerpt& e, const ScoredTokenStream& s, const Vocab& vocab) const;
  Label classify(const Excerpt& e, const ScoredTokenStream& s, const Vocab& vocab) const;

  nlohmann::json to_json() const;
  static Detector from_json(const nlohmann::json& j);
};

FeatureVector featurize(DetectorKind kind, const Excerpt& e, const ScoredTokenStream& s, const Vocab& vocab,
                        int bow_min_freq = 0);

// Total (or per-token mean) log-likelihood of the scored positions.
double excerpt_loglik(const ScoredTokenStream& s, bool per_token_mean);

// `scores` must be aligned with `dataset` (same order, already truncated).
Detector train_detector(DetectorKind kind, const Dataset& dataset, const std::vector<ScoredTokenStream>& scores,
                        const Vocab& vocab, const DetectorTrainConfig& config = {});

std::vector<double> predict_all(const Detector& d, const Dataset& dataset,
                                const std::vector<ScoredTokenStream>& scores, const Vocab& vocab);

// Looks up each excerpt's full-length stream by id and cuts it to the
// excerpt's current length. Throws if a stream is missing or disagrees with
// the excerpt's tokens.
using ScoreIndex = std::unordered_map<std::string, ScoredTokenStream>;
ScoreIndex index_scores(std::vector<ScoredTokenStream> streams);
std::vector<ScoredTokenStream> align_scores(const Dataset& dataset, const ScoreIndex& index);

void save_detector(const std::string& path, const Detector& d);
Detector load_detector(const std::string& path);

}  // namespace gendet
