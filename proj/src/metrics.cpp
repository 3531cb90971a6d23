#include "gendet/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace gendet {

double auc(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based ranks i+1 .. j
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]] == Label::machine) {
        rank_sum += avg_rank;
        ++pos;
      }
    i = j;
  }
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) throw std::invalid_argument("auc: need both human and machine examples");
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

double accuracy(std::span<const Label> predictions, std::span<const Label> labels) {
  if (predictions.size() != labels.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (labels.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predictions[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

ErrorBreakdown error_breakdown(std::span<const Label> predictions, std::span<const Label> labels) {
  if (predictions.size() != labels.size()) throw std::invalid_argument("error_breakdown: length mismatch");
  ErrorBreakdown e;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == Label::human && predictions[i] == Label::machine) ++e.fp;
    if (labels[i] == Label::machine && predictions[i] == Label::human) ++e.fn;
  }
  return e;
}

double avg_machine_probability(std::span<const double> probabilities) {
  if (probabilities.empty()) throw std::invalid_argument("avg_machine_probability: empty input");
  double s = 0.0;
  for (double p : probabilities) s += p;
  return s / static_cast<double>(probabilities.size());
}

std::string describe_strategy(const Dataset& data) {
  std::string found;
  for (const auto& e : data) {
    if (!e.strategy) continue;
    std::string s(to_string(*e.strategy));
    if (found.empty()) found = s;
    else if (found != s) return "mixed";
  }
  return found.empty() ? "none" : found;
}

EvalReport evaluate(const Detector& detector, const LabeledSet& set, const Vocab& vocab,
                    const std::string& detector_name) {
  const auto probs = predict_all(detector, set.data, set.scores, vocab);
  std::vector<Label> labels, preds;
  labels.reserve(set.data.size());
  preds.reserve(set.data.size());
  for (std::size_t i = 0; i < set.data.size(); ++i) {
    labels.push_back(set.data[i].label);
    preds.push_back(detector.classify(set.data[i], set.scores[i], vocab));
  }
  EvalReport r;
  r.n = labels.size();
  r.accuracy = accuracy(preds, labels);
  r.auc = auc(probs, labels);
  const auto eb = error_breakdown(preds, labels);
  r.fp_count = eb.fp;
  r.fn_count = eb.fn;
  r.avg_machine_prob = avg_machine_probability(probs);
  r.strategy = describe_strategy(set.data);
  r.priming = set.data.empty() ? "" : std::string(to_string(set.data.front().priming));
  for (const auto& e : set.data) r.length = std::max(r.length, static_cast<int>(e.tokens.size()));
  r.detector = detector_name.empty() ? std::string(to_string(detector.kind)) : detector_name;
  return r;
}

}  // namespace gendet
