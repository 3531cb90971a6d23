#pragma once

#include <span>
#include <string>
#include <vector>

#include "gendet/detector.hpp"

namespace gendet {

// P(random machine score > random human score), ties counted 1/2. Computed
// from average ranks. Throws unless both classes are present.
double auc(std::span<const double> scores, std::span<const Label> labels);

double accuracy(std::span<const Label> predictions, std::span<const Label> labels);

// fp: human predicted machine. fn: machine predicted human.
struct ErrorBreakdown {
  std::size_t fp = 0, fn = 0;
};
ErrorBreakdown error_breakdown(std::span<const Label> predictions, std::span<const Label> labels);

double avg_machine_probability(std::span<const double> probabilities);

struct EvalReport {
  double accuracy = 0.0;
  double auc = 0.0;
  std::size_t fp_count = 0, fn_count = 0;
  double avg_machine_prob = 0.0;
  std::size_t n = 0;
  std::string strategy;  // of the machine excerpts; "mixed" when several
  std::string priming;
  int length = 0;        // longest excerpt in the set
  std::string detector;  // kind and training strategy, e.g. "bow/top_k"
};

// An evaluation set: excerpts with their aligned score streams.
struct LabeledSet {
  Dataset data;
  std::vector<ScoredTokenStream> scores;
};

EvalReport evaluate(const Detector& detector, const LabeledSet& set, const Vocab& vocab,
                    const std::string& detector_name = "");

std::string describe_strategy(const Dataset& data);

}  // namespace gendet
