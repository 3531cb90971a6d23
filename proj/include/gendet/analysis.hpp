#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gendet/dataset.hpp"
#include "gendet/metrics.hpp"

namespace gendet {

using DetectorFactory = std::function<Detector(const LabeledSet& train)>;

// Mixes the training sets pair-wise (see mix_datasets) and carries the
// matching score streams along.
LabeledSet mix_labeled(const std::vector<LabeledSet>& sets, std::uint64_t seed);

struct TransferMatrix {
  std::vector<std::string> rows;  // training strategy names, then "mixed"
  std::vector<std::string> cols;  // evaluation strategy names
  std::vector<std::vector<double>> accuracy;
  std::vector<std::vector<double>> avg_prob;
  std::vector<std::vector<EvalReport>> reports;
};

TransferMatrix transfer_matrix(const DetectorFactory& factory, const std::map<Strategy, LabeledSet>& train,
                               const std::map<Strategy, LabeledSet>& test, const Vocab& vocab, bool mixed,
                               std::uint64_t mix_seed = 1);

void write_transfer_csv(const std::string& path, const TransferMatrix& m);

struct LengthPoint {
  int length = 0;
  EvalReport report;
};

// Trains and evaluates one detector per length; train and test must share keys.
std::vector<LengthPoint> length_curve(const DetectorFactory& factory, const std::map<int, LabeledSet>& train,
                                      const std::map<int, LabeledSet>& test, const Vocab& vocab);

struct LengthCurveRow {
  std::string strategy, priming;
  int length = 0;
  double accuracy = 0.0, auc = 0.0;
};
void write_length_curve_csv(const std::string& path, const std::vector<LengthCurveRow>& rows);

// Token ids ordered by descending training count, ties by ascending id.
std::vector<TokenId> frequency_order(const Vocab& vocab);

// Fraction of the excerpts' first tokens (the first token after any priming
// for machine text, the first token for human text) whose id is among the m
// most frequent vocabulary entries, for each m.
std::vector<double> first_token_concentration(const Dataset& excerpts, const Vocab& vocab,
                                              const std::vector<int>& ms);

// {1, 2, 5, 10, 20, 50, ...} up to and including V.
std::vector<int> concentration_grid(int vocab_size);

struct ConcentrationRow {
  std::string source;
  int m = 0;
  double fraction = 0.0;
};
void write_concentration_csv(const std::string& path, const std::vector<ConcentrationRow>& rows);

// Mean k_t at each generation step over the traces long enough to reach it.
struct MeanKt {
  std::vector<double> mean;
  std::vector<std::size_t> count;
};
MeanKt mean_kt_per_position(const std::vector<NucleusTrace>& traces);

std::vector<GenerationTrace> read_traces(const std::string& path);
void write_traces(const std::string& path, const std::vector<GenerationTrace>& traces);

}  // namespace gendet
