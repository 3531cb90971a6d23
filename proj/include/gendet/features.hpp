#pragma once

#include <string_view>
#include <vector>

#include "gendet/excerpt.hpp"
#include "gendet/ngram.hpp"
#include "gendet/vocab.hpp"

namespace gendet {

enum class FeatureKind { bow, hist4, hist50, combined };
std::string_view to_string(FeatureKind k);

struct FeatureVector {
  FeatureKind kind = FeatureKind::bow;
  std::vector<double> values;
};

inline constexpr int kHist50Bins = 50;
inline constexpr int kCombinedExtra = 4;  // mean, min, max logprob; total / length

// dim t = number of occurrences of token t. With min_freq > 0, tokens whose
// training count is below min_freq are dropped.
FeatureVector featurize_bow(const TokenSeq& tokens, const Vocab& vocab, int min_freq = 0);

// Proportions of ranks in {1}, {2..5}, {6..100}, {>100}. Empty stream -> zeros.
FeatureVector featurize_hist4(const ScoredTokenStream& scored);

// Rank r falls in bin floor((r - 1) / ceil(V / 50)).
int hist50_bin(int rank, int vocab_size);
FeatureVector featurize_hist50(const ScoredTokenStream& scored, int vocab_size);

// hist50 ++ hist4 ++ [mean, min, max per-token logprob, total logprob / length].
FeatureVector featurize_combined(const Excerpt& excerpt, const ScoredTokenStream& scored, const Vocab& vocab);

// Raw bin counts, for the partition property (sum == scored positions).
std::vector<int> hist4_counts(const ScoredTokenStream& scored);
std::vector<int> hist50_counts(const ScoredTokenStream& scored, int vocab_size);

}  // namespace gendet
