#include "gendet/features.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace gendet {

std::string_view to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::bow: return "bow";
    case FeatureKind::hist4: return "hist4";
    case FeatureKind::hist50: return "hist50";
    case FeatureKind::combined: return "combined";
  }
  return "?";
}

namespace {

std::vector<double> proportions(const std::vector<int>& counts) {
  int total = 0;
  for (int c : counts) total += c;
  std::vector<double> out(counts.size(), 0.0);
  if (total == 0) return out;
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = static_cast<double>(counts[i]) / total;
  return out;
}

}  // namespace

FeatureVector featurize_bow(const TokenSeq& tokens, const Vocab& vocab, int min_freq) {
  FeatureVector f{FeatureKind::bow, std::vector<double>(static_cast<std::size_t>(vocab.size()), 0.0)};
  for (TokenId t : tokens) {
    if (t < 0 || t >= vocab.size()) throw std::out_of_range("featurize_bow: token id out of range");
    if (min_freq > 0 && vocab.count(t) < min_freq) continue;
    f.values[static_cast<std::size_t>(t)] += 1.0;
  }
  return f;
}

std::vector<int> hist4_counts(const ScoredTokenStream& scored) {
  std::vector<int> c(4, 0);
  for (const auto& p : scored.positions) {
    if (p.rank <= 1) ++c[0];
    else if (p.rank <= 5) ++c[1];
    else if (p.rank <= 100) ++c[2];
    else ++c[3];
  }
  return c;
}

FeatureVector featurize_hist4(const ScoredTokenStream& scored) {
  return {FeatureKind::hist4, proportions(hist4_counts(scored))};
}

int hist50_bin(int rank, int vocab_size) {
  if (rank < 1) throw std::invalid_argument("hist50: rank must be >= 1");
  const int width = (vocab_size + kHist50Bins - 1) / kHist50Bins;
  return std::min((rank - 1) / width, kHist50Bins - 1);
}

std::vector<int> hist50_counts(const ScoredTokenStream& scored, int vocab_size) {
  std::vector<int> c(kHist50Bins, 0);
  for (const auto& p : scored.positions) ++c[static_cast<std::size_t>(hist50_bin(p.rank, vocab_size))];
  return c;
}

FeatureVector featurize_hist50(const ScoredTokenStream& scored, int vocab_size) {
  return {FeatureKind::hist50, proportions(hist50_counts(scored, vocab_size))};
}

FeatureVector featurize_combined(const Excerpt& excerpt, const ScoredTokenStream& scored, const Vocab& vocab) {
  FeatureVector f{FeatureKind::combined, featurize_hist50(scored, vocab.size()).values};
  const auto h4 = featurize_hist4(scored).values;
  f.values.insert(f.values.end(), h4.begin(), h4.end());
  double sum = 0.0, lo = 0.0, hi = 0.0;
  if (!scored.positions.empty()) {
    lo = std::numeric_limits<double>::infinity();
    hi = -std::numeric_limits<double>::infinity();
    for (const auto& p : scored.positions) {
      sum += p.logprob;
      lo = std::min(lo, p.logprob);
      hi = std::max(hi, p.logprob);
    }
  }
  const auto n = static_cast<double>(scored.positions.size());
  f.values.push_back(n > 0 ? sum / n : 0.0);
  f.values.push_back(lo);
  f.values.push_back(hi);
  f.values.push_back(excerpt.tokens.empty() ? 0.0 : sum / static_cast<double>(excerpt.tokens.size()));
  return f;
}

}  // namespace gendet
