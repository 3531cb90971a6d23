#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "gendet/vocab.hpp"

namespace gendet {

// A probability vector over the vocabulary at one decoding step.
struct NextTokenDistribution {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }
  bool operator==(const NextTokenDistribution&) const = default;

  // Sum within `tol` of 1 and every entry >= 0.
  bool valid(double tol = 1e-9) const;
  std::size_t support_size() const;
};

// 1-based rank of `token` when ids are sorted by descending probability,
// ties broken by ascending id.
int rank_in(std::span<const double> probs, TokenId token);

struct ScoredPosition {
  TokenId token = 0;
  double logprob = 0.0;  // natural log
  int rank = 1;
  bool operator==(const ScoredPosition&) const = default;
};

// Per-position scores for the non-priming tokens of one excerpt.
struct ScoredTokenStream {
  std::string id;
  std::vector<ScoredPosition> positions;
  bool operator==(const ScoredTokenStream&) const = default;
};

// Smoothed backoff n-gram model over a fixed vocabulary size.
//
// Level 0 is add-alpha over V: p0(w) = (c(w) + alpha) / (N + alpha V).
// For a context h of length j that was observed in training,
//   p_j(w | h) = (c(h, w) + alpha V p_{j-1}(w | h')) / (c(h) + alpha V)
// where h' drops the oldest token of h. Unseen contexts fall through to the
// next-shorter context, so every context ends at the unigram distribution.
// The model is immutable after train() and safe for concurrent readers.
class NGramModel {
 public:
  NGramModel() = default;

  // `documents` are BOT/EOT-delimited token sequences with ids < vocab_size.
  static NGramModel train(std::span<const TokenSeq> documents, int vocab_size, int order, double alpha);

  int order() const { return order_; }
  double alpha() const { return alpha_; }
  int vocab_size() const { return vocab_size_; }
  std::int64_t total_tokens() const { return total_; }

  NextTokenDistribution next_distribution(std::span<const TokenId> context) const;
  // Writes the distribution into `out` (size vocab_size()) without allocating.
  void fill_distribution(std::span<const TokenId> context, std::span<double> out) const;
  double prob(std::span<const TokenId> context, TokenId token) const;

  // Sum of ln p(tokens[i] | prefix ++ tokens[:i]). The default prefix is [BOT].
  double sequence_logprob(std::span<const TokenId> tokens) const;
  double sequence_logprob(std::span<const TokenId> tokens, std::span<const TokenId> prefix) const;

  int rank_of(std::span<const TokenId> context, TokenId token) const;

  // Scores tokens[priming_len:] conditioned on [BOT] ++ tokens[:i].
  ScoredTokenStream score(std::span<const TokenId> tokens, std::size_t priming_len,
                          std::string id = {}) const;

  nlohmann::json to_json() const;
  static NGramModel from_json(const nlohmann::json& j);

 private:
  struct ContextStats {
    std::int64_t total = 0;
    std::vector<std::pair<TokenId, std::int64_t>> next;  // sorted by id
  };

  static std::uint64_t pack(std::span<const TokenId> ctx);
  const ContextStats* find(std::span<const TokenId> ctx) const;

  // p(w) = scale * p0(w) + sum of sparse terms; `sparse` gathers those terms.
  double mixture(std::span<const TokenId> context,
                 std::vector<std::pair<const ContextStats*, double>>* levels) const;

  void finalize();

  int order_ = 0;
  double alpha_ = 0.0;
  int vocab_size_ = 0;
  std::int64_t total_ = 0;
  std::vector<std::int64_t> unigram_counts_;
  std::vector<double> unigram_;
  // levels_[j] maps a packed length-j context to its continuation counts.
  std::vector<std::unordered_map<std::uint64_t, ContextStats>> levels_;
};

}  // namespace gendet
