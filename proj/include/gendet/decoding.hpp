#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "gendet/excerpt.hpp"
#include "gendet/ngram.hpp"
#include "gendet/rng.hpp"

namespace gendet {

struct DecodingConfig {
  Strategy strategy = Strategy::top_k;
  int k = 40;
  double p = 0.96;
  double temperature = 1.0;
  Priming priming = Priming::nocond;
  int max_len = 128;
  std::uint64_t seed = 1;
  // Nucleus inclusion rule. false: largest prefix whose mass stays <= p
  // (at least one token). true: smallest prefix whose mass reaches >= p.
  bool nucleus_geq = false;

  // Throws std::invalid_argument on k < 1, k > vocab_size, p outside (0, 1],
  // T <= 0 or max_len < 1.
  void validate(int vocab_size) const;

  nlohmann::json to_json() const;
  static DecodingConfig from_json(const nlohmann::json& j);
};

// Support size after truncation at each generated step.
struct NucleusTrace {
  std::vector<int> k_per_step;
};

NextTokenDistribution apply_temperature(const NextTokenDistribution& dist, double temperature);

NextTokenDistribution truncate_top_k(const NextTokenDistribution& dist, int k);

struct NucleusResult {
  NextTokenDistribution dist;
  int kept = 0;            // k_t
  double kept_mass = 0.0;  // before renormalization
};
NucleusResult truncate_nucleus(const NextTokenDistribution& dist, double p, bool geq = false);

TokenId sample_token(const NextTokenDistribution& dist, Rng& rng);

struct Generation {
  TokenSeq tokens;  // includes the priming token when primed; never BOT/EOT
  NucleusTrace trace;
  bool hit_eot = false;
};

// Context starts [BOT] (+ prime). Each step applies temperature, then the
// strategy's truncation, then samples. Stops at EOT or max_len tokens.
Generation generate(const NGramModel& model, const DecodingConfig& config,
                    std::optional<TokenId> prime_token = std::nullopt);

}  // namespace gendet
