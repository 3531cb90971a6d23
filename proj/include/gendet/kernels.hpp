#pragma once

// Batch kernels over independent excerpts. Each has a serial reference and an
// OpenMP version; both produce identical output for any thread count because
// every item is computed in isolation and written to its own slot.

#include <optional>
#include <vector>

#include "gendet/decoding.hpp"
#include "gendet/excerpt.hpp"
#include "gendet/ngram.hpp"

namespace gendet::kernels {

std::vector<ScoredTokenStream> score_serial(const NGramModel& model, const std::vector<Excerpt>& excerpts);
std::vector<ScoredTokenStream> score_parallel(const NGramModel& model, const std::vector<Excerpt>& excerpts,
                                              int jobs = 0);

// One generation per seed; config.seed is replaced by seeds[i] and the prime
// (if any) by primes[i].
struct GenerationJob {
  std::uint64_t seed = 0;
  std::optional<TokenId> prime;
};
std::vector<Generation> generate_serial(const NGramModel& model, const DecodingConfig& config,
                                        const std::vector<GenerationJob>& jobs_in);
std::vector<Generation> generate_parallel(const NGramModel& model, const DecodingConfig& config,
                                          const std::vector<GenerationJob>& jobs_in, int jobs = 0);

// jobs <= 0 leaves the OpenMP default.
void set_jobs(int jobs);
int max_threads();

}  // namespace gendet::kernels
