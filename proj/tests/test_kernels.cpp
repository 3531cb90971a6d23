#include <doctest.h>

#include "gendet/kernels.hpp"
#include "test_util.hpp"

using namespace gendet;

TEST_CASE("parallel scoring equals serial scoring") {
  const auto& lm = testutil::small_lm();
  Dataset all;
  for (Strategy s : kAllStrategies) {
    const auto& d = testutil::small_paired(s, Priming::one_word);
    all.insert(all.end(), d.begin(), d.end());
  }
  const auto serial = kernels::score_serial(lm.ngram, all);
  for (int jobs : {0, 1, 2, 4}) CHECK(kernels::score_parallel(lm.ngram, all, jobs) == serial);
  REQUIRE(serial.size() == all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(serial[i].id == all[i].id);
    CHECK(serial[i].positions.size() == all[i].tokens.size() - 1);
  }
}

TEST_CASE("parallel generation equals serial generation") {
  const auto& lm = testutil::small_lm();
  for (Strategy s : kAllStrategies) {
    DecodingConfig cfg;
    cfg.strategy = s;
    cfg.max_len = 40;
    std::vector<kernels::GenerationJob> jobs;
    for (std::uint64_t i = 0; i < 64; ++i) jobs.push_back({derive_seed(5, i), {}});
    const auto serial = kernels::generate_serial(lm.ngram, cfg, jobs);
    for (int threads : {0, 1, 3}) {
      const auto par = kernels::generate_parallel(lm.ngram, cfg, jobs, threads);
      REQUIRE(par.size() == serial.size());
      for (std::size_t i = 0; i < par.size(); ++i) {
        CHECK(par[i].tokens == serial[i].tokens);
        CHECK(par[i].trace.k_per_step == serial[i].trace.k_per_step);
        CHECK(par[i].hit_eot == serial[i].hit_eot);
      }
    }
    // Each job matches a standalone generate call with its seed.
    cfg.seed = jobs[7].seed;
    CHECK(generate(lm.ngram, cfg).tokens == serial[7].tokens);
  }
}

TEST_CASE("primed generation jobs") {
  const auto& lm = testutil::small_lm();
  DecodingConfig cfg;
  cfg.priming = Priming::one_word;
  cfg.max_len = 10;
  std::vector<kernels::GenerationJob> jobs;
  for (TokenId t = 3; t < 23; ++t) jobs.push_back({static_cast<std::uint64_t>(t), t});
  const auto out = kernels::generate_parallel(lm.ngram, cfg, jobs);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i].tokens.front() == jobs[i].prime);
  CHECK(kernels::max_threads() >= 1);
}
