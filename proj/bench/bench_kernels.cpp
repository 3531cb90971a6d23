// Times the serial and OpenMP batch kernels on the sample corpus.

#include <chrono>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "gendet/corpus.hpp"
#include "gendet/dataset.hpp"
#include "gendet/kernels.hpp"
#include "gendet/lm.hpp"

using namespace gendet;

namespace {

template <typename F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel benchmark"};
  std::string corpus = std::string(GENDET_SOURCE_DIR) + "/data/sample_corpus.txt";
  std::size_t n = 400;
  int jobs = 0, reps = 3;
  app.add_option("--corpus", corpus, "corpus file");
  app.add_option("--n", n, "generations per batch");
  app.add_option("--jobs", jobs, "OpenMP threads for the parallel kernels (0 = default)");
  app.add_option("--reps", reps, "repetitions; the fastest is reported");
  CLI11_PARSE(app, argc, argv);

  const auto docs = read_corpus(corpus);
  const auto lm = train_language_model(docs, LmTrainConfig{});
  DecodingConfig cfg;
  cfg.strategy = Strategy::nucleus;
  std::vector<kernels::GenerationJob> batch(n);
  for (std::size_t i = 0; i < n; ++i) batch[i].seed = derive_seed(5, i);

  double gen_s = 1e300, gen_p = 1e300, score_s = 1e300, score_p = 1e300;
  std::vector<Generation> gs, gp;
  std::vector<ScoredTokenStream> ss, sp;
  Dataset excerpts;
  for (int r = 0; r < reps; ++r) {
    gen_s = std::min(gen_s, seconds([&] { gs = kernels::generate_serial(lm.ngram, cfg, batch); }));
    gen_p = std::min(gen_p, seconds([&] { gp = kernels::generate_parallel(lm.ngram, cfg, batch, jobs); }));
    if (excerpts.empty())
      for (std::size_t i = 0; i < gs.size(); ++i) {
        Excerpt e;
        e.id = "g" + std::to_string(i);
        e.tokens = gs[i].tokens;
        excerpts.push_back(e);
      }
    score_s = std::min(score_s, seconds([&] { ss = kernels::score_serial(lm.ngram, excerpts); }));
    score_p = std::min(score_p, seconds([&] { sp = kernels::score_parallel(lm.ngram, excerpts, jobs); }));
  }
  bool same = gs.size() == gp.size() && ss.size() == sp.size();
  for (std::size_t i = 0; same && i < gs.size(); ++i) same = gs[i].tokens == gp[i].tokens;
  for (std::size_t i = 0; same && i < ss.size(); ++i) same = ss[i] == sp[i];

  std::printf("threads %d, %zu generations, vocab %d\n", jobs > 0 ? jobs : kernels::max_threads(), n, lm.vocab.size());
  std::printf("generate  serial %.3fs  parallel %.3fs  speedup %.2fx\n", gen_s, gen_p, gen_s / gen_p);
  std::printf("score     serial %.3fs  parallel %.3fs  speedup %.2fx\n", score_s, score_p, score_s / score_p);
  std::printf("outputs %s\n", same ? "identical" : "DIFFER");
  return same ? 0 : 1;
}
