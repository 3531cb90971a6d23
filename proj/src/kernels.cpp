#include "gendet/kernels.hpp"

#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gendet::kernels {

namespace {

// Exceptions must not escape an OpenMP region; keep the first and rethrow.
class FirstError {
 public:
  template <typename F>
  void run(F&& f) {
    try {
      f();
    } catch (...) {
      std::lock_guard lock(mu_);
      if (!err_) err_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (err_) std::rethrow_exception(err_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr err_;
};

}  // namespace

void set_jobs(int jobs) {
#ifdef _OPENMP
  if (jobs > 0) omp_set_num_threads(jobs);
#else
  (void)jobs;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::vector<ScoredTokenStream> score_serial(const NGramModel& model, const std::vector<Excerpt>& excerpts) {
  std::vector<ScoredTokenStream> out(excerpts.size());
  for (std::size_t i = 0; i < excerpts.size(); ++i)
    out[i] = model.score(excerpts[i].tokens, excerpts[i].priming_length(), excerpts[i].id);
  return out;
}

std::vector<ScoredTokenStream> score_parallel(const NGramModel& model, const std::vector<Excerpt>& excerpts,
                                              int jobs) {
  set_jobs(jobs);
  std::vector<ScoredTokenStream> out(excerpts.size());
  const auto n = static_cast<std::ptrdiff_t>(excerpts.size());
  FirstError err;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    err.run([&] {
      const auto& e = excerpts[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(i)] = model.score(e.tokens, e.priming_length(), e.id);
    });
  }
  err.rethrow();
  return out;
}

std::vector<Generation> generate_serial(const NGramModel& model, const DecodingConfig& config,
                                        const std::vector<GenerationJob>& jobs_in) {
  std::vector<Generation> out(jobs_in.size());
  for (std::size_t i = 0; i < jobs_in.size(); ++i) {
    DecodingConfig c = config;
    c.seed = jobs_in[i].seed;
    out[i] = generate(model, c, jobs_in[i].prime);
  }
  return out;
}

std::vector<Generation> generate_parallel(const NGramModel& model, const DecodingConfig& config,
                                          const std::vector<GenerationJob>& jobs_in, int jobs) {
  set_jobs(jobs);
  std::vector<Generation> out(jobs_in.size());
  const auto n = static_cast<std::ptrdiff_t>(jobs_in.size());
  FirstError err;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    err.run([&] {
      DecodingConfig c = config;
      c.seed = jobs_in[static_cast<std::size_t>(i)].seed;
      out[static_cast<std::size_t>(i)] = generate(model, c, jobs_in[static_cast<std::size_t>(i)].prime);
    });
  }
  err.rethrow();
  return out;
}

}  // namespace gendet::kernels
