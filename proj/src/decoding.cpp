#include "gendet/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>

namespace gendet {

namespace {

struct ProbDesc {
  std::span<const double> p;
  bool operator()(std::size_t a, std::size_t b) const { return p[a] > p[b] || (p[a] == p[b] && a < b); }
};

void nonzero_indices(std::span<const double> p, std::vector<std::size_t>& idx) {
  idx.clear();
  for (std::size_t w = 0; w < p.size(); ++w)
    if (p[w] > 0.0) idx.push_back(w);
}

// Renormalizes in id order so the result does not depend on selection order.
void renormalize(std::span<double> p) {
  double sum = 0.0;
  for (double x : p) sum += x;
  if (!(sum > 0.0)) throw std::invalid_argument("distribution has no mass");
  for (double& x : p) x /= sum;
}

void temperature_inplace(std::span<double> p, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  if (temperature == 1.0) return;
  double pmax = 0.0;
  for (double x : p) pmax = std::max(pmax, x);
  if (!(pmax > 0.0)) throw std::invalid_argument("distribution has no mass");
  const double inv_t = 1.0 / temperature;
  const double log_max = std::log(pmax);
  for (double& x : p)
    if (x > 0.0) x = std::exp((std::log(x) - log_max) * inv_t);
  renormalize(p);
}

int top_k_inplace(std::span<double> p, int k, std::vector<std::size_t>& idx) {
  if (k < 1) throw std::invalid_argument("top-k: k must be >= 1");
  nonzero_indices(p, idx);
  if (idx.size() > static_cast<std::size_t>(k)) {
    std::nth_element(idx.begin(), idx.begin() + (k - 1), idx.end(), ProbDesc{p});
    for (auto it = idx.begin() + k; it != idx.end(); ++it) p[*it] = 0.0;
  }
  renormalize(p);
  return static_cast<int>(std::min(idx.size(), static_cast<std::size_t>(k)));
}

std::pair<int, double> nucleus_inplace(std::span<double> p, double top_p, bool geq, std::vector<std::size_t>& idx) {
  if (!(top_p > 0.0 && top_p <= 1.0)) throw std::invalid_argument("nucleus: p must be in (0, 1]");
  nonzero_indices(p, idx);
  if (idx.empty()) throw std::invalid_argument("distribution has no mass");
  std::size_t kept = 0;
  double mass = 0.0;
  if (top_p >= 1.0) {
    kept = idx.size();
    for (std::size_t w : idx) mass += p[w];
  } else {
    // Sort only as deep as needed: the kept prefix is usually far shorter
    // than the support.
    std::size_t sorted = 0;
    bool done = false;
    for (std::size_t depth : {std::size_t{64}, std::size_t{512}, idx.size()}) {
      depth = std::min(depth, idx.size());
      if (depth <= sorted) continue;
      std::partial_sort(idx.begin() + static_cast<std::ptrdiff_t>(sorted), idx.begin() + static_cast<std::ptrdiff_t>(depth),
                        idx.end(), ProbDesc{p});
      for (; sorted < depth; ++sorted) {
        const double next = mass + p[idx[sorted]];
        if (geq) {
          mass = next;
          kept = sorted + 1;
          if (mass >= top_p) {
            done = true;
            break;
          }
        } else {
          if (kept > 0 && next > top_p) {
            done = true;
            break;
          }
          mass = next;
          kept = sorted + 1;
        }
      }
      if (done) break;
    }
    for (std::size_t i = kept; i < idx.size(); ++i) p[idx[i]] = 0.0;
  }
  renormalize(p);
  return {static_cast<int>(kept), mass};
}

TokenId sample_inplace(std::span<const double> p, Rng& rng) {
  double total = 0.0;
  for (double x : p) total += x;
  const double u = rng.uniform() * total;
  double cum = 0.0;
  std::size_t last = p.size();
  for (std::size_t w = 0; w < p.size(); ++w) {
    if (p[w] <= 0.0) continue;
    cum += p[w];
    last = w;
    if (u < cum) return static_cast<TokenId>(w);
  }
  if (last == p.size()) throw std::invalid_argument("sample_token: distribution has no mass");
  return static_cast<TokenId>(last);
}

}  // namespace

void DecodingConfig::validate(int vocab_size) const {
  if (strategy == Strategy::top_k && (k < 1 || k > vocab_size))
    throw std::invalid_argument("decoding: k must be in [1, V]");
  if (strategy == Strategy::nucleus && !(p > 0.0 && p <= 1.0))
    throw std::invalid_argument("decoding: p must be in (0, 1]");
  if (!(temperature > 0.0)) throw std::invalid_argument("decoding: temperature must be > 0");
  if (max_len < 1) throw std::invalid_argument("decoding: max_len must be >= 1");
}

nlohmann::json DecodingConfig::to_json() const {
  return {{"strategy", to_string(strategy)}, {"k", k},           {"p", p},
          {"T", temperature},               {"priming", to_string(priming)},
          {"max_len", max_len},             {"seed", seed},     {"nucleus_geq", nucleus_geq}};
}

DecodingConfig DecodingConfig::from_json(const nlohmann::json& j) {
  DecodingConfig c;
  c.strategy = parse_strategy(j.at("strategy").get<std::string>());
  c.k = j.value("k", c.k);
  c.p = j.value("p", c.p);
  c.temperature = j.value("T", c.temperature);
  c.priming = parse_priming(j.value("priming", std::string("nocond")));
  c.max_len = j.value("max_len", c.max_len);
  c.seed = j.value("seed", c.seed);
  c.nucleus_geq = j.value("nucleus_geq", false);
  return c;
}

NextTokenDistribution apply_temperature(const NextTokenDistribution& dist, double temperature) {
  NextTokenDistribution out = dist;
  temperature_inplace(out.probs, temperature);
  return out;
}

NextTokenDistribution truncate_top_k(const NextTokenDistribution& dist, int k) {
  NextTokenDistribution out = dist;
  std::vector<std::size_t> idx;
  top_k_inplace(out.probs, k, idx);
  return out;
}

NucleusResult truncate_nucleus(const NextTokenDistribution& dist, double p, bool geq) {
  NucleusResult r{dist, 0, 0.0};
  std::vector<std::size_t> idx;
  std::tie(r.kept, r.kept_mass) = nucleus_inplace(r.dist.probs, p, geq, idx);
  return r;
}

TokenId sample_token(const NextTokenDistribution& dist, Rng& rng) { return sample_inplace(dist.probs, rng); }

Generation generate(const NGramModel& model, const DecodingConfig& config, std::optional<TokenId> prime_token) {
  config.validate(model.vocab_size());
  if ((config.priming == Priming::one_word) != prime_token.has_value())
    throw std::invalid_argument(config.priming == Priming::one_word
                                    ? "generate: 1wordcond requires a prime token"
                                    : "generate: nocond generation must not be given a prime token");
  Generation g;
  Rng rng(config.seed);
  std::vector<TokenId> ctx{kBot};
  if (prime_token) {
    g.tokens.push_back(*prime_token);
    ctx.push_back(*prime_token);
  }
  std::vector<double> p(static_cast<std::size_t>(model.vocab_size()));
  std::vector<std::size_t> idx;
  // Only the last order-1 tokens matter to the model.
  const std::size_t window = static_cast<std::size_t>(std::max(model.order() - 1, 0));
  while (g.tokens.size() < static_cast<std::size_t>(config.max_len)) {
    const std::size_t from = ctx.size() > window ? ctx.size() - window : 0;
    model.fill_distribution(std::span<const TokenId>(ctx).subspan(from), p);
    temperature_inplace(p, config.temperature);
    int kt = 0;
    switch (config.strategy) {
      case Strategy::top_k: kt = top_k_inplace(p, config.k, idx); break;
      case Strategy::nucleus: kt = nucleus_inplace(p, config.p, config.nucleus_geq, idx).first; break;
      case Strategy::untruncated:
        kt = static_cast<int>(std::count_if(p.begin(), p.end(), [](double x) { return x > 0.0; }));
        break;
    }
    g.trace.k_per_step.push_back(kt);
    const TokenId t = sample_inplace(p, rng);
    if (t == kEot) {
      g.hit_eot = true;
      break;
    }
    g.tokens.push_back(t);
    ctx.push_back(t);
  }
  return g;
}

}  // namespace gendet
