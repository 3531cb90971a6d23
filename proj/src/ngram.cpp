#include "gendet/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace gendet {

namespace {
constexpr int kMaxOrder = 4;
constexpr int kIdBits = 21;
}  // namespace

bool NextTokenDistribution::valid(double tol) const {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol;
}

std::size_t NextTokenDistribution::support_size() const {
  return static_cast<std::size_t>(std::count_if(probs.begin(), probs.end(), [](double p) { return p > 0.0; }));
}

int rank_in(std::span<const double> probs, TokenId token) {
  const double pt = probs[static_cast<std::size_t>(token)];
  int rank = 1;
  for (std::size_t w = 0; w < probs.size(); ++w) {
    if (probs[w] > pt || (probs[w] == pt && static_cast<TokenId>(w) < token)) ++rank;
  }
  return rank;
}

std::uint64_t NGramModel::pack(std::span<const TokenId> ctx) {
  std::uint64_t k = 0;
  for (TokenId t : ctx) k = (k << kIdBits) | static_cast<std::uint64_t>(t);
  return k;
}

const NGramModel::ContextStats* NGramModel::find(std::span<const TokenId> ctx) const {
  const auto& level = levels_[ctx.size()];
  auto it = level.find(pack(ctx));
  return it == level.end() ? nullptr : &it->second;
}

NGramModel NGramModel::train(std::span<const TokenSeq> documents, int vocab_size, int order, double alpha) {
  if (order < 1) throw std::invalid_argument("train_ngram: order must be >= 1");
  if (order > kMaxOrder) throw std::invalid_argument("train_ngram: order must be <= 4");
  if (!(alpha > 0.0)) throw std::invalid_argument("train_ngram: alpha must be > 0");
  if (vocab_size < 1 || vocab_size >= (1 << kIdBits)) throw std::invalid_argument("train_ngram: bad vocab size");

  NGramModel m;
  m.order_ = order;
  m.alpha_ = alpha;
  m.vocab_size_ = vocab_size;
  m.unigram_counts_.assign(static_cast<std::size_t>(vocab_size), 0);
  m.levels_.resize(static_cast<std::size_t>(order));

  std::vector<std::unordered_map<std::uint64_t, std::map<TokenId, std::int64_t>>> raw(
      static_cast<std::size_t>(order));
  for (const auto& doc : documents) {
    for (TokenId t : doc)
      if (t < 0 || t >= vocab_size) throw std::invalid_argument("train_ngram: token id out of range");
    // Position 0 is the BOT delimiter and is never predicted.
    for (std::size_t i = 1; i < doc.size(); ++i) {
      ++m.unigram_counts_[static_cast<std::size_t>(doc[i])];
      ++m.total_;
      for (std::size_t j = 1; j < static_cast<std::size_t>(order) && j <= i; ++j) {
        std::span<const TokenId> ctx(doc.data() + (i - j), j);
        ++raw[j][pack(ctx)][doc[i]];
      }
    }
  }
  for (std::size_t j = 1; j < raw.size(); ++j) {
    auto& level = m.levels_[j];
    level.reserve(raw[j].size());
    for (auto& [key, nexts] : raw[j]) {
      ContextStats st;
      st.next.assign(nexts.begin(), nexts.end());
      for (const auto& [w, c] : st.next) st.total += c;
      level.emplace(key, std::move(st));
    }
  }
  m.finalize();
  return m;
}

void NGramModel::finalize() {
  const double denom = static_cast<double>(total_) + alpha_ * vocab_size_;
  unigram_.resize(unigram_counts_.size());
  for (std::size_t w = 0; w < unigram_.size(); ++w)
    unigram_[w] = (static_cast<double>(unigram_counts_[w]) + alpha_) / denom;
}

double NGramModel::mixture(std::span<const TokenId> context,
                           std::vector<std::pair<const ContextStats*, double>>* levels) const {
  const std::size_t max_len = std::min(context.size(), static_cast<std::size_t>(order_ - 1));
  const ContextStats* found[kMaxOrder] = {};
  std::size_t depth = 0;
  for (std::size_t j = 1; j <= max_len; ++j) {
    const ContextStats* st = find(context.last(j));
    if (!st) break;
    found[depth++] = st;
  }
  const double prior = alpha_ * vocab_size_;
  // Unroll the recursion from the longest context down: each level's counts
  // are scaled by every longer level's backoff weight.
  double running = 1.0;
  double coef[kMaxOrder] = {};
  for (std::size_t d = depth; d-- > 0;) {
    const double denom = static_cast<double>(found[d]->total) + prior;
    coef[d] = running / denom;
    running *= prior / denom;
  }
  levels->clear();
  for (std::size_t d = 0; d < depth; ++d) levels->emplace_back(found[d], coef[d]);
  return running;
}

void NGramModel::fill_distribution(std::span<const TokenId> context, std::span<double> out) const {
  if (out.size() != static_cast<std::size_t>(vocab_size_)) throw std::invalid_argument("fill_distribution: size");
  thread_local std::vector<std::pair<const ContextStats*, double>> levels;
  const double scale = mixture(context, &levels);
  for (std::size_t w = 0; w < out.size(); ++w) out[w] = scale * unigram_[w];
  for (const auto& [st, c] : levels)
    for (const auto& [w, n] : st->next) out[static_cast<std::size_t>(w)] += c * static_cast<double>(n);
}

NextTokenDistribution NGramModel::next_distribution(std::span<const TokenId> context) const {
  NextTokenDistribution d;
  d.probs.resize(static_cast<std::size_t>(vocab_size_));
  fill_distribution(context, d.probs);
  return d;
}

double NGramModel::prob(std::span<const TokenId> context, TokenId token) const {
  thread_local std::vector<std::pair<const ContextStats*, double>> levels;
  const double scale = mixture(context, &levels);
  double p = scale * unigram_[static_cast<std::size_t>(token)];
  for (const auto& [st, c] : levels) {
    auto it = std::lower_bound(st->next.begin(), st->next.end(), token,
                               [](const auto& e, TokenId t) { return e.first < t; });
    if (it != st->next.end() && it->first == token) p += c * static_cast<double>(it->second);
  }
  return p;
}

double NGramModel::sequence_logprob(std::span<const TokenId> tokens) const {
  const TokenId bot[] = {kBot};
  return sequence_logprob(tokens, bot);
}

double NGramModel::sequence_logprob(std::span<const TokenId> tokens, std::span<const TokenId> prefix) const {
  if (tokens.empty()) throw std::invalid_argument("sequence_logprob: empty sequence");
  std::vector<TokenId> ctx(prefix.begin(), prefix.end());
  double total = 0.0;
  for (TokenId t : tokens) {
    total += std::log(prob(ctx, t));
    ctx.push_back(t);
  }
  return total;
}

int NGramModel::rank_of(std::span<const TokenId> context, TokenId token) const {
  thread_local std::vector<double> buf;
  buf.resize(static_cast<std::size_t>(vocab_size_));
  fill_distribution(context, buf);
  return rank_in(buf, token);
}

ScoredTokenStream NGramModel::score(std::span<const TokenId> tokens, std::size_t priming_len,
                                    std::string id) const {
  ScoredTokenStream s;
  s.id = std::move(id);
  std::vector<TokenId> ctx{kBot};
  ctx.insert(ctx.end(), tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(std::min(priming_len, tokens.size())));
  std::vector<double> buf(static_cast<std::size_t>(vocab_size_));
  for (std::size_t i = priming_len; i < tokens.size(); ++i) {
    const TokenId t = tokens[i];
    fill_distribution(ctx, buf);
    s.positions.push_back({t, std::log(buf[static_cast<std::size_t>(t)]), rank_in(buf, t)});
    ctx.push_back(t);
  }
  return s;
}

nlohmann::json NGramModel::to_json() const {
  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t j = 1; j < levels_.size(); ++j) {
    // Sorted keys make the file deterministic.
    std::vector<std::uint64_t> keys;
    keys.reserve(levels_[j].size());
    for (const auto& kv : levels_[j]) keys.push_back(kv.first);
    std::sort(keys.begin(), keys.end());
    std::vector<std::int64_t> flat;
    const std::uint64_t mask = (1ULL << kIdBits) - 1;
    for (std::uint64_t k : keys) {
      const auto& st = levels_[j].at(k);
      for (const auto& [w, c] : st.next) {
        for (std::size_t i = j; i-- > 0;) flat.push_back(static_cast<std::int64_t>((k >> (kIdBits * i)) & mask));
        flat.push_back(w);
        flat.push_back(c);
      }
    }
    levels.push_back(std::move(flat));
  }
  return {{"order", order_},
          {"alpha", alpha_},
          {"vocab_size", vocab_size_},
          {"unigram_counts", unigram_counts_},
          {"levels", std::move(levels)}};
}

NGramModel NGramModel::from_json(const nlohmann::json& j) {
  NGramModel m;
  m.order_ = j.at("order").get<int>();
  m.alpha_ = j.at("alpha").get<double>();
  m.vocab_size_ = j.at("vocab_size").get<int>();
  if (m.order_ < 1 || m.order_ > kMaxOrder || !(m.alpha_ > 0.0)) throw std::runtime_error("ngram model: bad header");
  m.unigram_counts_ = j.at("unigram_counts").get<std::vector<std::int64_t>>();
  if (m.unigram_counts_.size() != static_cast<std::size_t>(m.vocab_size_))
    throw std::runtime_error("ngram model: unigram size mismatch");
  m.total_ = std::accumulate(m.unigram_counts_.begin(), m.unigram_counts_.end(), std::int64_t{0});
  m.levels_.resize(static_cast<std::size_t>(m.order_));
  const auto& levels = j.at("levels");
  if (levels.size() != static_cast<std::size_t>(m.order_ - 1)) throw std::runtime_error("ngram model: level count");
  for (std::size_t jl = 1; jl < m.levels_.size(); ++jl) {
    const auto flat = levels[jl - 1].get<std::vector<std::int64_t>>();
    const std::size_t stride = jl + 2;
    if (flat.size() % stride != 0) throw std::runtime_error("ngram model: truncated level");
    std::vector<TokenId> ctx(jl);
    for (std::size_t r = 0; r < flat.size(); r += stride) {
      for (std::size_t i = 0; i < jl; ++i) ctx[i] = static_cast<TokenId>(flat[r + i]);
      auto& st = m.levels_[jl][pack(ctx)];
      st.next.emplace_back(static_cast<TokenId>(flat[r + jl]), flat[r + jl + 1]);
      st.total += flat[r + jl + 1];
    }
  }
  m.finalize();
  return m;
}

}  // namespace gendet
