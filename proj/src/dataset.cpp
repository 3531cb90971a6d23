#include "gendet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "gendet/corpus.hpp"
#include "gendet/kernels.hpp"
#include "gendet/rng.hpp"
#include "gendet/tokenizer.hpp"

namespace gendet {

using nlohmann::json;

namespace {

std::uint64_t string_key(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string machine_id(const DecodingConfig& d, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu", i);
  return std::string(to_string(d.strategy)) + "-" + std::string(to_string(d.priming)) + "-" + buf;
}

struct Pair {
  std::string human;
  std::vector<std::string> members;  // human first
};

// Pairs keyed by human id, ordered by a seeded hash of that id.
std::vector<Pair> ordered_pairs(const Dataset& dataset, std::uint64_t seed) {
  std::unordered_map<std::string, std::size_t> at;
  std::vector<Pair> pairs;
  for (const auto& e : dataset) {
    if (e.label != Label::human) continue;
    if (at.emplace(e.id, pairs.size()).second) pairs.push_back({e.id, {e.id}});
  }
  for (const auto& e : dataset) {
    if (e.label != Label::machine) continue;
    if (!e.pair_id) throw std::invalid_argument("machine excerpt '" + e.id + "' has no pair_id");
    auto it = at.find(*e.pair_id);
    if (it == at.end()) throw std::invalid_argument("machine excerpt '" + e.id + "' pairs with a missing human");
    pairs[it->second].members.push_back(e.id);
  }
  std::sort(pairs.begin(), pairs.end(), [seed](const Pair& a, const Pair& b) {
    const auto ka = derive_seed(seed, string_key(a.human)), kb = derive_seed(seed, string_key(b.human));
    return ka != kb ? ka < kb : a.human < b.human;
  });
  return pairs;
}

}  // namespace

Dataset make_human_excerpts(const std::vector<std::string>& documents, const std::vector<std::size_t>& heldout,
                            const Vocab& vocab, int min_len, int excerpt_len) {
  if (excerpt_len < min_len) throw std::invalid_argument("excerpt length must be >= min_len");
  Dataset out;
  for (std::size_t i : heldout) {
    TokenSeq toks = tokenize(documents.at(i), vocab);
    if (toks.size() < static_cast<std::size_t>(min_len)) continue;
    toks.resize(std::min(toks.size(), static_cast<std::size_t>(excerpt_len)));
    Excerpt e;
    e.id = "human-" + std::to_string(i);
    e.text = detokenize(toks, vocab);
    e.tokens = std::move(toks);
    e.label = Label::human;
    out.push_back(std::move(e));
  }
  return out;
}

Dataset build_paired_dataset(const Dataset& humans, const NGramModel& model, const Vocab& vocab,
                             const PairedDatasetConfig& config, std::vector<GenerationTrace>* traces) {
  const DecodingConfig& dec = config.decoding;
  dec.validate(model.vocab_size());
  if (config.min_len < 1 || config.min_len > dec.max_len)
    throw std::invalid_argument("build_paired_dataset: need 1 <= min_len <= max_len");
  if (config.retry_cap < 1) throw std::invalid_argument("build_paired_dataset: retry cap must be >= 1");

  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < humans.size(); ++i)
    if (humans[i].tokens.size() >= static_cast<std::size_t>(config.min_len)) pool.push_back(i);
  if (pool.size() < config.n_pairs)
    throw std::invalid_argument("build_paired_dataset: only " + std::to_string(pool.size()) +
                                " human excerpts have >= " + std::to_string(config.min_len) + " tokens, need " +
                                std::to_string(config.n_pairs));
  Rng rng(derive_seed(config.seed, 0x48554d));
  rng.shuffle(pool.begin(), pool.end());
  pool.resize(config.n_pairs);

  const std::uint64_t stream = derive_seed(config.seed, 0x100 + static_cast<std::uint64_t>(dec.strategy));
  std::vector<Generation> accepted(config.n_pairs);
  std::vector<std::uint64_t> accepted_seed(config.n_pairs);
  std::vector<std::size_t> pending(config.n_pairs);
  for (std::size_t i = 0; i < pending.size(); ++i) pending[i] = i;

  for (int attempt = 0; attempt < config.retry_cap && !pending.empty(); ++attempt) {
    std::vector<kernels::GenerationJob> jobs;
    jobs.reserve(pending.size());
    for (std::size_t i : pending) {
      kernels::GenerationJob job{derive_seed(derive_seed(stream, i), static_cast<std::uint64_t>(attempt)), {}};
      if (dec.priming == Priming::one_word) job.prime = humans[pool[i]].tokens.front();
      jobs.push_back(job);
    }
    auto gens = kernels::generate_parallel(model, dec, jobs, config.jobs);
    std::vector<std::size_t> still;
    for (std::size_t j = 0; j < pending.size(); ++j) {
      if (gens[j].tokens.size() >= static_cast<std::size_t>(config.min_len)) {
        accepted[pending[j]] = std::move(gens[j]);
        accepted_seed[pending[j]] = jobs[j].seed;
      } else {
        still.push_back(pending[j]);
      }
    }
    pending = std::move(still);
  }
  if (!pending.empty())
    throw std::runtime_error("build_paired_dataset: " + std::string(to_string(dec.strategy)) +
                             " generation exhausted the retry cap of " + std::to_string(config.retry_cap) +
                             " for " + std::to_string(pending.size()) + " excerpts");

  Dataset out;
  out.reserve(2 * config.n_pairs);
  for (std::size_t i = 0; i < config.n_pairs; ++i) {
    Excerpt h = humans[pool[i]];
    h.priming = dec.priming;
    if (h.tokens.size() > static_cast<std::size_t>(dec.max_len)) {
      h.tokens.resize(static_cast<std::size_t>(dec.max_len));
      h.text = detokenize(h.tokens, vocab);
    }
    Excerpt m;
    m.id = machine_id(dec, i);
    m.tokens = std::move(accepted[i].tokens);
    m.text = detokenize(m.tokens, vocab);
    m.label = Label::machine;
    m.strategy = dec.strategy;
    m.priming = dec.priming;
    m.pair_id = h.id;
    m.seed = accepted_seed[i];
    if (traces) traces->push_back({m.id, std::move(accepted[i].trace)});
    out.push_back(std::move(h));
    out.push_back(std::move(m));
  }
  return out;
}

Dataset truncate_to_length(const Dataset& dataset, int length, int min_len, const Vocab& vocab) {
  if (length < 1) throw std::invalid_argument("truncate_to_length: L must be >= 1");
  if (length > min_len)
    throw std::invalid_argument("truncate_to_length: L=" + std::to_string(length) + " exceeds min_len=" +
                                std::to_string(min_len));
  Dataset out = dataset;
  for (auto& e : out) {
    if (e.tokens.size() > static_cast<std::size_t>(length)) {
      e.tokens.resize(static_cast<std::size_t>(length));
      e.text = detokenize(e.tokens, vocab);
    }
  }
  return out;
}

std::vector<int> default_lengths(int min_len) {
  static constexpr int kBase[] = {2, 4, 8, 16, 32, 48, 64, 96, 128, 192};
  std::set<int> lens;
  for (int L : kBase) {
    int v = L;
    if (min_len < 192) v = static_cast<int>(std::lround(static_cast<double>(L) * min_len / 192.0));
    lens.insert(std::max(v, 1));
  }
  return {lens.begin(), lens.end()};
}

SplitIds split_dataset(const Dataset& dataset, const SplitSizes& sizes, std::uint64_t seed) {
  const auto pairs = ordered_pairs(dataset, seed);
  if (sizes.train + sizes.valid + sizes.test > pairs.size())
    throw std::invalid_argument("split: sizes exceed the " + std::to_string(pairs.size()) + " available pairs");
  SplitIds ids;
  std::size_t i = 0;
  auto take = [&](std::size_t n, std::vector<std::string>& dst) {
    for (std::size_t end = i + n; i < end; ++i)
      for (const auto& id : pairs[i].members) dst.push_back(id);
  };
  take(sizes.train, ids.train);
  take(sizes.valid, ids.valid);
  take(sizes.test, ids.test);
  return ids;
}

Dataset select_ids(const Dataset& dataset, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const Excerpt*> by_id;
  for (const auto& e : dataset) by_id.emplace(e.id, &e);
  Dataset out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw std::invalid_argument("id '" + id + "' not in dataset");
    out.push_back(*it->second);
  }
  return out;
}

Dataset mix_datasets(const std::vector<Dataset>& datasets, std::uint64_t seed) {
  if (datasets.empty()) throw std::invalid_argument("mix_datasets: no datasets");
  std::vector<std::unordered_map<std::string, const Excerpt*>> machine_of(datasets.size());
  std::unordered_map<std::string, const Excerpt*> humans;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    for (const auto& e : datasets[d]) {
      if (e.label == Label::human) humans.emplace(e.id, &e);
      else if (e.pair_id) machine_of[d].emplace(*e.pair_id, &e);
    }
  }
  std::vector<std::string> common;
  for (const auto& [hid, h] : humans) {
    bool everywhere = true;
    for (const auto& m : machine_of) everywhere = everywhere && m.count(hid);
    if (everywhere) common.push_back(hid);
  }
  std::sort(common.begin(), common.end(), [seed](const std::string& a, const std::string& b) {
    const auto ka = derive_seed(seed, string_key(a)), kb = derive_seed(seed, string_key(b));
    return ka != kb ? ka < kb : a < b;
  });
  Dataset out;
  for (std::size_t j = 0; j < common.size(); ++j) {
    out.push_back(*humans.at(common[j]));
    out.push_back(*machine_of[j % datasets.size()].at(common[j]));
  }
  return out;
}

Dataset build_study_set(const std::map<Strategy, Dataset>& by_strategy, std::size_t n_human,
                        std::size_t n_per_strategy, std::uint64_t seed) {
  std::map<std::string, const Excerpt*> humans;
  for (const auto& [s, ds] : by_strategy)
    for (const auto& e : ds)
      if (e.label == Label::human) humans.emplace(e.id, &e);
  std::vector<const Excerpt*> hpool;
  for (const auto& kv : humans) hpool.push_back(kv.second);
  if (hpool.size() < n_human)
    throw std::invalid_argument("build_study_set: " + std::to_string(hpool.size()) + " human excerpts, need " +
                                std::to_string(n_human));
  Rng rng(derive_seed(seed, 0x57d7));
  rng.shuffle(hpool.begin(), hpool.end());
  Dataset items;
  for (std::size_t i = 0; i < n_human; ++i) items.push_back(*hpool[i]);
  for (const auto& [s, ds] : by_strategy) {
    std::vector<const Excerpt*> mpool;
    for (const auto& e : ds)
      if (e.label == Label::machine) mpool.push_back(&e);
    if (mpool.size() < n_per_strategy)
      throw std::invalid_argument("build_study_set: strategy " + std::string(to_string(s)) + " has " +
                                  std::to_string(mpool.size()) + " machine excerpts, need " +
                                  std::to_string(n_per_strategy));
    rng.shuffle(mpool.begin(), mpool.end());
    for (std::size_t i = 0; i < n_per_strategy; ++i) items.push_back(*mpool[i]);
  }
  rng.shuffle(items.begin(), items.end());
  return items;
}

std::string excerpt_to_line(const Excerpt& e) {
  json j = {{"id", e.id},
            {"label", to_string(e.label)},
            {"strategy", e.strategy ? json(to_string(*e.strategy)) : json(nullptr)},
            {"priming", to_string(e.priming)},
            {"pair_id", e.pair_id ? json(*e.pair_id) : json(nullptr)},
            {"tokens", e.tokens},
            {"text", e.text}};
  if (e.seed) j["seed"] = *e.seed;
  return j.dump();
}

Excerpt excerpt_from_line(const std::string& line) {
  const json j = json::parse(line);
  Excerpt e;
  e.id = j.at("id").get<std::string>();
  e.label = parse_label(j.at("label").get<std::string>());
  if (const auto& s = j.at("strategy"); !s.is_null()) e.strategy = parse_strategy(s.get<std::string>());
  e.priming = parse_priming(j.at("priming").get<std::string>());
  if (const auto& p = j.at("pair_id"); !p.is_null()) e.pair_id = p.get<std::string>();
  e.tokens = j.at("tokens").get<TokenSeq>();
  e.text = j.value("text", std::string());
  if (j.contains("seed")) e.seed = j.at("seed").get<std::uint64_t>();
  if ((e.label == Label::machine) != e.strategy.has_value())
    throw std::invalid_argument("excerpt '" + e.id + "': strategy must be present exactly for machine excerpts");
  return e;
}

void write_dataset(const std::string& path, const Dataset& dataset) {
  std::string out;
  for (const auto& e : dataset) {
    out += excerpt_to_line(e);
    out += '\n';
  }
  write_file(path, out);
}

Dataset read_dataset(const std::string& path) {
  std::istringstream in(read_file(path));
  Dataset out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(excerpt_from_line(line));
  return out;
}

void write_ids(const std::string& path, const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += id + '\n';
  write_file(path, out);
}

std::vector<std::string> read_ids(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ids.push_back(line);
  return ids;
}

}  // namespace gendet
