#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "gendet/dataset.hpp"
#include "gendet/dataset_dir.hpp"
#include "test_util.hpp"

using namespace gendet;

namespace {

std::size_t count_label(const Dataset& d, Label l) {
  return static_cast<std::size_t>(std::count_if(d.begin(), d.end(), [l](const Excerpt& e) { return e.label == l; }));
}

std::set<std::string> ids_of(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

// Synthetic paired dataset: humans h0..h{n-1}, machine excerpts tagged by strategy.
Dataset synthetic(Strategy s, std::size_t n) {
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    Excerpt h;
    h.id = "h" + std::to_string(i);
    h.tokens = {static_cast<TokenId>(3 + i % 7), 4, 5};
    Excerpt m;
    m.id = std::string(to_string(s)) + "-" + std::to_string(i);
    m.tokens = {6, 7, 8};
    m.label = Label::machine;
    m.strategy = s;
    m.pair_id = h.id;
    d.push_back(h);
    d.push_back(m);
  }
  return d;
}

}  // namespace

TEST_CASE("paired datasets are balanced and long enough") {
  for (Strategy s : kAllStrategies) {
    const auto& d = testutil::small_paired(s);
    CHECK(d.size() == 120);
    CHECK(count_label(d, Label::human) == 60);
    CHECK(count_label(d, Label::machine) == 60);
    for (std::size_t i = 0; i < d.size(); i += 2) {
      CHECK(d[i].label == Label::human);
      CHECK(!d[i].strategy);
      CHECK(d[i + 1].strategy == s);
      CHECK(d[i + 1].pair_id == d[i].id);
      CHECK(d[i + 1].seed.has_value());
      CHECK(d[i].tokens.size() == static_cast<std::size_t>(testutil::kSmallLen));
      CHECK(d[i + 1].tokens.size() == static_cast<std::size_t>(testutil::kSmallLen));
    }
  }
  // Every strategy shares the same humans.
  for (std::size_t i = 0; i < 120; i += 2)
    CHECK(testutil::small_paired(Strategy::top_k)[i].id == testutil::small_paired(Strategy::nucleus)[i].id);
}

TEST_CASE("one-word priming copies the human first token") {
  const auto& d = testutil::small_paired(Strategy::top_k, Priming::one_word);
  for (std::size_t i = 0; i < d.size(); i += 2) {
    CHECK(d[i + 1].tokens[0] == d[i].tokens[0]);
    CHECK(d[i + 1].priming == Priming::one_word);
    CHECK(d[i].priming_length() == 1);
  }
  const auto& lm = testutil::small_lm();
  PairedDatasetConfig cfg;
  cfg.decoding.priming = Priming::one_word;
  cfg.decoding.max_len = testutil::kSmallLen;
  cfg.min_len = testutil::kSmallLen;
  cfg.n_pairs = 1;
  const auto one = build_paired_dataset(testutil::small_humans(), lm.ngram, lm.vocab, cfg);
  REQUIRE(one.size() == 2);
  CHECK(one[1].tokens[0] == one[0].tokens[0]);
}

TEST_CASE("paired dataset construction is deterministic") {
  const auto& lm = testutil::small_lm();
  PairedDatasetConfig cfg;
  cfg.decoding.strategy = Strategy::nucleus;
  cfg.decoding.max_len = 24;
  cfg.min_len = 24;
  cfg.n_pairs = 20;
  cfg.seed = 77;
  std::vector<GenerationTrace> t1, t2;
  const auto a = build_paired_dataset(testutil::small_humans(), lm.ngram, lm.vocab, cfg, &t1);
  cfg.jobs = 1;
  const auto b = build_paired_dataset(testutil::small_humans(), lm.ngram, lm.vocab, cfg, &t2);
  CHECK(a == b);
  REQUIRE(t1.size() == 20);
  for (std::size_t i = 0; i < t1.size(); ++i) {
    CHECK(t1[i].id == t2[i].id);
    CHECK(t1[i].trace.k_per_step == t2[i].trace.k_per_step);
  }
  std::string la, lb;
  for (const auto& e : a) la += excerpt_to_line(e);
  for (const auto& e : b) lb += excerpt_to_line(e);
  CHECK(la == lb);
  cfg.seed = 78;
  CHECK(!(build_paired_dataset(testutil::small_humans(), lm.ngram, lm.vocab, cfg) == a));
}

TEST_CASE("paired dataset errors") {
  const auto& lm = testutil::small_lm();
  PairedDatasetConfig cfg;
  cfg.decoding.max_len = testutil::kSmallLen;
  cfg.min_len = testutil::kSmallLen;
  cfg.n_pairs = testutil::small_humans().size() + 1;
  CHECK_THROWS_AS(build_paired_dataset(testutil::small_humans(), lm.ngram, lm.vocab, cfg), std::invalid_argument);
  // A model whose greedy path is [3, EOT] can never reach 5 tokens.
  const std::vector<TokenSeq> docs(10, TokenSeq{kBot, 3, kEot});
  const auto tiny = NGramModel::train(docs, 4, 2, 0.01);
  Dataset humans(3);
  for (std::size_t i = 0; i < humans.size(); ++i) {
    humans[i].id = "human-" + std::to_string(i);
    humans[i].tokens = {3, 3, 3, 3, 3};
  }
  const auto tiny_vocab = Vocab::from_entries({"<unk>", "<bot>", "<eot>", "a"});
  cfg.n_pairs = 2;
  cfg.decoding.k = 1;
  cfg.decoding.max_len = 5;
  cfg.min_len = 5;
  cfg.retry_cap = 2;
  try {
    build_paired_dataset(humans, tiny, tiny_vocab, cfg);
    FAIL("expected retry cap error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("top_k") != std::string::npos);
    CHECK(std::string(e.what()).find("retry cap of 2") != std::string::npos);
  }
}

TEST_CASE("truncation keeps prefixes and pairing") {
  const auto& d = testutil::small_paired(Strategy::untruncated);
  const auto& vocab = testutil::small_lm().vocab;
  CHECK(truncate_to_length(d, testutil::kSmallLen, testutil::kSmallLen, vocab) == d);
  for (int len : {2, 7, 16}) {
    const auto t = truncate_to_length(d, len, testutil::kSmallLen, vocab);
    REQUIRE(t.size() == d.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(t[i].tokens.size() == static_cast<std::size_t>(len));
      CHECK(std::equal(t[i].tokens.begin(), t[i].tokens.end(), d[i].tokens.begin()));
      CHECK(t[i].label == d[i].label);
      CHECK(t[i].pair_id == d[i].pair_id);
    }
  }
  CHECK_THROWS_AS(truncate_to_length(d, testutil::kSmallLen + 1, testutil::kSmallLen, vocab), std::invalid_argument);
  CHECK_THROWS_AS(truncate_to_length(d, 0, testutil::kSmallLen, vocab), std::invalid_argument);
}

TEST_CASE("default lengths") {
  CHECK(default_lengths(192) == std::vector<int>{2, 4, 8, 16, 32, 48, 64, 96, 128, 192});
  CHECK(default_lengths(384) == std::vector<int>{2, 4, 8, 16, 32, 48, 64, 96, 128, 192});
  // Each scaled length is round(L * 96 / 192), at least 1, deduplicated.
  CHECK(default_lengths(96) == std::vector<int>{1, 2, 4, 8, 16, 24, 32, 48, 64, 96});
  const auto small = default_lengths(4);
  CHECK(std::is_sorted(small.begin(), small.end()));
  CHECK(std::adjacent_find(small.begin(), small.end()) == small.end());
  CHECK(small.back() == 4);
}

TEST_CASE("splits partition pairs deterministically") {
  const auto& d = testutil::small_paired(Strategy::top_k);
  const auto s = split_dataset(d, {40, 5, 15}, 9);
  CHECK(s.train.size() == 80);
  CHECK(s.valid.size() == 10);
  CHECK(s.test.size() == 30);
  std::set<std::string> all;
  for (const auto* part : {&s.train, &s.valid, &s.test}) {
    const auto sel = select_ids(d, *part);
    std::set<std::string> here = ids_of(*part);
    for (const auto& e : sel)
      if (e.pair_id) CHECK(here.count(*e.pair_id) == 1);
    for (const auto& id : *part) CHECK(all.insert(id).second);
  }
  const auto again = split_dataset(d, {40, 5, 15}, 9);
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);
  // Another strategy with the same humans gets the same human partition.
  const auto other = split_dataset(testutil::small_paired(Strategy::nucleus), {40, 5, 15}, 9);
  std::set<std::string> h1, h2;
  for (const auto& id : s.test)
    if (id.rfind("human-", 0) == 0) h1.insert(id);
  for (const auto& id : other.test)
    if (id.rfind("human-", 0) == 0) h2.insert(id);
  CHECK(h1 == h2);
  CHECK_THROWS_AS(split_dataset(d, {50, 5, 15}, 9), std::invalid_argument);
}

TEST_CASE("mixing takes one strategy per pair in rotation") {
  const auto mixed = mix_datasets({synthetic(Strategy::top_k, 30), synthetic(Strategy::nucleus, 30),
                                   synthetic(Strategy::untruncated, 30)},
                                  4);
  CHECK(mixed.size() == 60);
  std::map<Strategy, int> per;
  std::set<std::string> humans;
  for (std::size_t i = 0; i < mixed.size(); i += 2) {
    CHECK(mixed[i].label == Label::human);
    CHECK(humans.insert(mixed[i].id).second);
    CHECK(mixed[i + 1].pair_id == mixed[i].id);
    ++per[*mixed[i + 1].strategy];
  }
  CHECK(per[Strategy::top_k] == 10);
  CHECK(per[Strategy::nucleus] == 10);
  CHECK(per[Strategy::untruncated] == 10);
}

TEST_CASE("study set counts and disjointness from training") {
  std::map<Strategy, Dataset> by;
  for (Strategy s : kAllStrategies) by[s] = synthetic(s, 200);
  const auto items = build_study_set(by, 150, 50, 1);
  CHECK(items.size() == 300);
  CHECK(count_label(items, Label::human) == 150);
  std::map<Strategy, int> per;
  std::set<std::string> ids;
  for (const auto& e : items) {
    CHECK(ids.insert(e.id).second);
    if (e.strategy) ++per[*e.strategy];
  }
  for (Strategy s : kAllStrategies) CHECK(per[s] == 50);
  CHECK(count_label(build_study_set(by, 0, 5, 1), Label::human) == 0);
  CHECK_THROWS_AS(build_study_set(by, 201, 5, 1), std::invalid_argument);

  // Drawn from test splits, the items never touch a training split.
  std::map<Strategy, Dataset> test_sets;
  std::set<std::string> train_ids;
  for (Strategy s : kAllStrategies) {
    const auto& d = testutil::small_paired(s);
    const auto sp = split_dataset(d, {40, 5, 15}, 2);
    test_sets[s] = select_ids(d, sp.test);
    train_ids.insert(sp.train.begin(), sp.train.end());
  }
  const auto study = build_study_set(test_sets, 15, 5, 3);
  CHECK(study.size() == 30);
  for (const auto& e : study) CHECK(train_ids.count(e.id) == 0);
}

TEST_CASE("dataset file round trip") {
  const auto& d = testutil::small_paired(Strategy::top_k, Priming::one_word);
  const auto dir = std::filesystem::temp_directory_path() / "gendet_test_dataset";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "d.jsonl").string();
  write_dataset(path, d);
  CHECK(read_dataset(path) == d);
  const auto ids_path = (dir / "d.ids").string();
  const std::vector<std::string> ids{"a", "b", "human-3"};
  write_ids(ids_path, ids);
  CHECK(read_ids(ids_path) == ids);
  auto line = excerpt_to_line(d[1]);
  CHECK(excerpt_from_line(line) == d[1]);
  auto bad = d[0];
  bad.strategy = Strategy::top_k;
  CHECK_THROWS(excerpt_from_line(excerpt_to_line(bad)));
}
