#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gendet/analysis.hpp"
#include "gendet/metrics.hpp"
#include "properties.hpp"
#include "test_util.hpp"

using namespace gendet;

namespace {

constexpr Label M = Label::machine;
constexpr Label H = Label::human;

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LabeledSet labeled(const Dataset& d) { return {d, testutil::score_all(d)}; }

Detector hist4_factory(const LabeledSet& s) {
  return train_detector(DetectorKind::hist4, s.data, s.scores, testutil::small_lm().vocab);
}

}  // namespace

TEST_CASE("auc examples") {
  const std::vector<double> s{0.9, 0.4, 0.6, 0.1};
  const std::vector<Label> l{M, M, H, H};
  CHECK(auc(s, l) == 0.75);
  CHECK(props::brute_force_auc(s, l) == 0.75);
  CHECK(auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, l) == 1.0);
  CHECK(auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, l) == 0.5);
  CHECK(auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, l) == 0.0);
  CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, std::vector<Label>{M, M}), std::invalid_argument);
}

TEST_CASE("auc agrees with brute force") {
  const auto o = props::auc_oracle(100, 51);
  INFO(o.first_failure);
  CHECK(o.violations == 0);
  CHECK(o.worst <= 1e-12);
}

TEST_CASE("accuracy and error breakdown") {
  const std::vector<Label> truth{M, M, H, H, M, H};
  const std::vector<Label> all_m(6, M);
  CHECK(accuracy(all_m, truth) == 0.5);
  const std::vector<Label> pred{M, H, M, H, H, H};
  const auto e = error_breakdown(pred, truth);
  CHECK(e.fp == 1);
  CHECK(e.fn == 2);
  CHECK(accuracy(pred, truth) == doctest::Approx(0.5));
  CHECK(avg_machine_probability(std::vector<double>{0.2, 0.4, 0.9}) == doctest::Approx(0.5));
}

TEST_CASE("evaluation report invariants") {
  const auto tr = labeled(testutil::small_paired(Strategy::top_k));
  const auto det = hist4_factory(tr);
  const auto r = evaluate(det, tr, testutil::small_lm().vocab, "hist4/top_k");
  CHECK(r.n == tr.data.size());
  const auto correct = static_cast<std::size_t>(std::lround(r.accuracy * static_cast<double>(r.n)));
  CHECK(correct + r.fp_count + r.fn_count == r.n);
  CHECK(r.strategy == "top_k");
  CHECK(r.priming == "nocond");
  CHECK(r.length == testutil::kSmallLen);
  CHECK(r.detector == "hist4/top_k");

  // Constant predictor on a balanced set.
  Detector constant = det;
  std::fill(constant.logistic.weights.begin(), constant.logistic.weights.end(), 0.0);
  constant.logistic.bias = 2.0;
  const auto c = evaluate(constant, tr, testutil::small_lm().vocab);
  CHECK(c.accuracy == 0.5);
  CHECK(c.auc == 0.5);
  CHECK(c.fn_count == 0);
}

TEST_CASE("transfer diagonal equals single-set evaluation") {
  std::map<Strategy, LabeledSet> train, test;
  const auto& vocab = testutil::small_lm().vocab;
  for (Strategy s : kAllStrategies) {
    const auto& d = testutil::small_paired(s);
    const auto sp = split_dataset(d, {40, 0, 20}, 6);
    train[s] = labeled(select_ids(d, sp.train));
    test[s] = labeled(select_ids(d, sp.test));
  }
  const auto m = transfer_matrix(hist4_factory, train, test, vocab, true);
  REQUIRE(m.rows.size() == 4);
  REQUIRE(m.cols.size() == 3);
  CHECK(m.rows.back() == "mixed");
  std::size_t r = 0;
  for (const auto& [s, tr] : train) {
    const auto direct = evaluate(hist4_factory(tr), test.at(s), vocab);
    std::size_t c = 0;
    for (const auto& col : test) {
      if (col.first == s) {
        CHECK(m.accuracy[r][c] == direct.accuracy);
        CHECK(m.avg_prob[r][c] == direct.avg_machine_prob);
      }
      ++c;
    }
    ++r;
  }
  const auto dir = std::filesystem::temp_directory_path() / "gendet_test_analysis";
  std::filesystem::create_directories(dir);
  write_transfer_csv((dir / "transfer.csv").string(), m);
  const auto text = read_file(dir / "transfer.csv");
  CHECK(text.rfind("train,eval,accuracy,avg_prob\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 13);
}

TEST_CASE("mixed training set is balanced across strategies") {
  std::vector<LabeledSet> sets;
  for (Strategy s : kAllStrategies) sets.push_back(labeled(testutil::small_paired(s)));
  const auto mixed = mix_labeled(sets, 3);
  REQUIRE(mixed.data.size() == mixed.scores.size());
  CHECK(mixed.data.size() == 120);
  for (std::size_t i = 0; i < mixed.data.size(); ++i) CHECK(mixed.scores[i].id == mixed.data[i].id);
  CHECK(describe_strategy(mixed.data) == "mixed");
}

TEST_CASE("length curve trains one detector per length") {
  std::map<int, LabeledSet> train, test;
  const auto& d = testutil::small_paired(Strategy::nucleus);
  const auto& vocab = testutil::small_lm().vocab;
  const auto sp = split_dataset(d, {40, 0, 20}, 6);
  for (int len : {4, 16, 32}) {
    train[len] = labeled(truncate_to_length(select_ids(d, sp.train), len, testutil::kSmallLen, vocab));
    test[len] = labeled(truncate_to_length(select_ids(d, sp.test), len, testutil::kSmallLen, vocab));
  }
  const auto curve = length_curve(hist4_factory, train, test, vocab);
  REQUIRE(curve.size() == 3);
  CHECK(curve[0].length == 4);
  CHECK(curve[2].length == 32);
  CHECK(curve[1].report.length == 16);
  test.erase(16);
  CHECK_THROWS(length_curve(hist4_factory, train, test, vocab));
}

TEST_CASE("first-token concentration") {
  // Counts 50, 40, 30, ... so the frequency order is ids 3, 4, 5, ...
  std::vector<std::string> entries{"<unk>", "<bot>", "<eot>"};
  std::vector<std::int64_t> counts{0, 0, 0};
  for (int i = 0; i < 7; ++i) {
    entries.push_back("w" + std::to_string(i));
    counts.push_back(50 - 10 * i);
  }
  const auto vocab = Vocab::from_entries(entries, counts);
  CHECK(frequency_order(vocab).front() == 3);

  Rng rng(12);
  Dataset ex;
  std::vector<TokenId> firsts;
  for (int i = 0; i < 100; ++i) {
    Excerpt e;
    e.label = i % 2 ? M : H;
    e.priming = i % 4 == 1 ? Priming::one_word : Priming::nocond;
    const auto first = static_cast<TokenId>(3 + rng.below(7));
    if (e.label == M && e.priming == Priming::one_word) e.tokens.push_back(9);
    e.tokens.push_back(first);
    e.tokens.push_back(4);
    firsts.push_back(first);
    ex.push_back(e);
  }
  const std::vector<int> ms{1, 2, 3, 5, 10};
  const auto got = first_token_concentration(ex, vocab, ms);
  // Hand count: rank of id t is t - 3, covered when rank < m.
  for (std::size_t k = 0; k < ms.size(); ++k) {
    const auto hits = std::count_if(firsts.begin(), firsts.end(), [&](TokenId t) { return t - 3 < ms[k]; });
    CHECK(got[k] == doctest::Approx(hits / 100.0));
  }
  CHECK(first_token_concentration(ex, vocab, {vocab.size()})[0] == 1.0);
  Dataset same(10);
  for (auto& e : same) e.tokens = {3, 5};
  CHECK(first_token_concentration(same, vocab, {1})[0] == 1.0);

  const auto grid = concentration_grid(5000);
  CHECK(grid.front() == 1);
  CHECK(grid.back() == 5000);
  CHECK(std::is_sorted(grid.begin(), grid.end()));
  CHECK(std::find(grid.begin(), grid.end(), 500) != grid.end());
}

TEST_CASE("mean k_t per position") {
  std::vector<NucleusTrace> traces{{{1, 4, 7}}, {{3, 2}}, {{5}}};
  const auto m = mean_kt_per_position(traces);
  CHECK(m.mean == std::vector<double>{3.0, 3.0, 7.0});
  CHECK(m.count == std::vector<std::size_t>{3, 2, 1});
  const auto path = (std::filesystem::temp_directory_path() / "gendet_test_traces.jsonl").string();
  write_traces(path, {{"a", traces[0]}, {"b", traces[1]}});
  const auto back = read_traces(path);
  REQUIRE(back.size() == 2);
  CHECK(back[1].id == "b");
  CHECK(back[1].trace.k_per_step == traces[1].k_per_step);
}
