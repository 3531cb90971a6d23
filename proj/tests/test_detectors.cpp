#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gendet/detector.hpp"
#include "gendet/metrics.hpp"
#include "properties.hpp"
#include "test_util.hpp"

using namespace gendet;

TEST_CASE("bag of words counts tokens") {
  const auto v = Vocab::from_entries({"<unk>", "<bot>", "<eot>", "a", "b", "c"}, {0, 1, 1, 9, 2, 5});
  const auto f = featurize_bow({3, 3, 5}, v).values;
  CHECK(f == std::vector<double>{0, 0, 0, 2, 0, 1});
  CHECK(featurize_bow({}, v).values == std::vector<double>(6, 0.0));
  // min_freq drops rare entries.
  CHECK(featurize_bow({3, 4, 5}, v, 3).values == std::vector<double>{0, 0, 0, 1, 0, 1});
  CHECK_THROWS_AS(featurize_bow({6}, v), std::out_of_range);
}

TEST_CASE("rank histogram boundaries and partition") {
  CHECK(featurize_hist4(props::stream_of_ranks({1, 1, 1})).values == std::vector<double>{1, 0, 0, 0});
  CHECK(featurize_hist4(props::stream_of_ranks({})).values == std::vector<double>(4, 0.0));
  const auto o = props::featurizer_exactness(500, 21);
  INFO(o.first_failure);
  CHECK(o.violations == 0);
  CHECK_THROWS_AS(hist50_bin(0, 100), std::invalid_argument);
}

TEST_CASE("combined features") {
  Excerpt e;
  e.tokens = {5, 6, 7};
  ScoredTokenStream s;
  s.positions = {{5, -1.0, 1}, {6, -3.0, 7}, {7, -2.0, 300}};
  std::vector<std::string> entries{"<unk>", "<bot>", "<eot>"};
  for (int i = 3; i < 5000; ++i) entries.push_back("w" + std::to_string(i));
  const auto v = Vocab::from_entries(entries);
  const auto f = featurize_combined(e, s, v).values;
  REQUIRE(f.size() == static_cast<std::size_t>(kHist50Bins + 4 + kCombinedExtra));
  CHECK(f[0] == doctest::Approx(2.0 / 3.0));
  CHECK(f[2] == doctest::Approx(1.0 / 3.0));
  CHECK(f[50] == doctest::Approx(1.0 / 3.0));
  CHECK(f[52] == doctest::Approx(1.0 / 3.0));
  CHECK(f[53] == doctest::Approx(1.0 / 3.0));
  CHECK(f[54] == doctest::Approx(-2.0));
  CHECK(f[55] == -3.0);
  CHECK(f[56] == -1.0);
  CHECK(f[57] == doctest::Approx(-2.0));
}

TEST_CASE("logistic gradient matches finite differences") {
  const auto o = props::logistic_gradient_check(20, 31);
  INFO(o.first_failure);
  CHECK(o.violations == 0);
  CHECK(o.worst < 1e-4);
}

TEST_CASE("logistic training behaviour") {
  const auto toy = props::separable_toy(5);
  CHECK(toy.train_accuracy == 1.0);
  CHECK(toy.loss_non_increasing);
  const auto mono = props::loss_monotone(30, 41);
  INFO(mono.first_failure);
  CHECK(mono.violations == 0);

  DesignMatrix x(1);
  x.add_row(std::vector<double>{0.0});
  x.add_row(std::vector<double>{1.0});
  const std::vector<int> y{0, 1};
  LogRegConfig cfg;
  auto res = train_logreg(x, y, cfg);
  CHECK(res.model.predict(std::vector<double>{0.0}) < 0.5);
  CHECK(res.model.predict(std::vector<double>{1.0}) > 0.5);
  for (std::size_t i = 1; i < res.loss_history.size(); ++i) CHECK(res.loss_history[i] <= res.loss_history[i - 1] + 1e-12);

  cfg.epochs = 0;
  res = train_logreg(x, y, cfg);
  CHECK(res.model.predict(std::vector<double>{0.0}) == 0.5);
  CHECK(res.model.predict(std::vector<double>{7.0}) == 0.5);

  const std::vector<int> same{1, 1};
  CHECK_THROWS_AS(train_logreg(x, same, LogRegConfig{}), std::invalid_argument);
  const std::vector<int> short_y{1};
  CHECK_THROWS_AS(train_logreg(x, short_y, LogRegConfig{}), std::invalid_argument);
  CHECK_THROWS_AS(res.model.predict(std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("predictions move with the sign of each weight") {
  Rng rng(8);
  DesignMatrix x(4);
  std::vector<int> y;
  for (int i = 0; i < 80; ++i) {
    std::vector<double> row(4);
    for (auto& v : row) v = rng.uniform();
    y.push_back(row[0] - row[1] + 0.3 * rng.uniform() > 0.1 ? 1 : 0);
    x.add_row(row);
  }
  const auto m = train_logreg(x, y, LogRegConfig{}).model;
  for (std::size_t j = 0; j < 4; ++j) {
    std::vector<double> base{0.5, 0.5, 0.5, 0.5};
    const double p0 = m.predict(base);
    base[j] += 0.25;
    const double p1 = m.predict(base);
    if (m.weights[j] > 0) CHECK(p1 > p0);
    if (m.weights[j] < 0) CHECK(p1 < p0);
    CHECK((p1 > 0.0 && p1 < 1.0));
  }
}

TEST_CASE("total probability threshold") {
  ThresholdModel m{-10.0, -5.0, false};
  CHECK(classify_totalprob(m, -9.0) == Label::machine);
  CHECK(classify_totalprob(m, -7.5) == Label::machine);
  CHECK(classify_totalprob(m, -7.0) == Label::human);
  CHECK(totalprob_machine_probability(m, -7.5) == 0.5);
  CHECK(totalprob_machine_probability(m, -9.0) > 0.5);
  CHECK(totalprob_machine_probability(m, -6.0) < 0.5);

  const std::vector<double> ll{-12, -11, -9, -4, -5, -6};
  const std::vector<Label> lab{Label::machine, Label::machine, Label::machine, Label::human, Label::human, Label::human};
  const auto fit = fit_totalprob(ll, lab);
  CHECK(fit.mu_machine == doctest::Approx(-32.0 / 3.0));
  CHECK(fit.mu_human == doctest::Approx(-5.0));
  const std::vector<Label> one_class(6, Label::human);
  CHECK_THROWS_AS(fit_totalprob(ll, one_class), std::invalid_argument);

  // Refit after a common shift gives the same labels.
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> train, test;
    std::vector<Label> labels;
    for (int i = 0; i < 20; ++i) {
      labels.push_back(i % 2 ? Label::machine : Label::human);
      train.push_back(-100.0 * rng.uniform() - (i % 2 ? 20.0 : 0.0));
      test.push_back(-120.0 * rng.uniform());
    }
    // Values on a dyadic grid, so adding the shift is exact.
    const double c = std::round((200.0 * rng.uniform() - 100.0) * 64) / 64;
    std::vector<double> tr_q, te_q, tr_qs, te_qs;
    for (double v : train) tr_q.push_back(std::round(v * 64) / 64);
    for (double v : test) te_q.push_back(std::round(v * 64) / 64);
    for (double v : tr_q) tr_qs.push_back(v + c);
    for (double v : te_q) te_qs.push_back(v + c);
    const auto qa = fit_totalprob(tr_q, labels), qb = fit_totalprob(tr_qs, labels);
    for (std::size_t i = 0; i < te_q.size(); ++i) CHECK(classify_totalprob(qa, te_q[i]) == classify_totalprob(qb, te_qs[i]));
  }
}

TEST_CASE("detectors train, predict and round-trip") {
  const auto& lm = testutil::small_lm();
  const auto& data = testutil::small_paired(Strategy::top_k);
  const auto scores = testutil::score_all(data);
  for (DetectorKind kind :
       {DetectorKind::bow, DetectorKind::hist4, DetectorKind::hist50, DetectorKind::totalprob, DetectorKind::combined}) {
    CAPTURE(to_string(kind));
    const auto det = train_detector(kind, data, scores, lm.vocab);
    const auto probs = predict_all(det, data, scores, lm.vocab);
    std::vector<Label> labels;
    for (const auto& e : data) labels.push_back(e.label);
    CHECK(auc(probs, labels) > 0.6);
    for (double p : probs) CHECK((p >= 0.0 && p <= 1.0));
    const auto path = (std::filesystem::temp_directory_path() / "gendet_test_detector.json").string();
    save_detector(path, det);
    const auto back = load_detector(path);
    CHECK(back.kind == kind);
    CHECK(back.dims() == det.dims());
    const auto probs2 = predict_all(back, data, scores, lm.vocab);
    for (std::size_t i = 0; i < probs.size(); ++i) CHECK(probs2[i] == doctest::Approx(probs[i]).epsilon(1e-12));
    CHECK(parse_detector_kind(to_string(kind)) == kind);
  }
  auto other = Vocab::from_entries({"<unk>", "<bot>", "<eot>", "x"});
  const auto det = train_detector(DetectorKind::hist4, data, scores, lm.vocab);
  CHECK_THROWS(predict_all(det, data, scores, other));
}

TEST_CASE("score alignment cuts and verifies streams") {
  const auto& data = testutil::small_paired(Strategy::nucleus);
  const auto index = index_scores(testutil::score_all(data));
  const auto short_set = truncate_to_length(data, 8, testutil::kSmallLen, testutil::small_lm().vocab);
  const auto aligned = align_scores(short_set, index);
  REQUIRE(aligned.size() == short_set.size());
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    CHECK(aligned[i].id == short_set[i].id);
    CHECK(aligned[i].positions.size() == short_set[i].tokens.size() - short_set[i].priming_length());
  }
  auto bad = short_set;
  bad[0].tokens[1] = bad[0].tokens[1] == 5 ? 6 : 5;
  CHECK_THROWS(align_scores(bad, index));
  auto missing = short_set;
  missing[0].id = "nope";
  CHECK_THROWS(align_scores(missing, index));
}
