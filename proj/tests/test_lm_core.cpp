#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <sstream>

#include "gendet/corpus.hpp"
#include "gendet/lm.hpp"
#include "gendet/rng.hpp"
#include "gendet/tokenizer.hpp"
#include "test_util.hpp"

using namespace gendet;

namespace {

std::vector<std::string> words(const Vocab& v) {
  return {v.entries().begin() + kNumReserved, v.entries().end()};
}

// Normalizes case and whitespace, for round-trip comparison.
std::string squash(const std::string& s) {
  std::string out;
  for (unsigned char c : s)
    if (!std::isspace(c)) out.push_back(static_cast<char>(std::tolower(c)));
  return out;
}

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("gendet_test_" + name)).string();
}

}  // namespace

TEST_CASE("build_vocab orders by count and cuts at max_size") {
  const std::vector<std::string> docs{"a a b"};
  auto v = Vocab::build(docs, 10, 1);
  CHECK(v.entries() == std::vector<std::string>{"<unk>", "<bot>", "<eot>", "a", "b"});
  v = Vocab::build(docs, 4, 1);
  CHECK(v.entries() == std::vector<std::string>{"<unk>", "<bot>", "<eot>", "a"});
  CHECK(v.id("b") == kUnk);

  CHECK_THROWS_AS(Vocab::build(std::vector<std::string>{}, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(Vocab::build(docs, 3, 1), std::invalid_argument);
}

TEST_CASE("build_vocab respects min_count and ties by string") {
  const std::vector<std::string> docs{"c b a c b a d"};
  const auto v = Vocab::build(docs, 100, 2);
  CHECK(words(v) == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("1 MB corpus: 5000 entries and word counts match a one-pass count") {
  const auto docs = testutil::leading_docs(1 << 20);
  const auto v = Vocab::build(docs, 5000, 1);
  REQUIRE(v.size() == 5000);

  // Independent count: blank out everything but letters, digits and
  // apostrophes, split on whitespace, then trim apostrophes off both ends.
  std::map<std::string, std::int64_t> counts;
  for (const auto& d : docs) {
    std::string clean;
    for (unsigned char c : d) clean.push_back(std::isalnum(c) || c == '\'' || c >= 0x80 ? static_cast<char>(std::tolower(c)) : ' ');
    std::istringstream in(clean);
    std::string w;
    while (in >> w) {
      std::size_t b = 0, e = w.size();
      while (b < e && w[b] == '\'') ++b;
      while (e > b && w[e - 1] == '\'') --e;
      if (e > b) ++counts[w.substr(b, e - b)];
    }
  }
  CHECK(v.count(v.id("the")) == counts["the"]);
  CHECK(v.count(v.id("and")) == counts["and"]);
  CHECK(v.id("the") < kNumReserved + 10);

  for (TokenId i = kNumReserved + 1; i < v.size(); ++i) CHECK(v.count(i - 1) >= v.count(i));
  for (TokenId i = 0; i < v.size(); ++i) CHECK(v.id(v.token(i)) == i);
}

TEST_CASE("tokenize lowercases and maps unknown words to UNK") {
  const auto v = Vocab::build(std::vector<std::string>{"a a b"}, 10, 1);
  CHECK(tokenize("A a", v) == TokenSeq{v.id("a"), v.id("a")});
  CHECK(tokenize("a zzz", v) == TokenSeq{v.id("a"), kUnk});
  CHECK(tokenize("", v).empty());
  CHECK(split_words("O'er the hill, sir--") ==
        std::vector<std::string>{"o'er", "the", "hill", ",", "sir", "-", "-"});
}

TEST_CASE("detokenize(tokenize(s)) equals s up to case and whitespace on 100 documents") {
  const auto& docs = testutil::sample_docs();
  const auto v = Vocab::build(docs, 1 << 20, 1);  // every word type, so no UNK
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const auto& d = docs[rng.below(docs.size())];
    CHECK(squash(detokenize(tokenize(d, v), v)) == squash(d));
  }
}

TEST_CASE("token_end_offsets splits detokenized text back into its tokens") {
  const auto& lm = testutil::small_lm();
  for (int i = 0; i < 50; ++i) {
    const auto toks = tokenize(testutil::small_docs()[static_cast<std::size_t>(i)], lm.vocab);
    const auto text = detokenize(toks, lm.vocab);
    const auto ends = token_end_offsets(text);
    REQUIRE(ends.size() == toks.size());
    for (std::size_t k = 0; k < toks.size(); k += 7) {
      const TokenSeq prefix(toks.begin(), toks.begin() + static_cast<std::ptrdiff_t>(k + 1));
      CHECK(text.substr(0, ends[k]) == detokenize(prefix, lm.vocab));
    }
  }
}

TEST_CASE("train_ngram: single observation and validation") {
  // ids: 3 = "a", 4 = "b"
  const std::vector<TokenSeq> docs{{kBot, 3, 4, kEot}};
  const auto m = NGramModel::train(docs, 5, 2, 0.01);
  const TokenId ctx[] = {3};
  const auto d = m.next_distribution(ctx);
  CHECK(std::max_element(d.probs.begin(), d.probs.end()) - d.probs.begin() == 4);
  CHECK(d.valid());

  CHECK_THROWS_AS(NGramModel::train(docs, 5, 0, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(NGramModel::train(docs, 5, 2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(NGramModel::train(docs, 5, 2, -1.0), std::invalid_argument);
}

TEST_CASE("large alpha approaches uniform; empty context is the unigram add-alpha distribution") {
  const std::vector<TokenSeq> docs{{kBot, 3, 4, 3, 5, kEot}, {kBot, 4, 4, kEot}};
  const auto big = NGramModel::train(docs, 6, 3, 1e9);
  const TokenId ctx[] = {3, 4};
  for (double p : big.next_distribution(ctx).probs) CHECK(p == doctest::Approx(1.0 / 6).epsilon(1e-6));

  const double alpha = 0.5;
  const auto m = NGramModel::train(docs, 6, 3, alpha);
  // counts after the leading BOT of each document: 3:2 4:3 5:1 eot:2, N = 8
  const double c[] = {0, 0, 2, 2, 3, 1};
  const auto uni = m.next_distribution({});
  for (int w = 0; w < 6; ++w) CHECK(uni[static_cast<std::size_t>(w)] == doctest::Approx((c[w] + alpha) / (8 + alpha * 6)));
}

TEST_CASE("distributions sum to one and are bit-identical on repeat") {
  const auto& lm = testutil::small_lm();
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    TokenSeq ctx;
    const auto n = rng.below(4);
    for (std::uint64_t j = 0; j < n; ++j) ctx.push_back(static_cast<TokenId>(rng.below(static_cast<std::uint64_t>(lm.vocab.size()))));
    const auto d = lm.ngram.next_distribution(ctx);
    CHECK(d.valid(1e-9));
    CHECK(d == lm.ngram.next_distribution(ctx));
  }
}

TEST_CASE("held-out log-likelihood: order 3 beats order 1") {
  const auto docs = testutil::leading_docs(1 << 20);
  const auto split = split_corpus(docs.size(), 0.2, 3);
  std::vector<std::string> train_docs;
  for (auto i : split.train) train_docs.push_back(docs[i]);
  const auto v = Vocab::build(train_docs, 5000, 1);
  const auto train = tokenize_documents(docs, split.train, v);
  const auto held = tokenize_documents(docs, split.heldout, v);
  auto mean_ll = [&](int order) {
    const auto m = NGramModel::train(train, v.size(), order, 0.01);
    double ll = 0;
    std::size_t n = 0;
    for (const auto& d : held) {
      const std::span<const TokenId> body(d.data() + 1, d.size() - 1);
      ll += m.sequence_logprob(body);
      n += body.size();
    }
    return ll / static_cast<double>(n);
  };
  CHECK(mean_ll(3) > mean_ll(1));
}

TEST_CASE("sequence_logprob: unigram example, chain rule and agreement with score") {
  // p(3) = (4 + 1) / (6 + 4) = 0.5 under order 1, alpha 1, V 4
  const std::vector<TokenSeq> docs{{kBot, 3, 3, 3, 3, 2, 2}};
  const auto uni = NGramModel::train(docs, 4, 1, 1.0);
  const TokenId t[] = {3};
  CHECK(uni.sequence_logprob(t) == doctest::Approx(std::log(0.5)).epsilon(1e-14));
  CHECK_THROWS_AS(uni.sequence_logprob(std::span<const TokenId>{}), std::invalid_argument);

  const auto& lm = testutil::small_lm();
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const auto toks = tokenize(testutil::small_docs()[rng.below(testutil::small_docs().size())], lm.vocab);
    REQUIRE(toks.size() >= 20);
    const std::size_t cut = 1 + rng.below(18);
    const std::span<const TokenId> all(toks.data(), 20);
    TokenSeq prefix{kBot};
    prefix.insert(prefix.end(), toks.begin(), toks.begin() + static_cast<std::ptrdiff_t>(cut));
    const double whole = lm.ngram.sequence_logprob(all);
    const double parts = lm.ngram.sequence_logprob(all.first(cut)) + lm.ngram.sequence_logprob(all.subspan(cut, 20 - cut), prefix);
    CHECK(whole == doctest::Approx(parts).epsilon(1e-12));
    CHECK(std::isfinite(whole));
  }

  const auto toks = tokenize(testutil::small_docs()[3], lm.vocab);
  const std::span<const TokenId> ten(toks.data(), 10);
  const auto scored = lm.ngram.score(ten, 0, "x");
  REQUIRE(scored.positions.size() == 10);
  double sum = 0;
  for (const auto& p : scored.positions) sum += p.logprob;
  CHECK(sum == doctest::Approx(lm.ngram.sequence_logprob(ten)).epsilon(1e-12));
}

TEST_CASE("rank_of matches a full-sort oracle on 1000 cases") {
  const auto& lm = testutil::small_lm();
  Rng rng(21);
  const int V = lm.vocab.size();
  for (int i = 0; i < 1000; ++i) {
    TokenSeq ctx;
    const auto n = rng.below(3);
    for (std::uint64_t j = 0; j < n; ++j) ctx.push_back(static_cast<TokenId>(rng.below(static_cast<std::uint64_t>(V))));
    const auto tok = static_cast<TokenId>(rng.below(static_cast<std::uint64_t>(V)));
    const auto d = lm.ngram.next_distribution(ctx);
    std::vector<TokenId> order(static_cast<std::size_t>(V));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
      return d[static_cast<std::size_t>(a)] != d[static_cast<std::size_t>(b)] ? d[static_cast<std::size_t>(a)] > d[static_cast<std::size_t>(b)] : a < b;
    });
    const int oracle = static_cast<int>(std::find(order.begin(), order.end(), tok) - order.begin()) + 1;
    CHECK(lm.ngram.rank_of(ctx, tok) == oracle);
    CHECK(lm.ngram.rank_of(ctx, order.front()) == 1);
  }
  // Uniform distribution: rank of t is t + 1.
  const std::vector<double> uniform(20, 0.05);
  for (TokenId t = 0; t < 20; ++t) CHECK(rank_in(uniform, t) == t + 1);
}

TEST_CASE("score: stream length is excerpt length minus priming") {
  const auto& lm = testutil::small_lm();
  const auto toks = tokenize(testutil::small_docs()[1], lm.vocab);
  const std::span<const TokenId> s(toks.data(), 30);
  CHECK(lm.ngram.score(s, 0, "a").positions.size() == 30);
  const auto primed = lm.ngram.score(s, 1, "b");
  CHECK(primed.positions.size() == 29);
  CHECK(primed.positions.front().token == toks[1]);
  for (const auto& p : primed.positions) {
    CHECK(p.logprob <= 0.0);
    CHECK(p.rank >= 1);
    CHECK(p.rank <= lm.vocab.size());
  }
}

TEST_CASE("LM and score-stream files round-trip") {
  const auto& lm = testutil::small_lm();
  const auto path = tmp_path("lm.json");
  save_language_model(path, lm);
  const auto back = load_language_model(path);
  CHECK(back.vocab.entries() == lm.vocab.entries());
  CHECK(back.vocab.hash() == lm.vocab.hash());
  const TokenId ctx[] = {kBot, 7};
  CHECK(back.ngram.next_distribution(ctx) == lm.ngram.next_distribution(ctx));
  CHECK(heldout_documents(testutil::small_docs(), back.provenance) ==
        heldout_documents(testutil::small_docs(), lm.provenance));
  CHECK_THROWS(heldout_documents(testutil::leading_docs(1000), lm.provenance));

  const auto toks = tokenize(testutil::small_docs()[2], lm.vocab);
  const auto s = lm.ngram.score(toks, 0, "doc-2");
  const auto spath = tmp_path("scores.jsonl");
  save_scored_streams(spath, {s});
  const auto loaded = load_scored_streams(spath);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].id == "doc-2");
  REQUIRE(loaded[0].positions.size() == s.positions.size());
  for (std::size_t i = 0; i < s.positions.size(); ++i) {
    CHECK(loaded[0].positions[i].token == s.positions[i].token);
    CHECK(loaded[0].positions[i].rank == s.positions[i].rank);
    CHECK(loaded[0].positions[i].logprob == s.positions[i].logprob);
  }
  CHECK_THROWS(scored_stream_from_line(R"({"id":"x","positions":[{"t":1,"lp":0.5,"r":1}]})"));
  std::filesystem::remove(path);
  std::filesystem::remove(spath);
}

TEST_CASE("corpus parsing and split") {
  const auto docs = parse_corpus("one doc\nline two\n\n\n second doc \n\nthird\n");
  REQUIRE(docs.size() == 3);
  CHECK(docs[0] == "one doc\nline two");
  const auto s = split_corpus(100, 0.4, 7);
  CHECK(s.heldout.size() == 40);
  CHECK(s.train.size() == 60);
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.heldout.begin(), s.heldout.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 100; ++i) CHECK(all[i] == i);
  CHECK(split_corpus(100, 0.4, 7).heldout == s.heldout);
}
