#include "gendet/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace gendet {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

}  // namespace

LabeledSet mix_labeled(const std::vector<LabeledSet>& sets, std::uint64_t seed) {
  std::vector<Dataset> data;
  ScoreIndex idx;
  for (const auto& s : sets) {
    data.push_back(s.data);
    for (const auto& sc : s.scores) idx.emplace(sc.id, sc);
  }
  LabeledSet out;
  out.data = mix_datasets(data, seed);
  out.scores = align_scores(out.data, idx);
  return out;
}

TransferMatrix transfer_matrix(const DetectorFactory& factory, const std::map<Strategy, LabeledSet>& train,
                               const std::map<Strategy, LabeledSet>& test, const Vocab& vocab, bool mixed,
                               std::uint64_t mix_seed) {
  TransferMatrix m;
  for (const auto& [s, _] : test) m.cols.emplace_back(to_string(s));

  auto add_row = [&](const std::string& name, const LabeledSet& tr) {
    const Detector d = factory(tr);
    m.rows.push_back(name);
    auto& acc = m.accuracy.emplace_back();
    auto& avg = m.avg_prob.emplace_back();
    auto& rep = m.reports.emplace_back();
    for (const auto& [s, te] : test) {
      rep.push_back(evaluate(d, te, vocab, std::string(to_string(d.kind)) + "/" + name));
      acc.push_back(rep.back().accuracy);
      avg.push_back(rep.back().avg_machine_prob);
    }
  };
  for (const auto& [s, tr] : train) add_row(std::string(to_string(s)), tr);
  if (mixed) {
    std::vector<LabeledSet> sets;
    for (const auto& [s, tr] : train) sets.push_back(tr);
    add_row("mixed", mix_labeled(sets, mix_seed));
  }
  return m;
}

void write_transfer_csv(const std::string& path, const TransferMatrix& m) {
  auto out = open_csv(path);
  out << "train,eval,accuracy,avg_prob\n";
  for (std::size_t r = 0; r < m.rows.size(); ++r)
    for (std::size_t c = 0; c < m.cols.size(); ++c)
      out << m.rows[r] << ',' << m.cols[c] << ',' << fmt(m.accuracy[r][c]) << ',' << fmt(m.avg_prob[r][c]) << '\n';
}

std::vector<LengthPoint> length_curve(const DetectorFactory& factory, const std::map<int, LabeledSet>& train,
                                      const std::map<int, LabeledSet>& test, const Vocab& vocab) {
  std::vector<LengthPoint> out;
  for (const auto& [len, tr] : train) {
    auto it = test.find(len);
    if (it == test.end()) throw std::invalid_argument("length_curve: no test set for length " + std::to_string(len));
    out.push_back({len, evaluate(factory(tr), it->second, vocab)});
  }
  return out;
}

void write_length_curve_csv(const std::string& path, const std::vector<LengthCurveRow>& rows) {
  auto out = open_csv(path);
  out << "strategy,priming,length,accuracy,auc\n";
  for (const auto& r : rows)
    out << r.strategy << ',' << r.priming << ',' << r.length << ',' << fmt(r.accuracy) << ',' << fmt(r.auc) << '\n';
}

std::vector<TokenId> frequency_order(const Vocab& vocab) {
  std::vector<TokenId> ids(static_cast<std::size_t>(vocab.size()));
  std::iota(ids.begin(), ids.end(), 0);
  std::stable_sort(ids.begin(), ids.end(), [&](TokenId a, TokenId b) { return vocab.count(a) > vocab.count(b); });
  return ids;
}

std::vector<double> first_token_concentration(const Dataset& excerpts, const Vocab& vocab,
                                              const std::vector<int>& ms) {
  const auto order = frequency_order(vocab);
  std::vector<int> rank_of(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank_of[static_cast<std::size_t>(order[r])] = static_cast<int>(r);

  std::vector<int> first_ranks;
  for (const auto& e : excerpts) {
    const std::size_t at = e.label == Label::machine ? e.priming_length() : 0;
    if (at >= e.tokens.size()) continue;
    const TokenId t = e.tokens[at];
    if (t < 0 || t >= vocab.size()) throw std::invalid_argument("first_token_concentration: token outside vocabulary");
    first_ranks.push_back(rank_of[static_cast<std::size_t>(t)]);
  }
  if (first_ranks.empty()) throw std::invalid_argument("first_token_concentration: no excerpts");
  std::sort(first_ranks.begin(), first_ranks.end());

  std::vector<double> out;
  out.reserve(ms.size());
  for (int m : ms) {
    const auto covered = std::lower_bound(first_ranks.begin(), first_ranks.end(), m) - first_ranks.begin();
    out.push_back(static_cast<double>(covered) / static_cast<double>(first_ranks.size()));
  }
  return out;
}

std::vector<int> concentration_grid(int vocab_size) {
  std::vector<int> ms;
  for (int scale = 1; scale < vocab_size; scale *= 10)
    for (int f : {1, 2, 5})
      if (f * scale < vocab_size) ms.push_back(f * scale);
  for (int extra : {100, 200, 300, 400, 500, 600, 700, 800, 900})
    if (extra < vocab_size) ms.push_back(extra);
  ms.push_back(vocab_size);
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
  return ms;
}

void write_concentration_csv(const std::string& path, const std::vector<ConcentrationRow>& rows) {
  auto out = open_csv(path);
  out << "source,m,fraction\n";
  for (const auto& r : rows) out << r.source << ',' << r.m << ',' << fmt(r.fraction) << '\n';
}

MeanKt mean_kt_per_position(const std::vector<NucleusTrace>& traces) {
  MeanKt out;
  for (const auto& t : traces) {
    if (t.k_per_step.size() > out.mean.size()) {
      out.mean.resize(t.k_per_step.size(), 0.0);
      out.count.resize(t.k_per_step.size(), 0);
    }
    for (std::size_t i = 0; i < t.k_per_step.size(); ++i) {
      out.mean[i] += t.k_per_step[i];
      ++out.count[i];
    }
  }
  for (std::size_t i = 0; i < out.mean.size(); ++i) out.mean[i] /= static_cast<double>(out.count[i]);
  return out;
}

std::vector<GenerationTrace> read_traces(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<GenerationTrace> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    out.push_back({j.at("id").get<std::string>(), {j.at("k").get<std::vector<int>>()}});
  }
  return out;
}

void write_traces(const std::string& path, const std::vector<GenerationTrace>& traces) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& t : traces) out << nlohmann::json{{"id", t.id}, {"k", t.trace.k_per_step}}.dump() << '\n';
}

}  // namespace gendet
