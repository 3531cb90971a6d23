#include "gendet/rater.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "gendet/rng.hpp"

namespace gendet {

using nlohmann::json;

std::string_view to_string(VoteOption o) {
  switch (o) {
    case VoteOption::definitely_machine: return "definitely_machine";
    case VoteOption::possibly_machine: return "possibly_machine";
    case VoteOption::possibly_human: return "possibly_human";
    case VoteOption::definitely_human: return "definitely_human";
  }
  return "?";
}

VoteOption parse_vote_option(std::string_view s) {
  for (VoteOption o : kAllVoteOptions)
    if (s == to_string(o)) return o;
  throw std::invalid_argument("unknown vote option '" + std::string(s) + "'");
}

Label collapse(VoteOption o) {
  return o == VoteOption::definitely_machine || o == VoteOption::possibly_machine ? Label::machine : Label::human;
}

AnnotationExport parse_annotation_export(const std::string& text) {
  AnnotationExport ex;
  std::istringstream in(text);
  std::string line;
  bool saw_study = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = json::parse(line);
    const auto type = j.at("type").get<std::string>();
    if (type == "study") {
      ex.reveal_lengths = j.at("reveal_lengths").get<std::vector<int>>();
      saw_study = true;
    } else if (type == "item") {
      ItemTruth t;
      t.item_id = j.at("item_id").get<std::string>();
      t.label = parse_label(j.at("label").get<std::string>());
      if (!j.at("strategy").is_null()) t.strategy = parse_strategy(j.at("strategy").get<std::string>());
      t.honeypot = j.at("honeypot").get<bool>();
      if (!j.at("instructed").is_null()) t.instructed = parse_vote_option(j.at("instructed").get<std::string>());
      ex.items.push_back(std::move(t));
    } else if (type == "vote") {
      VoteRecord v;
      v.session_id = j.at("session_id").get<std::string>();
      v.rater = j.at("rater").get<std::string>();
      v.item_id = j.at("item_id").get<std::string>();
      v.step = j.at("step").get<int>();
      v.option = parse_vote_option(j.at("option").get<std::string>());
      v.timestamp_ms = j.at("ts").get<std::int64_t>();
      ex.votes.push_back(std::move(v));
    } else {
      throw std::runtime_error("export: unknown record type '" + type + "'");
    }
  }
  if (!saw_study) throw std::runtime_error("export: missing study record");
  return ex;
}

std::vector<Judgment> collect_judgments(const std::vector<VoteRecord>& votes, std::size_t n_steps) {
  std::vector<Judgment> out;
  std::unordered_map<std::string, std::size_t> where;
  std::vector<std::vector<int>> seen;
  for (const auto& v : votes) {
    const std::string key = v.session_id + '\x1f' + v.item_id;
    auto [it, fresh] = where.try_emplace(key, out.size());
    if (fresh) {
      out.push_back({v.session_id, v.item_id, std::vector<Label>(n_steps, Label::human)});
      seen.emplace_back(n_steps, 0);
    }
    if (v.step < 0 || static_cast<std::size_t>(v.step) >= n_steps) continue;
    out[it->second].guesses[static_cast<std::size_t>(v.step)] = collapse(v.option);
    ++seen[it->second][static_cast<std::size_t>(v.step)];
  }
  std::vector<Judgment> complete;
  for (std::size_t i = 0; i < out.size(); ++i) {
    bool ok = n_steps > 0;
    for (int c : seen[i]) ok = ok && c == 1;
    if (ok) complete.push_back(std::move(out[i]));
  }
  return complete;
}

ProportionCI wilson_interval(double successes, std::size_t n, double confidence) {
  ProportionCI ci;
  ci.n = n;
  if (n == 0) return ci;
  const double nn = static_cast<double>(n);
  const double p = successes / nn;
  // two-sided normal quantile via inverse erf (Newton on erf)
  const double target = confidence;
  double x = 1.0;
  for (int i = 0; i < 50; ++i) {
    const double f = std::erf(x / std::sqrt(2.0)) - target;
    const double df = std::sqrt(2.0 / M_PI) * std::exp(-x * x / 2.0);
    x -= f / df;
  }
  const double z = x;
  const double denom = 1.0 + z * z / nn;
  const double centre = (p + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
  ci.value = p;
  ci.low = std::max(0.0, centre - half);
  ci.high = std::min(1.0, centre + half);
  return ci;
}

namespace {

std::unordered_map<std::string, const ItemTruth*> truth_index(const std::vector<ItemTruth>& truths) {
  std::unordered_map<std::string, const ItemTruth*> idx;
  for (const auto& t : truths) idx.emplace(t.item_id, &t);
  return idx;
}

const ItemTruth& truth_of(const std::unordered_map<std::string, const ItemTruth*>& idx, const std::string& id) {
  auto it = idx.find(id);
  if (it == idx.end()) throw std::invalid_argument("no ground truth for item '" + id + "'");
  return *it->second;
}

}  // namespace

RaterAccuracy rater_accuracy(const std::vector<Judgment>& judgments, const std::vector<ItemTruth>& truths,
                             std::uint64_t pairing_seed, int n_pairings, double confidence) {
  if (n_pairings < 1) throw std::invalid_argument("rater_accuracy: need at least one pairing");
  const auto idx = truth_index(truths);
  RaterAccuracy out;

  std::vector<bool> human_correct;
  std::map<std::string, std::vector<bool>> machine_correct;
  double honey_ok = 0.0;
  std::size_t honey_n = 0;
  std::size_t n_steps = 0;
  for (const auto& j : judgments) n_steps = std::max(n_steps, j.guesses.size());
  std::vector<double> step_ok(n_steps, 0.0);
  std::vector<std::size_t> step_n(n_steps, 0);

  for (const auto& j : judgments) {
    const ItemTruth& t = truth_of(idx, j.item_id);
    if (t.honeypot) {
      honey_ok += j.final_guess() == t.scoring_label();
      ++honey_n;
      continue;
    }
    for (std::size_t s = 0; s < j.guesses.size(); ++s) {
      step_ok[s] += j.guesses[s] == t.label;
      ++step_n[s];
    }
    const bool ok = j.final_guess() == t.label;
    if (t.label == Label::human) {
      human_correct.push_back(ok);
    } else {
      const std::string s = t.strategy ? std::string(to_string(*t.strategy)) : "unknown";
      machine_correct[s].push_back(ok);
      machine_correct["overall"].push_back(ok);
    }
  }
  for (std::size_t s = 0; s < n_steps; ++s) out.by_step.push_back(wilson_interval(step_ok[s], step_n[s], confidence));
  out.honeypot_pass = wilson_interval(honey_ok, honey_n, confidence);
  if (human_correct.empty()) return out;

  Rng rng(derive_seed(pairing_seed, 0x7a1));
  for (const auto& [name, mc] : machine_correct) {
    double total = 0.0;
    for (int p = 0; p < n_pairings; ++p) {
      double ok = 0.0;
      for (bool m : mc) ok += m + human_correct[rng.below(human_correct.size())];
      total += ok / (2.0 * static_cast<double>(mc.size()));
    }
    const double mean = total / n_pairings;
    const std::size_t n = 2 * mc.size();
    auto ci = wilson_interval(mean * static_cast<double>(n), n, confidence);
    ci.value = mean;
    out.by_strategy[name] = ci;
  }
  return out;
}

ProportionCI rater_agreement(const std::vector<Judgment>& judgments) {
  std::map<std::string, std::vector<Label>> by_item;
  for (const auto& j : judgments) by_item[j.item_id].push_back(j.final_guess());
  double agree = 0.0;
  std::size_t pairs = 0;
  for (const auto& [_, g] : by_item)
    for (std::size_t a = 0; a < g.size(); ++a)
      for (std::size_t b = a + 1; b < g.size(); ++b) {
        agree += g[a] == g[b];
        ++pairs;
      }
  return wilson_interval(agree, pairs, 0.80);
}

int convergence_length(const std::vector<Label>& guesses, const std::vector<int>& reveal_lengths) {
  if (guesses.empty() || guesses.size() > reveal_lengths.size())
    throw std::invalid_argument("convergence_length: guesses do not fit the reveal schedule");
  std::size_t s = guesses.size() - 1;
  while (s > 0 && guesses[s - 1] == guesses.back()) --s;
  return reveal_lengths[s];
}

std::map<Label, std::map<int, std::size_t>> convergence_lengths(const std::vector<Judgment>& judgments,
                                                                const std::vector<ItemTruth>& truths,
                                                                const std::vector<int>& reveal_lengths) {
  const auto idx = truth_index(truths);
  std::map<Label, std::map<int, std::size_t>> out;
  for (const auto& j : judgments) {
    const ItemTruth& t = truth_of(idx, j.item_id);
    if (t.honeypot) continue;
    ++out[t.label][convergence_length(j.guesses, reveal_lengths)];
  }
  return out;
}

std::map<int, std::map<VoteOption, std::size_t>> vote_distribution(const std::vector<VoteRecord>& votes,
                                                                   const std::vector<int>& reveal_lengths) {
  std::map<int, std::map<VoteOption, std::size_t>> out;
  for (int len : reveal_lengths)
    for (VoteOption o : kAllVoteOptions) out[len][o] = 0;
  for (const auto& v : votes) {
    if (v.step < 0 || static_cast<std::size_t>(v.step) >= reveal_lengths.size()) continue;
    ++out[reveal_lengths[static_cast<std::size_t>(v.step)]][v.option];
  }
  return out;
}

void write_rater_metrics_csv(const std::string& path, const AnnotationExport& ex, std::uint64_t pairing_seed) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  auto row = [&](const std::string& metric, const std::string& group, const std::string& key,
                 const ProportionCI& ci) {
    out << metric << ',' << group << ',' << key << ',' << num(ci.value) << ',' << num(ci.low) << ',' << num(ci.high)
        << ',' << ci.n << '\n';
  };
  auto count_row = [&](const std::string& metric, const std::string& group, const std::string& key,
                       std::size_t count) { out << metric << ',' << group << ',' << key << ',' << count << ",,,\n"; };
  out << "metric,group,key,value,ci_low,ci_high,n\n";

  const auto judgments = collect_judgments(ex.votes, ex.reveal_lengths.size());
  const auto acc = rater_accuracy(judgments, ex.items, pairing_seed);
  for (const auto& [name, ci] : acc.by_strategy) row("accuracy", name, "final", ci);
  for (std::size_t s = 0; s < acc.by_step.size(); ++s)
    row("accuracy_by_length", "unpaired", std::to_string(ex.reveal_lengths[s]), acc.by_step[s]);
  row("honeypot_pass", "all", "final", acc.honeypot_pass);
  row("agreement", "all", "pairwise", rater_agreement(judgments));

  for (const auto& [label, hist] : convergence_lengths(judgments, ex.items, ex.reveal_lengths))
    for (const auto& [len, count] : hist)
      count_row("convergence", std::string(to_string(label)), std::to_string(len), count);
  for (const auto& [len, counts] : vote_distribution(ex.votes, ex.reveal_lengths))
    for (const auto& [opt, count] : counts)
      count_row("votes", std::to_string(len), std::string(to_string(opt)), count);
}

}  // namespace gendet
