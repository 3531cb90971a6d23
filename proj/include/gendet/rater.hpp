#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gendet/excerpt.hpp"

namespace gendet {

enum class VoteOption { definitely_machine, possibly_machine, possibly_human, definitely_human };
inline constexpr VoteOption kAllVoteOptions[] = {VoteOption::definitely_machine, VoteOption::possibly_machine,
                                                 VoteOption::possibly_human, VoteOption::definitely_human};
std::string_view to_string(VoteOption o);
// Exact spelling only; throws otherwise.
VoteOption parse_vote_option(std::string_view s);
// definitely/possibly X -> X.
Label collapse(VoteOption o);

struct VoteRecord {
  std::string session_id;
  std::string rater;
  std::string item_id;
  int step = 0;
  VoteOption option = VoteOption::possibly_human;
  std::int64_t timestamp_ms = 0;
};

struct ItemTruth {
  std::string item_id;
  Label label = Label::human;
  std::optional<Strategy> strategy;
  bool honeypot = false;
  std::optional<VoteOption> instructed;
  // Class a final vote is scored against: the instructed option's class for
  // honeypots, the true label otherwise.
  Label scoring_label() const { return instructed ? collapse(*instructed) : label; }
};

struct AnnotationExport {
  std::vector<int> reveal_lengths;
  std::vector<ItemTruth> items;
  std::vector<VoteRecord> votes;
};
AnnotationExport parse_annotation_export(const std::string& text);

// One rater's complete pass over one item: collapsed guess at every step.
struct Judgment {
  std::string session_id;
  std::string item_id;
  std::vector<Label> guesses;
  Label final_guess() const { return guesses.back(); }
};
// Groups votes by (session, item) and keeps only sequences that reached the
// last reveal step, with steps 0..n-1 each present once.
std::vector<Judgment> collect_judgments(const std::vector<VoteRecord>& votes, std::size_t n_steps);

struct ProportionCI {
  double value = 0.0, low = 0.0, high = 0.0;
  std::size_t n = 0;
};
// Wilson score interval at the given two-sided confidence level.
ProportionCI wilson_interval(double successes, std::size_t n, double confidence);

struct RaterAccuracy {
  // keyed by strategy name, plus "overall"
  std::map<std::string, ProportionCI> by_strategy;
  std::vector<ProportionCI> by_step;  // overall accuracy of the collapsed guess at each step, unpaired
  ProportionCI honeypot_pass;
};

// Every machine judgment of a strategy is paired with a randomly drawn human
// judgment; accuracy over the resulting balanced set is averaged over
// n_pairings draws, with an 80% Wilson interval at the per-pairing size.
// Honeypot items are excluded from accuracy and reported separately.
RaterAccuracy rater_accuracy(const std::vector<Judgment>& judgments, const std::vector<ItemTruth>& truths,
                             std::uint64_t pairing_seed, int n_pairings = 100, double confidence = 0.80);

// Fraction of agreeing final guesses over all pairs of judgments of the same item.
ProportionCI rater_agreement(const std::vector<Judgment>& judgments);

// First reveal length after which the collapsed guess never changes,
// histogrammed per true class: result[label][length] = count.
std::map<Label, std::map<int, std::size_t>> convergence_lengths(const std::vector<Judgment>& judgments,
                                                                const std::vector<ItemTruth>& truths,
                                                                const std::vector<int>& reveal_lengths);
int convergence_length(const std::vector<Label>& guesses, const std::vector<int>& reveal_lengths);

// counts[length][option]
std::map<int, std::map<VoteOption, std::size_t>> vote_distribution(const std::vector<VoteRecord>& votes,
                                                                   const std::vector<int>& reveal_lengths);

void write_rater_metrics_csv(const std::string& path, const AnnotationExport& ex, std::uint64_t pairing_seed);

}  // namespace gendet
