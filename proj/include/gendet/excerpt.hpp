#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "gendet/vocab.hpp"

namespace gendet {

enum class Label { human, machine };
enum class Strategy { untruncated, top_k, nucleus };
enum class Priming { nocond, one_word };

std::string_view to_string(Label l);
std::string_view to_string(Strategy s);
std::string_view to_string(Priming p);
Label parse_label(std::string_view s);
// Accepts the file spellings ("top_k", "nucleus", "untruncated") and the CLI
// spellings ("topk", "random").
Strategy parse_strategy(std::string_view s);
Priming parse_priming(std::string_view s);  // "nocond" | "1wordcond"

inline constexpr Strategy kAllStrategies[] = {Strategy::top_k, Strategy::nucleus, Strategy::untruncated};

// A labeled token sequence with provenance. For 1wordcond excerpts tokens[0]
// is the priming token; it is not scored and not counted as generated.
struct Excerpt {
  std::string id;
  TokenSeq tokens;
  std::string text;
  Label label = Label::human;
  std::optional<Strategy> strategy;  // present iff label == machine
  Priming priming = Priming::nocond;
  std::optional<std::string> pair_id;
  std::optional<std::uint64_t> seed;  // generation seed, machine excerpts only

  std::size_t priming_length() const { return priming == Priming::one_word ? 1 : 0; }
  bool operator==(const Excerpt&) const = default;
};

}  // namespace gendet
