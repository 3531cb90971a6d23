#include "gendet/excerpt.hpp"

#include <stdexcept>
#include <string>

namespace gendet {

std::string_view to_string(Label l) { return l == Label::human ? "human" : "machine"; }

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::untruncated: return "untruncated";
    case Strategy::top_k: return "top_k";
    case Strategy::nucleus: return "nucleus";
  }
  return "?";
}

std::string_view to_string(Priming p) { return p == Priming::nocond ? "nocond" : "1wordcond"; }

Label parse_label(std::string_view s) {
  if (s == "human") return Label::human;
  if (s == "machine") return Label::machine;
  throw std::invalid_argument("unknown label '" + std::string(s) + "'");
}

Strategy parse_strategy(std::string_view s) {
  if (s == "top_k" || s == "topk") return Strategy::top_k;
  if (s == "nucleus") return Strategy::nucleus;
  if (s == "untruncated" || s == "random") return Strategy::untruncated;
  throw std::invalid_argument("unknown strategy '" + std::string(s) + "'");
}

Priming parse_priming(std::string_view s) {
  if (s == "nocond") return Priming::nocond;
  if (s == "1wordcond") return Priming::one_word;
  throw std::invalid_argument("unknown priming '" + std::string(s) + "'");
}

}  // namespace gendet
