#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gendet {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

inline constexpr TokenId kUnk = 0;
inline constexpr TokenId kBot = 1;
inline constexpr TokenId kEot = 2;
inline constexpr int kNumReserved = 3;

// Word-level vocabulary. Ids are dense in [0, size()); non-reserved ids are
// ordered by descending training-corpus count, ties by ascending string.
// The count of <unk> is the number of dropped occurrences; <bot> and <eot>
// count one per document.
class Vocab {
 public:
  Vocab() = default;

  // `documents` are raw texts; they are split with split_words().
  static Vocab build(std::span<const std::string> documents, int max_size, int min_count = 1);

  // Rebuild from an ordered entry list (reserved tokens first), e.g. when
  // loading a saved model. Counts are optional and default to zero.
  static Vocab from_entries(std::vector<std::string> entries,
                            std::vector<std::int64_t> counts = {});

  int size() const { return static_cast<int>(entries_.size()); }
  const std::string& token(TokenId id) const { return entries_.at(static_cast<std::size_t>(id)); }
  TokenId id(std::string_view word) const;  // kUnk when absent
  bool contains(std::string_view word) const;
  std::int64_t count(TokenId id) const { return counts_.at(static_cast<std::size_t>(id)); }

  const std::vector<std::string>& entries() const { return entries_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }

  // FNV-1a over the entry list; identifies the vocabulary in model files.
  std::uint64_t hash() const;

 private:
  std::vector<std::string> entries_;
  std::vector<std::int64_t> counts_;
  std::unordered_map<std::string, TokenId> index_;
};

std::string hash_hex(std::uint64_t h);

}  // namespace gendet
