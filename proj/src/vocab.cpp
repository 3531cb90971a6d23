#include "gendet/vocab.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "gendet/tokenizer.hpp"

namespace gendet {

namespace {
const char* const kReservedNames[kNumReserved] = {"<unk>", "<bot>", "<eot>"};
}

Vocab Vocab::build(std::span<const std::string> documents, int max_size, int min_count) {
  if (documents.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  if (max_size < kNumReserved + 1) throw std::invalid_argument("build_vocab: max_size must be >= 4");

  std::unordered_map<std::string, std::int64_t> freq;
  for (const auto& doc : documents)
    for (auto& w : split_words(doc)) ++freq[std::move(w)];

  std::vector<std::pair<std::string, std::int64_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  std::vector<std::string> entries(kReservedNames, kReservedNames + kNumReserved);
  // <unk> counts the dropped occurrences; <bot> and <eot> one per document.
  const auto n_docs = static_cast<std::int64_t>(documents.size());
  std::vector<std::int64_t> counts{0, n_docs, n_docs};
  for (const auto& [word, c] : ranked) {
    if (static_cast<int>(entries.size()) < max_size && c >= min_count) {
      entries.push_back(word);
      counts.push_back(c);
    } else {
      counts[kUnk] += c;
    }
  }
  return from_entries(std::move(entries), std::move(counts));
}

Vocab Vocab::from_entries(std::vector<std::string> entries, std::vector<std::int64_t> counts) {
  if (entries.size() < static_cast<std::size_t>(kNumReserved))
    throw std::invalid_argument("vocab: missing reserved entries");
  for (int i = 0; i < kNumReserved; ++i)
    if (entries[static_cast<std::size_t>(i)] != kReservedNames[i])
      throw std::invalid_argument("vocab: reserved entries out of place");
  if (counts.empty()) counts.assign(entries.size(), 0);
  if (counts.size() != entries.size()) throw std::invalid_argument("vocab: counts/entries size mismatch");

  Vocab v;
  v.entries_ = std::move(entries);
  v.counts_ = std::move(counts);
  v.index_.reserve(v.entries_.size());
  for (std::size_t i = 0; i < v.entries_.size(); ++i) {
    if (!v.index_.emplace(v.entries_[i], static_cast<TokenId>(i)).second)
      throw std::invalid_argument("vocab: duplicate entry '" + v.entries_[i] + "'");
  }
  return v;
}

TokenId Vocab::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view word) const { return index_.count(std::string(word)) > 0; }

std::uint64_t Vocab::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& e : entries_) {
    for (unsigned char c : e) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;  // entry separator
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gendet
