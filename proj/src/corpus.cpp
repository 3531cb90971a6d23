#include "gendet/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "gendet/rng.hpp"
#include "gendet/tokenizer.hpp"

namespace gendet {

std::vector<std::string> parse_corpus(std::string_view text) {
  std::vector<std::string> docs;
  std::string cur;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const bool blank = line.find_first_not_of(" \t") == std::string_view::npos;
    if (blank) {
      if (!cur.empty()) docs.push_back(std::move(cur));
      cur.clear();
    } else {
      if (!cur.empty()) cur.push_back('\n');
      cur.append(line);
    }
    pos = eol + 1;
  }
  if (!cur.empty()) docs.push_back(std::move(cur));
  return docs;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::vector<std::string> read_corpus(const std::string& path) { return parse_corpus(read_file(path)); }

std::uint64_t corpus_hash(const std::vector<std::string>& documents) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& d : documents) {
    for (unsigned char c : d) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0x1e;
    h *= 0x100000001b3ULL;
  }
  return h;
}

CorpusSplit split_corpus(std::size_t n_docs, double heldout_fraction, std::uint64_t seed) {
  if (heldout_fraction < 0.0 || heldout_fraction >= 1.0)
    throw std::invalid_argument("heldout fraction must be in [0, 1)");
  std::vector<std::size_t> order(n_docs);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x5eed));
  rng.shuffle(order.begin(), order.end());
  const auto n_held = static_cast<std::size_t>(std::llround(heldout_fraction * static_cast<double>(n_docs)));
  CorpusSplit split;
  split.heldout.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_held));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_held), order.end());
  std::sort(split.heldout.begin(), split.heldout.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

std::vector<TokenSeq> tokenize_documents(const std::vector<std::string>& documents,
                                         const std::vector<std::size_t>& indices,
                                         const Vocab& vocab) {
  std::vector<TokenSeq> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    TokenSeq seq{kBot};
    for (TokenId t : tokenize(documents.at(i), vocab)) seq.push_back(t);
    seq.push_back(kEot);
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace gendet
