#include "gendet/tokenizer.hpp"

#include <cctype>

namespace gendet {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

bool attaches_left(std::string_view w) {
  return w == "," || w == "." || w == ";" || w == ":" || w == "!" || w == "?" || w == ")" ||
         w == "]" || w == "}" || w == "%" || w == "-";
}

bool attaches_right(std::string_view w) { return w == "(" || w == "[" || w == "{" || w == "-"; }

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (is_word_byte(c)) {
      std::string word;
      while (i < n) {
        const auto d = static_cast<unsigned char>(text[i]);
        if (is_word_byte(d)) {
          word.push_back(static_cast<char>(std::tolower(d)));
          ++i;
        } else if (d == '\'' && i + 1 < n && is_word_byte(static_cast<unsigned char>(text[i + 1]))) {
          word.push_back('\'');
          ++i;
        } else {
          break;
        }
      }
      out.push_back(std::move(word));
    } else {
      out.emplace_back(1, static_cast<char>(c));
      ++i;
    }
  }
  return out;
}

TokenSeq tokenize(std::string_view text, const Vocab& vocab) {
  TokenSeq ids;
  for (const auto& w : split_words(text)) ids.push_back(vocab.id(w));
  return ids;
}

void append_detokenized(std::string& out, std::string_view prev, std::string_view word) {
  if (!out.empty() && !attaches_left(word) && !attaches_right(prev)) out.push_back(' ');
  out.append(word);
}

std::string detokenize(const TokenSeq& tokens, const Vocab& vocab) {
  std::string out;
  std::string_view prev;
  for (TokenId t : tokens) {
    const std::string& w = vocab.token(t);
    append_detokenized(out, prev, w);
    prev = w;
  }
  return out;
}

std::vector<std::size_t> token_end_offsets(std::string_view text) {
  std::vector<std::size_t> ends;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    const auto rest = text.substr(i);
    if (rest.starts_with("<unk>") || rest.starts_with("<bot>") || rest.starts_with("<eot>")) {
      i += 5;
    } else if (is_word_byte(c)) {
      while (i < n) {
        const auto d = static_cast<unsigned char>(text[i]);
        if (is_word_byte(d)) ++i;
        else if (d == '\'' && i + 1 < n && is_word_byte(static_cast<unsigned char>(text[i + 1]))) ++i;
        else break;
      }
    } else {
      ++i;
    }
    ends.push_back(i);
  }
  return ends;
}

}  // namespace gendet
