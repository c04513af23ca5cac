#include "adacomp/text.hpp"

#include <algorithm>
#include <unordered_set>

namespace adacomp {
namespace {

bool is_word_char(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c >= 0x80;
}

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

char lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a')
                                : static_cast<char>(c);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (is_word_char(c)) {
      cur.push_back(lower(c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::string normalize_answer(std::string_view text) {
  // Punctuation is deleted, not replaced by a space: "U.S." -> "us".
  std::string stripped;
  stripped.reserve(text.size());
  for (unsigned char c : text) {
    if (is_word_char(c) || is_space(c)) stripped.push_back(lower(c));
  }
  std::string out;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    if (word != "a" && word != "an" && word != "the") {
      if (!out.empty()) out.push_back(' ');
      out += word;
    }
    word.clear();
  };
  for (char c : stripped) {
    if (is_space(static_cast<unsigned char>(c))) {
      flush();
    } else {
      word.push_back(c);
    }
  }
  flush();
  return out;
}

std::size_t count_tokens(std::string_view text) {
  std::size_t n = 0;
  bool in_run = false;
  for (unsigned char c : text) {
    if (is_space(c)) {
      in_run = false;
    } else if (!in_run) {
      in_run = true;
      ++n;
    }
  }
  return n;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  auto emit = [&](std::size_t begin, std::size_t end) {
    while (begin < end && is_space(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && is_space(static_cast<unsigned char>(text[end - 1]))) --end;
    if (end > begin) out.emplace_back(text.substr(begin, end - begin));
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i + 1 < text.size(); ++i) {
    const char c = text[i];
    if ((c == '.' || c == '!' || c == '?') &&
        is_space(static_cast<unsigned char>(text[i + 1]))) {
      emit(start, i + 1);
      start = i + 1;
    }
  }
  emit(start, text.size());
  return out;
}

double query_overlap(const std::vector<std::string>& query_tokens,
                     const std::vector<std::string>& text_tokens) {
  std::unordered_set<std::string_view> query(query_tokens.begin(),
                                             query_tokens.end());
  if (query.empty()) return 0.0;
  std::unordered_set<std::string_view> text(text_tokens.begin(),
                                            text_tokens.end());
  std::size_t shared = 0;
  for (auto q : query) shared += text.count(q);
  return static_cast<double>(shared) / static_cast<double>(query.size());
}

}  // namespace adacomp
