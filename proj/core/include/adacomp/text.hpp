#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace adacomp {

// Shared word tokenizer: ASCII-lowercase, split on anything that is not
// an ASCII letter or digit. Bytes >= 0x80 are kept as word characters so
// UTF-8 words stay intact.
std::vector<std::string> tokenize(std::string_view text);

// Answer normalization for exact match: lowercase, remove punctuation,
// drop the articles a/an/the, collapse whitespace.
std::string normalize_answer(std::string_view text);

// Number of maximal non-whitespace runs.
std::size_t count_tokens(std::string_view text);

// Splits after '.', '!' or '?' when followed by whitespace. Pieces are
// trimmed; empty pieces are dropped.
std::vector<std::string> split_sentences(std::string_view text);

// |distinct query tokens present in text| / |distinct query tokens|,
// 0 when the query has no tokens.
double query_overlap(const std::vector<std::string>& query_tokens,
                     const std::vector<std::string>& text_tokens);

}  // namespace adacomp
