#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "adacomp/prompt.hpp"
#include "adacomp/types.hpp"

namespace adacomp {

// What to keep when the predictor says Unanswerable.
enum class UnanswerableFallback { to_n, to_zero };

UnanswerableFallback parse_fallback(const std::string& name);

struct CompressedContext {
  std::string query_id;
  std::vector<RankedDocument> kept_docs;
  int k = 0;  // == kept_docs.size()
  Prompt prompt;
  std::size_t token_count = 0;  // whitespace tokens of the rendered prompt
};

// Builds C_f: the query (plus history when the template uses it) over the
// kept documents in the given order.
Prompt assemble_prompt(const QAExample& example,
                       std::span<const RankedDocument> kept_docs,
                       const std::string& template_id,
                       const TemplateRegistry& templates);

// Keeps the rank prefix of length k. A K(k) larger than the retrieval set
// keeps every document.
CompressedContext compress(const QAExample& example, const RetrievalSet& retrieval,
                           const CompressionLabel& label,
                           UnanswerableFallback fallback,
                           const TemplateRegistry& templates,
                           const std::string& template_id = "default");

// Single-document baseline: the whole document holding the sentence with
// the highest query-token overlap. Ties go to the lower rank, then to the
// earlier sentence. The result is generally not a rank prefix.
CompressedContext only_doc_select(const QAExample& example,
                                  const RetrievalSet& retrieval,
                                  const TemplateRegistry& templates,
                                  const std::string& template_id = "default");

// JSONL export: {"query_id","k","doc_ids","token_count"}.
void write_compressed(std::ostream& out, std::span<const CompressedContext> contexts);

}  // namespace adacomp
