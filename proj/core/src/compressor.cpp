#include "adacomp/compressor.hpp"

#include <algorithm>
#include <ostream>

#include "adacomp/annotator.hpp"
#include "adacomp/error.hpp"
#include "adacomp/text.hpp"
#include "json_util.hpp"

namespace adacomp {
namespace {

CompressedContext finish(const QAExample& example, const RetrievalSet& retrieval,
                         std::vector<RankedDocument> kept,
                         const TemplateRegistry& templates,
                         const std::string& template_id) {
  CompressedContext ctx;
  ctx.query_id = retrieval.query_id;
  ctx.k = static_cast<int>(kept.size());
  ctx.prompt = assemble_prompt(example, kept, template_id, templates);
  ctx.token_count = count_tokens(templates.render(ctx.prompt));
  ctx.kept_docs = std::move(kept);
  return ctx;
}

}  // namespace

UnanswerableFallback parse_fallback(const std::string& name) {
  if (name == "to_n" || name == "to_N") return UnanswerableFallback::to_n;
  if (name == "to_zero") return UnanswerableFallback::to_zero;
  throw ConfigError("unknown unanswerable fallback '" + name + "'");
}

Prompt assemble_prompt(const QAExample& example,
                       std::span<const RankedDocument> kept_docs,
                       const std::string& template_id,
                       const TemplateRegistry& templates) {
  if (!templates.contains(template_id)) {
    throw ConfigError("unknown template '" + template_id + "'");
  }
  Prompt p;
  p.example_id = example.id;
  p.query = example.query;
  p.history = example.history;
  p.template_id = template_id;
  for (const auto& d : kept_docs) p.context_docs.push_back(d.text);
  return p;
}

CompressedContext compress(const QAExample& example, const RetrievalSet& retrieval,
                           const CompressionLabel& label,
                           UnanswerableFallback fallback,
                           const TemplateRegistry& templates,
                           const std::string& template_id) {
  int k;
  if (label.is_unanswerable()) {
    k = fallback == UnanswerableFallback::to_n ? retrieval.size() : 0;
  } else {
    k = std::min(label.value(), retrieval.size());
  }
  return finish(example, retrieval, select_top_k(retrieval, k), templates,
                template_id);
}

CompressedContext only_doc_select(const QAExample& example,
                                  const RetrievalSet& retrieval,
                                  const TemplateRegistry& templates,
                                  const std::string& template_id) {
  if (retrieval.docs.empty()) throw RangeError("only_doc_select on empty retrieval");
  const auto query_tokens = tokenize(example.query);
  std::size_t best_doc = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < retrieval.docs.size(); ++i) {
    for (const auto& sentence : split_sentences(retrieval.docs[i].text)) {
      const double s = query_overlap(query_tokens, tokenize(sentence));
      if (s > best_score) {
        best_score = s;
        best_doc = i;
      }
    }
  }
  return finish(example, retrieval, {retrieval.docs[best_doc]}, templates,
                template_id);
}

void write_compressed(std::ostream& out,
                      std::span<const CompressedContext> contexts) {
  for (const auto& c : contexts) {
    std::vector<std::string> ids;
    for (const auto& d : c.kept_docs) ids.push_back(d.doc_id);
    out << nlohmann::json{{"query_id", c.query_id},
                          {"k", c.k},
                          {"doc_ids", ids},
                          {"token_count", c.token_count}}
               .dump()
        << '\n';
  }
}

}  // namespace adacomp
