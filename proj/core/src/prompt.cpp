#include "adacomp/prompt.hpp"

#include "adacomp/error.hpp"

namespace adacomp {
namespace {

std::string replace_all(std::string s, const std::string& from,
                        const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

}  // namespace

TemplateRegistry::TemplateRegistry() {
  PromptTemplate plain;
  plain.id = "default";
  add(plain);

  PromptTemplate conv;
  conv.id = "conversational";
  conv.include_history = true;
  add(conv);
}

void TemplateRegistry::add(PromptTemplate t) {
  if (t.id.empty()) throw ConfigError("template id must not be empty");
  auto id = t.id;
  templates_.insert_or_assign(std::move(id), std::move(t));
}

const PromptTemplate& TemplateRegistry::get(const std::string& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw ConfigError("unknown template '" + id + "'");
  return it->second;
}

std::string TemplateRegistry::render(const Prompt& prompt) const {
  const PromptTemplate& t = get(prompt.template_id);
  std::string out;
  for (std::size_t i = 0; i < prompt.context_docs.size(); ++i) {
    // {text} is substituted last so document text containing "{index}" is
    // left untouched.
    std::string line =
        replace_all(t.document_format, "{index}", std::to_string(i + 1));
    out += replace_all(line, "{text}", prompt.context_docs[i]);
    out += '\n';
  }
  out += prompt.context_docs.empty() ? t.closed_book_instruction : t.instruction;
  out += '\n';
  if (t.include_history && !prompt.history.empty()) {
    out += t.history_header;
    out += '\n';
    for (const auto& turn : prompt.history) {
      out += replace_all(replace_all(t.turn_format, "{role}", turn.role),
                         "{text}", turn.text);
      out += '\n';
    }
  }
  out += replace_all(t.question_format, "{query}", prompt.query);
  return out;
}

}  // namespace adacomp
