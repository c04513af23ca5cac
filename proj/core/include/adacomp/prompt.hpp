#pragma once

#include <map>
#include <string>
#include <vector>

#include "adacomp/types.hpp"

namespace adacomp {

// Everything the generator sees for one call. example_id is routing
// metadata (the mock oracle keys its answer sheet on it) and is never
// rendered into the prompt text.
struct Prompt {
  std::string example_id;
  std::string query;
  std::vector<Turn> history;
  std::vector<std::string> context_docs;  // rank order
  std::string template_id = "default";

  bool operator==(const Prompt&) const = default;
};

// Placeholders: {index} and {text} in document_format, {role} and {text}
// in turn_format, {query} in question_format.
struct PromptTemplate {
  std::string id;
  std::string document_format = "Document {index}: {text}";
  std::string instruction = "Answer the question based on the documents above.";
  std::string closed_book_instruction = "Answer the question.";
  bool include_history = false;
  std::string history_header = "Conversation:";
  std::string turn_format = "{role}: {text}";
  std::string question_format = "Question: {query}\nAnswer:";
};

class TemplateRegistry {
 public:
  // Registers "default" and "conversational".
  TemplateRegistry();

  void add(PromptTemplate t);  // replaces an existing id
  const PromptTemplate& get(const std::string& id) const;
  bool contains(const std::string& id) const { return templates_.count(id) > 0; }

  // Deterministic rendering; throws ConfigError for unknown template ids.
  std::string render(const Prompt& prompt) const;

 private:
  std::map<std::string, PromptTemplate> templates_;
};

}  // namespace adacomp
