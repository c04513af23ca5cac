#include "adacomp/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "adacomp/error.hpp"
#include "json_util.hpp"

namespace adacomp {
namespace {

using nlohmann::json;

std::string at_line(std::size_t line) {
  return " at line " + std::to_string(line);
}

// Calls fn(record, line_no) for each non-blank JSONL line.
template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error&) {
      throw DataError("malformed JSON" + at_line(line_no));
    }
    if (!record.is_object()) {
      throw DataError("expected JSON object" + at_line(line_no));
    }
    fn(record, line_no);
  }
}

const json& require(const json& record, const char* field,
                    std::size_t line_no) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) {
    throw DataError(std::string("missing field '") + field + "'" +
                    at_line(line_no));
  }
  return *it;
}

std::string require_string(const json& record, const char* field,
                           std::size_t line_no) {
  const json& v = require(record, field, line_no);
  if (!v.is_string()) {
    throw DataError(std::string("field '") + field + "' must be a string" +
                    at_line(line_no));
  }
  return v.get<std::string>();
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

ExampleFormat parse_example_format(const std::string& name) {
  if (name == "qa") return ExampleFormat::qa;
  if (name == "conversational") return ExampleFormat::conversational;
  throw ConfigError("unknown example format '" + name + "'");
}

std::vector<QAExample> parse_examples(std::istream& in, ExampleFormat format) {
  std::vector<QAExample> out;
  std::set<std::string> seen;
  for_each_record(in, [&](const json& rec, std::size_t line_no) {
    QAExample ex;
    ex.id = require_string(rec, "id", line_no);
    ex.query = require_string(rec, "query", line_no);
    if (blank(ex.query)) throw DataError("query empty" + at_line(line_no));
    const json& answers = require(rec, "answers", line_no);
    if (!answers.is_array()) {
      throw DataError("field 'answers' must be an array" + at_line(line_no));
    }
    for (const auto& a : answers) {
      if (!a.is_string()) {
        throw DataError("answers must be strings" + at_line(line_no));
      }
      ex.gold_answers.push_back(a.get<std::string>());
    }
    if (ex.gold_answers.empty()) {
      throw DataError("gold_answers empty" + at_line(line_no));
    }
    auto hist = rec.find("history");
    if (format == ExampleFormat::conversational &&
        (hist == rec.end() || hist->is_null())) {
      throw DataError("missing field 'history'" + at_line(line_no));
    }
    if (hist != rec.end() && !hist->is_null()) {
      if (!hist->is_array()) {
        throw DataError("field 'history' must be an array" + at_line(line_no));
      }
      for (const auto& turn : *hist) {
        if (!turn.is_array() || turn.size() != 2 || !turn[0].is_string() ||
            !turn[1].is_string()) {
          throw DataError("history turns must be [role, text]" +
                          at_line(line_no));
        }
        ex.history.push_back({turn[0].get<std::string>(),
                              turn[1].get<std::string>()});
      }
    }
    if (!seen.insert(ex.id).second) {
      throw DataError("duplicate id " + ex.id + at_line(line_no));
    }
    out.push_back(std::move(ex));
  });
  return out;
}

std::vector<QAExample> load_examples(const std::filesystem::path& path,
                                     ExampleFormat format) {
  auto in = open_in(path);
  return parse_examples(in, format);
}

void write_examples(std::ostream& out, std::span<const QAExample> examples) {
  for (const auto& ex : examples) {
    json rec = {{"id", ex.id}, {"query", ex.query}, {"answers", ex.gold_answers}};
    if (!ex.history.empty()) {
      json hist = json::array();
      for (const auto& t : ex.history) hist.push_back({t.role, t.text});
      rec["history"] = std::move(hist);
    }
    out << rec.dump() << '\n';
  }
}

void save_examples(const std::filesystem::path& path,
                   std::span<const QAExample> examples) {
  auto out = open_out(path);
  write_examples(out, examples);
}

RetrievalLoad parse_retrievals(std::istream& in) {
  RetrievalLoad load;
  for_each_record(in, [&](const json& rec, std::size_t line_no) {
    RetrievalSet set;
    set.query_id = require_string(rec, "query_id", line_no);
    const json& docs = require(rec, "docs", line_no);
    if (!docs.is_array()) {
      throw DataError("field 'docs' must be an array" + at_line(line_no));
    }
    if (docs.empty()) throw DataError("empty retrieval set" + at_line(line_no));
    int rank = 0;
    for (const auto& d : docs) {
      if (!d.is_object()) {
        throw DataError("docs entries must be objects" + at_line(line_no));
      }
      RankedDocument doc;
      doc.doc_id = require_string(d, "doc_id", line_no);
      doc.text = require_string(d, "text", line_no);
      if (doc.text.empty()) {
        throw DataError("document text empty" + at_line(line_no));
      }
      const json& score = require(d, "score", line_no);
      if (!score.is_number()) {
        throw DataError("field 'score' must be a number" + at_line(line_no));
      }
      doc.score = score.get<double>();
      doc.rank = ++rank;
      set.docs.push_back(std::move(doc));
    }
    for (std::size_t i = 1; i < set.docs.size(); ++i) {
      if (set.docs[i].score > set.docs[i - 1].score) {
        load.warnings.push_back("scores increase with rank for query " +
                                set.query_id + at_line(line_no));
        break;
      }
    }
    if (load.sets.count(set.query_id)) {
      throw DataError("duplicate query_id " + set.query_id + at_line(line_no));
    }
    load.sets.emplace(set.query_id, std::move(set));
  });
  return load;
}

RetrievalLoad load_retrievals(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_retrievals(in);
}

void write_retrievals(std::ostream& out,
                      const std::map<std::string, RetrievalSet>& sets) {
  for (const auto& [id, set] : sets) {
    json docs = json::array();
    for (const auto& d : set.docs) {
      docs.push_back({{"doc_id", d.doc_id}, {"text", d.text}, {"score", d.score}});
    }
    out << json{{"query_id", id}, {"docs", std::move(docs)}}.dump() << '\n';
  }
}

void save_retrievals(const std::filesystem::path& path,
                     const std::map<std::string, RetrievalSet>& sets) {
  auto out = open_out(path);
  write_retrievals(out, sets);
}

JoinedDataset::JoinedDataset(std::vector<JoinedExample> items,
                             std::vector<std::string> dropped_ids)
    : items_(std::move(items)), dropped_(std::move(dropped_ids)) {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    index_.emplace(items_[i].example.id, i);
  }
}

const JoinedExample* JoinedDataset::find(const std::string& example_id) const {
  auto it = index_.find(example_id);
  return it == index_.end() ? nullptr : &items_[it->second];
}

JoinedDataset join_dataset(std::span<const QAExample> examples,
                           const std::map<std::string, RetrievalSet>& sets) {
  std::vector<JoinedExample> items;
  std::vector<std::string> dropped;
  for (const auto& ex : examples) {
    auto it = sets.find(ex.id);
    if (it == sets.end()) {
      dropped.push_back(ex.id);
    } else {
      items.push_back({ex, it->second});
    }
  }
  if (items.empty()) throw DataError("no joinable examples");
  return JoinedDataset(std::move(items), std::move(dropped));
}

std::vector<AnnotatedTriplet> parse_triplets(std::istream& in,
                                             std::optional<int> max_n) {
  std::vector<AnnotatedTriplet> out;
  for_each_record(in, [&](const json& rec, std::size_t line_no) {
    AnnotatedTriplet t;
    t.example_id = require_string(rec, "example_id", line_no);
    t.query_id = require_string(rec, "query_id", line_no);
    t.generator = require_string(rec, "generator", line_no);
    const json& label = require(rec, "label", line_no);
    if (label.is_string() && label.get<std::string>() == "unanswerable") {
      t.label = CompressionLabel::unanswerable();
    } else if (label.is_number_integer()) {
      const auto n = label.get<long long>();
      if (n < 0) throw DataError("negative label" + at_line(line_no));
      if (max_n && n > *max_n) {
        throw DataError("label exceeds N" + at_line(line_no));
      }
      t.label = CompressionLabel::k(static_cast<int>(n));
    } else {
      throw DataError("unknown label token " + label.dump() + at_line(line_no));
    }
    out.push_back(std::move(t));
  });
  return out;
}

std::vector<AnnotatedTriplet> load_triplets(const std::filesystem::path& path,
                                            std::optional<int> max_n) {
  auto in = open_in(path);
  return parse_triplets(in, max_n);
}

void write_triplets(std::ostream& out,
                    std::span<const AnnotatedTriplet> triplets) {
  for (const auto& t : triplets) {
    json label = t.label.is_unanswerable() ? json("unanswerable")
                                           : json(t.label.value());
    out << json{{"example_id", t.example_id},
                {"query_id", t.query_id},
                {"label", std::move(label)},
                {"generator", t.generator}}
               .dump()
        << '\n';
  }
}

void save_triplets(const std::filesystem::path& path,
                   std::span<const AnnotatedTriplet> triplets) {
  auto out = open_out(path);
  write_triplets(out, triplets);
}

void validate_triplets(std::span<const AnnotatedTriplet> triplets,
                       const JoinedDataset& dataset) {
  for (const auto& t : triplets) {
    const JoinedExample* item = dataset.find(t.example_id);
    if (!item) throw DataError("triplet references unknown example " + t.example_id);
    if (item->retrieval.query_id != t.query_id) {
      throw DataError("triplet query_id mismatch for example " + t.example_id);
    }
    if (!t.label.is_unanswerable() && t.label.value() > item->retrieval.size()) {
      throw DataError("label exceeds N for example " + t.example_id);
    }
  }
}

}  // namespace adacomp
