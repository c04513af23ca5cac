#include "adacomp/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>

#include "adacomp/error.hpp"
#include "adacomp/hashing.hpp"
#include "json_util.hpp"

namespace adacomp {
namespace {

using nlohmann::json;

constexpr std::array<const char*, 24> kSyllables = {
    "ka", "lo", "ve", "ri", "zan", "mor", "tel", "qui", "dra", "nex", "sul", "bor",
    "fin", "gar", "hul", "jex", "pra", "vol", "wen", "yth", "cal", "dun", "esh", "ost"};

constexpr std::array<const char*, 48> kFiller = {
    "river",   "market",  "winter",  "stone",   "garden",  "harvest", "bridge",
    "valley",  "copper",  "lantern", "meadow",  "festival", "pottery", "orchard",
    "timber",  "harbor",  "weaving", "granite", "forest",  "northern", "ancient",
    "quiet",   "busy",    "broad",   "coastal", "eastern", "famous",  "narrow",
    "travelers", "merchants", "farmers", "sailors", "builders", "scholars",
    "visit",   "trade",   "gather",  "describe", "celebrate", "record",
    "during",  "beside",  "across",  "around",  "often",   "rarely",  "seasons",
    "villages"};

struct Relation {
  const char* wh;
  const char* noun;
  const char* query_tail;  // appended after the subject
};

// Closed-book outcomes use "who" relations so the query form carries a
// signal; every other outcome uses a non-"who" relation.
constexpr std::array<Relation, 4> kWhoRelations = {{{"who", "founder", ""},
                                                    {"who", "patron", ""},
                                                    {"who", "ruler", ""},
                                                    {"who", "chronicler", ""}}};
constexpr std::array<Relation, 8> kOtherRelations = {{{"what", "capital", ""},
                                                      {"what", "currency", ""},
                                                      {"what", "motto", ""},
                                                      {"where", "harbor", " located"},
                                                      {"where", "observatory", " located"},
                                                      {"when", "festival", " held"},
                                                      {"when", "census", " taken"},
                                                      {"which", "emblem", " chosen"}}};

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

class TextFactory {
 public:
  explicit TextFactory(Rng& rng) : rng_(rng) {
    for (const char* f : kFiller) used_.insert(f);
  }

  // Fresh capitalized pseudo-word, unique within the corpus.
  std::string name(int syllables) {
    for (;;) {
      std::string w;
      for (int i = 0; i < syllables; ++i) w += kSyllables[rng_.below(kSyllables.size())];
      if (used_.insert(w).second) return capitalize(w);
    }
  }

  std::string filler_sentence() {
    const int words = 6 + static_cast<int>(rng_.below(5));
    std::string s;
    for (int i = 0; i < words; ++i) {
      if (i) s.push_back(' ');
      s += kFiller[rng_.below(kFiller.size())];
    }
    return capitalize(s) + ".";
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

std::string join_sentences(const std::vector<std::string>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out.push_back(' ');
    out += s;
  }
  return out;
}

}  // namespace

void CorpusSpec::validate() const {
  if (max_n < 1) throw DataError("corpus max_n must be >= 1");
  if (static_cast<int>(depth_weights.size()) != max_n) {
    throw DataError("depth_weights must have max_n entries");
  }
  double total = closed_book_weight + none_weight;
  if (closed_book_weight < 0 || none_weight < 0) throw DataError("negative weight in corpus spec");
  for (double w : depth_weights) {
    if (w < 0 || !std::isfinite(w)) throw DataError("negative weight in corpus spec");
    total += w;
  }
  if (!(total > 0)) throw DataError("corpus spec weights sum to zero");
  if (decoy_rate < 0 || decoy_rate > 1 || paraphrase_rate < 0 || paraphrase_rate > 1) {
    throw DataError("decoy_rate and paraphrase_rate must be in [0, 1]");
  }
  if (confusion_threshold && *confusion_threshold < 1) {
    throw DataError("confusion_threshold must be >= 1");
  }
}

CorpusSpec CorpusSpec::from_json(const std::string& text) {
  CorpusSpec s;
  try {
    const json j = json::parse(text);
    s.size = j.value("size", s.size);
    s.max_n = j.value("max_n", s.max_n);
    s.closed_book_weight = j.value("closed_book_weight", s.closed_book_weight);
    s.none_weight = j.value("none_weight", s.none_weight);
    if (j.contains("depth_weights")) {
      s.depth_weights = j.at("depth_weights").get<std::vector<double>>();
    } else {
      s.depth_weights.assign(s.max_n, 1.0);
    }
    if (j.contains("confusion_threshold") && !j.at("confusion_threshold").is_null()) {
      s.confusion_threshold = j.at("confusion_threshold").get<int>();
    }
    s.include_k0 = j.value("include_k0", s.include_k0);
    s.seed = j.value("seed", s.seed);
    s.decoy_rate = j.value("decoy_rate", s.decoy_rate);
    s.paraphrase_rate = j.value("paraphrase_rate", s.paraphrase_rate);
    s.conversational = j.value("conversational", s.conversational);
    s.id_prefix = j.value("id_prefix", s.id_prefix);
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid corpus spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::string CorpusSpec::to_json() const {
  json j = {{"size", size},
            {"max_n", max_n},
            {"closed_book_weight", closed_book_weight},
            {"depth_weights", depth_weights},
            {"none_weight", none_weight},
            {"include_k0", include_k0},
            {"seed", seed},
            {"decoy_rate", decoy_rate},
            {"paraphrase_rate", paraphrase_rate},
            {"conversational", conversational},
            {"id_prefix", id_prefix}};
  j["confusion_threshold"] = confusion_threshold ? json(*confusion_threshold) : json(nullptr);
  return j.dump(2);
}

CompressionLabel intended_label(std::optional<int> evidence_rank, bool closed_book,
                                bool include_k0, std::optional<int> confusion_threshold) {
  if (closed_book && include_k0) return CompressionLabel::k(0);
  if (!evidence_rank) return CompressionLabel::unanswerable();
  const int distractors_before = *evidence_rank - 1;
  if (confusion_threshold && distractors_before >= *confusion_threshold) {
    return CompressionLabel::unanswerable();
  }
  return CompressionLabel::k(*evidence_rank);
}

SyntheticCorpus make_synthetic_corpus(const CorpusSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  TextFactory text(rng);
  const int n = spec.max_n;

  // Outcome index: 0 = closed-book, 1..n = evidence rank, n+1 = none.
  std::vector<double> weights;
  weights.push_back(spec.closed_book_weight);
  weights.insert(weights.end(), spec.depth_weights.begin(), spec.depth_weights.end());
  weights.push_back(spec.none_weight);
  double total = 0;
  for (double w : weights) total += w;

  const std::size_t width = std::to_string(spec.size).size();
  SyntheticCorpus corpus;
  corpus.mock.confusion_threshold = spec.confusion_threshold;

  for (std::size_t i = 0; i < spec.size; ++i) {
    std::string id = std::to_string(i);
    id = spec.id_prefix + std::string(width - id.size(), '0') + id;

    double u = rng.uniform() * total;
    int outcome = static_cast<int>(weights.size()) - 1;
    for (std::size_t o = 0; o < weights.size(); ++o) {
      if (u < weights[o]) {
        outcome = static_cast<int>(o);
        break;
      }
      u -= weights[o];
    }
    const bool closed_book = outcome == 0;
    std::optional<int> evidence;
    if (closed_book) {
      evidence = 1 + static_cast<int>(rng.below(n));
    } else if (outcome <= n) {
      evidence = outcome;
    }

    const Relation& rel = closed_book ? kWhoRelations[rng.below(kWhoRelations.size())]
                                      : kOtherRelations[rng.below(kOtherRelations.size())];
    const std::string subject = text.name(2 + static_cast<int>(rng.below(2)));
    const std::string answer = text.name(3);

    QAExample ex;
    ex.id = id;
    ex.query = std::string(rel.wh) + " is the " + rel.noun + " of " + subject +
               rel.query_tail;
    ex.gold_answers = {answer};
    if (spec.conversational) {
      ex.history = {{"user", "I am reading about " + subject + "."},
                    {"assistant", text.filler_sentence()}};
    }

    std::vector<double> scores(n);
    for (double& s : scores) s = std::round(rng.uniform(0.3, 0.95) * 1e4) / 1e4;
    std::sort(scores.begin(), scores.end(), std::greater<>());

    RetrievalSet set;
    set.query_id = id;
    for (int r = 1; r <= n; ++r) {
      std::vector<std::string> sentences;
      const int fillers = 2 + static_cast<int>(rng.below(3));
      for (int f = 0; f < fillers; ++f) sentences.push_back(text.filler_sentence());
      std::string special;
      if (evidence && *evidence == r) {
        if (rng.uniform() < spec.paraphrase_rate) {
          special = answer + " serves as " + subject + " " + rel.noun + " today.";
        } else {
          special = "The " + std::string(rel.noun) + " of " + subject + " is " + answer + ".";
        }
      } else if (rng.uniform() < spec.decoy_rate) {
        special = "The " + std::string(rel.noun) + " of " + subject + " was " +
                  kFiller[rng.below(kFiller.size())] + " for many seasons.";
      } else {
        special = subject + " was " + kFiller[rng.below(kFiller.size())] + " and " +
                  kFiller[rng.below(kFiller.size())] + ".";
      }
      const auto pos = rng.below(sentences.size() + 1);
      sentences.insert(sentences.begin() + static_cast<long>(pos), special);
      set.docs.push_back({id + "-d" + std::to_string(r), join_sentences(sentences),
                          scores[r - 1], r});
    }

    if (closed_book) corpus.mock.closed_book_ids.insert(id);
    corpus.plan.push_back({id, evidence, closed_book,
                           intended_label(evidence, closed_book, spec.include_k0,
                                          spec.confusion_threshold)});
    corpus.retrievals.emplace(id, std::move(set));
    corpus.examples.push_back(std::move(ex));
  }
  return corpus;
}

std::string mock_config_to_json(const MockOracleConfig& config) {
  json j = {{"type", "mock"},
            {"noise_rate", config.noise_rate},
            {"seed", config.seed},
            {"closed_book_ids", config.closed_book_ids}};
  j["confusion_threshold"] =
      config.confusion_threshold ? json(*config.confusion_threshold) : json(nullptr);
  return j.dump(2);
}

MockOracleConfig mock_config_from_json(const std::string& text) {
  MockOracleConfig c;
  try {
    const json j = json::parse(text);
    c.noise_rate = j.value("noise_rate", 0.0);
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("confusion_threshold") && !j.at("confusion_threshold").is_null()) {
      c.confusion_threshold = j.at("confusion_threshold").get<int>();
    }
    if (j.contains("closed_book_ids")) {
      for (const auto& id : j.at("closed_book_ids")) c.closed_book_ids.insert(id.get<std::string>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid mock generator config: ") + e.what());
  }
  c.validate();
  return c;
}

void save_plan(const std::filesystem::path& path, std::span<const PlanEntry> plan) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& p : plan) {
    json j = {{"example_id", p.example_id}, {"closed_book", p.closed_book}};
    j["evidence_rank"] = p.evidence_rank ? json(*p.evidence_rank) : json(nullptr);
    j["label"] = p.label.is_unanswerable() ? json("unanswerable") : json(p.label.value());
    out << j.dump() << '\n';
  }
}

std::vector<PlanEntry> load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<PlanEntry> plan;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      PlanEntry p;
      p.example_id = j.at("example_id").get<std::string>();
      p.closed_book = j.at("closed_book").get<bool>();
      if (!j.at("evidence_rank").is_null()) p.evidence_rank = j.at("evidence_rank").get<int>();
      const auto& l = j.at("label");
      p.label = l.is_string() ? CompressionLabel::unanswerable()
                              : CompressionLabel::k(l.get<int>());
      plan.push_back(std::move(p));
    } catch (const json::exception&) {
      throw DataError("invalid plan record at line " + std::to_string(line_no));
    }
  }
  return plan;
}

}  // namespace adacomp
