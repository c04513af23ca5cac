#include "adacomp/generator.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "adacomp/error.hpp"
#include "adacomp/hashing.hpp"
#include "adacomp/metrics.hpp"
#include "adacomp/text.hpp"
#include "json_util.hpp"

namespace adacomp {

JudgeMode JudgeMode::parse(std::string_view text) {
  JudgeMode mode;
  if (text == "em") return mode;
  if (text == "f1") {
    mode.kind = Kind::f1_threshold;
    return mode;
  }
  if (text.substr(0, 3) == "f1:") {
    mode.kind = Kind::f1_threshold;
    const std::string num(text.substr(3));
    std::size_t used = 0;
    try {
      mode.tau = std::stod(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != num.size() || num.empty() || mode.tau < 0.0 || mode.tau > 1.0) {
      throw ConfigError("invalid f1 threshold in judge mode '" +
                        std::string(text) + "'");
    }
    return mode;
  }
  throw ConfigError("unknown judge mode '" + std::string(text) + "'");
}

std::string JudgeMode::to_string() const {
  if (kind == Kind::em) return "em";
  std::ostringstream out;
  out << "f1:" << tau;
  return out.str();
}

bool judge_correct(std::string_view output, std::span<const std::string> golds,
                   const JudgeMode& mode) {
  if (mode.kind == JudgeMode::Kind::em) return exact_match(output, golds) == 1;
  return token_f1(output, golds) >= mode.tau;
}

void MockOracleConfig::validate() const {
  if (!(noise_rate >= 0.0 && noise_rate < 1.0)) {
    throw ConfigError("mock noise_rate must be in [0, 1)");
  }
  if (confusion_threshold && *confusion_threshold < 1) {
    throw ConfigError("mock confusion_threshold must be >= 1");
  }
}

bool contains_answer(std::string_view doc, std::span<const std::string> golds) {
  const std::string hay = " " + normalize_answer(doc) + " ";
  for (const auto& g : golds) {
    const std::string needle = normalize_answer(g);
    if (needle.empty()) continue;
    if (hay.find(" " + needle + " ") != std::string::npos) return true;
  }
  return false;
}

std::string mock_generate(const MockOracleConfig& config, const Prompt& prompt,
                          std::span<const std::string> golds,
                          bool closed_book_known) {
  if (golds.empty()) return std::string(kMockUnknown);
  int evidence = 0;
  for (const auto& doc : prompt.context_docs) {
    if (contains_answer(doc, golds)) ++evidence;
  }
  bool correct = prompt.context_docs.empty() ? closed_book_known : evidence > 0;
  const int distractors = static_cast<int>(prompt.context_docs.size()) - evidence;
  if (correct && config.confusion_threshold &&
      distractors >= *config.confusion_threshold) {
    correct = false;
  }
  if (!correct) return std::string(kMockUnknown);
  if (config.noise_rate > 0.0) {
    std::string key = prompt.example_id;
    for (const auto& doc : prompt.context_docs) {
      key.push_back('\x1f');
      key += doc;
    }
    if (keyed_uniform(config.seed, key) < config.noise_rate) {
      return std::string(kMockNoise);
    }
  }
  return golds.front();
}

MockGenerator::MockGenerator(
    MockOracleConfig config,
    std::map<std::string, std::vector<std::string>> answer_sheet)
    : config_(std::move(config)), answers_(std::move(answer_sheet)) {
  config_.validate();
}

MockGenerator MockGenerator::from_examples(MockOracleConfig config,
                                           std::span<const QAExample> examples) {
  std::map<std::string, std::vector<std::string>> sheet;
  for (const auto& ex : examples) sheet.emplace(ex.id, ex.gold_answers);
  return MockGenerator(std::move(config), std::move(sheet));
}

std::string MockGenerator::generate(const Prompt& prompt) {
  auto it = answers_.find(prompt.example_id);
  if (it == answers_.end()) return std::string(kMockUnknown);
  return mock_generate(config_, prompt, it->second,
                       config_.closed_book_ids.count(prompt.example_id) > 0);
}

std::string MockGenerator::fingerprint() const {
  std::ostringstream desc;
  desc << "confusion=" << (config_.confusion_threshold ? *config_.confusion_threshold : -1)
       << ";noise=" << config_.noise_rate << ";seed=" << config_.seed
       << ";closed_book=";
  for (const auto& id : config_.closed_book_ids) desc << id << ',';
  return "mock:" + hex64(fnv1a64(desc.str()));
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::optional<std::string> ResponseCache::get(const std::string& key) {
  std::lock_guard lock(mu_);
  if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  if (dir_.empty()) return std::nullopt;
  std::ifstream in(dir_ / (key + ".json"));
  if (!in) return std::nullopt;
  try {
    auto j = nlohmann::json::parse(in);
    auto text = j.at("text").get<std::string>();
    memory_.emplace(key, text);
    return text;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;  // unreadable entry counts as a miss
  }
}

void ResponseCache::put(const std::string& key, const std::string& text) {
  std::lock_guard lock(mu_);
  memory_.insert_or_assign(key, text);
  if (dir_.empty()) return;
  const auto final_path = dir_ / (key + ".json");
  const auto tmp_path = dir_ / (key + ".json.tmp");
  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write cache entry " + tmp_path.string());
    out << nlohmann::json{{"text", text}}.dump();
  }
  std::filesystem::rename(tmp_path, final_path);
}

std::string prompt_key_material(const Prompt& prompt) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& t : prompt.history) hist.push_back({t.role, t.text});
  return nlohmann::json{{"example_id", prompt.example_id},
                        {"query", prompt.query},
                        {"history", std::move(hist)},
                        {"docs", prompt.context_docs},
                        {"template", prompt.template_id}}
      .dump();
}

CachedGenerator::CachedGenerator(std::shared_ptr<GeneratorClient> inner,
                                 std::filesystem::path cache_dir)
    : inner_(std::move(inner)),
      fingerprint_(inner_->fingerprint()),
      cache_(std::move(cache_dir)) {}

std::string CachedGenerator::generate(const Prompt& prompt) {
  const std::string key =
      sha256_hex(fingerprint_ + '\n' + prompt_key_material(prompt));
  if (auto hit = cache_.get(key)) {
    ++hits_;
    return *hit;
  }
  ++calls_;
  std::string text = inner_->generate(prompt);
  cache_.put(key, text);
  return text;
}

}  // namespace adacomp
