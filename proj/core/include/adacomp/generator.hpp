#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

#include "adacomp/prompt.hpp"
#include "adacomp/types.hpp"

namespace adacomp {

// Correctness judge for generator output.
struct JudgeMode {
  enum class Kind { em, f1_threshold };
  Kind kind = Kind::em;
  double tau = 0.6;

  // "em" or "f1:<tau>" (bare "f1" uses tau = 0.6).
  static JudgeMode parse(std::string_view text);
  std::string to_string() const;
};

bool judge_correct(std::string_view output, std::span<const std::string> golds,
                   const JudgeMode& mode);

// The RAG system under annotation and evaluation. Implementations must be
// safe to call concurrently.
class GeneratorClient {
 public:
  virtual ~GeneratorClient() = default;
  virtual std::string generate(const Prompt& prompt) = 0;
  // Stable identity; recorded in triplets and run manifests.
  virtual std::string fingerprint() const = 0;
};

inline constexpr std::string_view kMockUnknown = "UNKNOWN";
inline constexpr std::string_view kMockNoise = "WRONG";

struct MockOracleConfig {
  // Generation fails once this many context docs lack every gold answer.
  std::optional<int> confusion_threshold;
  double noise_rate = 0.0;  // in [0, 1)
  std::uint64_t seed = 0;
  // Examples the model "knows": answered correctly with empty context.
  std::set<std::string> closed_book_ids;

  void validate() const;
};

// Gold answer found in a document under normalized matching, on word
// boundaries.
bool contains_answer(std::string_view doc, std::span<const std::string> golds);

// Deterministic stand-in for an LLM. Returns the first gold answer when a
// context doc contains a gold answer (or the context is empty and the
// example is closed-book-known), otherwise "UNKNOWN". The confusion
// threshold and then noise are applied on top of that base decision.
std::string mock_generate(const MockOracleConfig& config, const Prompt& prompt,
                          std::span<const std::string> golds,
                          bool closed_book_known);

class MockGenerator final : public GeneratorClient {
 public:
  // The answer sheet maps example id -> gold answers.
  MockGenerator(MockOracleConfig config,
                std::map<std::string, std::vector<std::string>> answer_sheet);
  static MockGenerator from_examples(MockOracleConfig config,
                                     std::span<const QAExample> examples);

  std::string generate(const Prompt& prompt) override;
  std::string fingerprint() const override;

 private:
  MockOracleConfig config_;
  std::map<std::string, std::vector<std::string>> answers_;
};

// Thread-safe response store: in-memory map, optionally mirrored to one
// JSON file per key under a directory.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir = {});

  std::optional<std::string> get(const std::string& key);
  void put(const std::string& key, const std::string& text);

 private:
  std::filesystem::path dir_;
  std::mutex mu_;
  std::unordered_map<std::string, std::string> memory_;
};

// Stable serialization of every Prompt field, used for cache keys.
std::string prompt_key_material(const Prompt& prompt);

// Memoizes another client by (fingerprint, prompt). Counts forwarded calls
// and hits separately.
class CachedGenerator final : public GeneratorClient {
 public:
  CachedGenerator(std::shared_ptr<GeneratorClient> inner,
                  std::filesystem::path cache_dir = {});

  std::string generate(const Prompt& prompt) override;
  std::string fingerprint() const override { return fingerprint_; }

  std::size_t calls() const noexcept { return calls_.load(); }
  std::size_t hits() const noexcept { return hits_.load(); }

 private:
  std::shared_ptr<GeneratorClient> inner_;
  std::string fingerprint_;
  ResponseCache cache_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> hits_{0};
};

}  // namespace adacomp
