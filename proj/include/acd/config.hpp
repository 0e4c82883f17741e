#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "acd/corpus.hpp"
#include "acd/eval.hpp"
#include "acd/inference.hpp"
#include "acd/tagcodec.hpp"

namespace acd {

enum class CorpusFormat : std::uint8_t { Canonical, Standoff, TokenTable };

std::string_view to_string(CorpusFormat format);
std::optional<CorpusFormat> parse_corpus_format(std::string_view name);

struct CorpusEntry {
  std::string path;
  CorpusFormat format = CorpusFormat::Canonical;
  SourceCorpus source = SourceCorpus::Synthetic;
};

enum class BackendKind : std::uint8_t { Chat, Replay, GoldReplay, Echo, Perturb };

std::string_view to_string(BackendKind kind);
std::optional<BackendKind> parse_backend_kind(std::string_view name);

struct BackendConfig {
  BackendKind kind = BackendKind::GoldReplay;
  std::string endpoint;      // chat only
  std::string model;         // chat only
  std::string backend_id;    // empty: derived from kind (and model)
  std::string api_key_env;   // name of the variable holding the credential
  std::string replay_path;   // replay only: training-pairs file
  std::size_t parallelism = 4;
  std::size_t retries = 2;
  std::size_t backoff_ms = 200;
  std::size_t timeout_seconds = 120;
  PerturbationSpec perturbation;  // perturb only
};

struct RunConfig {
  std::vector<CorpusEntry> corpora;
  std::string template_version = "v1";
  std::size_t chunk_budget = kDefaultChunkBudget;
  double safety_factor = kDefaultSafetyFactor;
  BackendConfig backend;
  DecodingParams decoding;
  SplitRatios split_ratios = {0.8, 0.1, 0.1};
  std::uint64_t split_seed = 13;
  EvalOptions evaluation;
  double jaccard_threshold = 0.8;
  ParseMode parse_mode = ParseMode::Lenient;
  std::string output_dir = "acd-out";

  // Throws ConfigError on any out-of-range or inconsistent value.
  void validate() const;
  std::size_t budget() const { return effective_budget(chunk_budget, safety_factor); }
  std::string resolved_backend_id() const;
};

// JSON document; every key is optional and unknown keys are rejected.
// Throws ConfigError naming the offending key.
RunConfig parse_run_config(std::string_view json);
RunConfig load_run_config(const std::filesystem::path& path);

// Fully resolved configuration with sorted keys.
std::string canonical_config_json(const RunConfig& config);
std::string config_hash(const RunConfig& config);

}  // namespace acd
