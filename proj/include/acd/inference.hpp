#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "acd/prompting.hpp"

namespace acd {

struct DecodingParams {
  double temperature = 0.01;
  double top_p = 0.1;
  std::size_t max_output_tokens = 2048;

  // Throws ValidationError: temperature >= 0, top_p in (0, 1], max tokens > 0.
  void validate() const;
  bool operator==(const DecodingParams&) const = default;
};

// Greedy decoding; stricter than the defaults.
inline DecodingParams greedy_params() { return {0.0, 1.0, 2048}; }

struct GenerationRecord {
  std::string prompt_hash;
  std::string backend_id;
  std::string doc_id;
  std::size_t chunk_index = 0;
  std::string template_version;
  DecodingParams params;
  std::string output;
  bool truncated = false;
  std::optional<std::string> error;  // set when every attempt failed
  std::size_t attempts = 0;
  double latency_ms = 0;
  std::string timestamp;  // ISO 8601, UTC

  bool ok() const { return !error.has_value(); }
};

std::string to_json_line(const GenerationRecord& record);
GenerationRecord generation_record_from_json_line(std::string_view line);

std::string sha256_hex(std::string_view data);

// Content hash over backend id, template version, decoding params and prompt.
std::string prompt_hash(std::string_view prompt, const DecodingParams& params, std::string_view backend_id,
                        std::string_view template_version);

struct Completion {
  std::string text;
  bool truncated = false;
};

// A completion endpoint. Implementations must be safe to call concurrently
// and throw BackendError on failure.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  virtual Completion complete(const std::string& prompt, const DecodingParams& params) = 0;
};

// Append-only record file, one GenerationRecord per line, doubling as the
// generation cache. Reads are concurrent; appends are serialized and flushed
// line by line. A torn last line left by a crash is cut off on open.
class TranscriptStore {
 public:
  TranscriptStore() = default;
  explicit TranscriptStore(const std::filesystem::path& path);

  TranscriptStore(const TranscriptStore&) = delete;
  TranscriptStore& operator=(const TranscriptStore&) = delete;

  // Latest successful record with this hash.
  std::optional<GenerationRecord> find(const std::string& hash) const;
  void append(const GenerationRecord& record);
  std::vector<GenerationRecord> records() const;
  std::size_t size() const;
  // True when opening the file discarded a torn trailing line.
  bool recovered_torn_tail() const { return recovered_torn_tail_; }

 private:
  void index(std::size_t position);

  mutable std::shared_mutex mutex_;
  std::vector<GenerationRecord> records_;
  std::unordered_map<std::string, std::size_t> by_hash_;
  std::ofstream out_;
  bool recovered_torn_tail_ = false;
};

std::vector<GenerationRecord> read_transcript(const std::filesystem::path& path);

struct GenerationRequest {
  std::string prompt;
  std::string doc_id;
  std::size_t chunk_index = 0;
  std::string template_version;
};

struct RetryPolicy {
  std::size_t retries = 2;  // extra attempts after the first, transient errors only
  std::chrono::milliseconds backoff{200};  // doubled per attempt
};

struct GenerationResult {
  GenerationRecord record;
  bool from_cache = false;
};

// Returns the cached record when the store holds one for this prompt hash;
// otherwise calls the backend (retrying transient failures), strips trailing
// whitespace from the output and appends the record. Throws BackendError when
// every attempt fails; the failed record is still appended.
GenerationResult generate(const GenerationRequest& request, const DecodingParams& params, Backend& backend,
                          TranscriptStore& store, const RetryPolicy& retry = {});

struct BatchItem {
  std::optional<GenerationRecord> record;  // empty on failure
  std::string error;
  bool from_cache = false;
};

// Runs up to `parallelism` requests at once. Results line up with `requests`.
std::vector<BatchItem> run_batch(std::span<const GenerationRequest> requests, const DecodingParams& params,
                                 Backend& backend, TranscriptStore& store, std::size_t parallelism,
                                 const RetryPolicy& retry = {});

// ---------------------------------------------------------------------------
// Backends

// Fixed prompt -> output table.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(std::string id = "replay") : id_(std::move(id)) {}

  void prime(std::string prompt, std::string output);
  std::size_t size() const { return table_.size(); }

  std::string id() const override { return id_; }
  Completion complete(const std::string& prompt, const DecodingParams& params) override;

 private:
  std::string id_;
  std::unordered_map<std::string, std::string> table_;
};

// Replays the tagged targets of exported training pairs.
std::unique_ptr<ReplayBackend> make_gold_replay_backend(std::span<const TrainingPair> pairs,
                                                        std::string id = "gold-replay");

// Returns the prompt's input text unchanged: no tags, no components.
class EchoBackend : public Backend {
 public:
  explicit EchoBackend(PromptTemplate tmpl, std::string id = "echo") : template_(std::move(tmpl)), id_(std::move(id)) {}

  std::string id() const override { return id_; }
  Completion complete(const std::string& prompt, const DecodingParams& params) override;

 private:
  PromptTemplate template_;
  std::string id_;
};

struct PerturbationSpec {
  std::uint64_t seed = 1;
  double insert_rate = 0.05;      // filler word after a token
  double case_rate = 0.05;        // flip case of a token's first letter
  double relabel_rate = 0.1;      // swap claim/premise on a component
  double drop_component_rate = 0.05;
};

// Scripted noise on top of another backend's output, deterministic per
// prompt and seed.
class PerturbingBackend : public Backend {
 public:
  PerturbingBackend(std::shared_ptr<Backend> inner, PerturbationSpec spec)
      : inner_(std::move(inner)), spec_(spec) {}

  std::string id() const override { return inner_->id() + "+perturbed"; }
  Completion complete(const std::string& prompt, const DecodingParams& params) override;

 private:
  std::shared_ptr<Backend> inner_;
  PerturbationSpec spec_;
};

// Applies PerturbationSpec edits to a tagged string.
std::string perturb_tagged(std::string_view tagged, const PerturbationSpec& spec, std::uint64_t stream);

// Fails the first `failures_per_prompt` attempts of a deterministic subset of
// prompts with a transient error.
class FlakyBackend : public Backend {
 public:
  FlakyBackend(std::shared_ptr<Backend> inner, double failure_rate, std::uint64_t seed,
               std::size_t failures_per_prompt = 1)
      : inner_(std::move(inner)), rate_(failure_rate), seed_(seed), failures_(failures_per_prompt) {}

  std::string id() const override { return inner_->id(); }
  Completion complete(const std::string& prompt, const DecodingParams& params) override;

  bool selected(const std::string& prompt) const;
  std::size_t injected_failures() const;

 private:
  std::shared_ptr<Backend> inner_;
  double rate_;
  std::uint64_t seed_;
  std::size_t failures_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::size_t> seen_;
  std::size_t injected_ = 0;
};

struct ChatEndpoint {
  std::string url;  // e.g. https://host/v1/chat/completions
  std::string model;
  std::string api_key;  // empty: no Authorization header
  std::chrono::seconds timeout{120};
};

// Chat-completion wire format: the prompt as a single user message, with
// temperature, top_p and max_tokens. HTTP 408/429/5xx and transport errors
// are transient; other 4xx are permanent.
class ChatCompletionBackend : public Backend {
 public:
  ChatCompletionBackend(ChatEndpoint endpoint, std::string id);

  std::string id() const override { return id_; }
  Completion complete(const std::string& prompt, const DecodingParams& params) override;

  static std::string request_body(const std::string& model, const std::string& prompt, const DecodingParams& params);
  // Throws BackendError (permanent) when the body has no message content.
  static Completion parse_response(std::string_view body);

 private:
  ChatEndpoint endpoint_;
  std::string id_;
  std::string origin_;
  std::string path_;
};

}  // namespace acd
