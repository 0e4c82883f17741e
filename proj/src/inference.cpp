#include "acd/inference.hpp"

#include <atomic>
#include <cmath>
#include <ctime>
#include <thread>

#include <openssl/evp.h>

#include <json.hpp>

#include "acd/errors.hpp"

namespace acd {

using nlohmann::ordered_json;

namespace {

ordered_json params_json(const DecodingParams& p) {
  return {{"temperature", p.temperature}, {"top_p", p.top_p}, {"max_output_tokens", p.max_output_tokens}};
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void rstrip(std::string& s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\n' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
}

}  // namespace

void DecodingParams::validate() const {
  if (!(temperature >= 0) || !std::isfinite(temperature)) throw ValidationError("temperature must be >= 0");
  if (!(top_p > 0 && top_p <= 1)) throw ValidationError("top_p must be in (0, 1]");
  if (max_output_tokens == 0) throw ValidationError("max_output_tokens must be positive");
}

std::string to_json_line(const GenerationRecord& r) {
  ordered_json j;
  j["prompt_hash"] = r.prompt_hash;
  j["backend_id"] = r.backend_id;
  j["doc_id"] = r.doc_id;
  j["chunk_index"] = r.chunk_index;
  j["template_version"] = r.template_version;
  j["params"] = params_json(r.params);
  j["output"] = r.output;
  j["truncated"] = r.truncated;
  if (r.error) j["error"] = *r.error;
  j["attempts"] = r.attempts;
  j["latency_ms"] = r.latency_ms;
  j["timestamp"] = r.timestamp;
  return j.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

GenerationRecord generation_record_from_json_line(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    GenerationRecord r;
    r.prompt_hash = j.at("prompt_hash").get<std::string>();
    r.backend_id = j.at("backend_id").get<std::string>();
    r.doc_id = j.at("doc_id").get<std::string>();
    r.chunk_index = j.at("chunk_index").get<std::size_t>();
    r.template_version = j.at("template_version").get<std::string>();
    const auto& p = j.at("params");
    r.params.temperature = p.at("temperature").get<double>();
    r.params.top_p = p.at("top_p").get<double>();
    r.params.max_output_tokens = p.at("max_output_tokens").get<std::size_t>();
    r.output = j.at("output").get<std::string>();
    r.truncated = j.value("truncated", false);
    if (j.contains("error") && !j.at("error").is_null()) r.error = j.at("error").get<std::string>();
    r.attempts = j.value("attempts", std::size_t{1});
    r.latency_ms = j.value("latency_ms", 0.0);
    r.timestamp = j.value("timestamp", std::string{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed generation record: ") + e.what());
  }
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string prompt_hash(std::string_view prompt, const DecodingParams& params, std::string_view backend_id,
                        std::string_view template_version) {
  std::string material;
  material.reserve(prompt.size() + 128);
  material.append(backend_id).push_back('\n');
  material.append(template_version).push_back('\n');
  material.append(params_json(params).dump()).push_back('\n');
  material.append(prompt);
  return sha256_hex(material);
}

TranscriptStore::TranscriptStore(const std::filesystem::path& path) {
  if (std::filesystem::exists(path)) {
    std::string content;
    {
      std::ifstream in(path, std::ios::binary);
      content.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    if (!content.empty() && content.back() != '\n') {
      const auto keep = content.rfind('\n');
      content.resize(keep == std::string::npos ? 0 : keep + 1);
      std::filesystem::resize_file(path, content.size());
      recovered_torn_tail_ = true;
    }
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < content.size()) {
      const auto nl = content.find('\n', pos);
      const auto line = std::string_view(content).substr(pos, nl - pos);
      pos = nl + 1;
      ++line_no;
      if (line.empty()) continue;
      try {
        records_.push_back(generation_record_from_json_line(line));
      } catch (const ParseError& e) {
        throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what(), line_no);
      }
      index(records_.size() - 1);
    }
  } else if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  out_.open(path, std::ios::app | std::ios::binary);
  if (!out_) throw std::runtime_error("cannot open transcript " + path.string());
}

void TranscriptStore::index(std::size_t position) {
  if (records_[position].ok()) by_hash_[records_[position].prompt_hash] = position;
}

std::optional<GenerationRecord> TranscriptStore::find(const std::string& hash) const {
  std::shared_lock lock(mutex_);
  auto it = by_hash_.find(hash);
  if (it == by_hash_.end()) return std::nullopt;
  return records_[it->second];
}

void TranscriptStore::append(const GenerationRecord& record) {
  std::unique_lock lock(mutex_);
  if (out_.is_open()) {
    out_ << to_json_line(record) << '\n';
    out_.flush();
  }
  records_.push_back(record);
  index(records_.size() - 1);
}

std::vector<GenerationRecord> TranscriptStore::records() const {
  std::shared_lock lock(mutex_);
  return records_;
}

std::size_t TranscriptStore::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

std::vector<GenerationRecord> read_transcript(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open transcript " + path.string());
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<GenerationRecord> records;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    auto nl = content.find('\n', pos);
    const bool torn = nl == std::string::npos;
    if (torn) nl = content.size();
    const auto line = std::string_view(content).substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(generation_record_from_json_line(line));
    } catch (const ParseError& e) {
      // An unterminated last line is what a crash mid-append leaves behind.
      if (torn) break;
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return records;
}

GenerationResult generate(const GenerationRequest& request, const DecodingParams& params, Backend& backend,
                          TranscriptStore& store, const RetryPolicy& retry) {
  const auto backend_id = backend.id();
  const auto hash = prompt_hash(request.prompt, params, backend_id, request.template_version);
  if (auto cached = store.find(hash)) return {std::move(*cached), true};

  GenerationRecord record;
  record.prompt_hash = hash;
  record.backend_id = backend_id;
  record.doc_id = request.doc_id;
  record.chunk_index = request.chunk_index;
  record.template_version = request.template_version;
  record.params = params;

  const auto started = std::chrono::steady_clock::now();
  auto delay = retry.backoff;
  std::optional<BackendError> failure;
  for (std::size_t attempt = 0; attempt <= retry.retries; ++attempt) {
    record.attempts = attempt + 1;
    try {
      auto completion = backend.complete(request.prompt, params);
      record.output = std::move(completion.text);
      rstrip(record.output);
      record.truncated = completion.truncated;
      failure.reset();
      break;
    } catch (const BackendError& e) {
      failure = e;
      if (!e.transient()) break;
      if (attempt < retry.retries && delay.count() > 0) {
        std::this_thread::sleep_for(delay);
        delay *= 2;
      }
    }
  }
  record.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  record.timestamp = utc_timestamp();
  if (failure) record.error = failure->what();
  store.append(record);
  if (failure) throw BackendError(failure->what(), failure->transient());
  return {std::move(record), false};
}

std::vector<BatchItem> run_batch(std::span<const GenerationRequest> requests, const DecodingParams& params,
                                 Backend& backend, TranscriptStore& store, std::size_t parallelism,
                                 const RetryPolicy& retry) {
  if (parallelism == 0) throw ValidationError("parallelism must be at least 1");
  params.validate();
  std::vector<BatchItem> results(requests.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (auto i = next.fetch_add(1); i < requests.size(); i = next.fetch_add(1)) {
      try {
        auto result = generate(requests[i], params, backend, store, retry);
        results[i].record = std::move(result.record);
        results[i].from_cache = result.from_cache;
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };

  const auto threads = std::min(parallelism, requests.size());
  if (threads <= 1) {
    worker();
    return results;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  return results;
}

}  // namespace acd
