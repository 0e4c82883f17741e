#include <httplib.h>

#include <random>
#include <regex>

#include <json.hpp>

#include "acd/errors.hpp"
#include "acd/inference.hpp"
#include "acd/tagcodec.hpp"

namespace acd {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string flip_first_letter(std::string token) {
  for (auto& c : token) {
    if (c >= 'a' && c <= 'z') {
      c = static_cast<char>(c - 'a' + 'A');
      return token;
    }
    if (c >= 'A' && c <= 'Z') {
      c = static_cast<char>(c - 'A' + 'a');
      return token;
    }
  }
  return token;
}

}  // namespace

void ReplayBackend::prime(std::string prompt, std::string output) {
  table_.insert_or_assign(std::move(prompt), std::move(output));
}

Completion ReplayBackend::complete(const std::string& prompt, const DecodingParams&) {
  auto it = table_.find(prompt);
  if (it == table_.end()) throw BackendError("replay backend has no entry for this prompt", false);
  return {it->second, false};
}

std::unique_ptr<ReplayBackend> make_gold_replay_backend(std::span<const TrainingPair> pairs, std::string id) {
  auto backend = std::make_unique<ReplayBackend>(std::move(id));
  for (const auto& pair : pairs) backend->prime(pair.instruction, pair.target);
  return backend;
}

Completion EchoBackend::complete(const std::string& prompt, const DecodingParams&) {
  auto input = extract_input(template_, prompt);
  if (!input) throw BackendError("echo backend: prompt does not match template " + template_.version_id, false);
  return {std::move(*input), false};
}

std::string perturb_tagged(std::string_view tagged, const PerturbationSpec& spec, std::uint64_t stream) {
  const auto parsed = decode_xml(tagged, ParseMode::Lenient);
  std::mt19937_64 rng(spec.seed ^ (stream * 0x9E3779B97F4A7C15ULL));
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  struct Plan {
    ComponentType kind;
    bool dropped;
  };
  std::vector<Plan> plans;
  for (const auto& s : parsed.spans) {
    auto kind = s.kind;
    if (coin(rng) < spec.relabel_rate) kind = kind == ComponentType::Claim ? ComponentType::Premise : ComponentType::Claim;
    plans.push_back({kind, coin(rng) < spec.drop_component_rate});
  }

  std::string out;
  std::size_t cursor = 0;
  std::size_t span = 0;
  const auto& text = parsed.plain_text;
  for (std::size_t i = 0; i < parsed.tokens.size(); ++i) {
    const auto& tok = parsed.tokens[i];
    out.append(text, cursor, tok.begin - cursor);
    const bool opens = span < parsed.spans.size() && parsed.spans[span].first == i && !plans[span].dropped;
    if (opens) out += plans[span].kind == ComponentType::Claim ? "<claim>" : "<premise>";
    out += coin(rng) < spec.case_rate ? flip_first_letter(tok.text) : tok.text;
    if (coin(rng) < spec.insert_rate) out += " indeed";
    if (span < parsed.spans.size() && parsed.spans[span].last == i) {
      if (!plans[span].dropped) out += plans[span].kind == ComponentType::Claim ? "</claim>" : "</premise>";
      ++span;
    }
    cursor = tok.end;
  }
  out.append(text, cursor, std::string::npos);
  return out;
}

Completion PerturbingBackend::complete(const std::string& prompt, const DecodingParams& params) {
  auto completion = inner_->complete(prompt, params);
  completion.text = perturb_tagged(completion.text, spec_, fnv1a(prompt));
  return completion;
}

bool FlakyBackend::selected(const std::string& prompt) const {
  const auto h = fnv1a(prompt) ^ (seed_ * 0x9E3779B97F4A7C15ULL);
  return static_cast<double>(h % 10000) < rate_ * 10000.0;
}

std::size_t FlakyBackend::injected_failures() const {
  std::lock_guard lock(mutex_);
  return injected_;
}

Completion FlakyBackend::complete(const std::string& prompt, const DecodingParams& params) {
  if (selected(prompt)) {
    std::lock_guard lock(mutex_);
    if (seen_[prompt]++ < failures_) {
      ++injected_;
      throw BackendError("injected transient failure", true);
    }
  }
  return inner_->complete(prompt, params);
}

ChatCompletionBackend::ChatCompletionBackend(ChatEndpoint endpoint, std::string id)
    : endpoint_(std::move(endpoint)), id_(std::move(id)) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint_.url, m, kUrl)) throw ConfigError("invalid endpoint URL '" + endpoint_.url + "'");
  origin_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/v1/chat/completions";
}

std::string ChatCompletionBackend::request_body(const std::string& model, const std::string& prompt,
                                                const DecodingParams& params) {
  nlohmann::ordered_json body;
  body["model"] = model;
  body["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = params.temperature;
  body["top_p"] = params.top_p;
  body["max_tokens"] = params.max_output_tokens;
  return body.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

Completion ChatCompletionBackend::parse_response(std::string_view body) {
  try {
    const auto j = nlohmann::json::parse(body);
    const auto& choice = j.at("choices").at(0);
    Completion c;
    c.text = choice.at("message").at("content").get<std::string>();
    c.truncated = choice.value("finish_reason", std::string{}) == "length";
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("unexpected completion response: ") + e.what(), false);
  }
}

Completion ChatCompletionBackend::complete(const std::string& prompt, const DecodingParams& params) {
  httplib::Client client(origin_);
  const auto timeout = static_cast<time_t>(endpoint_.timeout.count());
  client.set_connection_timeout(timeout, 0);
  client.set_read_timeout(timeout, 0);
  client.set_write_timeout(timeout, 0);
  httplib::Headers headers;
  if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);

  auto res = client.Post(path_, headers, request_body(endpoint_.model, prompt, params), "application/json");
  if (!res) throw BackendError("transport error: " + httplib::to_string(res.error()), true);
  const int status = res->status;
  if (status == 408 || status == 429 || status >= 500) {
    throw BackendError("HTTP " + std::to_string(status), true);
  }
  if (status < 200 || status >= 300) {
    throw BackendError("HTTP " + std::to_string(status) + ": " + res->body.substr(0, 200), false);
  }
  return parse_response(res->body);
}

}  // namespace acd
