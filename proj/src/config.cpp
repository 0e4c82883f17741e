#include "acd/config.hpp"

#include <array>
#include <cmath>
#include <set>

#include <json.hpp>

#include "acd/corpus_io.hpp"
#include "acd/errors.hpp"

namespace acd {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<CorpusFormat, std::string_view>, 3> kFormats = {{
    {CorpusFormat::Canonical, "canonical"},
    {CorpusFormat::Standoff, "standoff"},
    {CorpusFormat::TokenTable, "token-table"},
}};

constexpr std::array<std::pair<BackendKind, std::string_view>, 5> kKinds = {{
    {BackendKind::Chat, "chat"},
    {BackendKind::Replay, "replay"},
    {BackendKind::GoldReplay, "gold-replay"},
    {BackendKind::Echo, "echo"},
    {BackendKind::Perturb, "perturb"},
}};

// Reads the keys of one JSON object, then rejects whatever was not read.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  bool read(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = object_.find(key);
    if (it == object_.end()) return false;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
    return true;
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = object_.begin(); it != object_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key " + where(it.key()));
    }
  }

  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "configuration" : "'" + path_ + "'";
    return "'" + (path_.empty() ? key : path_ + "." + key) + "'";
  }

 private:
  const json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_perturbation(const json& j, PerturbationSpec& p) {
  ObjectReader r(j, "backend.perturbation");
  r.read("seed", p.seed);
  r.read("insert_rate", p.insert_rate);
  r.read("case_rate", p.case_rate);
  r.read("relabel_rate", p.relabel_rate);
  r.read("drop_component_rate", p.drop_component_rate);
  r.finish();
}

void read_backend(const json& j, BackendConfig& b) {
  ObjectReader r(j, "backend");
  std::string kind;
  if (r.read("kind", kind)) {
    auto parsed = parse_backend_kind(kind);
    if (!parsed) throw ConfigError("'backend.kind' has unknown value '" + kind + "'");
    b.kind = *parsed;
  }
  r.read("endpoint", b.endpoint);
  r.read("model", b.model);
  r.read("backend_id", b.backend_id);
  r.read("api_key_env", b.api_key_env);
  r.read("replay_path", b.replay_path);
  r.read("parallelism", b.parallelism);
  r.read("retries", b.retries);
  r.read("backoff_ms", b.backoff_ms);
  r.read("timeout_seconds", b.timeout_seconds);
  if (const auto* p = r.child("perturbation")) read_perturbation(*p, b.perturbation);
  r.finish();
}

json to_json(const RunConfig& c) {
  json corpora = json::array();
  for (const auto& e : c.corpora) {
    corpora.push_back({{"path", e.path}, {"format", to_string(e.format)}, {"source", to_string(e.source)}});
  }
  const auto& b = c.backend;
  const auto& p = b.perturbation;
  return json{
      {"corpora", corpora},
      {"template_version", c.template_version},
      {"chunking", {{"budget", c.chunk_budget}, {"safety_factor", c.safety_factor}}},
      {"backend",
       {{"kind", to_string(b.kind)},
        {"endpoint", b.endpoint},
        {"model", b.model},
        {"backend_id", c.resolved_backend_id()},
        {"api_key_env", b.api_key_env},
        {"replay_path", b.replay_path},
        {"parallelism", b.parallelism},
        {"retries", b.retries},
        {"backoff_ms", b.backoff_ms},
        {"timeout_seconds", b.timeout_seconds},
        {"perturbation",
         {{"seed", p.seed},
          {"insert_rate", p.insert_rate},
          {"case_rate", p.case_rate},
          {"relabel_rate", p.relabel_rate},
          {"drop_component_rate", p.drop_component_rate}}}}},
      {"decoding",
       {{"temperature", c.decoding.temperature},
        {"top_p", c.decoding.top_p},
        {"max_output_tokens", c.decoding.max_output_tokens}}},
      {"split", {{"ratios", c.split_ratios}, {"seed", c.split_seed}}},
      {"evaluation",
       {{"macro_includes_o", c.evaluation.macro_includes_o},
        {"exclude_zero_support", c.evaluation.exclude_zero_support},
        {"jaccard_threshold", c.jaccard_threshold},
        {"parse_mode", c.parse_mode == ParseMode::Strict ? "strict" : "lenient"}}},
      {"output_dir", c.output_dir},
  };
}

bool is_rate(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

}  // namespace

std::string_view to_string(CorpusFormat format) {
  for (const auto& [f, name] : kFormats)
    if (f == format) return name;
  return "canonical";
}

std::optional<CorpusFormat> parse_corpus_format(std::string_view name) {
  for (const auto& [f, n] : kFormats)
    if (n == name) return f;
  return std::nullopt;
}

std::string_view to_string(BackendKind kind) {
  for (const auto& [k, name] : kKinds)
    if (k == kind) return name;
  return "gold-replay";
}

std::optional<BackendKind> parse_backend_kind(std::string_view name) {
  for (const auto& [k, n] : kKinds)
    if (n == name) return k;
  return std::nullopt;
}

std::string RunConfig::resolved_backend_id() const {
  if (!backend.backend_id.empty()) return backend.backend_id;
  switch (backend.kind) {
    case BackendKind::Chat:
      return "chat:" + backend.model;
    case BackendKind::Replay:
      return "replay";
    case BackendKind::GoldReplay:
      return "gold-replay";
    case BackendKind::Echo:
      return "echo";
    case BackendKind::Perturb:
      return "gold-replay+perturbed";
  }
  return "unknown";
}

void RunConfig::validate() const {
  for (std::size_t i = 0; i < corpora.size(); ++i) {
    if (corpora[i].path.empty()) throw ConfigError("'corpora[" + std::to_string(i) + "].path' is empty");
  }
  try {
    template_by_version(template_version);
  } catch (const ConfigError&) {
    throw ConfigError("'template_version' names no known template: '" + template_version + "'");
  }
  if (chunk_budget == 0) throw ConfigError("'chunking.budget' must be positive");
  if (!std::isfinite(safety_factor) || safety_factor <= 0.0 || safety_factor > 1.0) {
    throw ConfigError("'chunking.safety_factor' must be in (0, 1]");
  }
  try {
    decoding.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("'decoding': ") + e.what());
  }
  if (backend.parallelism == 0) throw ConfigError("'backend.parallelism' must be at least 1");
  if (backend.timeout_seconds == 0) throw ConfigError("'backend.timeout_seconds' must be positive");
  if (backend.kind == BackendKind::Chat) {
    if (backend.endpoint.empty()) throw ConfigError("'backend.endpoint' is required for the chat backend");
    if (backend.model.empty()) throw ConfigError("'backend.model' is required for the chat backend");
  }
  if (backend.kind == BackendKind::Replay && backend.replay_path.empty()) {
    throw ConfigError("'backend.replay_path' is required for the replay backend");
  }
  const auto& p = backend.perturbation;
  if (!is_rate(p.insert_rate) || !is_rate(p.case_rate) || !is_rate(p.relabel_rate) ||
      !is_rate(p.drop_component_rate)) {
    throw ConfigError("'backend.perturbation' rates must be in [0, 1]");
  }
  double sum = 0;
  for (double r : split_ratios) {
    if (!std::isfinite(r) || r < 0) throw ConfigError("'split.ratios' must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw ConfigError("'split.ratios' must sum to 1");
  if (!std::isfinite(jaccard_threshold) || jaccard_threshold <= 0.0 || jaccard_threshold > 1.0) {
    throw ConfigError("'evaluation.jaccard_threshold' must be in (0, 1]");
  }
  if (output_dir.empty()) throw ConfigError("'output_dir' is empty");
}

RunConfig parse_run_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
  RunConfig c;
  ObjectReader r(root, "");

  if (const auto* corpora = r.child("corpora")) {
    if (!corpora->is_array()) throw ConfigError("'corpora' must be an array");
    for (std::size_t i = 0; i < corpora->size(); ++i) {
      ObjectReader e((*corpora)[i], "corpora[" + std::to_string(i) + "]");
      CorpusEntry entry;
      std::string format, source;
      if (!e.read("path", entry.path)) throw ConfigError(e.where("path") + " is required");
      if (e.read("format", format)) {
        auto f = parse_corpus_format(format);
        if (!f) throw ConfigError(e.where("format") + " has unknown value '" + format + "'");
        entry.format = *f;
      }
      if (e.read("source", source)) {
        auto s = parse_source_corpus(source);
        if (!s) throw ConfigError(e.where("source") + " has unknown value '" + source + "'");
        entry.source = *s;
      }
      e.finish();
      c.corpora.push_back(std::move(entry));
    }
  }
  r.read("template_version", c.template_version);
  if (const auto* j = r.child("chunking")) {
    ObjectReader k(*j, "chunking");
    k.read("budget", c.chunk_budget);
    k.read("safety_factor", c.safety_factor);
    k.finish();
  }
  if (const auto* j = r.child("backend")) read_backend(*j, c.backend);
  if (const auto* j = r.child("decoding")) {
    ObjectReader d(*j, "decoding");
    d.read("temperature", c.decoding.temperature);
    d.read("top_p", c.decoding.top_p);
    d.read("max_output_tokens", c.decoding.max_output_tokens);
    d.finish();
  }
  if (const auto* j = r.child("split")) {
    ObjectReader s(*j, "split");
    std::vector<double> ratios;
    if (s.read("ratios", ratios)) {
      if (ratios.size() != 3) throw ConfigError("'split.ratios' must have three entries");
      c.split_ratios = {ratios[0], ratios[1], ratios[2]};
    }
    s.read("seed", c.split_seed);
    s.finish();
  }
  if (const auto* j = r.child("evaluation")) {
    ObjectReader e(*j, "evaluation");
    e.read("macro_includes_o", c.evaluation.macro_includes_o);
    e.read("exclude_zero_support", c.evaluation.exclude_zero_support);
    e.read("jaccard_threshold", c.jaccard_threshold);
    std::string mode;
    if (e.read("parse_mode", mode)) {
      if (mode == "strict") c.parse_mode = ParseMode::Strict;
      else if (mode == "lenient") c.parse_mode = ParseMode::Lenient;
      else throw ConfigError("'evaluation.parse_mode' must be 'strict' or 'lenient'");
    }
    e.finish();
  }
  r.read("output_dir", c.output_dir);
  r.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read configuration " + path.string() + ": " + e.what());
  }
  return parse_run_config(text);
}

std::string canonical_config_json(const RunConfig& config) { return to_json(config).dump(); }

std::string config_hash(const RunConfig& config) { return sha256_hex(canonical_config_json(config)); }

}  // namespace acd
