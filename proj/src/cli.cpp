#include "acd/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include <CLI11.hpp>

#include "acd/corpus_io.hpp"
#include "acd/errors.hpp"
#include "acd/prompting.hpp"
#include "acd/tagcodec.hpp"

namespace acd {

namespace fs = std::filesystem;

namespace {

// Gives a backend the id the configuration resolves to, so that prompt
// hashes computed at evaluation time agree with the transcript.
class NamedBackend : public Backend {
 public:
  NamedBackend(std::shared_ptr<Backend> inner, std::string id) : inner_(std::move(inner)), id_(std::move(id)) {}
  std::string id() const override { return id_; }
  Completion complete(const std::string& prompt, const DecodingParams& params) override {
    return inner_->complete(prompt, params);
  }

 private:
  std::shared_ptr<Backend> inner_;
  std::string id_;
};

std::vector<fs::path> list_files(const fs::path& dir, std::string_view extension) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (!extension.empty() && entry.path().extension() != extension) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string located(const fs::path& file, const ParseError& e) {
  std::string out = file.string();
  if (e.line() > 0) out += ":" + std::to_string(e.line());
  return out + ": " + e.what();
}

void append_warnings(LoadResult& result, const fs::path& file, const std::vector<Diagnostic>& warnings) {
  for (const auto& w : warnings) {
    result.warnings.push_back(file.string() + (w.line ? ":" + std::to_string(w.line) : std::string()) + ": " +
                              w.message);
  }
}

void load_standoff_pair(LoadResult& result, const fs::path& ann, SourceCorpus source) {
  auto txt = ann;
  txt.replace_extension(".txt");
  try {
    auto ingest = parse_standoff(ann.stem().string(), source, read_file(txt), read_file(ann));
    append_warnings(result, ann, ingest.warnings);
    result.documents.push_back(std::move(ingest.document));
  } catch (const ParseError& e) {
    result.errors.push_back(located(ann, e));
  } catch (const std::exception& e) {
    result.errors.push_back(ann.string() + ": " + e.what());
  }
}

void load_token_table(LoadResult& result, const fs::path& file, SourceCorpus source) {
  try {
    const auto blocks = read_token_table(read_file(file));
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      auto ingest = parse_token_table(file.stem().string() + "-" + std::to_string(i + 1), source, blocks[i]);
      append_warnings(result, file, ingest.warnings);
      result.documents.push_back(std::move(ingest.document));
    }
  } catch (const ParseError& e) {
    result.errors.push_back(located(file, e));
  } catch (const std::exception& e) {
    result.errors.push_back(file.string() + ": " + e.what());
  }
}

void load_canonical(LoadResult& result, const fs::path& file) {
  try {
    std::vector<Diagnostic> warnings;
    auto docs = read_canonical_file(file, &warnings);
    append_warnings(result, file, warnings);
    for (auto& d : docs) result.documents.push_back(std::move(d));
  } catch (const ParseError& e) {
    result.errors.push_back(located(file, e));
  } catch (const std::exception& e) {
    result.errors.push_back(file.string() + ": " + e.what());
  }
}

std::string count_line(std::string_view label, std::size_t observed, std::size_t published) {
  return std::string(label) + " observed " + std::to_string(observed) + ", published " + std::to_string(published);
}

}  // namespace

LoadResult load_corpus(const CorpusEntry& entry) {
  LoadResult result;
  const fs::path path(entry.path);
  std::error_code ec;
  const bool is_dir = fs::is_directory(path, ec);
  if (!is_dir && !fs::exists(path, ec)) {
    result.errors.push_back(entry.path + ": no such file or directory");
    return result;
  }
  switch (entry.format) {
    case CorpusFormat::Canonical:
      for (const auto& f : is_dir ? list_files(path, ".jsonl") : std::vector<fs::path>{path}) load_canonical(result, f);
      break;
    case CorpusFormat::Standoff:
      if (is_dir) {
        for (const auto& f : list_files(path, ".ann")) load_standoff_pair(result, f, entry.source);
      } else {
        auto ann = path;
        ann.replace_extension(".ann");
        load_standoff_pair(result, ann, entry.source);
      }
      break;
    case CorpusFormat::TokenTable:
      for (const auto& f : is_dir ? list_files(path, "") : std::vector<fs::path>{path}) {
        load_token_table(result, f, entry.source);
      }
      break;
  }
  return result;
}

std::vector<LabeledDocument> load_corpora(const RunConfig& config) {
  std::vector<std::vector<LabeledDocument>> parts;
  for (const auto& entry : config.corpora) {
    auto loaded = load_corpus(entry);
    if (!loaded.errors.empty()) throw ParseError(loaded.errors.front());
    parts.push_back(std::move(loaded.documents));
  }
  return merge_corpora(parts);
}

std::vector<PublishedCheck> cross_check(const std::map<SourceCorpus, CorpusStats>& observed) {
  std::vector<PublishedCheck> checks;
  for (const auto& p : published_counts()) {
    PublishedCheck check;
    check.source = p.source;

    auto scale = [&](std::size_t v) { return p.summary_rounded ? v / 1000 : v; };
    const auto claims = scale(p.summary_claims);
    const auto premises = scale(p.summary_premises);
    check.summary_consistent = claims == scale(p.b_claim) && premises == scale(p.b_premise);
    if (!check.summary_consistent) {
      const bool swapped = claims == scale(p.b_premise) && premises == scale(p.b_claim);
      check.finding = "summary table lists " + std::to_string(p.summary_claims) + " claims and " +
                      std::to_string(p.summary_premises) + " premises, BIO table has B-Claim=" +
                      std::to_string(p.b_claim) + " and B-Premise=" + std::to_string(p.b_premise) +
                      (swapped ? " (claim and premise counts swapped)" : "");
    }

    auto it = observed.find(p.source);
    if (it != observed.end()) {
      check.observed = true;
      const auto& s = it->second;
      const std::pair<BioTag, std::size_t> expected[] = {{BioTag::O, p.o},
                                                         {BioTag::BPremise, p.b_premise},
                                                         {BioTag::IPremise, p.i_premise},
                                                         {BioTag::BClaim, p.b_claim},
                                                         {BioTag::IClaim, p.i_claim}};
      for (const auto& [tag, count] : expected) {
        if (s.tag_count(tag) != count) check.mismatches.push_back(count_line(to_string(tag), s.tag_count(tag), count));
      }
      check.counts_match = check.mismatches.empty();
    }
    checks.push_back(std::move(check));
  }
  return checks;
}

std::string render_stats(std::span<const LabeledDocument> corpus) {
  std::map<SourceCorpus, CorpusStats> per_source;
  for (const auto& doc : corpus) per_source[doc.source] += corpus_stats(std::span(&doc, 1));

  std::ostringstream out;
  out << "| Source | Docs | O | B-P | I-P | B-C | I-C | Claims | Premises |\n";
  out << "|---|---|---|---|---|---|---|---|---|\n";
  auto row = [&](std::string_view label, const CorpusStats& s) {
    out << "| " << label << " | " << s.documents << " | " << s.tag_count(BioTag::O) << " | "
        << s.tag_count(BioTag::BPremise) << " | " << s.tag_count(BioTag::IPremise) << " | "
        << s.tag_count(BioTag::BClaim) << " | " << s.tag_count(BioTag::IClaim) << " | "
        << s.span_count(ComponentType::Claim) << " | " << s.span_count(ComponentType::Premise) << " |\n";
  };
  CorpusStats total;
  for (const auto& [source, stats] : per_source) {
    row(to_string(source), stats);
    total += stats;
  }
  row("Total", total);

  out << "\nPublished statistics cross-check:\n";
  for (const auto& c : cross_check(per_source)) {
    out << "- " << to_string(c.source) << ": ";
    if (!c.observed) {
      out << "not in input";
    } else if (c.counts_match) {
      out << "MATCH (all BIO counts equal the published table)";
    } else {
      out << "MISMATCH";
      for (const auto& m : c.mismatches) out << "; " << m;
    }
    out << "\n";
    if (!c.summary_consistent) out << "  FLAG: " << c.finding << "\n";
  }
  return out.str();
}

std::unique_ptr<Backend> make_backend(const RunConfig& config, std::span<const LabeledDocument> corpus) {
  const auto& tmpl = template_by_version(config.template_version);
  const auto& b = config.backend;
  std::shared_ptr<Backend> inner;
  switch (b.kind) {
    case BackendKind::GoldReplay:
    case BackendKind::Perturb: {
      const auto pairs = export_training_pairs(corpus, tmpl, config.budget());
      inner = make_gold_replay_backend(pairs);
      if (b.kind == BackendKind::Perturb) inner = std::make_shared<PerturbingBackend>(inner, b.perturbation);
      break;
    }
    case BackendKind::Replay: {
      auto replay = std::make_shared<ReplayBackend>();
      std::istringstream in(read_file(b.replay_path));
      std::string line;
      std::size_t number = 0;
      while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        try {
          auto pair = training_pair_from_json_line(line);
          replay->prime(std::move(pair.instruction), std::move(pair.target));
        } catch (const ParseError& e) {
          throw ParseError(b.replay_path + ":" + std::to_string(number) + ": " + e.what(), number);
        }
      }
      inner = replay;
      break;
    }
    case BackendKind::Echo:
      inner = std::make_shared<EchoBackend>(tmpl);
      break;
    case BackendKind::Chat: {
      ChatEndpoint endpoint;
      endpoint.url = b.endpoint;
      endpoint.model = b.model;
      endpoint.timeout = std::chrono::seconds(b.timeout_seconds);
      if (!b.api_key_env.empty()) {
        const char* key = std::getenv(b.api_key_env.c_str());
        if (!key || !*key) throw ConfigError("environment variable " + b.api_key_env + " is not set");
        endpoint.api_key = key;
      }
      inner = std::make_shared<ChatCompletionBackend>(std::move(endpoint), config.resolved_backend_id());
      break;
    }
  }
  return std::make_unique<NamedBackend>(std::move(inner), config.resolved_backend_id());
}

std::vector<GenerationRequest> build_requests(const RunConfig& config, std::span<const LabeledDocument> corpus) {
  const auto& tmpl = template_by_version(config.template_version);
  std::vector<GenerationRequest> requests;
  for (const auto& doc : corpus) {
    for (const auto& chunk : chunk_document(doc, config.budget())) {
      requests.push_back({render_prompt(tmpl, chunk), chunk.doc_id, chunk.index, tmpl.version_id});
    }
  }
  return requests;
}

PredictSummary predict(const RunConfig& config, std::span<const LabeledDocument> corpus, Backend& backend,
                       TranscriptStore& store) {
  const auto requests = build_requests(config, corpus);
  const RetryPolicy retry{config.backend.retries, std::chrono::milliseconds(config.backend.backoff_ms)};
  const auto items = run_batch(requests, config.decoding, backend, store, config.backend.parallelism, retry);
  PredictSummary summary;
  summary.chunks = requests.size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].record) {
      summary.failures.push_back(requests[i].doc_id + "#" + std::to_string(requests[i].chunk_index) + ": " +
                                 items[i].error);
    } else if (items[i].from_cache) {
      ++summary.cached;
    } else {
      ++summary.generated;
    }
  }
  return summary;
}

Evaluation evaluate_records(const RunConfig& config, std::span<const LabeledDocument> corpus,
                            std::span<const GenerationRecord> records, bool allow_partial) {
  const auto& tmpl = template_by_version(config.template_version);
  const auto backend_id = config.resolved_backend_id();

  std::unordered_map<std::string, const GenerationRecord*> by_hash;
  std::map<std::pair<std::string, std::size_t>, const GenerationRecord*> by_chunk;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    by_hash[r.prompt_hash] = &r;
    by_chunk[{r.doc_id, r.chunk_index}] = &r;
  }

  Evaluation ev;
  ev.metadata.template_version = tmpl.version_id;
  ev.metadata.backend_id = backend_id;
  ev.metadata.params = config.decoding;
  ev.metadata.config_hash = config_hash(config);
  ev.metadata.jaccard_threshold = config.jaccard_threshold;
  ev.metadata.parse_mode = config.parse_mode == ParseMode::Strict ? "strict" : "lenient";

  const ClassifyOptions classify{config.jaccard_threshold};
  std::vector<std::vector<BioTag>> gold, predicted;
  std::vector<std::string> names;
  std::vector<DiscrepancyRecord> all_discrepancies;

  for (const auto& doc : corpus) {
    gold.push_back(spans_to_bio(doc.tokens.size(), doc.spans));
    names.push_back(qualified_id(doc));
    auto& pred = predicted.emplace_back();
    pred.reserve(doc.tokens.size());
    for (const auto& chunk : chunk_document(doc, config.budget())) {
      const auto view = chunk_view(doc, chunk);
      const auto hash = prompt_hash(render_prompt(tmpl, chunk), config.decoding, backend_id, tmpl.version_id);
      const GenerationRecord* record = nullptr;
      if (auto it = by_hash.find(hash); it != by_hash.end()) {
        record = it->second;
      } else if (auto jt = by_chunk.find({chunk.doc_id, chunk.index}); jt != by_chunk.end()) {
        record = jt->second;
      }
      const auto where = chunk.doc_id + "#" + std::to_string(chunk.index);
      if (!record) {
        ev.missing.push_back(where);
        pred.insert(pred.end(), chunk.token_count(), BioTag::O);
        continue;
      }
      ParseOutcome parsed;
      try {
        parsed = decode_xml(record->output, config.parse_mode);
      } catch (const ParseError&) {
        ++ev.metadata.parse_failures;
        pred.insert(pred.end(), chunk.token_count(), BioTag::O);
        continue;
      }
      auto aligned = align_generation(view, parsed, classify);
      pred.insert(pred.end(), aligned.projected_bio.begin(), aligned.projected_bio.end());
      all_discrepancies.insert(all_discrepancies.end(), aligned.discrepancies.begin(), aligned.discrepancies.end());
      ev.alignment_lines.push_back(alignment_export_line(chunk.doc_id, chunk.index, aligned));
      ev.alignments.push_back({chunk.doc_id, chunk.index, aligned.cost, compact_ops(aligned.ops),
                               std::move(aligned.discrepancies)});
    }
  }
  if (!ev.missing.empty() && !allow_partial) {
    throw ValidationError("transcript has no usable record for " + std::to_string(ev.missing.size()) +
                          " chunk(s), first " + ev.missing.front() + "; rerun predict or pass --allow-partial");
  }
  ev.metadata.missing_chunks = ev.missing.size();
  ev.report = evaluate(gold, predicted, names, config.evaluation);
  add_discrepancies(ev.report, all_discrepancies);
  return ev;
}

Evaluation run_pipeline(const RunConfig& config, std::span<const LabeledDocument> corpus, Backend& backend,
                        TranscriptStore& store) {
  const auto summary = predict(config, corpus, backend, store);
  if (!summary.failures.empty()) {
    throw BackendError(std::to_string(summary.failures.size()) + " chunk(s) failed, first " + summary.failures.front(),
                       false);
  }
  const auto records = store.records();
  return evaluate_records(config, corpus, records);
}

void write_reports(const Evaluation& evaluation, const fs::path& dir) {
  fs::create_directories(dir);
  auto write = [&](const fs::path& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << content;
  };
  write("report.json",
        render_report(evaluation.report, evaluation.alignments, ReportFormat::Machine, evaluation.metadata));
  write("report.md", render_report(evaluation.report, evaluation.alignments, ReportFormat::Human, evaluation.metadata));
  std::string lines;
  for (const auto& l : evaluation.alignment_lines) lines += l + "\n";
  write("alignments.jsonl", lines);
}

// ---------------------------------------------------------------------------
// Command line

namespace {

// Flags that override fields of the run configuration.
struct Overrides {
  std::string template_version;
  std::size_t budget = 0;
  double safety_factor = 0;
  std::string backend_kind, endpoint, model, backend_id, api_key_env;
  std::size_t parallelism = 0, retries = 0;
  std::vector<double> ratios;
  std::uint64_t seed = 0;
  double jaccard = 0;
  bool strict = false, macro_excludes_o = false, exclude_zero_support = false;
  std::string output_dir;

  std::map<std::string, std::vector<CLI::Option*>> options;

  void add_chunking(CLI::App* app) {
    options["template"].push_back(app->add_option("--template", template_version, "Prompt template version"));
    options["budget"].push_back(app->add_option("--budget", budget, "Chunk token budget before the safety factor"));
    options["safety"].push_back(app->add_option("--safety-factor", safety_factor, "Fraction of the budget used per chunk"));
  }
  void add_backend(CLI::App* app) {
    options["backend"].push_back(app->add_option("--backend", backend_kind, "Backend kind")->check(
            CLI::IsMember({"chat", "replay", "gold-replay", "echo", "perturb"})));
    options["endpoint"].push_back(app->add_option("--endpoint", endpoint, "Chat completion endpoint URL"));
    options["model"].push_back(app->add_option("--model", model, "Model name sent to the endpoint"));
    options["backend_id"].push_back(app->add_option("--backend-id", backend_id, "Backend id recorded in transcripts"));
    options["api_key_env"].push_back(app->add_option("--api-key-env", api_key_env, "Name of the environment variable holding the credential"));
    options["parallelism"].push_back(app->add_option("--parallelism", parallelism, "Concurrent backend requests"));
    options["retries"].push_back(app->add_option("--retries", retries, "Retries per chunk on transient errors"));
  }
  void add_split(CLI::App* app) {
    options["ratios"].push_back(app->add_option("--ratios", ratios, "train,dev,test ratios")->delimiter(',')->expected(3));
    options["seed"].push_back(app->add_option("--seed", seed, "Split seed"));
  }
  void add_evaluation(CLI::App* app) {
    options["jaccard"].push_back(app->add_option("--jaccard", jaccard, "Jaccard threshold for label refinements"));
    options["strict"].push_back(app->add_flag("--strict", strict, "Strict tag parsing"));
    options["no_o"].push_back(app->add_flag("--macro-excludes-o", macro_excludes_o, "Average macro F1 over component classes"));
    options["zero"].push_back(app->add_flag("--exclude-zero-support", exclude_zero_support,
                                    "Leave zero-support classes out of macro F1"));
  }
  void add_output(CLI::App* app) {
    options["output_dir"].push_back(app->add_option("--out-dir", output_dir, "Output directory"));
  }

  bool given(const std::string& key) const {
    auto it = options.find(key);
    if (it == options.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(), [](const CLI::Option* o) { return o->count() > 0; });
  }

  void apply(RunConfig& c) const {
    if (given("template")) c.template_version = template_version;
    if (given("budget")) c.chunk_budget = budget;
    if (given("safety")) c.safety_factor = safety_factor;
    if (given("backend")) c.backend.kind = *parse_backend_kind(backend_kind);
    if (given("endpoint")) c.backend.endpoint = endpoint;
    if (given("model")) c.backend.model = model;
    if (given("backend_id")) c.backend.backend_id = backend_id;
    if (given("api_key_env")) c.backend.api_key_env = api_key_env;
    if (given("parallelism")) c.backend.parallelism = parallelism;
    if (given("retries")) c.backend.retries = retries;
    if (given("ratios")) c.split_ratios = {ratios.at(0), ratios.at(1), ratios.at(2)};
    if (given("seed")) c.split_seed = seed;
    if (given("jaccard")) c.jaccard_threshold = jaccard;
    if (given("strict") && strict) c.parse_mode = ParseMode::Strict;
    if (given("no_o") && macro_excludes_o) c.evaluation.macro_includes_o = false;
    if (given("zero") && exclude_zero_support) c.evaluation.exclude_zero_support = true;
    if (given("output_dir")) c.output_dir = output_dir;
  }
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::string config_path;
  std::vector<std::string> corpus_paths;
  Overrides overrides;

  RunConfig config() const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    overrides.apply(c);
    c.validate();
    return c;
  }

  // --corpus files (canonical), else the configured corpora.
  std::vector<LabeledDocument> corpus(const RunConfig& c) const {
    if (corpus_paths.empty()) {
      if (c.corpora.empty()) throw ConfigError("no corpus given: pass --corpus or list corpora in the configuration");
      return load_corpora(c);
    }
    std::vector<std::vector<LabeledDocument>> parts;
    for (const auto& p : corpus_paths) {
      auto loaded = load_corpus({p, CorpusFormat::Canonical, SourceCorpus::Synthetic});
      if (!loaded.errors.empty()) throw ParseError(loaded.errors.front());
      for (const auto& w : loaded.warnings) err << "warning: " << w << "\n";
      parts.push_back(std::move(loaded.documents));
    }
    return merge_corpora(parts);
  }
};

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

int cmd_convert(Context& ctx, const std::vector<std::string>& inputs, const std::string& format,
                const std::string& source, const std::string& output) {
  const auto fmt = parse_corpus_format(format);
  const auto src = parse_source_corpus(source);
  if (!fmt) throw ConfigError("unknown format '" + format + "'");
  if (!src) throw ConfigError("unknown source corpus '" + source + "'");
  std::vector<LabeledDocument> docs;
  std::vector<std::string> errors;
  for (const auto& input : inputs) {
    auto loaded = load_corpus({input, *fmt, *src});
    for (const auto& w : loaded.warnings) ctx.err << "warning: " << w << "\n";
    errors.insert(errors.end(), loaded.errors.begin(), loaded.errors.end());
    for (auto& d : loaded.documents) docs.push_back(std::move(d));
  }
  const std::vector<std::vector<LabeledDocument>> parts{std::move(docs)};
  const auto merged = merge_corpora(parts);
  std::ostringstream body;
  write_canonical(body, merged, *fmt == CorpusFormat::TokenTable);
  write_text(output, body.str());
  ctx.out << "wrote " << merged.size() << " document(s) to " << output << "\n";
  for (const auto& e : errors) ctx.err << "error: " << e << "\n";
  return errors.empty() ? kExitOk : kExitData;
}

int cmd_stats(Context& ctx) {
  const auto config = ctx.config();
  ctx.out << render_stats(ctx.corpus(config));
  return kExitOk;
}

int cmd_split(Context& ctx) {
  const auto config = ctx.config();
  const auto docs = ctx.corpus(config);
  const auto parts = split(docs, config.split_ratios, config.split_seed);
  const fs::path dir(config.output_dir);
  const std::pair<const char*, const std::vector<LabeledDocument>*> files[] = {
      {"train.jsonl", &parts.train}, {"dev.jsonl", &parts.dev}, {"test.jsonl", &parts.test}};
  for (const auto& [name, part] : files) {
    std::ostringstream body;
    write_canonical(body, *part, true);
    write_text(dir / name, body.str());
    ctx.out << name << ": " << part->size() << " document(s)\n";
  }
  return kExitOk;
}

int cmd_export(Context& ctx, const std::string& output) {
  const auto config = ctx.config();
  const auto docs = ctx.corpus(config);
  const auto pairs = export_training_pairs(docs, template_by_version(config.template_version), config.budget());
  std::string body;
  for (const auto& p : pairs) body += to_json_line(p) + "\n";
  write_text(output.empty() ? fs::path(config.output_dir) / "train_pairs.jsonl" : fs::path(output), body);
  ctx.out << "wrote " << pairs.size() << " training pair(s)\n";
  return kExitOk;
}

fs::path transcript_path(const RunConfig& config, const std::string& flag) {
  return flag.empty() ? fs::path(config.output_dir) / "transcript.jsonl" : fs::path(flag);
}

int cmd_predict(Context& ctx, const std::string& transcript) {
  const auto config = ctx.config();
  const auto docs = ctx.corpus(config);
  auto backend = make_backend(config, docs);
  const auto path = transcript_path(config, transcript);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  TranscriptStore store(path);
  if (store.recovered_torn_tail()) ctx.err << "warning: discarded a torn trailing record in " << path << "\n";
  const auto summary = predict(config, docs, *backend, store);
  ctx.out << "chunks: " << summary.chunks << ", generated: " << summary.generated << ", cached: " << summary.cached
          << ", failed: " << summary.failures.size() << "\n";
  for (const auto& f : summary.failures) ctx.err << "failed: " << f << "\n";
  return summary.failures.empty() ? kExitOk : kExitBackend;
}

int cmd_evaluate(Context& ctx, const std::string& transcript, bool allow_partial) {
  const auto config = ctx.config();
  const auto docs = ctx.corpus(config);
  const auto records = read_transcript(transcript_path(config, transcript));
  const auto ev = evaluate_records(config, docs, records, allow_partial);
  write_reports(ev, config.output_dir);
  if (!ev.missing.empty()) ctx.err << "warning: " << ev.missing.size() << " chunk(s) missing, predicted as O\n";
  ctx.out << "macro F1 " << ev.report.macro_f1 << ", accuracy " << ev.report.accuracy << "; reports in "
          << config.output_dir << "\n";
  return kExitOk;
}

int cmd_report(Context& ctx, const std::string& input, const std::string& alignments, const std::string& format) {
  RunMetadata meta;
  const auto report = report_from_machine_json(read_file(input), &meta);
  std::vector<AlignmentExport> exports;
  if (!alignments.empty()) {
    std::istringstream in(read_file(alignments));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) exports.push_back(alignment_export_from_line(line));
    }
  }
  ctx.out << render_report(report, exports, format == "machine" ? ReportFormat::Machine : ReportFormat::Human, meta);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Argument component detection toolkit"};
  app.require_subcommand(1);
  Context ctx{out, err, {}, {}, {}};

  auto add_common = [&](CLI::App* sub, bool corpus) {
    sub->add_option("--config", ctx.config_path, "Run configuration (JSON)");
    if (corpus) sub->add_option("--corpus", ctx.corpus_paths, "Canonical corpus file(s)");
  };

  std::vector<std::string> inputs;
  std::string format = "canonical", source = "Synthetic", output, transcript, alignments, report_format = "human";
  bool allow_partial = false;

  auto* convert = app.add_subcommand("convert", "Convert annotated corpora to canonical JSONL");
  convert->add_option("inputs", inputs, "Input files or directories");
  convert->add_option("--format", format, "Input format")->check(CLI::IsMember({"canonical", "standoff", "token-table"}));
  convert->add_option("--source", source, "Source corpus name");
  convert->add_option("-o,--output", output, "Output file")->required();

  auto* stats = app.add_subcommand("stats", "BIO statistics and published-table cross-check");
  add_common(stats, true);

  auto* split_cmd = app.add_subcommand("split", "Seeded train/dev/test split");
  add_common(split_cmd, true);
  ctx.overrides.add_split(split_cmd);
  ctx.overrides.add_output(split_cmd);

  auto* export_cmd = app.add_subcommand("export-train", "Export instruction tuning pairs");
  add_common(export_cmd, true);
  ctx.overrides.add_chunking(export_cmd);
  ctx.overrides.add_output(export_cmd);
  export_cmd->add_option("-o,--output", output, "Output file (default <out-dir>/train_pairs.jsonl)");

  auto* predict_cmd = app.add_subcommand("predict", "Generate tagged outputs for every chunk");
  add_common(predict_cmd, true);
  ctx.overrides.add_chunking(predict_cmd);
  ctx.overrides.add_backend(predict_cmd);
  ctx.overrides.add_output(predict_cmd);
  predict_cmd->add_option("--transcript", transcript, "Transcript file (default <out-dir>/transcript.jsonl)");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Align, score and write reports");
  add_common(evaluate_cmd, true);
  ctx.overrides.add_chunking(evaluate_cmd);
  ctx.overrides.add_backend(evaluate_cmd);
  ctx.overrides.add_evaluation(evaluate_cmd);
  ctx.overrides.add_output(evaluate_cmd);
  evaluate_cmd->add_option("--transcript", transcript, "Transcript file (default <out-dir>/transcript.jsonl)");
  evaluate_cmd->add_flag("--allow-partial", allow_partial, "Score missing chunks as all-O");

  auto* report_cmd = app.add_subcommand("report", "Render a machine report");
  report_cmd->add_option("--input", output, "report.json")->required();
  report_cmd->add_option("--alignments", alignments, "alignments.jsonl for the discrepancy section");
  report_cmd->add_option("--format", report_format, "human or machine")->check(CLI::IsMember({"human", "machine"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (convert->parsed()) return cmd_convert(ctx, inputs, format, source, output);
    if (stats->parsed()) return cmd_stats(ctx);
    if (split_cmd->parsed()) return cmd_split(ctx);
    if (export_cmd->parsed()) return cmd_export(ctx, output);
    if (predict_cmd->parsed()) return cmd_predict(ctx, transcript);
    if (evaluate_cmd->parsed()) return cmd_evaluate(ctx, transcript, allow_partial);
    if (report_cmd->parsed()) return cmd_report(ctx, output, alignments, report_format);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const ParseError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ValidationError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const RangeError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace acd
