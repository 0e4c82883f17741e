#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "acd/align.hpp"
#include "acd/config.hpp"
#include "acd/corpus.hpp"
#include "acd/eval.hpp"
#include "acd/inference.hpp"

namespace acd {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitBackend = 3 };

struct LoadResult {
  std::vector<LabeledDocument> documents;
  std::vector<std::string> errors;    // "<file>:<line>: message"
  std::vector<std::string> warnings;
};

// Loads a file or directory in the given format. Parse errors are collected
// per file; documents from files that parsed are still returned.
LoadResult load_corpus(const CorpusEntry& entry);

// Every configured corpus, merged in order. Throws ParseError on the first
// collected error.
std::vector<LabeledDocument> load_corpora(const RunConfig& config);

// Published-table cross-check for one source corpus.
struct PublishedCheck {
  SourceCorpus source = SourceCorpus::Synthetic;
  bool observed = false;      // the corpus is present in the input
  bool counts_match = false;  // observed BIO counts equal the published ones
  std::vector<std::string> mismatches;
  bool summary_consistent = true;  // summary counts agree with the published B- tag counts
  std::string finding;             // explanation when they do not
};

std::vector<PublishedCheck> cross_check(const std::map<SourceCorpus, CorpusStats>& observed);

// Per-source and total BIO counts followed by the cross-check.
std::string render_stats(std::span<const LabeledDocument> corpus);

std::unique_ptr<Backend> make_backend(const RunConfig& config, std::span<const LabeledDocument> corpus);

// One request per chunk, in corpus and chunk order.
std::vector<GenerationRequest> build_requests(const RunConfig& config, std::span<const LabeledDocument> corpus);

struct PredictSummary {
  std::size_t chunks = 0;
  std::size_t generated = 0;
  std::size_t cached = 0;
  std::vector<std::string> failures;  // "<doc_id>#<chunk>: error"
};

PredictSummary predict(const RunConfig& config, std::span<const LabeledDocument> corpus, Backend& backend,
                       TranscriptStore& store);

struct Evaluation {
  EvalReport report;
  RunMetadata metadata;
  std::vector<AlignmentExport> alignments;
  std::vector<std::string> alignment_lines;
  std::vector<std::string> missing;  // chunks without a usable record
};

// Scores transcript records against the corpus. A record is found by prompt
// hash, else by (doc_id, chunk_index). Missing chunks throw ValidationError
// unless `allow_partial`, in which case they are predicted all-O.
Evaluation evaluate_records(const RunConfig& config, std::span<const LabeledDocument> corpus,
                            std::span<const GenerationRecord> records, bool allow_partial = false);

// predict followed by evaluate_records on the store's contents.
Evaluation run_pipeline(const RunConfig& config, std::span<const LabeledDocument> corpus, Backend& backend,
                        TranscriptStore& store);

// report.json, report.md and alignments.jsonl.
void write_reports(const Evaluation& evaluation, const std::filesystem::path& dir);

// Command-line entry point; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace acd
