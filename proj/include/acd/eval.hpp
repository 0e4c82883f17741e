#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acd/align.hpp"
#include "acd/corpus.hpp"
#include "acd/inference.hpp"

namespace acd {

struct ClassScores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;  // 2PR/(P+R), 0 when P+R == 0
  std::size_t support = 0;    // gold tokens of the class
  std::size_t predicted = 0;  // predicted tokens of the class
};

struct EvalOptions {
  bool macro_includes_o = true;
  bool exclude_zero_support = false;  // drop zero-support classes from the macro mean
};

// Exact (first, last, kind) span matching. Reported alongside the token
// metrics, never mixed into them.
struct SpanScores {
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

using ConfusionMatrix = std::array<std::array<std::size_t, kBioTagCount>, kBioTagCount>;  // [gold][predicted]

struct EvalReport {
  ConfusionMatrix confusion{};
  std::array<ClassScores, kBioTagCount> class_scores{};
  double macro_f1 = 0;
  double accuracy = 0;  // token accuracy: trace / total
  SpanScores span_scores;
  std::array<std::size_t, kDiscrepancyKindCount> discrepancy_tally{};
  std::size_t documents = 0;
  EvalOptions options;
  std::vector<std::string> flags;

  std::size_t total_tokens() const;
  const ClassScores& scores(BioTag tag) const { return class_scores[static_cast<std::size_t>(tag)]; }
  std::size_t tally(DiscrepancyKind kind) const { return discrepancy_tally[static_cast<std::size_t>(kind)]; }
};

// Unweighted mean of per-class F1 values.
double macro_f1(std::span<const double> class_f1);

// Recomputes every score and flag from the confusion matrix and span counts.
void finalize(EvalReport& report);

// Token-level evaluation of per-document BIO sequences. Throws
// ValidationError naming the document when lengths differ. `names` labels
// documents in errors and may be empty.
EvalReport evaluate(std::span<const std::vector<BioTag>> gold, std::span<const std::vector<BioTag>> predicted,
                    std::span<const std::string> names = {}, const EvalOptions& options = {});

// Sums counts (confusion, span counts, tallies) and recomputes the scores.
EvalReport aggregate(std::span<const EvalReport> reports);

void add_discrepancies(EvalReport& report, std::span<const DiscrepancyRecord> records);

struct RunMetadata {
  std::string template_version;
  std::string backend_id;
  DecodingParams params;
  std::string config_hash;
  double jaccard_threshold = 0.8;
  std::string parse_mode = "lenient";
  std::size_t missing_chunks = 0;
  std::size_t parse_failures = 0;  // strict mode: outputs predicted all-O
};

enum class ReportFormat { Machine, Human };

// Machine: JSON document with every EvalReport field plus run metadata.
// Human: markdown with the per-class table (B-C, I-C, B-P, I-P, O,
// F1-Macro), confusion matrix, span-level scores and a discrepancy section.
std::string render_report(const EvalReport& report, std::span<const AlignmentExport> alignments, ReportFormat format,
                          const RunMetadata& metadata = {});

// Reads a machine report back (counts and options; scores are recomputed).
EvalReport report_from_machine_json(std::string_view json, RunMetadata* metadata = nullptr);

}  // namespace acd
