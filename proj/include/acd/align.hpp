#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acd/corpus.hpp"
#include "acd/tagcodec.hpp"

namespace acd {

enum class EditKind : std::uint8_t { Match, Substitute, Delete, Insert };

std::string_view to_string(EditKind kind);

struct EditOp {
  EditKind kind = EditKind::Match;
  std::optional<std::size_t> source;     // absent for Insert
  std::optional<std::size_t> generated;  // absent for Delete
  double cost = 0;

  bool operator==(const EditOp&) const = default;
};

// Case folding plus typographic punctuation folding.
std::string normalize_token(std::string_view token);

// Levenshtein distance over code points.
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);

struct AlignmentCosts {
  double substitute = 1.0;
  double near_substitute = 0.25;  // normalized forms within one edit
  double insert = 1.0;
  double remove = 1.0;
};

// Cost of aligning two tokens on the diagonal: 0 when their normalized forms
// are equal, near_substitute when they are one edit apart, else substitute.
double pair_cost(std::string_view source, std::string_view generated, const AlignmentCosts& costs = {});

struct Alignment {
  std::vector<EditOp> ops;
  double cost = 0;
};

// Minimum-cost global alignment. Among optimal scripts the walk from the
// start prefers Match/Substitute, then Delete, then Insert at every step.
Alignment align_tokens(std::span<const std::string> source, std::span<const std::string> generated,
                       const AlignmentCosts& costs = {});
Alignment align_tokens(std::span<const Token> source, std::span<const Token> generated,
                       const AlignmentCosts& costs = {});

// Transports component labels from generated tokens onto source tokens.
// Match/Substitute copy the label of the generated token; a deleted source
// token takes the label of its nearest aligned neighbours when both sides
// belong to the same generated component, else O; inserted tokens carry
// nothing. B/I tags are rebuilt so each projected component starts with B.
std::vector<BioTag> project_labels(std::span<const EditOp> ops, std::size_t source_count,
                                   std::span<const ComponentSpan> generated_spans);

enum class DiscrepancyKind : std::uint8_t {
  LabelRefinement,
  LexicalAdjustment,
  Hallucination,
  Discovery,
  Miss,
  BoundaryShift,
};
inline constexpr std::size_t kDiscrepancyKindCount = 6;

std::string_view to_string(DiscrepancyKind kind);
std::optional<DiscrepancyKind> parse_discrepancy_kind(std::string_view name);

struct TokenRange {
  std::size_t first = 0;
  std::size_t last = 0;

  bool operator==(const TokenRange&) const = default;
};

struct DiscrepancyRecord {
  DiscrepancyKind kind;
  std::optional<TokenRange> source;     // source token range
  std::optional<TokenRange> generated;  // generated token range
  std::string note;
};

struct ClassifyOptions {
  double jaccard_threshold = 0.8;
};

// Span-level outcome of comparing gold and projected components.
struct SpanMatching {
  std::vector<ComponentSpan> projected;
  std::vector<std::optional<std::size_t>> gold_to_projected;
  std::vector<std::optional<std::size_t>> projected_to_gold;
};

// One-to-one matching by largest token overlap (ties: earlier gold, then
// earlier projected span). Only overlapping pairs are matched.
SpanMatching match_spans(std::span<const ComponentSpan> gold, std::span<const ComponentSpan> projected);

// Span records: a matched pair with different kinds and token Jaccard at or
// above the threshold is a LabelRefinement; any other inexact matched pair a
// BoundaryShift; unmatched gold spans are Misses and unmatched projected
// spans Discoveries. Edit records: each run of Inserts is a Hallucination;
// Substitutes, Deletes and Matches whose raw text differs are
// LexicalAdjustments.
std::vector<DiscrepancyRecord> classify_discrepancies(const LabeledDocument& gold, std::span<const BioTag> projected,
                                                      std::span<const EditOp> ops,
                                                      std::span<const Token> generated_tokens,
                                                      const ClassifyOptions& options = {});

struct AlignmentReport {
  std::vector<EditOp> ops;
  std::vector<BioTag> projected_bio;
  double cost = 0;
  std::vector<DiscrepancyRecord> discrepancies;
};

// Full comparison of a parsed generation against the gold chunk.
AlignmentReport align_generation(const LabeledDocument& gold, const ParseOutcome& generated,
                                 const ClassifyOptions& options = {}, const AlignmentCosts& costs = {});

// Run-length op string, e.g. "M4 I1 M3 S1 D1".
std::string compact_ops(std::span<const EditOp> ops);

// {doc_id, chunk_index, cost, ops, discrepancies: [{kind, source, generated, note}]}
std::string alignment_export_line(std::string_view doc_id, std::size_t chunk_index, const AlignmentReport& report);

struct AlignmentExport {
  std::string doc_id;
  std::size_t chunk_index = 0;
  double cost = 0;
  std::string ops;
  std::vector<DiscrepancyRecord> discrepancies;
};

AlignmentExport alignment_export_from_line(std::string_view line);

}  // namespace acd
