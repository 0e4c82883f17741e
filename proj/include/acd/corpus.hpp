#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace acd {

// A token of a document. Offsets are byte offsets into LabeledDocument::text
// (UTF-8); file formats carry code point offsets and convert at the boundary.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive

  bool operator==(const Token&) const = default;
};

enum class ComponentType : std::uint8_t { Claim, Premise };

std::string_view to_string(ComponentType kind);
std::optional<ComponentType> parse_component_type(std::string_view name);

// Inclusive token interval carrying a component type.
struct ComponentSpan {
  std::size_t first = 0;
  std::size_t last = 0;
  ComponentType kind = ComponentType::Claim;

  std::size_t size() const { return last - first + 1; }
  bool operator==(const ComponentSpan&) const = default;
};

enum class SourceCorpus : std::uint8_t { USElecDeb60To16, PersuasiveEssays, WebDiscourse, Synthetic };

std::string_view to_string(SourceCorpus source);
std::optional<SourceCorpus> parse_source_corpus(std::string_view name);

struct LabeledDocument {
  std::string id;
  SourceCorpus source = SourceCorpus::Synthetic;
  std::string text;
  std::vector<Token> tokens;
  std::vector<ComponentSpan> spans;

  // Throws ValidationError when a token or span invariant is broken.
  void validate() const;
};

// Identifier that is unique across merged corpora: "<source>/<id>".
std::string qualified_id(const LabeledDocument& doc);

// Tokenizes `text` and attaches `spans` (token indices). Validates the result.
LabeledDocument make_document(std::string id, SourceCorpus source, std::string text,
                              std::vector<ComponentSpan> spans);

// Class order follows the usual reporting layout: B-C, I-C, B-P, I-P, O.
enum class BioTag : std::uint8_t { BClaim, IClaim, BPremise, IPremise, O };
inline constexpr std::size_t kBioTagCount = 5;
inline constexpr std::array<BioTag, kBioTagCount> kAllBioTags = {
    BioTag::BClaim, BioTag::IClaim, BioTag::BPremise, BioTag::IPremise, BioTag::O};

std::string_view to_string(BioTag tag);
std::optional<BioTag> parse_bio_tag(std::string_view name);
BioTag begin_tag(ComponentType kind);
BioTag inside_tag(ComponentType kind);
std::optional<ComponentType> tag_kind(BioTag tag);

// True iff every I-x follows B-x or I-x.
bool is_valid_bio(std::span<const BioTag> tags);
std::vector<BioTag> spans_to_bio(std::size_t token_count, std::span<const ComponentSpan> spans);

enum class RepairMode : std::uint8_t { Lenient, Strict };

struct Diagnostic {
  std::size_t line = 0;  // 1-based line or token row, 0 when not line related
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

struct BioDecoding {
  std::vector<ComponentSpan> spans;
  std::vector<Diagnostic> repairs;  // line = 1-based token position
};

// Collects BIO runs into spans. An orphan I-x starts a new span in lenient
// mode (and is logged) and raises ParseError in strict mode.
BioDecoding bio_to_spans(std::span<const BioTag> tags, RepairMode mode = RepairMode::Lenient);

// Whitespace splitting, then leading and trailing punctuation split off one
// character at a time. Internal punctuation (apostrophes, hyphens) stays.
std::vector<Token> tokenize(std::string_view text);

struct IngestResult {
  LabeledDocument document;
  std::vector<Diagnostic> warnings;
};

// Component span given as a code point interval [begin, end).
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  ComponentType kind = ComponentType::Claim;

  bool operator==(const CharSpan&) const = default;
};

// Maps byte-offset spans onto `tokens`, widening spans that cut a token.
// Spans covering no token, and spans overlapping an earlier one, are dropped.
// Every adjustment appends a warning.
std::vector<ComponentSpan> snap_to_tokens(std::span<const Token> tokens, std::span<const CharSpan> byte_spans,
                                          std::vector<Diagnostic>& warnings);

// Maps an annotation label from the source corpora onto the two component
// types; nullopt for labels outside the argumentative scheme.
std::optional<ComponentType> map_annotation_label(std::string_view label);

// Brat-style standoff: "T<n>\t<Type> <start> <end>\t<surface>" lines with code
// point offsets. Non text-bound lines (relations, attributes, notes) are
// ignored. Throws ParseError (with line) or RangeError.
IngestResult parse_standoff(std::string id, SourceCorpus source, std::string text,
                            std::string_view annotations);

struct TokenRow {
  std::string text;
  BioTag tag = BioTag::O;
};

// Rebuilds the text from token rows and attaches BIO runs as spans. Row
// tokens are kept as the document's tokens.
IngestResult parse_token_table(std::string id, SourceCorpus source, std::span<const TokenRow> rows,
                               RepairMode mode = RepairMode::Lenient);

// Joins tokens with single spaces, except before closing punctuation.
std::string detokenize(std::span<const std::string> tokens, std::vector<Token>* layout = nullptr);

struct CorpusStats {
  std::size_t documents = 0;
  std::array<std::size_t, kBioTagCount> tag_counts{};
  std::array<std::size_t, 2> span_counts{};  // indexed by ComponentType

  std::size_t tag_count(BioTag tag) const { return tag_counts[static_cast<std::size_t>(tag)]; }
  std::size_t span_count(ComponentType kind) const { return span_counts[static_cast<std::size_t>(kind)]; }
  std::size_t token_count() const;

  CorpusStats& operator+=(const CorpusStats& other);
  bool operator==(const CorpusStats&) const = default;
};

CorpusStats corpus_stats(std::span<const LabeledDocument> corpus);

// Concatenates corpora in order. Documents keep their ids; uniqueness is
// checked on qualified_id and a collision throws ValidationError.
std::vector<LabeledDocument> merge_corpora(std::span<const std::vector<LabeledDocument>> corpora);

using SplitRatios = std::array<double, 3>;

struct CorpusSplit {
  std::vector<LabeledDocument> train;
  std::vector<LabeledDocument> dev;
  std::vector<LabeledDocument> test;
};

// Split sizes for `n` documents: floor of n * ratio, leftover documents go to
// the largest fractional parts (ties to the earlier split), then every split
// with a nonzero ratio is topped up to one document from the largest split.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios);

// Document-level seeded partition. Documents keep corpus order within a split.
CorpusSplit split(std::span<const LabeledDocument> corpus, const SplitRatios& ratios, std::uint64_t seed);

// Published statistics of the source corpora, used by the stats cross-check.
struct PublishedCounts {
  SourceCorpus source;
  // Per-tag counts from the BIO statistics table (O, B-P, I-P, B-C, I-C).
  std::size_t o, b_premise, i_premise, b_claim, i_claim;
  // Component counts from the corpus summary table.
  std::size_t summary_claims, summary_premises;
  bool summary_rounded;  // summary counts are given in thousands
};

std::span<const PublishedCounts> published_counts();

}  // namespace acd
