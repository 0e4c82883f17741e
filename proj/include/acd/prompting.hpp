#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acd/corpus.hpp"

namespace acd {

struct PromptTemplate {
  std::string instruction_text;  // contains `placeholder` exactly once, "{format}" at most once
  std::string format_clause;
  std::string version_id;
  std::string placeholder = "{input}";

  // Throws ValidationError unless the placeholder occurs exactly once.
  void validate() const;
};

// Built-in instruction wording, versioned so transcripts record which ran.
const PromptTemplate& default_template();
// Looks up a built-in template by version id; throws ConfigError if unknown.
const PromptTemplate& template_by_version(std::string_view version_id);

struct Chunk {
  std::string doc_id;  // qualified_id of the source document
  std::size_t index = 0;
  std::size_t first_token = 0;
  std::size_t last_token = 0;  // inclusive
  std::string text;            // document text from first to last token

  std::size_t token_count() const { return last_token - first_token + 1; }
};

inline constexpr std::size_t kDefaultChunkBudget = 1024;
inline constexpr double kDefaultSafetyFactor = 0.6;

// Token budget after the safety factor, never below 1.
std::size_t effective_budget(std::size_t budget, double safety_factor);

// Sentence token ranges: a sentence ends on a token ending in . ! or ?
// that is followed by whitespace or the end of text.
std::vector<std::pair<std::size_t, std::size_t>> sentence_ranges(const LabeledDocument& doc);

// Greedily packs whole sentences into chunks of at most `budget` tokens.
// Sentences joined by a gold span are packed as one unit so that no span
// crosses a chunk boundary. A unit longer than the budget throws
// ValidationError naming the document and byte offset. Documents without
// tokens yield no chunks.
std::vector<Chunk> chunk_document(const LabeledDocument& doc, std::size_t budget = kDefaultChunkBudget);

// The chunk as a standalone document: text, rebased tokens and the spans it
// contains, re-indexed.
LabeledDocument chunk_view(const LabeledDocument& doc, const Chunk& chunk);

std::string render_prompt(const PromptTemplate& tmpl, std::string_view chunk_text);
inline std::string render_prompt(const PromptTemplate& tmpl, const Chunk& chunk) {
  return render_prompt(tmpl, chunk.text);
}

// Inverse of render_prompt for the same template; empty when `prompt` was not
// rendered from it.
std::optional<std::string> extract_input(const PromptTemplate& tmpl, std::string_view prompt);

struct TrainingPair {
  std::string doc_id;
  std::size_t chunk_index = 0;
  std::string instruction;  // fully rendered prompt
  std::string input;        // plain chunk text
  std::string target;       // tagged chunk text
  std::string template_version;
};

// One pair per chunk, in corpus and chunk order.
std::vector<TrainingPair> export_training_pairs(std::span<const LabeledDocument> corpus, const PromptTemplate& tmpl,
                                                std::size_t budget);

// {doc_id, chunk_index, instruction, input, target, template_version}
std::string to_json_line(const TrainingPair& pair);
TrainingPair training_pair_from_json_line(std::string_view line);

}  // namespace acd
