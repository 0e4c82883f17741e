#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "acd/corpus.hpp"
#include "acd/errors.hpp"
#include "acd/tagcodec.hpp"

namespace acd::testing {

// Words chosen to stress the tokenizer and the tag codec: internal
// apostrophes and hyphens, typographic quotes, non-ASCII letters, markup
// look-alikes and stray brackets.
inline const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> pool = {
      "we",       "should",  "ban",     "cars",      "don't",   "well-known", "U.S.",      "(see",
      "note)",    "\"quoted\"", "café",  "naïve",     "—",       "…",          "3.5%",      "<b>",
      "a<b",      "x>y",     "“smart”", "e.g.,",     "it's",    "Prices,",    "people",    "taxes",
      "<claims>", "Ünïcödé", "—dash—",  "'single'",  "&amp;",   "[1]",        "co-op",     "reality",
      "premise",  "claim",   "ΑΒΓ",     "привет",    "42",      "well,",      "so;",       "yes:",
  };
  return pool;
}

inline std::string random_text(std::mt19937_64& rng, std::size_t min_words, std::size_t max_words) {
  const auto& pool = word_pool();
  std::uniform_int_distribution<std::size_t> count(min_words, max_words);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::uniform_int_distribution<int> sep(0, 9);
  std::uniform_int_distribution<int> end(0, 5);
  std::string text;
  const auto n = count(rng);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      const int s = sep(rng);
      text += s == 0 ? "  " : (s == 1 ? "\n" : " ");
    }
    text += pool[pick(rng)];
    const int e = end(rng);
    if (e == 0) text += ".";
    if (e == 1 && i + 1 < n) text += ",";
  }
  return text;
}

// Non-overlapping random spans over `token_count` tokens.
inline std::vector<ComponentSpan> random_spans(std::mt19937_64& rng, std::size_t token_count, std::size_t max_spans) {
  std::vector<ComponentSpan> spans;
  if (token_count == 0) return spans;
  std::uniform_int_distribution<std::size_t> how_many(0, max_spans);
  std::vector<bool> used(token_count, false);
  const auto wanted = how_many(rng);
  std::uniform_int_distribution<std::size_t> start(0, token_count - 1);
  std::uniform_int_distribution<std::size_t> length(1, 6);
  std::bernoulli_distribution claim(0.5);
  for (std::size_t attempt = 0; attempt < wanted * 4 && spans.size() < wanted; ++attempt) {
    const auto first = start(rng);
    const auto last = std::min(token_count - 1, first + length(rng) - 1);
    bool free = true;
    for (auto i = first; i <= last; ++i) free = free && !used[i];
    if (!free) continue;
    for (auto i = first; i <= last; ++i) used[i] = true;
    spans.push_back({first, last, claim(rng) ? ComponentType::Claim : ComponentType::Premise});
  }
  std::sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return spans;
}

inline LabeledDocument random_document(std::mt19937_64& rng, std::string id, std::size_t max_spans = 10,
                                       std::size_t min_words = 1, std::size_t max_words = 40) {
  auto text = random_text(rng, min_words, max_words);
  const auto tokens = tokenize(text);
  auto spans = random_spans(rng, tokens.size(), max_spans);
  return make_document(std::move(id), SourceCorpus::Synthetic, std::move(text), std::move(spans));
}

inline std::vector<LabeledDocument> random_corpus(std::uint64_t seed, std::size_t n, std::size_t max_spans = 10) {
  std::mt19937_64 rng(seed);
  std::vector<LabeledDocument> docs;
  for (std::size_t i = 0; i < n; ++i) docs.push_back(random_document(rng, "doc" + std::to_string(i), max_spans));
  return docs;
}

// Token span covering the `occurrence`-th appearance of `phrase`.
inline ComponentSpan span_over(const LabeledDocument& doc, std::string_view phrase, ComponentType kind,
                               std::size_t occurrence = 0) {
  std::size_t at = doc.text.find(phrase);
  for (std::size_t k = 0; k < occurrence && at != std::string::npos; ++k) at = doc.text.find(phrase, at + 1);
  if (at == std::string::npos) throw ValidationError("phrase not found: " + std::string(phrase));
  const auto end = at + phrase.size();
  ComponentSpan span{0, 0, kind};
  bool found = false;
  for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
    if (doc.tokens[i].begin == at) {
      span.first = i;
      found = true;
    }
    if (found && doc.tokens[i].end == end) {
      span.last = i;
      return span;
    }
  }
  throw ValidationError("phrase does not sit on token boundaries: " + std::string(phrase));
}

inline LabeledDocument fixture(std::string text,
                               std::vector<std::pair<std::string, ComponentType>> components) {
  auto doc = make_document("fixture", SourceCorpus::Synthetic, std::move(text), {});
  for (const auto& [phrase, kind] : components) doc.spans.push_back(span_over(doc, phrase, kind));
  doc.validate();
  return doc;
}

// Argument-type error example: gold annotation and a model output.
inline LabeledDocument type_error_gold() {
  return fixture("And so if you believe the same thing, you just don't want to raise taxes on people. And the "
                 "reality is it's not just wealthy people",
                 {{"if you believe the same thing", ComponentType::Premise},
                  {"you just don't want to raise taxes on people", ComponentType::Claim},
                  {"the reality is it's not just wealthy people", ComponentType::Claim}});
}
inline constexpr std::string_view kTypeErrorGoldTagged =
    "And so <premise>if you believe the same thing</premise>, <claim>you just don't want to raise taxes on "
    "people</claim>. And <claim>the reality is it's not just wealthy people</claim>";
inline constexpr std::string_view kTypeErrorOutput =
    "And so <premise>if you believe the same thing</premise>, <claim>you just don't want to raise</claim> taxes on "
    "people. And <premise>the reality is it's not just wealthy people</premise>";

// Type refinement with lexical adjustment.
inline LabeledDocument refinement_gold() {
  return fixture("We will do what we do best. It's a strategy that we've been working on for a couple of years. It "
                 "is going to take us to much better advantage in conventional forces",
                 {{"We will do what we do best", ComponentType::Claim},
                  {"It's a strategy that we've been working on for a couple of years", ComponentType::Claim},
                  {"It is going to take us to much better advantage in conventional forces", ComponentType::Claim}});
}
inline constexpr std::string_view kRefinementOutput =
    "<claim>We will do what we did best</claim>. <premise>It's a strategy that we've been working on for a few "
    "years</premise>. <claim>It is going to take us to much better advantage in conventional forces</claim>";

// Component discovery.
inline LabeledDocument discovery_gold() {
  return fixture("Maybe we need to do a better job in mental clinics to help them. Because there is a major problem "
                 "there",
                 {{"Maybe we need to do a better job in mental clinics to help them", ComponentType::Claim},
                  {"there is a major problem there", ComponentType::Premise}});
}
inline constexpr std::string_view kDiscoveryOutput =
    "<claim>Maybe we need to do better job in mental clinics</claim> <premise>to help them</premise>. Because "
    "<premise>there is a major problem there</premise>.";

// Hallucinated insertion.
inline LabeledDocument hallucination_gold() {
  return fixture("She's been doing this for 30 years", {{"She's been doing this for 30 years", ComponentType::Premise}});
}
inline constexpr std::string_view kHallucinationOutput = "<premise>She's been doing this job for 30 years</premise>";

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(std::string_view name) {
  static std::random_device rd;
  auto dir = std::filesystem::temp_directory_path() /
             ("acd-test-" + std::string(name) + "-" + std::to_string(rd()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace acd::testing
