#include "acd/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <limits>
#include <random>
#include <unordered_set>

#include "acd/errors.hpp"
#include "acd/utf8.hpp"

namespace acd {

namespace {

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool is_closing_punct(std::string_view token) {
  static constexpr std::string_view kClosing[] = {".", ",", "!", "?", ";", ":", "'", "\"", ")"};
  return std::find(std::begin(kClosing), std::end(kClosing), token) != std::end(kClosing);
}

}  // namespace

std::string_view to_string(ComponentType kind) {
  return kind == ComponentType::Claim ? "Claim" : "Premise";
}

std::optional<ComponentType> parse_component_type(std::string_view name) {
  const auto lower = lower_ascii(name);
  if (lower == "claim") return ComponentType::Claim;
  if (lower == "premise") return ComponentType::Premise;
  return std::nullopt;
}

std::string_view to_string(SourceCorpus source) {
  switch (source) {
    case SourceCorpus::USElecDeb60To16: return "USElecDeb60To16";
    case SourceCorpus::PersuasiveEssays: return "PersuasiveEssays";
    case SourceCorpus::WebDiscourse: return "WebDiscourse";
    case SourceCorpus::Synthetic: return "Synthetic";
  }
  return "Synthetic";
}

std::optional<SourceCorpus> parse_source_corpus(std::string_view name) {
  for (auto s : {SourceCorpus::USElecDeb60To16, SourceCorpus::PersuasiveEssays, SourceCorpus::WebDiscourse,
                 SourceCorpus::Synthetic}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

void LabeledDocument::validate() const {
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (t.text.empty()) throw ValidationError("document " + id + ": empty token at index " + std::to_string(i));
    if (t.begin >= t.end || t.end > text.size())
      throw ValidationError("document " + id + ": bad offsets for token " + std::to_string(i));
    if (i > 0 && t.begin < prev_end)
      throw ValidationError("document " + id + ": tokens overlap or are out of order at index " + std::to_string(i));
    if (std::string_view(text).substr(t.begin, t.end - t.begin) != t.text)
      throw ValidationError("document " + id + ": token " + std::to_string(i) + " does not match text");
    prev_end = t.end;
  }
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& s = spans[i];
    if (s.first > s.last || s.last >= tokens.size())
      throw ValidationError("document " + id + ": span " + std::to_string(i) + " out of token range");
    if (i > 0 && s.first <= spans[i - 1].last)
      throw ValidationError("document " + id + ": span " + std::to_string(i) + " overlaps or is out of order");
  }
}

std::string qualified_id(const LabeledDocument& doc) {
  return std::string(to_string(doc.source)) + "/" + doc.id;
}

LabeledDocument make_document(std::string id, SourceCorpus source, std::string text,
                              std::vector<ComponentSpan> spans) {
  LabeledDocument doc;
  doc.id = std::move(id);
  doc.source = source;
  doc.text = std::move(text);
  doc.tokens = tokenize(doc.text);
  doc.spans = std::move(spans);
  doc.validate();
  return doc;
}

std::string_view to_string(BioTag tag) {
  switch (tag) {
    case BioTag::BClaim: return "B-Claim";
    case BioTag::IClaim: return "I-Claim";
    case BioTag::BPremise: return "B-Premise";
    case BioTag::IPremise: return "I-Premise";
    case BioTag::O: return "O";
  }
  return "O";
}

std::optional<BioTag> parse_bio_tag(std::string_view name) {
  for (auto tag : kAllBioTags) {
    if (to_string(tag) == name) return tag;
  }
  return std::nullopt;
}

BioTag begin_tag(ComponentType kind) {
  return kind == ComponentType::Claim ? BioTag::BClaim : BioTag::BPremise;
}

BioTag inside_tag(ComponentType kind) {
  return kind == ComponentType::Claim ? BioTag::IClaim : BioTag::IPremise;
}

std::optional<ComponentType> tag_kind(BioTag tag) {
  switch (tag) {
    case BioTag::BClaim:
    case BioTag::IClaim:
      return ComponentType::Claim;
    case BioTag::BPremise:
    case BioTag::IPremise:
      return ComponentType::Premise;
    case BioTag::O:
      break;
  }
  return std::nullopt;
}

bool is_valid_bio(std::span<const BioTag> tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] != BioTag::IClaim && tags[i] != BioTag::IPremise) continue;
    if (i == 0 || tag_kind(tags[i - 1]) != tag_kind(tags[i])) return false;
  }
  return true;
}

std::vector<BioTag> spans_to_bio(std::size_t token_count, std::span<const ComponentSpan> spans) {
  std::vector<BioTag> tags(token_count, BioTag::O);
  for (const auto& s : spans) {
    if (s.last >= token_count) throw RangeError("span exceeds token count");
    tags[s.first] = begin_tag(s.kind);
    for (auto i = s.first + 1; i <= s.last; ++i) tags[i] = inside_tag(s.kind);
  }
  return tags;
}

BioDecoding bio_to_spans(std::span<const BioTag> tags, RepairMode mode) {
  BioDecoding out;
  std::optional<ComponentSpan> open;
  auto flush = [&] {
    if (open) out.spans.push_back(*open);
    open.reset();
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto tag = tags[i];
    const auto kind = tag_kind(tag);
    if (!kind) {
      flush();
      continue;
    }
    if (tag == begin_tag(*kind)) {
      flush();
      open = ComponentSpan{i, i, *kind};
      continue;
    }
    if (open && open->kind == *kind) {
      open->last = i;
      continue;
    }
    if (mode == RepairMode::Strict) {
      throw ParseError("orphan " + std::string(to_string(tag)) + " at token " + std::to_string(i + 1), i + 1);
    }
    flush();
    out.repairs.push_back({i + 1, "orphan " + std::string(to_string(tag)) + " repaired to " +
                                      std::string(to_string(begin_tag(*kind)))});
    open = ComponentSpan{i, i, *kind};
  }
  flush();
  return out;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t pos = 0;
  const auto n = text.size();
  auto emit = [&](std::size_t b, std::size_t e) { tokens.push_back({std::string(text.substr(b, e - b)), b, e}); };

  while (pos < n) {
    auto d = utf8::decode(text, pos);
    if (utf8::is_space(d.codepoint)) {
      pos += d.length;
      continue;
    }
    // Collect one whitespace-delimited chunk as a list of code point starts.
    std::vector<std::size_t> starts;
    std::vector<bool> punct;
    std::size_t end = pos;
    while (end < n) {
      d = utf8::decode(text, end);
      if (utf8::is_space(d.codepoint)) break;
      starts.push_back(end);
      punct.push_back(utf8::is_punct(d.codepoint));
      end += d.length;
    }
    starts.push_back(end);

    const std::size_t count = punct.size();
    std::size_t lead = 0;
    while (lead < count && punct[lead]) ++lead;
    std::size_t trail = count;
    while (trail > lead && punct[trail - 1]) --trail;

    for (std::size_t k = 0; k < lead; ++k) emit(starts[k], starts[k + 1]);
    if (trail > lead) emit(starts[lead], starts[trail]);
    for (std::size_t k = std::max(trail, lead); k < count; ++k) emit(starts[k], starts[k + 1]);
    pos = end;
  }
  return tokens;
}

std::vector<ComponentSpan> snap_to_tokens(std::span<const Token> tokens, std::span<const CharSpan> byte_spans,
                                          std::vector<Diagnostic>& warnings) {
  std::vector<ComponentSpan> spans;
  for (const auto& cs : byte_spans) {
    // First token ending after begin, last token starting before end.
    auto first = std::upper_bound(tokens.begin(), tokens.end(), cs.begin,
                                  [](std::size_t v, const Token& t) { return v < t.end; });
    auto stop = std::lower_bound(tokens.begin(), tokens.end(), cs.end,
                                 [](const Token& t, std::size_t v) { return t.begin < v; });
    if (first >= stop) {
      warnings.push_back({0, "span [" + std::to_string(cs.begin) + "," + std::to_string(cs.end) +
                                 ") covers no token; dropped"});
      continue;
    }
    ComponentSpan span{static_cast<std::size_t>(first - tokens.begin()),
                       static_cast<std::size_t>(stop - tokens.begin()) - 1, cs.kind};
    if (tokens[span.first].begin < cs.begin) {
      warnings.push_back({0, "span start " + std::to_string(cs.begin) + " cuts token '" + tokens[span.first].text +
                                 "'; widened to " + std::to_string(tokens[span.first].begin)});
    }
    if (tokens[span.last].end > cs.end) {
      warnings.push_back({0, "span end " + std::to_string(cs.end) + " cuts token '" + tokens[span.last].text +
                                 "'; widened to " + std::to_string(tokens[span.last].end)});
    }
    spans.push_back(span);
  }
  std::sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.last > b.last;
  });
  std::vector<ComponentSpan> kept;
  for (const auto& s : spans) {
    if (!kept.empty() && s.first <= kept.back().last) {
      warnings.push_back({0, "span over tokens " + std::to_string(s.first) + "-" + std::to_string(s.last) +
                                 " overlaps an earlier span; dropped"});
      continue;
    }
    kept.push_back(s);
  }
  return kept;
}

std::optional<ComponentType> map_annotation_label(std::string_view label) {
  const auto lower = lower_ascii(label);
  if (lower == "claim" || lower == "majorclaim" || lower == "major_claim" || lower == "claim_for" ||
      lower == "claim_against") {
    return ComponentType::Claim;
  }
  if (lower == "premise" || lower == "evidence" || lower == "backing" || lower == "grounds" ||
      lower == "data") {
    return ComponentType::Premise;
  }
  return std::nullopt;
}

IngestResult parse_standoff(std::string id, SourceCorpus source, std::string text, std::string_view annotations) {
  IngestResult result;
  const utf8::OffsetMap offsets(text);
  std::vector<CharSpan> byte_spans;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < annotations.size()) {
    auto nl = annotations.find('\n', pos);
    if (nl == std::string_view::npos) nl = annotations.size();
    auto line = annotations.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() != 'T') continue;

    const auto tab1 = line.find('\t');
    if (tab1 == std::string_view::npos) throw ParseError("missing tab in annotation line", line_no);
    auto tab2 = line.find('\t', tab1 + 1);
    const auto middle = line.substr(tab1 + 1, tab2 == std::string_view::npos ? line.npos : tab2 - tab1 - 1);

    const auto sp = middle.find(' ');
    if (sp == std::string_view::npos) throw ParseError("missing offsets in annotation line", line_no);
    const auto label = middle.substr(0, sp);

    // Offsets: "start end" or discontinuous "s1 e1;s2 e2".
    std::vector<std::size_t> numbers;
    auto rest = middle.substr(sp + 1);
    std::size_t k = 0;
    while (k < rest.size()) {
      if (rest[k] == ' ' || rest[k] == ';') {
        ++k;
        continue;
      }
      std::size_t value = 0;
      auto [ptr, ec] = std::from_chars(rest.data() + k, rest.data() + rest.size(), value);
      if (ec != std::errc()) throw ParseError("malformed offset in annotation line", line_no);
      numbers.push_back(value);
      k = static_cast<std::size_t>(ptr - rest.data());
    }
    if (numbers.size() < 2 || numbers.size() % 2 != 0) throw ParseError("malformed offsets in annotation line", line_no);

    const auto start = numbers.front();
    const auto end = numbers.back();
    if (numbers.size() > 2) {
      result.warnings.push_back({line_no, "discontinuous annotation collapsed to its outer extent"});
    }
    if (start >= end) throw ParseError("empty or inverted annotation offsets", line_no);
    if (end > offsets.char_count()) {
      throw RangeError("annotation line " + std::to_string(line_no) + ": offset " + std::to_string(end) +
                       " beyond text length " + std::to_string(offsets.char_count()));
    }

    const auto kind = map_annotation_label(label);
    if (!kind) {
      result.warnings.push_back({line_no, "annotation type '" + std::string(label) + "' dropped"});
      continue;
    }
    byte_spans.push_back({offsets.to_byte(start), offsets.to_byte(end), *kind});
  }

  LabeledDocument doc;
  doc.id = std::move(id);
  doc.source = source;
  doc.text = std::move(text);
  doc.tokens = tokenize(doc.text);
  doc.spans = snap_to_tokens(doc.tokens, byte_spans, result.warnings);
  doc.validate();
  result.document = std::move(doc);
  return result;
}

std::string detokenize(std::span<const std::string> tokens, std::vector<Token>* layout) {
  std::string text;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0 && !is_closing_punct(tokens[i])) text.push_back(' ');
    const auto begin = text.size();
    text += tokens[i];
    if (layout) layout->push_back({tokens[i], begin, text.size()});
  }
  return text;
}

IngestResult parse_token_table(std::string id, SourceCorpus source, std::span<const TokenRow> rows,
                               RepairMode mode) {
  IngestResult result;
  std::vector<std::string> words;
  std::vector<BioTag> tags;
  words.reserve(rows.size());
  tags.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].text.empty()) throw ParseError("empty token", i + 1);
    words.push_back(rows[i].text);
    tags.push_back(rows[i].tag);
  }
  auto decoded = bio_to_spans(tags, mode);
  result.warnings = std::move(decoded.repairs);

  LabeledDocument doc;
  doc.id = std::move(id);
  doc.source = source;
  doc.text = detokenize(words, &doc.tokens);
  doc.spans = std::move(decoded.spans);
  doc.validate();
  result.document = std::move(doc);
  return result;
}

std::size_t CorpusStats::token_count() const {
  return std::accumulate(tag_counts.begin(), tag_counts.end(), std::size_t{0});
}

CorpusStats& CorpusStats::operator+=(const CorpusStats& other) {
  documents += other.documents;
  for (std::size_t i = 0; i < kBioTagCount; ++i) tag_counts[i] += other.tag_counts[i];
  for (std::size_t i = 0; i < span_counts.size(); ++i) span_counts[i] += other.span_counts[i];
  return *this;
}

CorpusStats corpus_stats(std::span<const LabeledDocument> corpus) {
  CorpusStats stats;
  for (const auto& doc : corpus) {
    ++stats.documents;
    for (auto tag : spans_to_bio(doc.tokens.size(), doc.spans)) ++stats.tag_counts[static_cast<std::size_t>(tag)];
    for (const auto& s : doc.spans) ++stats.span_counts[static_cast<std::size_t>(s.kind)];
  }
  return stats;
}

std::vector<LabeledDocument> merge_corpora(std::span<const std::vector<LabeledDocument>> corpora) {
  std::vector<LabeledDocument> merged;
  std::unordered_set<std::string> seen;
  for (const auto& corpus : corpora) {
    for (const auto& doc : corpus) {
      auto key = qualified_id(doc);
      if (!seen.insert(key).second) throw ValidationError("duplicate document id after merge: " + key);
      merged.push_back(doc);
    }
  }
  return merged;
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios) {
  double total = 0;
  for (double r : ratios) {
    if (!(r >= 0) || !std::isfinite(r)) throw ValidationError("split ratios must be non-negative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("split ratios must sum to 1");
  std::size_t nonzero = 0;
  for (double r : ratios) nonzero += r > 0 ? 1 : 0;
  if (n < nonzero) {
    throw ValidationError("corpus of " + std::to_string(n) + " documents cannot fill " + std::to_string(nonzero) +
                          " non-empty splits");
  }

  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> fraction{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * ratios[i];
    // Guard against 0.7 * 10 landing on 6.999...
    sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    fraction[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fraction[a] > fraction[b] + 1e-12; });
  for (std::size_t k = 0; assigned < n; k = (k + 1) % 3) {
    if (ratios[order[k]] == 0) continue;
    ++sizes[order[k]];
    ++assigned;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (ratios[i] == 0 || sizes[i] > 0) continue;
    auto donor = static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    --sizes[donor];
    ++sizes[i];
  }
  return sizes;
}

CorpusSplit split(std::span<const LabeledDocument> corpus, const SplitRatios& ratios, std::uint64_t seed) {
  const auto sizes = split_sizes(corpus.size(), ratios);

  // Fisher-Yates over a portable generator; std::shuffle's draws are
  // implementation defined.
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = 0;
    do {
      draw = rng();
    } while (draw >= limit);
    std::swap(order[i - 1], order[draw % bound]);
  }

  std::vector<int> assignment(corpus.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    assignment[order[k]] = k < sizes[0] ? 0 : (k < sizes[0] + sizes[1] ? 1 : 2);
  }
  CorpusSplit out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto& dest = assignment[i] == 0 ? out.train : (assignment[i] == 1 ? out.dev : out.test);
    dest.push_back(corpus[i]);
  }
  return out;
}

std::span<const PublishedCounts> published_counts() {
  static constexpr PublishedCounts kCounts[] = {
      {SourceCorpus::USElecDeb60To16, 566492, 26055, 350079, 29624, 338941, 29000, 26000, true},
      {SourceCorpus::PersuasiveEssays, 35946, 2257, 29828, 3832, 59652, 2257, 3832, false},
      {SourceCorpus::WebDiscourse, 61414, 195, 3491, 538, 20566, 195, 538, false},
  };
  return kCounts;
}

}  // namespace acd
