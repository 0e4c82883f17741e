#include "acd/tagcodec.hpp"

#include <algorithm>
#include <optional>

#include "acd/errors.hpp"

namespace acd {

namespace {

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

std::optional<TagEvent> lex_tag(std::string_view s, std::size_t pos) {
  std::size_t k = pos + 1;
  auto skip_blank = [&] {
    while (k < s.size() && is_blank(s[k])) ++k;
  };
  skip_blank();
  auto edge = TagEdge::Open;
  if (k < s.size() && s[k] == '/') {
    edge = TagEdge::Close;
    ++k;
    skip_blank();
  }
  std::string name;
  while (k < s.size() && ((s[k] >= 'a' && s[k] <= 'z') || (s[k] >= 'A' && s[k] <= 'Z'))) name.push_back(lower(s[k++]));
  ComponentType kind;
  if (name == "claim") {
    kind = ComponentType::Claim;
  } else if (name == "premise") {
    kind = ComponentType::Premise;
  } else {
    return std::nullopt;
  }
  skip_blank();
  if (k >= s.size() || s[k] != '>') return std::nullopt;
  return TagEvent{kind, edge, pos, k + 1 - pos};
}

std::string_view open_tag(ComponentType kind) { return kind == ComponentType::Claim ? "<claim>" : "<premise>"; }
std::string_view close_tag(ComponentType kind) { return kind == ComponentType::Claim ? "</claim>" : "</premise>"; }

struct PendingSpan {
  CharSpan extent;
  std::size_t raw_position;
};

}  // namespace

std::string_view to_string(RepairKind kind) {
  switch (kind) {
    case RepairKind::UnclosedTag: return "unclosed_tag";
    case RepairKind::UnopenedClose: return "unopened_close";
    case RepairKind::MismatchedClose: return "mismatched_close";
    case RepairKind::NestedOpen: return "nested_open";
    case RepairKind::EmptySpan: return "empty_span";
    case RepairKind::SharedToken: return "shared_token";
  }
  return "unknown";
}

std::vector<TagEvent> tag_skeleton(std::string_view tagged) {
  std::vector<TagEvent> events;
  for (std::size_t pos = tagged.find('<'); pos != std::string_view::npos; pos = tagged.find('<', pos)) {
    if (auto ev = lex_tag(tagged, pos)) {
      events.push_back(*ev);
      pos += ev->length;
    } else {
      ++pos;
    }
  }
  return events;
}

std::string encode_xml(const LabeledDocument& doc) {
  for (std::size_t i = 1; i < doc.spans.size(); ++i) {
    if (doc.spans[i].first <= doc.spans[i - 1].last) {
      throw ValidationError("document " + doc.id + ": overlapping spans cannot be encoded");
    }
  }
  if (!tag_skeleton(doc.text).empty()) {
    throw ValidationError("document " + doc.id + ": text contains literal component markup");
  }
  std::string out;
  out.reserve(doc.text.size() + doc.spans.size() * 19);
  std::size_t cursor = 0;
  for (const auto& s : doc.spans) {
    if (s.last >= doc.tokens.size()) throw RangeError("document " + doc.id + ": span beyond last token");
    const auto begin = doc.tokens[s.first].begin;
    const auto end = doc.tokens[s.last].end;
    out.append(doc.text, cursor, begin - cursor);
    out += open_tag(s.kind);
    out.append(doc.text, begin, end - begin);
    out += close_tag(s.kind);
    cursor = end;
  }
  out.append(doc.text, cursor, std::string::npos);
  return out;
}

std::string strip_tags(std::string_view tagged) {
  std::string out;
  out.reserve(tagged.size());
  std::size_t cursor = 0;
  for (const auto& ev : tag_skeleton(tagged)) {
    out.append(tagged.substr(cursor, ev.position - cursor));
    cursor = ev.position + ev.length;
  }
  out.append(tagged.substr(cursor));
  return out;
}

ParseOutcome decode_xml(std::string_view tagged, ParseMode mode) {
  ParseOutcome outcome;
  auto repair = [&](RepairKind kind, std::size_t position, const std::string& what) {
    if (mode == ParseMode::Strict) {
      throw ParseError(what + " at byte " + std::to_string(position), 0, position);
    }
    outcome.repairs.push_back({kind, position});
  };

  std::vector<PendingSpan> pending;
  std::optional<PendingSpan> open;
  auto close_open = [&](std::size_t plain_end) {
    open->extent.end = plain_end;
    pending.push_back(*open);
    open.reset();
  };

  std::size_t cursor = 0;
  for (const auto& ev : tag_skeleton(tagged)) {
    outcome.plain_text.append(tagged.substr(cursor, ev.position - cursor));
    cursor = ev.position + ev.length;
    const auto here = outcome.plain_text.size();

    if (ev.edge == TagEdge::Open) {
      if (open) {
        repair(RepairKind::NestedOpen, ev.position, "tag opened inside another tag");
        close_open(here);
      }
      open = PendingSpan{{here, here, ev.kind}, ev.position};
      continue;
    }
    if (!open) {
      repair(RepairKind::UnopenedClose, ev.position, "closing tag without an open tag");
      continue;
    }
    if (open->extent.kind != ev.kind) {
      repair(RepairKind::MismatchedClose, ev.position, "closing tag does not match the open tag");
    }
    close_open(here);
  }
  outcome.plain_text.append(tagged.substr(cursor));
  if (open) {
    repair(RepairKind::UnclosedTag, open->raw_position, "tag never closed");
    close_open(outcome.plain_text.size());
  }

  outcome.tokens = tokenize(outcome.plain_text);
  const auto& tokens = outcome.tokens;
  for (const auto& p : pending) {
    auto first = std::upper_bound(tokens.begin(), tokens.end(), p.extent.begin,
                                  [](std::size_t v, const Token& t) { return v < t.end; });
    auto stop = std::lower_bound(tokens.begin(), tokens.end(), p.extent.end,
                                 [](const Token& t, std::size_t v) { return t.begin < v; });
    if (first >= stop) {
      repair(RepairKind::EmptySpan, p.raw_position, "tags enclose no token");
      continue;
    }
    ComponentSpan span{static_cast<std::size_t>(first - tokens.begin()),
                       static_cast<std::size_t>(stop - tokens.begin()) - 1, p.extent.kind};
    if (!outcome.spans.empty() && span.first <= outcome.spans.back().last) {
      repair(RepairKind::SharedToken, p.raw_position, "span shares a token with the previous span");
      continue;
    }
    outcome.spans.push_back(span);
    outcome.char_spans.push_back(p.extent);
  }
  return outcome;
}

}  // namespace acd
