#include "acd/align.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <tuple>

#include <json.hpp>

#include "acd/errors.hpp"
#include "acd/utf8.hpp"

namespace acd {

std::string_view to_string(EditKind kind) {
  switch (kind) {
    case EditKind::Match: return "Match";
    case EditKind::Substitute: return "Substitute";
    case EditKind::Delete: return "Delete";
    case EditKind::Insert: return "Insert";
  }
  return "Match";
}

std::string normalize_token(std::string_view token) {
  std::string out;
  out.reserve(token.size());
  for (std::size_t pos = 0; pos < token.size();) {
    const auto d = utf8::decode(token, pos);
    pos += d.length;
    out += utf8::fold_punct(utf8::fold_case(d.codepoint));
  }
  return out;
}

std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double pair_cost(std::string_view source, std::string_view generated, const AlignmentCosts& costs) {
  const auto a = normalize_token(source);
  const auto b = normalize_token(generated);
  if (a == b) return 0.0;
  return edit_distance(utf8::to_u32(a), utf8::to_u32(b)) <= 1 ? costs.near_substitute : costs.substitute;
}

Alignment align_tokens(std::span<const std::string> source, std::span<const std::string> generated,
                       const AlignmentCosts& costs) {
  const auto n = source.size();
  const auto m = generated.size();
  std::vector<std::string> src_norm(n), gen_norm(m);
  std::vector<std::u32string> src_cp(n), gen_cp(m);
  for (std::size_t i = 0; i < n; ++i) {
    src_norm[i] = normalize_token(source[i]);
    src_cp[i] = utf8::to_u32(src_norm[i]);
  }
  for (std::size_t j = 0; j < m; ++j) {
    gen_norm[j] = normalize_token(generated[j]);
    gen_cp[j] = utf8::to_u32(gen_norm[j]);
  }
  auto diag = [&](std::size_t i, std::size_t j) {
    if (src_norm[i] == gen_norm[j]) return 0.0;
    return edit_distance(src_cp[i], gen_cp[j]) <= 1 ? costs.near_substitute : costs.substitute;
  };

  // best[i][j]: cost of aligning source[i..] with generated[j..].
  const auto width = m + 1;
  std::vector<double> best((n + 1) * width, 0.0);
  std::vector<double> sub((n + 1) * width, 0.0);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return best[i * width + j]; };
  for (std::size_t i = n + 1; i-- > 0;) {
    for (std::size_t j = m + 1; j-- > 0;) {
      if (i == n && j == m) continue;
      double value = std::numeric_limits<double>::infinity();
      if (i < n && j < m) {
        sub[i * width + j] = diag(i, j);
        value = sub[i * width + j] + at(i + 1, j + 1);
      }
      if (i < n) value = std::min(value, costs.remove + at(i + 1, j));
      if (j < m) value = std::min(value, costs.insert + at(i, j + 1));
      at(i, j) = value;
    }
  }

  auto same = [](double a, double b) { return std::abs(a - b) <= 1e-9; };
  Alignment result;
  result.cost = at(0, 0);
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    if (i < n && j < m && same(sub[i * width + j] + at(i + 1, j + 1), at(i, j))) {
      const double c = sub[i * width + j];
      result.ops.push_back({c == 0.0 ? EditKind::Match : EditKind::Substitute, i, j, c});
      ++i;
      ++j;
    } else if (i < n && same(costs.remove + at(i + 1, j), at(i, j))) {
      result.ops.push_back({EditKind::Delete, i, std::nullopt, costs.remove});
      ++i;
    } else {
      result.ops.push_back({EditKind::Insert, std::nullopt, j, costs.insert});
      ++j;
    }
  }
  return result;
}

Alignment align_tokens(std::span<const Token> source, std::span<const Token> generated, const AlignmentCosts& costs) {
  std::vector<std::string> a, b;
  a.reserve(source.size());
  b.reserve(generated.size());
  for (const auto& t : source) a.push_back(t.text);
  for (const auto& t : generated) b.push_back(t.text);
  return align_tokens(std::span<const std::string>(a), std::span<const std::string>(b), costs);
}

std::vector<BioTag> project_labels(std::span<const EditOp> ops, std::size_t source_count,
                                   std::span<const ComponentSpan> generated_spans) {
  constexpr auto kNone = std::numeric_limits<std::size_t>::max();

  auto component_of = [&](std::size_t g) {
    auto it = std::upper_bound(generated_spans.begin(), generated_spans.end(), g,
                               [](std::size_t v, const ComponentSpan& s) { return v < s.first; });
    if (it == generated_spans.begin()) return kNone;
    --it;
    return g <= it->last ? static_cast<std::size_t>(it - generated_spans.begin()) : kNone;
  };

  std::vector<std::size_t> label(source_count, kNone);
  std::vector<bool> aligned(source_count, false);
  for (const auto& op : ops) {
    if (!op.source) continue;
    if (*op.source >= source_count) throw RangeError("edit op source index out of range");
    if (op.generated) {
      aligned[*op.source] = true;
      label[*op.source] = component_of(*op.generated);
    }
  }

  // Deleted tokens: inherit only when both aligned neighbours share a component.
  std::vector<std::size_t> left(source_count, kNone), right(source_count, kNone);
  for (std::size_t i = 0, last = kNone; i < source_count; ++i) {
    left[i] = last;
    if (aligned[i]) last = label[i];
  }
  for (std::size_t i = source_count, next = kNone; i-- > 0;) {
    right[i] = next;
    if (aligned[i]) next = label[i];
  }
  for (std::size_t i = 0; i < source_count; ++i) {
    if (!aligned[i] && left[i] != kNone && left[i] == right[i]) label[i] = left[i];
  }

  std::vector<BioTag> tags(source_count, BioTag::O);
  for (std::size_t i = 0; i < source_count; ++i) {
    if (label[i] == kNone) continue;
    const auto kind = generated_spans[label[i]].kind;
    tags[i] = (i > 0 && label[i - 1] == label[i]) ? inside_tag(kind) : begin_tag(kind);
  }
  return tags;
}

std::string_view to_string(DiscrepancyKind kind) {
  switch (kind) {
    case DiscrepancyKind::LabelRefinement: return "LabelRefinement";
    case DiscrepancyKind::LexicalAdjustment: return "LexicalAdjustment";
    case DiscrepancyKind::Hallucination: return "Hallucination";
    case DiscrepancyKind::Discovery: return "Discovery";
    case DiscrepancyKind::Miss: return "Miss";
    case DiscrepancyKind::BoundaryShift: return "BoundaryShift";
  }
  return "Miss";
}

std::optional<DiscrepancyKind> parse_discrepancy_kind(std::string_view name) {
  for (std::size_t k = 0; k < kDiscrepancyKindCount; ++k) {
    const auto kind = static_cast<DiscrepancyKind>(k);
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

SpanMatching match_spans(std::span<const ComponentSpan> gold, std::span<const ComponentSpan> projected) {
  SpanMatching m;
  m.projected.assign(projected.begin(), projected.end());
  m.gold_to_projected.assign(gold.size(), std::nullopt);
  m.projected_to_gold.assign(projected.size(), std::nullopt);

  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> candidates;  // overlap, gold, projected
  for (std::size_t g = 0; g < gold.size(); ++g) {
    for (std::size_t p = 0; p < projected.size(); ++p) {
      const auto lo = std::max(gold[g].first, projected[p].first);
      const auto hi = std::min(gold[g].last, projected[p].last);
      if (lo <= hi) candidates.emplace_back(hi - lo + 1, g, p);
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  for (const auto& [overlap, g, p] : candidates) {
    if (m.gold_to_projected[g] || m.projected_to_gold[p]) continue;
    m.gold_to_projected[g] = p;
    m.projected_to_gold[p] = g;
  }
  return m;
}

std::vector<DiscrepancyRecord> classify_discrepancies(const LabeledDocument& gold, std::span<const BioTag> projected,
                                                      std::span<const EditOp> ops,
                                                      std::span<const Token> generated_tokens,
                                                      const ClassifyOptions& options) {
  if (projected.size() != gold.tokens.size()) {
    throw ValidationError("projected labels do not cover the gold tokens of " + gold.id);
  }
  std::vector<DiscrepancyRecord> records;
  auto quote = [&](const ComponentSpan& s) {
    const auto b = gold.tokens[s.first].begin;
    return "\"" + gold.text.substr(b, gold.tokens[s.last].end - b) + "\"";
  };

  const auto predicted = bio_to_spans(projected, RepairMode::Lenient).spans;
  const auto matching = match_spans(gold.spans, predicted);
  for (std::size_t g = 0; g < gold.spans.size(); ++g) {
    const auto& gs = gold.spans[g];
    if (!matching.gold_to_projected[g]) {
      records.push_back({DiscrepancyKind::Miss, TokenRange{gs.first, gs.last}, std::nullopt,
                         std::string(to_string(gs.kind)) + " " + quote(gs) + " not predicted"});
      continue;
    }
    const auto& ps = predicted[*matching.gold_to_projected[g]];
    if (ps == gs) continue;
    const auto lo = std::max(gs.first, ps.first);
    const auto hi = std::min(gs.last, ps.last);
    const auto overlap = static_cast<double>(hi - lo + 1);
    const double jaccard = overlap / (static_cast<double>(gs.size() + ps.size()) - overlap);
    const bool same_extent = jaccard >= options.jaccard_threshold;
    if (ps.kind != gs.kind && same_extent) {
      records.push_back({DiscrepancyKind::LabelRefinement, TokenRange{gs.first, gs.last}, std::nullopt,
                         "gold " + std::string(to_string(gs.kind)) + " " + quote(gs) + " predicted as " +
                             std::string(to_string(ps.kind))});
    } else {
      std::string note = "gold " + std::string(to_string(gs.kind)) + " " + quote(gs) + " predicted as " +
                         std::string(to_string(ps.kind)) + " " + quote(ps);
      char buf[32];
      std::snprintf(buf, sizeof buf, " (jaccard %.2f)", jaccard);
      note += buf;
      records.push_back({DiscrepancyKind::BoundaryShift, TokenRange{gs.first, gs.last}, std::nullopt, note});
    }
  }
  for (std::size_t p = 0; p < predicted.size(); ++p) {
    if (matching.projected_to_gold[p]) continue;
    const auto& ps = predicted[p];
    records.push_back({DiscrepancyKind::Discovery, TokenRange{ps.first, ps.last}, std::nullopt,
                       std::string(to_string(ps.kind)) + " " + quote(ps) + " has no gold counterpart"});
  }

  auto gen_text = [&](std::size_t j) -> std::string {
    return j < generated_tokens.size() ? generated_tokens[j].text : std::string("?");
  };
  for (std::size_t k = 0; k < ops.size(); ++k) {
    const auto& op = ops[k];
    switch (op.kind) {
      case EditKind::Insert: {
        auto end = k;
        std::string words;
        while (end < ops.size() && ops[end].kind == EditKind::Insert) {
          if (!words.empty()) words += ' ';
          words += gen_text(*ops[end].generated);
          ++end;
        }
        records.push_back({DiscrepancyKind::Hallucination, std::nullopt,
                           TokenRange{*op.generated, *ops[end - 1].generated}, "inserted \"" + words + "\""});
        k = end - 1;
        break;
      }
      case EditKind::Substitute:
        records.push_back({DiscrepancyKind::LexicalAdjustment, TokenRange{*op.source, *op.source},
                           TokenRange{*op.generated, *op.generated},
                           std::string(op.cost < 1.0 ? "near-match" : "substitution") + " \"" +
                               gold.tokens[*op.source].text + "\" -> \"" + gen_text(*op.generated) + "\""});
        break;
      case EditKind::Delete:
        records.push_back({DiscrepancyKind::LexicalAdjustment, TokenRange{*op.source, *op.source}, std::nullopt,
                           "deletion \"" + gold.tokens[*op.source].text + "\""});
        break;
      case EditKind::Match:
        if (gold.tokens[*op.source].text != gen_text(*op.generated)) {
          records.push_back({DiscrepancyKind::LexicalAdjustment, TokenRange{*op.source, *op.source},
                             TokenRange{*op.generated, *op.generated},
                             "normalization \"" + gold.tokens[*op.source].text + "\" -> \"" +
                                 gen_text(*op.generated) + "\""});
        }
        break;
    }
  }
  return records;
}

AlignmentReport align_generation(const LabeledDocument& gold, const ParseOutcome& generated,
                                 const ClassifyOptions& options, const AlignmentCosts& costs) {
  AlignmentReport report;
  auto alignment = align_tokens(std::span<const Token>(gold.tokens), std::span<const Token>(generated.tokens), costs);
  report.ops = std::move(alignment.ops);
  report.cost = alignment.cost;
  report.projected_bio = project_labels(report.ops, gold.tokens.size(), generated.spans);
  report.discrepancies = classify_discrepancies(gold, report.projected_bio, report.ops, generated.tokens, options);
  return report;
}

std::string compact_ops(std::span<const EditOp> ops) {
  std::string out;
  for (std::size_t k = 0; k < ops.size();) {
    auto end = k;
    while (end < ops.size() && ops[end].kind == ops[k].kind) ++end;
    if (!out.empty()) out += ' ';
    out += to_string(ops[k].kind)[0];
    out += std::to_string(end - k);
    k = end;
  }
  return out;
}

namespace {

nlohmann::ordered_json range_json(const std::optional<TokenRange>& r) {
  if (!r) return nullptr;
  return nlohmann::ordered_json::array({r->first, r->last});
}

std::optional<TokenRange> range_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return TokenRange{j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>()};
}

}  // namespace

std::string alignment_export_line(std::string_view doc_id, std::size_t chunk_index, const AlignmentReport& report) {
  nlohmann::ordered_json j;
  j["doc_id"] = doc_id;
  j["chunk_index"] = chunk_index;
  j["cost"] = report.cost;
  j["ops"] = compact_ops(report.ops);
  auto list = nlohmann::ordered_json::array();
  for (const auto& d : report.discrepancies) {
    list.push_back({{"kind", to_string(d.kind)},
                    {"source", range_json(d.source)},
                    {"generated", range_json(d.generated)},
                    {"note", d.note}});
  }
  j["discrepancies"] = std::move(list);
  return j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

AlignmentExport alignment_export_from_line(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    AlignmentExport e;
    e.doc_id = j.at("doc_id").get<std::string>();
    e.chunk_index = j.at("chunk_index").get<std::size_t>();
    e.cost = j.at("cost").get<double>();
    e.ops = j.at("ops").get<std::string>();
    for (const auto& d : j.at("discrepancies")) {
      const auto name = d.at("kind").get<std::string>();
      const auto kind = parse_discrepancy_kind(name);
      if (!kind) throw ParseError("unknown discrepancy kind '" + name + "'");
      e.discrepancies.push_back(
          {*kind, range_from_json(d.at("source")), range_from_json(d.at("generated")), d.at("note").get<std::string>()});
    }
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("malformed alignment record: ") + ex.what());
  }
}

}  // namespace acd
