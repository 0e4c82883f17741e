#include <doctest.h>

#include "acd/align.hpp"
#include "acd/errors.hpp"
#include "acd/tagcodec.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace acd;

namespace {

std::array<std::size_t, kDiscrepancyKindCount> tally(const AlignmentReport& r) {
  std::array<std::size_t, kDiscrepancyKindCount> out{};
  for (const auto& d : r.discrepancies) ++out[static_cast<std::size_t>(d.kind)];
  return out;
}

std::size_t count(const AlignmentReport& r, DiscrepancyKind kind) { return tally(r)[static_cast<std::size_t>(kind)]; }

// Random edits of a tagged gold string: inserted and dropped words, moved
// boundaries, flipped kinds.
std::string mutate(std::mt19937_64& rng, const LabeledDocument& gold) {
  std::bernoulli_distribution coin(0.15);
  std::string out;
  std::size_t next_span = 0;
  for (std::size_t i = 0; i < gold.tokens.size(); ++i) {
    const bool open = next_span < gold.spans.size() && gold.spans[next_span].first == i;
    const auto kind = open ? gold.spans[next_span].kind : ComponentType::Claim;
    const bool flip = open && coin(rng);
    const auto tag = to_string(flip ? (kind == ComponentType::Claim ? ComponentType::Premise : ComponentType::Claim) : kind);
    std::string lower(tag);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (!out.empty()) out += ' ';
    if (open) out += "<" + lower + ">";
    if (coin(rng)) out += "inserted ";
    if (!coin(rng) || gold.tokens.size() == 1) out += gold.tokens[i].text;
    if (next_span < gold.spans.size() && gold.spans[next_span].last == i) {
      out += "</" + lower + ">";
      ++next_span;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("token normalization and distances") {
  CHECK(normalize_token("Hello") == "hello");
  CHECK(normalize_token("don\xE2\x80\x99t") == "don't");
  CHECK(normalize_token("\xE2\x80\x9Cquote\xE2\x80\x9D") == "\"quote\"");
  CHECK(edit_distance(U"kitten", U"sitting") == 3);
  CHECK(edit_distance(U"", U"abc") == 3);
  CHECK(edit_distance(U"é", U"e") == 1);
  CHECK(pair_cost("The", "the") == 0.0);
  CHECK(pair_cost("cat", "cut") == 0.25);
  CHECK(pair_cost("cat", "dog") == 1.0);
}

TEST_CASE("alignment matches exhaustive enumeration on short sequences") {
  const auto sequences = testing::all_sequences(4);
  for (const auto& s : sequences) {
    for (const auto& g : sequences) {
      const auto a = align_tokens(std::span<const std::string>(s), std::span<const std::string>(g));
      const double expected = testing::brute_force_cost(s, g);
      REQUIRE(std::abs(a.cost - expected) <= 1e-9);
    }
  }
}

TEST_CASE("alignment scripts follow the tie preference") {
  const auto sequences = testing::all_sequences(3);
  for (const auto& s : sequences) {
    for (const auto& g : sequences) {
      const auto a = align_tokens(std::span<const std::string>(s), std::span<const std::string>(g));
      const auto o = testing::oracle_align(s, g);
      REQUIRE(a.ops == o.ops);
    }
  }
}

TEST_CASE("alignment scripts are valid and consistent") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const auto s = tokenize(testing::random_text(rng, 0, 15));
    const auto g = tokenize(testing::random_text(rng, 0, 15));
    const auto a = align_tokens(std::span<const Token>(s), std::span<const Token>(g));
    std::size_t si = 0, gi = 0;
    double sum = 0;
    for (const auto& op : a.ops) {
      sum += op.cost;
      if (op.source) CHECK(*op.source == si++);
      if (op.generated) CHECK(*op.generated == gi++);
      CHECK((op.kind == EditKind::Insert) == !op.source.has_value());
      CHECK((op.kind == EditKind::Delete) == !op.generated.has_value());
      if (op.kind == EditKind::Match) CHECK(op.cost == 0.0);
    }
    CHECK(si == s.size());
    CHECK(gi == g.size());
    CHECK(std::abs(sum - a.cost) <= 1e-9);
    const auto back = align_tokens(std::span<const Token>(g), std::span<const Token>(s));
    CHECK(std::abs(back.cost - a.cost) <= 1e-9);
  }
}

TEST_CASE("a single inserted word") {
  const std::vector<std::string> source = {"doing", "this", "for", "30", "years"};
  const std::vector<std::string> generated = {"doing", "this", "job", "for", "30", "years"};
  const auto a = align_tokens(std::span<const std::string>(source), std::span<const std::string>(generated));
  CHECK(a.cost == 1.0);
  CHECK(compact_ops(a.ops) == "M2 I1 M3");
}

TEST_CASE("projection agrees with direct label transport") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 1000; ++i) {
    const auto gold = testing::random_document(rng, "p", 4, 1, 20);
    const auto generated = decode_xml(mutate(rng, gold));
    const auto a = align_tokens(std::span<const Token>(gold.tokens), std::span<const Token>(generated.tokens));
    const auto projected = project_labels(a.ops, gold.tokens.size(), generated.spans);
    CHECK(projected == testing::oracle_projection(a.ops, gold.tokens.size(), generated.spans));
    CHECK(is_valid_bio(projected));
    CHECK(bio_to_spans(projected).spans.size() <= generated.spans.size());
  }
}

TEST_CASE("identity generations are stable") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 300; ++i) {
    const auto gold = testing::random_document(rng, "i");
    const auto report = align_generation(gold, decode_xml(encode_xml(gold)));
    CHECK(report.cost == 0.0);
    CHECK(report.projected_bio == spans_to_bio(gold.tokens.size(), gold.spans));
    CHECK(report.discrepancies.empty());
    for (const auto& op : report.ops) CHECK(op.kind == EditKind::Match);
  }
}

TEST_CASE("inserted words are hallucinations and leave the labels alone") {
  const auto gold = testing::hallucination_gold();
  const auto report = align_generation(gold, decode_xml(testing::kHallucinationOutput));
  CHECK(report.projected_bio == spans_to_bio(gold.tokens.size(), gold.spans));
  CHECK(count(report, DiscrepancyKind::Hallucination) == 1);
  CHECK(report.discrepancies.size() == 1);
  const auto& h = report.discrepancies[0];
  CHECK_FALSE(h.source.has_value());
  REQUIRE(h.generated.has_value());
  CHECK(h.generated->first == h.generated->last);
}

TEST_CASE("relabelled component with a lexical change") {
  const auto gold = testing::refinement_gold();
  const auto report = align_generation(gold, decode_xml(testing::kRefinementOutput));
  CHECK(count(report, DiscrepancyKind::LabelRefinement) == 1);
  CHECK(count(report, DiscrepancyKind::BoundaryShift) == 0);
  CHECK(count(report, DiscrepancyKind::Miss) == 0);
  CHECK(count(report, DiscrepancyKind::Discovery) == 0);
  CHECK(count(report, DiscrepancyKind::Hallucination) == 0);
  CHECK(count(report, DiscrepancyKind::LexicalAdjustment) >= 2);
  const auto couple = testing::span_over(gold, "couple", ComponentType::Claim);
  bool adjusted = false;
  for (const auto& d : report.discrepancies) {
    if (d.kind == DiscrepancyKind::LexicalAdjustment && d.source && d.source->first == couple.first) adjusted = true;
  }
  CHECK(adjusted);
  const auto second = gold.spans[1];
  for (auto t = second.first; t <= second.last; ++t) CHECK(tag_kind(report.projected_bio[t]) == ComponentType::Premise);
}

TEST_CASE("a component the annotators did not mark") {
  const auto gold = testing::discovery_gold();
  const auto report = align_generation(gold, decode_xml(testing::kDiscoveryOutput));
  CHECK(count(report, DiscrepancyKind::Discovery) == 1);
  CHECK(count(report, DiscrepancyKind::BoundaryShift) == 1);
  CHECK(count(report, DiscrepancyKind::LabelRefinement) == 0);
  CHECK(count(report, DiscrepancyKind::Miss) == 0);
  const auto help = testing::span_over(gold, "to help them", ComponentType::Premise);
  for (const auto& d : report.discrepancies) {
    if (d.kind != DiscrepancyKind::Discovery) continue;
    REQUIRE(d.source.has_value());
    CHECK(d.source->first == help.first);
    CHECK(d.source->last == help.last);
  }
}

TEST_CASE("split component and relabel") {
  const auto gold = testing::type_error_gold();
  const auto report = align_generation(gold, decode_xml(testing::kTypeErrorOutput));
  CHECK(count(report, DiscrepancyKind::BoundaryShift) == 1);
  CHECK(count(report, DiscrepancyKind::LabelRefinement) == 1);
  CHECK(count(report, DiscrepancyKind::Miss) == 0);
  CHECK(count(report, DiscrepancyKind::Discovery) == 0);
  CHECK(report.cost == 0.0);
}

TEST_CASE("jaccard threshold separates refinements from boundary shifts") {
  const auto gold = testing::fixture("one two three four five", {{"one two three four five", ComponentType::Claim}});
  const auto generated = decode_xml("<premise>one two three four</premise> five");
  CHECK(count(align_generation(gold, generated), DiscrepancyKind::LabelRefinement) == 1);
  const auto strict = align_generation(gold, generated, ClassifyOptions{0.9});
  CHECK(count(strict, DiscrepancyKind::LabelRefinement) == 0);
  CHECK(count(strict, DiscrepancyKind::BoundaryShift) == 1);
}

TEST_CASE("classification totals on random generations") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 1000; ++i) {
    const auto gold = testing::random_document(rng, "t", 5, 1, 25);
    const auto generated = decode_xml(mutate(rng, gold));
    AlignmentReport report;
    REQUIRE_NOTHROW(report = align_generation(gold, generated));
    REQUIRE(report.projected_bio.size() == gold.tokens.size());
    CHECK(is_valid_bio(report.projected_bio));
    const auto t = tally(report);
    const auto projected = bio_to_spans(report.projected_bio).spans;
    const auto matching = match_spans(gold.spans, projected);
    std::size_t matched = 0;
    for (const auto& m : matching.gold_to_projected) matched += m.has_value();
    CHECK(t[static_cast<std::size_t>(DiscrepancyKind::Miss)] == gold.spans.size() - matched);
    CHECK(t[static_cast<std::size_t>(DiscrepancyKind::Discovery)] == projected.size() - matched);
    std::size_t insert_runs = 0;
    for (std::size_t k = 0; k < report.ops.size(); ++k) {
      if (report.ops[k].kind == EditKind::Insert && (k == 0 || report.ops[k - 1].kind != EditKind::Insert)) ++insert_runs;
    }
    CHECK(t[static_cast<std::size_t>(DiscrepancyKind::Hallucination)] == insert_runs);
  }
}

TEST_CASE("span matching is one-to-one") {
  const std::vector<ComponentSpan> gold = {{0, 4, ComponentType::Claim}};
  const std::vector<ComponentSpan> projected = {{0, 1, ComponentType::Claim}, {2, 4, ComponentType::Claim}};
  const auto m = match_spans(gold, projected);
  CHECK(m.gold_to_projected[0] == 1u);
  CHECK_FALSE(m.projected_to_gold[0].has_value());
}

TEST_CASE("alignment export lines") {
  const auto gold = testing::refinement_gold();
  const auto report = align_generation(gold, decode_xml(testing::kRefinementOutput));
  const auto line = alignment_export_line("Synthetic/fixture", 2, report);
  CHECK(line.find('\n') == std::string::npos);
  const auto back = alignment_export_from_line(line);
  CHECK(back.doc_id == "Synthetic/fixture");
  CHECK(back.chunk_index == 2);
  CHECK(back.cost == doctest::Approx(report.cost));
  CHECK(back.ops == compact_ops(report.ops));
  REQUIRE(back.discrepancies.size() == report.discrepancies.size());
  for (std::size_t i = 0; i < back.discrepancies.size(); ++i) {
    CHECK(back.discrepancies[i].kind == report.discrepancies[i].kind);
    CHECK(back.discrepancies[i].source == report.discrepancies[i].source);
  }
  CHECK_THROWS_AS(alignment_export_from_line("{"), ParseError);
  for (std::size_t k = 0; k < kDiscrepancyKindCount; ++k) {
    const auto kind = static_cast<DiscrepancyKind>(k);
    CHECK(parse_discrepancy_kind(to_string(kind)) == kind);
  }
}

TEST_CASE("projection rejects out-of-range ops") {
  const std::vector<EditOp> ops = {{EditKind::Match, 3, 0, 0}};
  CHECK_THROWS_AS(project_labels(ops, 2, {}), RangeError);
}
