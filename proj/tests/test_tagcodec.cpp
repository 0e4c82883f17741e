#include <doctest.h>

#include <sstream>

#include "acd/corpus_io.hpp"
#include "acd/errors.hpp"
#include "acd/tagcodec.hpp"
#include "support.hpp"

using namespace acd;

namespace {

std::vector<ComponentType> kinds(const ParseOutcome& p) {
  std::vector<ComponentType> out;
  for (const auto& s : p.spans) out.push_back(s.kind);
  return out;
}

std::string span_text(const ParseOutcome& p, std::size_t i) {
  const auto& s = p.spans.at(i);
  const auto b = p.tokens[s.first].begin;
  return p.plain_text.substr(b, p.tokens[s.last].end - b);
}

}  // namespace

TEST_CASE("tag skeleton") {
  CHECK(tag_skeleton("").empty());
  const auto both = tag_skeleton("<premise></premise>");
  REQUIRE(both.size() == 2);
  CHECK(both[0].kind == ComponentType::Premise);
  CHECK(both[0].edge == TagEdge::Open);
  CHECK(both[0].position == 0);
  CHECK(both[1].edge == TagEdge::Close);
  CHECK(both[1].position == 9);
  const auto one = tag_skeleton("a <claim> b");
  REQUIRE(one.size() == 1);
  CHECK(one[0].position == 2);
  CHECK(tag_skeleton("<claims> <b> </ premise2>").empty());
  const auto loose = tag_skeleton("< Claim >x</ PREMISE >");
  REQUIRE(loose.size() == 2);
  CHECK(loose[0].length == 9);
  CHECK(loose[1].kind == ComponentType::Premise);
}

TEST_CASE("encode_xml") {
  const auto plain = make_document("p", SourceCorpus::Synthetic, "no components here.", {});
  CHECK(encode_xml(plain) == plain.text);
  CHECK(encode_xml(testing::type_error_gold()) == testing::kTypeErrorGoldTagged);
  auto overlapping = make_document("o", SourceCorpus::Synthetic, "a b c", {});
  overlapping.spans = {{0, 1, ComponentType::Claim}, {1, 2, ComponentType::Premise}};
  CHECK_THROWS_AS(encode_xml(overlapping), ValidationError);
  const auto literal = make_document("l", SourceCorpus::Synthetic, "see <claim> here", {});
  CHECK_THROWS_AS(encode_xml(literal), ValidationError);
}

TEST_CASE("decode_xml well-formed input") {
  const auto none = decode_xml("no tags here", ParseMode::Strict);
  CHECK(none.plain_text == "no tags here");
  CHECK(none.spans.empty());
  CHECK(none.repairs.empty());

  const auto two = decode_xml("<claim>A</claim> b <premise>c</premise>", ParseMode::Strict);
  CHECK(two.plain_text == "A b c");
  CHECK(kinds(two) == std::vector{ComponentType::Claim, ComponentType::Premise});

  const auto upper = decode_xml("<CLAIM>A</Claim>", ParseMode::Strict);
  REQUIRE(upper.spans.size() == 1);
  CHECK(upper.plain_text == "A");

  const auto literal = decode_xml("<claims>x</claims>", ParseMode::Strict);
  CHECK(literal.plain_text == "<claims>x</claims>");
  CHECK(literal.spans.empty());
}

TEST_CASE("lenient recovery of single faults") {
  struct Case {
    std::string input;
    std::string plain;
    std::vector<std::string> spans;
    RepairKind repair;
  };
  const std::vector<Case> cases = {
      {"<claim>A b", "A b", {"A b"}, RepairKind::UnclosedTag},
      {"A</claim> b", "A b", {}, RepairKind::UnopenedClose},
      {"<claim>A</premise> b", "A b", {"A"}, RepairKind::MismatchedClose},
      {"<claim>A <premise>b</premise> c", "A b c", {"A", "b"}, RepairKind::NestedOpen},
      {"x <claim></claim> y", "x  y", {}, RepairKind::EmptySpan},
      {"<claim>ab</claim><premise>cd</premise>", "abcd", {"abcd"}, RepairKind::SharedToken},
  };
  for (const auto& c : cases) {
    CAPTURE(c.input);
    const auto out = decode_xml(c.input, ParseMode::Lenient);
    CHECK(out.plain_text == c.plain);
    REQUIRE(out.spans.size() == c.spans.size());
    for (std::size_t i = 0; i < c.spans.size(); ++i) CHECK(span_text(out, i) == c.spans[i]);
    REQUIRE(out.repairs.size() == 1);
    CHECK(out.repairs[0].kind == c.repair);
    CHECK_THROWS_AS(decode_xml(c.input, ParseMode::Strict), ParseError);
  }
}

TEST_CASE("strict errors carry the byte position") {
  try {
    decode_xml("ok </claim>", ParseMode::Strict);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position() == 3);
  }
}

TEST_CASE("lenient parse of a model output with a split component") {
  const auto out = decode_xml(testing::kTypeErrorOutput);
  CHECK(kinds(out) == std::vector{ComponentType::Premise, ComponentType::Claim, ComponentType::Premise});
  CHECK(out.repairs.empty());
}

TEST_CASE("codec round trip on random documents") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 400; ++i) {
    const auto doc = testing::random_document(rng, "r" + std::to_string(i));
    const auto tagged = encode_xml(doc);
    CHECK(strip_tags(tagged) == doc.text);
    const auto back = decode_xml(tagged, ParseMode::Strict);
    CHECK(back.plain_text == doc.text);
    CHECK(back.spans == doc.spans);
    CHECK(back.repairs.empty());
  }
}

TEST_CASE("lenient parsing is total and its repairs are idempotent") {
  std::mt19937_64 rng(17);
  const std::vector<std::string> pieces = {"<claim>", "</claim>", "<premise>", "</premise>", "< Claim >", "</PREMISE>",
                                           "word",    " ",        "x.",        "<claims>",   "<",         ">",
                                           "é",       "\n"};
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::uniform_int_distribution<int> length(0, 25);
  for (int i = 0; i < 2000; ++i) {
    std::string input;
    const int n = length(rng);
    for (int k = 0; k < n; ++k) input += pieces[pick(rng)];
    CAPTURE(input);
    ParseOutcome first;
    REQUIRE_NOTHROW(first = decode_xml(input, ParseMode::Lenient));
    CHECK(first.plain_text == strip_tags(input));
    for (std::size_t s = 1; s < first.spans.size(); ++s) CHECK(first.spans[s - 1].last < first.spans[s].first);
    LabeledDocument doc;
    doc.id = "x";
    doc.text = first.plain_text;
    doc.tokens = first.tokens;
    doc.spans = first.spans;
    const auto again = decode_xml(encode_xml(doc), ParseMode::Strict);
    CHECK(again.spans == first.spans);
    CHECK(again.repairs.empty());
  }
}

TEST_CASE("canonical records round trip with code point offsets") {
  std::mt19937_64 rng(3);
  std::vector<LabeledDocument> docs;
  for (int i = 0; i < 50; ++i) docs.push_back(testing::random_document(rng, "c" + std::to_string(i)));
  std::ostringstream out;
  write_canonical(out, docs);
  std::istringstream in(out.str());
  const auto back = read_canonical(in);
  REQUIRE(back.size() == docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    CHECK(back[i].id == docs[i].id);
    CHECK(back[i].text == docs[i].text);
    CHECK(back[i].tokens == docs[i].tokens);
    CHECK(back[i].spans == docs[i].spans);
  }
  const auto doc = make_document("u", SourceCorpus::WebDiscourse, "Café prices rise.", {{1, 2, ComponentType::Claim}});
  const auto line = to_canonical_line(doc);
  CHECK(line.find("\"start_char\":5") != std::string::npos);
  CHECK(line.find("\"end_char\":16") != std::string::npos);
}

TEST_CASE("canonical records keep token-table tokenization") {
  const std::vector<TokenRow> rows{{"It", BioTag::BClaim}, {"'s", BioTag::IClaim}, {"fine", BioTag::IClaim}};
  const auto doc = parse_token_table("t", SourceCorpus::Synthetic, rows).document;
  CHECK(doc.tokens.size() == 3);
  const auto back = from_canonical_line(to_canonical_line(doc, true));
  CHECK(back.tokens == doc.tokens);
  CHECK(corpus_stats(std::span(&back, 1)) == corpus_stats(std::span(&doc, 1)));
  CHECK(from_canonical_line(to_canonical_line(doc, false)).tokens != doc.tokens);
}

TEST_CASE("canonical reader reports line numbers") {
  std::istringstream in(
      "{\"id\":\"a\",\"source_corpus\":\"Synthetic\",\"text\":\"x\",\"spans\":[]}\n{\"id\":\"b\",\"text\":3}\n");
  try {
    read_canonical(in);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("token table reader") {
  const auto blocks = read_token_table("I\tB-Claim\nagree\tI-Claim\n\nYes\tO\n");
  REQUIRE(blocks.size() == 2);
  CHECK(blocks[0].size() == 2);
  CHECK(blocks[1][0].tag == BioTag::O);
  try {
    read_token_table("I\tB-Claim\nx\tB-Major\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}
