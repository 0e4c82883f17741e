#include "acd/corpus_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "acd/errors.hpp"
#include "acd/utf8.hpp"

namespace acd {

using nlohmann::ordered_json;

std::string to_canonical_line(const LabeledDocument& doc, bool with_tokens) {
  const utf8::OffsetMap offsets(doc.text);
  ordered_json record;
  record["id"] = doc.id;
  record["source_corpus"] = to_string(doc.source);
  record["text"] = doc.text;
  auto spans = ordered_json::array();
  for (const auto& s : doc.spans) {
    spans.push_back({{"start_char", offsets.to_char(doc.tokens[s.first].begin)},
                     {"end_char", offsets.to_char(doc.tokens[s.last].end)},
                     {"kind", to_string(s.kind)}});
  }
  record["spans"] = std::move(spans);
  if (with_tokens) {
    auto tokens = ordered_json::array();
    for (const auto& t : doc.tokens) tokens.push_back({offsets.to_char(t.begin), offsets.to_char(t.end)});
    record["tokens"] = std::move(tokens);
  }
  return record.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

LabeledDocument from_canonical_line(std::string_view line, std::vector<Diagnostic>* warnings) {
  ordered_json record;
  try {
    record = ordered_json::parse(line);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(std::string("invalid JSON record: ") + e.what());
  }
  try {
    LabeledDocument doc;
    doc.id = record.at("id").get<std::string>();
    const auto source_name = record.at("source_corpus").get<std::string>();
    const auto source = parse_source_corpus(source_name);
    if (!source) throw ParseError("unknown source_corpus '" + source_name + "'");
    doc.source = *source;
    doc.text = record.at("text").get<std::string>();
    const utf8::OffsetMap offsets(doc.text);
    auto to_byte = [&](std::size_t c) {
      if (c > offsets.char_count()) {
        throw RangeError("document " + doc.id + ": offset " + std::to_string(c) + " beyond text length");
      }
      return offsets.to_byte(c);
    };

    if (record.contains("tokens")) {
      for (const auto& pair : record.at("tokens")) {
        const auto b = to_byte(pair.at(0).get<std::size_t>());
        const auto e = to_byte(pair.at(1).get<std::size_t>());
        if (b >= e) throw ParseError("document " + doc.id + ": empty token extent");
        doc.tokens.push_back({doc.text.substr(b, e - b), b, e});
      }
    } else {
      doc.tokens = tokenize(doc.text);
    }

    std::vector<CharSpan> byte_spans;
    for (const auto& s : record.at("spans")) {
      const auto kind_name = s.at("kind").get<std::string>();
      const auto kind = parse_component_type(kind_name);
      if (!kind) throw ParseError("document " + doc.id + ": unknown span kind '" + kind_name + "'");
      const auto b = to_byte(s.at("start_char").get<std::size_t>());
      const auto e = to_byte(s.at("end_char").get<std::size_t>());
      if (b >= e) throw ParseError("document " + doc.id + ": empty span extent");
      byte_spans.push_back({b, e, *kind});
    }
    std::vector<Diagnostic> local;
    doc.spans = snap_to_tokens(doc.tokens, byte_spans, local);
    if (warnings) {
      for (auto& w : local) warnings->push_back({0, doc.id + ": " + w.message});
    }
    doc.validate();
    return doc;
  } catch (const ordered_json::exception& e) {
    throw ParseError(std::string("malformed canonical record: ") + e.what());
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
}

void write_canonical(std::ostream& out, std::span<const LabeledDocument> docs, bool with_tokens) {
  for (const auto& doc : docs) out << to_canonical_line(doc, with_tokens) << '\n';
}

std::vector<LabeledDocument> read_canonical(std::istream& in, std::vector<Diagnostic>* warnings) {
  std::vector<LabeledDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      docs.push_back(from_canonical_line(line, warnings));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    } catch (const RangeError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return docs;
}

std::vector<LabeledDocument> read_canonical_file(const std::filesystem::path& path,
                                                 std::vector<Diagnostic>* warnings) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_canonical(in, warnings);
}

std::vector<std::vector<TokenRow>> read_token_table(std::string_view content) {
  std::vector<std::vector<TokenRow>> docs;
  std::vector<TokenRow> current;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    auto line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (!current.empty()) docs.push_back(std::move(current));
      current.clear();
      continue;
    }
    const auto tab = line.rfind('\t');
    if (tab == std::string_view::npos || tab == 0) throw ParseError("expected 'token<TAB>tag'", line_no);
    const auto tag_name = line.substr(tab + 1);
    const auto tag = parse_bio_tag(tag_name);
    if (!tag) throw ParseError("unknown tag '" + std::string(tag_name) + "'", line_no);
    current.push_back({std::string(line.substr(0, tab)), *tag});
  }
  if (!current.empty()) docs.push_back(std::move(current));
  return docs;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace acd
