#include "acd/prompting.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "acd/errors.hpp"
#include "acd/tagcodec.hpp"
#include "acd/utf8.hpp"

namespace acd {

namespace {

constexpr std::string_view kFormatSlot = "{format}";

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + needle.size()))
    ++n;
  return n;
}

// Template text with the format clause substituted, split around the input slot.
std::pair<std::string, std::string> frame(const PromptTemplate& tmpl) {
  std::string body = tmpl.instruction_text;
  if (auto slot = body.find(kFormatSlot); slot != std::string::npos) {
    body.replace(slot, kFormatSlot.size(), tmpl.format_clause);
  }
  const auto at = body.find(tmpl.placeholder);
  return {body.substr(0, at), body.substr(at + tmpl.placeholder.size())};
}

bool ends_sentence(const LabeledDocument& doc, const Token& t) {
  const char last = t.text.back();
  if (last != '.' && last != '!' && last != '?') return false;
  if (t.end >= doc.text.size()) return true;
  return utf8::is_space(utf8::decode(doc.text, t.end).codepoint);
}

}  // namespace

void PromptTemplate::validate() const {
  if (placeholder.empty()) throw ValidationError("template " + version_id + ": empty placeholder");
  if (count_occurrences(instruction_text, placeholder) != 1) {
    throw ValidationError("template " + version_id + ": placeholder must occur exactly once");
  }
  if (count_occurrences(instruction_text, kFormatSlot) > 1) {
    throw ValidationError("template " + version_id + ": format slot occurs more than once");
  }
  if (format_clause.find(placeholder) != std::string::npos) {
    throw ValidationError("template " + version_id + ": format clause contains the input placeholder");
  }
}

const PromptTemplate& default_template() {
  static const PromptTemplate kV1 = [] {
    PromptTemplate t;
    t.version_id = "v1";
    t.instruction_text =
        "You are an expert annotator of argumentative discourse. Detect every argumentative component "
        "in the input text and label it as a claim or a premise.\n"
        "- A claim is a statement that takes a position or asserts a proposition others could support or "
        "dispute.\n"
        "- A premise is a statement that gives a reason, evidence or justification for a claim or for "
        "another premise.\n"
        "Text that is not part of any component stays unmarked.\n\n"
        "{format}\n\n"
        "Input text:\n{input}\n\n"
        "Output:\n";
    t.format_clause =
        "Copy the input text exactly, character for character, without adding, removing or changing any "
        "word or punctuation mark. The only change allowed is inserting tags: wrap each claim in "
        "<claim>...</claim> and each premise in <premise>...</premise>. Components never nest or overlap.";
    return t;
  }();
  return kV1;
}

const PromptTemplate& template_by_version(std::string_view version_id) {
  if (version_id == default_template().version_id) return default_template();
  throw ConfigError("unknown template version '" + std::string(version_id) + "'");
}

std::size_t effective_budget(std::size_t budget, double safety_factor) {
  if (!(safety_factor > 0 && safety_factor <= 1)) throw ValidationError("safety factor must be in (0, 1]");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(static_cast<double>(budget) * safety_factor)));
}

std::vector<std::pair<std::size_t, std::size_t>> sentence_ranges(const LabeledDocument& doc) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
    if (ends_sentence(doc, doc.tokens[i]) || i + 1 == doc.tokens.size()) {
      out.emplace_back(start, i);
      start = i + 1;
    }
  }
  return out;
}

std::vector<Chunk> chunk_document(const LabeledDocument& doc, std::size_t budget) {
  if (budget == 0) throw ValidationError("chunk budget must be positive");
  const auto doc_id = qualified_id(doc);
  std::vector<Chunk> chunks;
  if (doc.tokens.empty()) return chunks;

  // A boundary after token b is unsafe when some span covers both b and b+1.
  std::vector<bool> crossing(doc.tokens.size(), false);
  for (const auto& s : doc.spans) {
    if (s.size() > budget) {
      throw ValidationError("document " + doc_id + ": span at byte " + std::to_string(doc.tokens[s.first].begin) +
                            " has " + std::to_string(s.size()) + " tokens, over the budget of " +
                            std::to_string(budget));
    }
    for (auto b = s.first; b < s.last; ++b) crossing[b] = true;
  }

  std::vector<std::pair<std::size_t, std::size_t>> units;
  for (const auto& sentence : sentence_ranges(doc)) {
    if (!units.empty() && crossing[units.back().second]) {
      units.back().second = sentence.second;
    } else {
      units.push_back(sentence);
    }
  }

  std::optional<std::pair<std::size_t, std::size_t>> current;
  auto emit = [&] {
    Chunk c;
    c.doc_id = doc_id;
    c.index = chunks.size();
    c.first_token = current->first;
    c.last_token = current->second;
    const auto begin = doc.tokens[c.first_token].begin;
    c.text = doc.text.substr(begin, doc.tokens[c.last_token].end - begin);
    chunks.push_back(std::move(c));
    current.reset();
  };
  for (const auto& unit : units) {
    const auto length = unit.second - unit.first + 1;
    if (length > budget) {
      throw ValidationError("document " + doc_id + ": sentence at byte " +
                            std::to_string(doc.tokens[unit.first].begin) + " has " + std::to_string(length) +
                            " tokens, over the budget of " + std::to_string(budget));
    }
    if (current && unit.second - current->first + 1 > budget) emit();
    if (current) {
      current->second = unit.second;
    } else {
      current = unit;
    }
  }
  if (current) emit();
  return chunks;
}

LabeledDocument chunk_view(const LabeledDocument& doc, const Chunk& chunk) {
  LabeledDocument view;
  view.id = chunk.doc_id + "#" + std::to_string(chunk.index);
  view.source = doc.source;
  view.text = chunk.text;
  const auto base = doc.tokens.at(chunk.first_token).begin;
  for (auto i = chunk.first_token; i <= chunk.last_token; ++i) {
    const auto& t = doc.tokens.at(i);
    view.tokens.push_back({t.text, t.begin - base, t.end - base});
  }
  for (const auto& s : doc.spans) {
    if (s.first >= chunk.first_token && s.last <= chunk.last_token) {
      view.spans.push_back({s.first - chunk.first_token, s.last - chunk.first_token, s.kind});
    }
  }
  return view;
}

std::string render_prompt(const PromptTemplate& tmpl, std::string_view chunk_text) {
  const auto [prefix, suffix] = frame(tmpl);
  std::string out;
  out.reserve(prefix.size() + chunk_text.size() + suffix.size());
  out += prefix;
  out += chunk_text;
  out += suffix;
  return out;
}

std::optional<std::string> extract_input(const PromptTemplate& tmpl, std::string_view prompt) {
  const auto [prefix, suffix] = frame(tmpl);
  if (prompt.size() < prefix.size() + suffix.size()) return std::nullopt;
  if (!prompt.starts_with(prefix) || !prompt.ends_with(suffix)) return std::nullopt;
  return std::string(prompt.substr(prefix.size(), prompt.size() - prefix.size() - suffix.size()));
}

std::vector<TrainingPair> export_training_pairs(std::span<const LabeledDocument> corpus, const PromptTemplate& tmpl,
                                                std::size_t budget) {
  tmpl.validate();
  std::vector<TrainingPair> pairs;
  for (const auto& doc : corpus) {
    for (const auto& chunk : chunk_document(doc, budget)) {
      TrainingPair pair;
      pair.doc_id = chunk.doc_id;
      pair.chunk_index = chunk.index;
      pair.instruction = render_prompt(tmpl, chunk);
      pair.input = chunk.text;
      pair.target = encode_xml(chunk_view(doc, chunk));
      pair.template_version = tmpl.version_id;
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

std::string to_json_line(const TrainingPair& pair) {
  nlohmann::ordered_json j;
  j["doc_id"] = pair.doc_id;
  j["chunk_index"] = pair.chunk_index;
  j["instruction"] = pair.instruction;
  j["input"] = pair.input;
  j["target"] = pair.target;
  j["template_version"] = pair.template_version;
  return j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

TrainingPair training_pair_from_json_line(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    TrainingPair pair;
    pair.doc_id = j.at("doc_id").get<std::string>();
    pair.chunk_index = j.at("chunk_index").get<std::size_t>();
    pair.instruction = j.at("instruction").get<std::string>();
    pair.input = j.at("input").get<std::string>();
    pair.target = j.at("target").get<std::string>();
    pair.template_version = j.at("template_version").get<std::string>();
    return pair;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed training pair: ") + e.what());
  }
}

}  // namespace acd
