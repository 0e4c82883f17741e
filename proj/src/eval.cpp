#include "acd/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "acd/errors.hpp"

namespace acd {

using nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, kBioTagCount> kShortLabels = {"B-C", "I-C", "B-P", "I-P", "O"};

double safe_div(double a, double b) { return b > 0 ? a / b : 0.0; }
double harmonic(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void count_spans(EvalReport& report, std::span<const BioTag> gold, std::span<const BioTag> predicted) {
  const auto g = bio_to_spans(gold).spans;
  const auto p = bio_to_spans(predicted).spans;
  report.span_scores.gold += g.size();
  report.span_scores.predicted += p.size();
  std::set<std::tuple<std::size_t, std::size_t, ComponentType>> gold_set;
  for (const auto& s : g) gold_set.emplace(s.first, s.last, s.kind);
  for (const auto& s : p) report.span_scores.correct += gold_set.count({s.first, s.last, s.kind});
}

}  // namespace

std::size_t EvalReport::total_tokens() const {
  std::size_t total = 0;
  for (const auto& row : confusion) total += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return total;
}

double macro_f1(std::span<const double> class_f1) {
  if (class_f1.empty()) return 0.0;
  return std::accumulate(class_f1.begin(), class_f1.end(), 0.0) / static_cast<double>(class_f1.size());
}

void finalize(EvalReport& report) {
  report.flags.clear();
  std::size_t trace = 0;
  for (std::size_t c = 0; c < kBioTagCount; ++c) {
    auto& s = report.class_scores[c];
    s.support = std::accumulate(report.confusion[c].begin(), report.confusion[c].end(), std::size_t{0});
    s.predicted = 0;
    for (std::size_t g = 0; g < kBioTagCount; ++g) s.predicted += report.confusion[g][c];
    const auto tp = report.confusion[c][c];
    trace += tp;
    s.precision = safe_div(static_cast<double>(tp), static_cast<double>(s.predicted));
    s.recall = safe_div(static_cast<double>(tp), static_cast<double>(s.support));
    s.f1 = harmonic(s.precision, s.recall);
  }

  const auto total = report.total_tokens();
  report.accuracy = safe_div(static_cast<double>(trace), static_cast<double>(total));
  if (total == 0) report.flags.push_back("no data: no tokens were evaluated");

  std::vector<double> included;
  for (std::size_t c = 0; c < kBioTagCount; ++c) {
    const auto tag = kAllBioTags[c];
    if (tag == BioTag::O && !report.options.macro_includes_o) continue;
    if (report.class_scores[c].support == 0) {
      if (total > 0) {
        report.flags.push_back("class " + std::string(to_string(tag)) + " has zero support; " +
                               (report.options.exclude_zero_support ? "excluded from macro F1"
                                                                    : "f1 = 0 by convention"));
      }
      if (report.options.exclude_zero_support) continue;
    }
    included.push_back(report.class_scores[c].f1);
  }
  report.macro_f1 = macro_f1(included);

  auto& sp = report.span_scores;
  sp.precision = safe_div(static_cast<double>(sp.correct), static_cast<double>(sp.predicted));
  sp.recall = safe_div(static_cast<double>(sp.correct), static_cast<double>(sp.gold));
  sp.f1 = harmonic(sp.precision, sp.recall);
}

EvalReport evaluate(std::span<const std::vector<BioTag>> gold, std::span<const std::vector<BioTag>> predicted,
                    std::span<const std::string> names, const EvalOptions& options) {
  auto name_of = [&](std::size_t d) { return d < names.size() ? names[d] : "#" + std::to_string(d); };
  if (gold.size() != predicted.size()) {
    throw ValidationError("gold has " + std::to_string(gold.size()) + " documents, predictions have " +
                          std::to_string(predicted.size()));
  }
  EvalReport report;
  report.options = options;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    if (gold[d].size() != predicted[d].size()) {
      throw ValidationError("document " + name_of(d) + ": gold has " + std::to_string(gold[d].size()) +
                            " tokens, prediction has " + std::to_string(predicted[d].size()));
    }
    for (std::size_t i = 0; i < gold[d].size(); ++i) {
      ++report.confusion[static_cast<std::size_t>(gold[d][i])][static_cast<std::size_t>(predicted[d][i])];
    }
    count_spans(report, gold[d], predicted[d]);
    ++report.documents;
  }
  finalize(report);
  return report;
}

EvalReport aggregate(std::span<const EvalReport> reports) {
  EvalReport out;
  if (!reports.empty()) out.options = reports.front().options;
  for (const auto& r : reports) {
    for (std::size_t g = 0; g < kBioTagCount; ++g)
      for (std::size_t p = 0; p < kBioTagCount; ++p) out.confusion[g][p] += r.confusion[g][p];
    for (std::size_t k = 0; k < kDiscrepancyKindCount; ++k) out.discrepancy_tally[k] += r.discrepancy_tally[k];
    out.span_scores.gold += r.span_scores.gold;
    out.span_scores.predicted += r.span_scores.predicted;
    out.span_scores.correct += r.span_scores.correct;
    out.documents += r.documents;
  }
  finalize(out);
  return out;
}

void add_discrepancies(EvalReport& report, std::span<const DiscrepancyRecord> records) {
  for (const auto& d : records) ++report.discrepancy_tally[static_cast<std::size_t>(d.kind)];
}

namespace {

std::string render_machine(const EvalReport& report, const RunMetadata& meta) {
  ordered_json j;
  j["metadata"] = {{"template_version", meta.template_version},
                   {"backend_id", meta.backend_id},
                   {"decoding",
                    {{"temperature", meta.params.temperature},
                     {"top_p", meta.params.top_p},
                     {"max_output_tokens", meta.params.max_output_tokens}}},
                   {"config_hash", meta.config_hash},
                   {"jaccard_threshold", meta.jaccard_threshold},
                   {"parse_mode", meta.parse_mode},
                   {"missing_chunks", meta.missing_chunks},
                   {"parse_failures", meta.parse_failures},
                   {"accuracy_definition", "token-level: correctly labeled source tokens / all source tokens"}};
  j["options"] = {{"macro_includes_o", report.options.macro_includes_o},
                  {"exclude_zero_support", report.options.exclude_zero_support}};
  auto classes = ordered_json::array();
  for (std::size_t c = 0; c < kBioTagCount; ++c) {
    const auto& s = report.class_scores[c];
    classes.push_back({{"label", to_string(kAllBioTags[c])},
                       {"precision", s.precision},
                       {"recall", s.recall},
                       {"f1", s.f1},
                       {"support", s.support},
                       {"predicted", s.predicted}});
  }
  j["classes"] = std::move(classes);
  j["macro_f1"] = report.macro_f1;
  j["accuracy"] = report.accuracy;
  auto labels = ordered_json::array();
  for (auto tag : kAllBioTags) labels.push_back(to_string(tag));
  auto matrix = ordered_json::array();
  for (const auto& row : report.confusion) matrix.push_back(row);
  j["confusion"] = {{"labels", std::move(labels)}, {"rows", "gold"}, {"columns", "predicted"}, {"matrix", std::move(matrix)}};
  const auto& sp = report.span_scores;
  j["span_exact_match"] = {{"note", "span-level exact match; supplementary, not part of the token-level metrics"},
                           {"gold", sp.gold},
                           {"predicted", sp.predicted},
                           {"correct", sp.correct},
                           {"precision", sp.precision},
                           {"recall", sp.recall},
                           {"f1", sp.f1}};
  ordered_json tally;
  for (std::size_t k = 0; k < kDiscrepancyKindCount; ++k) {
    tally[std::string(to_string(static_cast<DiscrepancyKind>(k)))] = report.discrepancy_tally[k];
  }
  j["discrepancy_tally"] = std::move(tally);
  j["documents"] = report.documents;
  j["tokens"] = report.total_tokens();
  j["flags"] = report.flags;
  return j.dump(2, ' ', false, ordered_json::error_handler_t::replace) + "\n";
}

std::string render_human(const EvalReport& report, std::span<const AlignmentExport> alignments,
                         const RunMetadata& meta) {
  std::ostringstream out;
  out << "# ACD evaluation report\n\n";
  out << "Acc is token-level accuracy: correctly labeled source tokens / all source tokens.\n";
  out << "F1-Macro is the unweighted mean of per-class F1 over "
      << (report.options.macro_includes_o ? "B-C, I-C, B-P, I-P and O" : "B-C, I-C, B-P and I-P")
      << (report.options.exclude_zero_support ? ", skipping zero-support classes" : "") << ".\n\n";
  if (!meta.backend_id.empty() || !meta.template_version.empty()) {
    out << "- backend: " << meta.backend_id << "\n- template: " << meta.template_version
        << "\n- decoding: temperature=" << meta.params.temperature << " top_p=" << meta.params.top_p
        << " max_output_tokens=" << meta.params.max_output_tokens << "\n- config hash: " << meta.config_hash
        << "\n\n";
  }
  if (report.total_tokens() == 0) out << "**no data**: nothing was evaluated.\n\n";

  out << "| Metric |";
  for (auto l : kShortLabels) out << ' ' << l << " |";
  out << " F1-Macro |\n|---|";
  for (std::size_t c = 0; c < kBioTagCount; ++c) out << "---|";
  out << "---|\n";
  auto row = [&](std::string_view name, auto getter, bool with_macro) {
    out << "| " << name << " |";
    for (const auto& s : report.class_scores) out << ' ' << getter(s) << " |";
    out << ' ' << (with_macro ? fixed(report.macro_f1, 2) : std::string()) << " |\n";
  };
  row("F1", [](const ClassScores& s) { return fixed(s.f1, 2); }, true);
  row("Precision", [](const ClassScores& s) { return fixed(s.precision, 2); }, false);
  row("Recall", [](const ClassScores& s) { return fixed(s.recall, 2); }, false);
  row("Support", [](const ClassScores& s) { return std::to_string(s.support); }, false);
  out << "\nMacro F1: " << fixed(report.macro_f1, 4) << "  Acc: " << fixed(report.accuracy, 4)
      << "  Tokens: " << report.total_tokens() << "  Documents: " << report.documents << "\n\n";

  if (!report.flags.empty()) {
    out << "Flags:\n";
    for (const auto& f : report.flags) out << "- " << f << "\n";
    out << "\n";
  }

  out << "## Confusion matrix (rows: gold, columns: predicted)\n\n| gold \\ pred |";
  for (auto l : kShortLabels) out << ' ' << l << " |";
  out << "\n|---|";
  for (std::size_t c = 0; c < kBioTagCount; ++c) out << "---|";
  out << "\n";
  for (std::size_t g = 0; g < kBioTagCount; ++g) {
    out << "| " << kShortLabels[g] << " |";
    for (auto v : report.confusion[g]) out << ' ' << v << " |";
    out << "\n";
  }

  const auto& sp = report.span_scores;
  out << "\n## Span-level exact match (supplementary, not a token-level metric)\n\n"
      << "gold=" << sp.gold << " predicted=" << sp.predicted << " correct=" << sp.correct
      << " P=" << fixed(sp.precision, 4) << " R=" << fixed(sp.recall, 4) << " F1=" << fixed(sp.f1, 4) << "\n";

  out << "\n## Discrepancies\n\n| Kind | Count |\n|---|---|\n";
  for (std::size_t k = 0; k < kDiscrepancyKindCount; ++k) {
    out << "| " << to_string(static_cast<DiscrepancyKind>(k)) << " | " << report.discrepancy_tally[k] << " |\n";
  }
  constexpr std::size_t kMaxPositions = 50;
  for (std::size_t k = 0; k < kDiscrepancyKindCount; ++k) {
    const auto kind = static_cast<DiscrepancyKind>(k);
    std::vector<std::string> positions;
    std::string example;
    for (const auto& a : alignments) {
      for (const auto& d : a.discrepancies) {
        if (d.kind != kind) continue;
        if (example.empty()) example = d.note;
        std::string where = a.doc_id + "#" + std::to_string(a.chunk_index);
        if (d.source) where += " source " + std::to_string(d.source->first) + "-" + std::to_string(d.source->last);
        if (d.generated) {
          where += " generated " + std::to_string(d.generated->first) + "-" + std::to_string(d.generated->last);
        }
        positions.push_back(std::move(where));
      }
    }
    if (positions.empty()) continue;
    out << "\n### " << to_string(kind) << " (" << positions.size() << ")\n\n";
    out << "Example: " << example << "\n\n";
    for (std::size_t i = 0; i < positions.size() && i < kMaxPositions; ++i) out << "- " << positions[i] << "\n";
    if (positions.size() > kMaxPositions) out << "- ... " << positions.size() - kMaxPositions << " more\n";
  }
  return out.str();
}

}  // namespace

std::string render_report(const EvalReport& report, std::span<const AlignmentExport> alignments, ReportFormat format,
                          const RunMetadata& metadata) {
  return format == ReportFormat::Machine ? render_machine(report, metadata)
                                         : render_human(report, alignments, metadata);
}

EvalReport report_from_machine_json(std::string_view text, RunMetadata* metadata) {
  try {
    const auto j = nlohmann::json::parse(text);
    EvalReport report;
    report.options.macro_includes_o = j.at("options").at("macro_includes_o").get<bool>();
    report.options.exclude_zero_support = j.at("options").at("exclude_zero_support").get<bool>();
    const auto& matrix = j.at("confusion").at("matrix");
    for (std::size_t g = 0; g < kBioTagCount; ++g)
      for (std::size_t p = 0; p < kBioTagCount; ++p) report.confusion[g][p] = matrix.at(g).at(p).get<std::size_t>();
    const auto& sp = j.at("span_exact_match");
    report.span_scores.gold = sp.at("gold").get<std::size_t>();
    report.span_scores.predicted = sp.at("predicted").get<std::size_t>();
    report.span_scores.correct = sp.at("correct").get<std::size_t>();
    for (std::size_t k = 0; k < kDiscrepancyKindCount; ++k) {
      report.discrepancy_tally[k] =
          j.at("discrepancy_tally").value(std::string(to_string(static_cast<DiscrepancyKind>(k))), std::size_t{0});
    }
    report.documents = j.value("documents", std::size_t{0});
    finalize(report);
    if (metadata) {
      const auto& m = j.at("metadata");
      metadata->template_version = m.value("template_version", std::string{});
      metadata->backend_id = m.value("backend_id", std::string{});
      metadata->config_hash = m.value("config_hash", std::string{});
      metadata->jaccard_threshold = m.value("jaccard_threshold", 0.8);
      metadata->parse_mode = m.value("parse_mode", std::string("lenient"));
      metadata->missing_chunks = m.value("missing_chunks", std::size_t{0});
      metadata->parse_failures = m.value("parse_failures", std::size_t{0});
      if (m.contains("decoding")) {
        const auto& d = m.at("decoding");
        metadata->params.temperature = d.value("temperature", 0.01);
        metadata->params.top_p = d.value("top_p", 0.1);
        metadata->params.max_output_tokens = d.value("max_output_tokens", std::size_t{2048});
      }
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed machine report: ") + e.what());
  }
}

}  // namespace acd
