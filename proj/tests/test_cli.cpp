#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "acd/cli.hpp"
#include "acd/corpus_io.hpp"
#include "acd/errors.hpp"
#include "support.hpp"

using namespace acd;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path write_corpus(const fs::path& dir, const std::vector<LabeledDocument>& docs) {
  const auto path = dir / "corpus.jsonl";
  std::ofstream out(path, std::ios::binary);
  write_canonical(out, docs);
  return path;
}

double macro_of(const fs::path& report) {
  return nlohmann::json::parse(slurp(report))["macro_f1"].get<double>();
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
  CHECK(cli({"convert"}).code == kExitUsage);  // -o is required
  const auto dir = testing::scratch_dir("cli-usage");
  std::ofstream(dir / "bad.json") << R"({"nope": true})";
  const auto r = cli({"stats", "--config", (dir / "bad.json").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("nope") != std::string::npos);
  CHECK(cli({"stats", "--corpus", (dir / "missing.jsonl").string()}).code == kExitData);
  fs::remove_all(dir);
}

TEST_CASE("convert") {
  const auto dir = testing::scratch_dir("cli-convert");
  SUBCASE("empty directory") {
    fs::create_directories(dir / "empty");
    const auto r = cli({"convert", (dir / "empty").string(), "--format", "standoff", "-o", (dir / "out.jsonl").string()});
    CHECK(r.code == kExitOk);
    CHECK(slurp(dir / "out.jsonl").empty());
  }
  SUBCASE("standoff pair") {
    fs::create_directories(dir / "brat");
    std::ofstream(dir / "brat" / "essay1.txt") << "Cars should be banned. They pollute the air.";
    std::ofstream(dir / "brat" / "essay1.ann") << "T1\tClaim 0 20\tCars should be banned\nT2\tPremise 22 43\tThey "
                                                  "pollute the air\n";
    const auto r = cli({"convert", (dir / "brat").string(), "--format", "standoff", "--source", "PersuasiveEssays", "-o",
                        (dir / "out.jsonl").string()});
    CHECK(r.code == kExitOk);
    const auto docs = read_canonical_file(dir / "out.jsonl");
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].id == "essay1");
    CHECK(docs[0].source == SourceCorpus::PersuasiveEssays);
    REQUIRE(docs[0].spans.size() == 2);
    CHECK(docs[0].spans[0].kind == ComponentType::Claim);
  }
  SUBCASE("malformed canonical line") {
    std::ofstream(dir / "in.jsonl") << R"({"id":"a","source_corpus":"Synthetic","text":"x","spans":[]})" << "\n{broken\n";
    const auto r = cli({"convert", (dir / "in.jsonl").string(), "--format", "canonical", "-o", (dir / "out.jsonl").string()});
    CHECK(r.code == kExitData);
    CHECK(r.err.find(":2:") != std::string::npos);
  }
  SUBCASE("token table") {
    std::ofstream(dir / "t.tsv") << "Taxes\tB-Claim\nmust\tI-Claim\nrise\tI-Claim\n.\tO\n\nOk\tO\n";
    const auto r = cli({"convert", (dir / "t.tsv").string(), "--format", "token-table", "-o", (dir / "out.jsonl").string()});
    CHECK(r.code == kExitOk);
    const auto docs = read_canonical_file(dir / "out.jsonl");
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].tokens.size() == 4);
    CHECK(docs[0].spans.size() == 1);
  }
  fs::remove_all(dir);
}

TEST_CASE("stats flags the inconsistent published summary") {
  const auto dir = testing::scratch_dir("cli-stats");
  const auto corpus = write_corpus(dir, testing::random_corpus(4, 10));
  const auto r = cli({"stats", "--corpus", corpus.string()});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("| Source | Docs | O | B-P | I-P | B-C | I-C | Claims | Premises |") != std::string::npos);
  CHECK(r.out.find("| Synthetic | 10 |") != std::string::npos);
  CHECK(r.out.find("PersuasiveEssays: not in input") != std::string::npos);
  CHECK(r.out.find("FLAG:") != std::string::npos);
  CHECK(r.out.find("swapped") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("published cross-check") {
  std::map<SourceCorpus, CorpusStats> observed;
  CorpusStats s;
  s.tag_counts = {29624, 338941, 26055, 350079, 566492};  // B-C, I-C, B-P, I-P, O
  observed[SourceCorpus::USElecDeb60To16] = s;
  for (const auto& c : cross_check(observed)) {
    if (c.source == SourceCorpus::USElecDeb60To16) {
      CHECK(c.observed);
      CHECK(c.counts_match);
      CHECK(c.summary_consistent);
    } else if (c.source == SourceCorpus::PersuasiveEssays) {
      CHECK_FALSE(c.observed);
      CHECK_FALSE(c.summary_consistent);
    }
  }
  s.tag_counts[4] += 1;
  observed[SourceCorpus::USElecDeb60To16] = s;
  for (const auto& c : cross_check(observed)) {
    if (c.source == SourceCorpus::USElecDeb60To16) CHECK(c.mismatches.size() == 1);
  }
}

TEST_CASE("split and export") {
  const auto dir = testing::scratch_dir("cli-split");
  const auto corpus = write_corpus(dir, testing::random_corpus(6, 40));
  const auto out = dir / "out";
  CHECK(cli({"split", "--corpus", corpus.string(), "--out-dir", out.string()}).code == kExitOk);
  const auto train = read_canonical_file(out / "train.jsonl");
  const auto dev = read_canonical_file(out / "dev.jsonl");
  const auto test = read_canonical_file(out / "test.jsonl");
  CHECK(train.size() == 32);
  CHECK(dev.size() == 4);
  CHECK(test.size() == 4);
  const auto first = slurp(out / "train.jsonl");
  CHECK(cli({"split", "--corpus", corpus.string(), "--out-dir", out.string()}).code == kExitOk);
  CHECK(slurp(out / "train.jsonl") == first);
  CHECK(cli({"split", "--corpus", corpus.string(), "--out-dir", out.string(), "--seed", "14"}).code == kExitOk);
  CHECK(slurp(out / "train.jsonl") != first);

  CHECK(cli({"export-train", "--corpus", (out / "train.jsonl").string(), "--out-dir", out.string()}).code == kExitOk);
  std::ifstream pairs(out / "train_pairs.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(pairs, line);) {
    const auto pair = training_pair_from_json_line(line);
    CHECK(strip_tags(pair.target) == pair.input);
    ++lines;
  }
  CHECK(lines >= 32);
  fs::remove_all(dir);
}

TEST_CASE("predict and evaluate") {
  const auto dir = testing::scratch_dir("cli-pipeline");
  const auto corpus = write_corpus(dir, testing::random_corpus(9, 25));
  const auto out = dir / "out";
  auto run = [&](std::vector<std::string> extra, const std::string& name) {
    std::vector<std::string> predict = {"predict", "--corpus", corpus.string(), "--out-dir", (out / name).string()};
    predict.insert(predict.end(), extra.begin(), extra.end());
    const auto p = cli(predict);
    CHECK(p.code == kExitOk);
    std::vector<std::string> evaluate = {"evaluate", "--corpus", corpus.string(), "--out-dir", (out / name).string()};
    evaluate.insert(evaluate.end(), extra.begin(), extra.end());
    const auto e = cli(evaluate);
    CHECK(e.code == kExitOk);
    return out / name;
  };

  SUBCASE("gold replay is perfect") {
    const auto d = run({"--backend", "gold-replay"}, "gold");
    CHECK(macro_of(d / "report.json") == 1.0);
    const auto report = nlohmann::json::parse(slurp(d / "report.json"));
    CHECK(report["accuracy"].get<double>() == 1.0);
    CHECK(fs::exists(d / "report.md"));
    CHECK(fs::exists(d / "alignments.jsonl"));
    const auto human = cli({"report", "--input", (d / "report.json").string(), "--format", "human"});
    CHECK(human.code == kExitOk);
    CHECK(human.out.find("| F1 | 1.00 | 1.00 | 1.00 | 1.00 | 1.00 | 1.00 |") != std::string::npos);
  }
  SUBCASE("echo predicts only O") {
    const auto d = run({"--backend", "echo"}, "echo");
    const auto report = report_from_machine_json(slurp(d / "report.json"));
    CHECK(report.scores(BioTag::O).recall == 1.0);
    for (auto tag : {BioTag::BClaim, BioTag::IClaim, BioTag::BPremise, BioTag::IPremise}) CHECK(report.scores(tag).f1 == 0.0);
  }
  SUBCASE("perturbed replay scores below one") {
    const auto d = run({"--backend", "perturb"}, "perturb");
    CHECK(macro_of(d / "report.json") < 1.0);
  }
  SUBCASE("reruns are byte-identical") {
    const auto d = run({"--backend", "perturb"}, "again");
    const auto report = slurp(d / "report.json");
    const auto transcript = slurp(d / "transcript.jsonl");
    run({"--backend", "perturb"}, "again");
    CHECK(slurp(d / "report.json") == report);
    CHECK(slurp(d / "transcript.jsonl") == transcript);
  }
  SUBCASE("missing chunks") {
    const auto d = out / "partial";
    fs::create_directories(d);
    std::ofstream(d / "transcript.jsonl") << "";
    const auto strict = cli({"evaluate", "--corpus", corpus.string(), "--out-dir", d.string()});
    CHECK(strict.code == kExitData);
    const auto partial = cli({"evaluate", "--corpus", corpus.string(), "--out-dir", d.string(), "--allow-partial"});
    CHECK(partial.code == kExitOk);
    const auto meta = nlohmann::json::parse(slurp(d / "report.json"))["metadata"];
    CHECK(meta["missing_chunks"].get<std::size_t>() > 0);
  }
  SUBCASE("chat without a credential") {
    const auto r = cli({"predict", "--corpus", corpus.string(), "--out-dir", (out / "chat").string(), "--backend", "chat",
                        "--endpoint", "http://127.0.0.1:9/v1/chat/completions", "--model", "m", "--api-key-env",
                        "ACD_TEST_UNSET_VARIABLE"});
    CHECK(r.code == kExitUsage);
  }
  SUBCASE("unreachable endpoint") {
    const auto r = cli({"predict", "--corpus", corpus.string(), "--out-dir", (out / "down").string(), "--backend", "chat",
                        "--endpoint", "http://127.0.0.1:9/v1/chat/completions", "--model", "m", "--retries", "0"});
    CHECK(r.code == kExitBackend);
  }
  fs::remove_all(dir);
}

TEST_CASE("library pipeline composes with the reader and writer") {
  const auto docs = testing::random_corpus(10, 12);
  RunConfig config;
  const auto backend = make_backend(config, docs);
  TranscriptStore store;
  const auto evaluation = run_pipeline(config, docs, *backend, store);
  CHECK(evaluation.report.macro_f1 == 1.0);
  CHECK(evaluation.metadata.backend_id == "gold-replay");
  CHECK(evaluation.metadata.config_hash == config_hash(config));
  CHECK(evaluation.alignment_lines.size() == build_requests(config, docs).size());
  const auto again = evaluate_records(config, docs, store.records());
  CHECK(render_report(again.report, again.alignments, ReportFormat::Machine, again.metadata) ==
        render_report(evaluation.report, evaluation.alignments, ReportFormat::Machine, evaluation.metadata));
}
