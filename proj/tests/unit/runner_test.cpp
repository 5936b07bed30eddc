#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "synthetic.hpp"
#include "tarsim/error.hpp"
#include "tarsim/runner.hpp"

namespace tarsim {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

// Writes the signature corpus with two categories, "sig" and "sig_b"
// (the same positives under a second name).
void write_inputs(const fs::path& dir) {
  const auto c = testing::make_signature_corpus({.n_docs = 300, .n_relevant = 30});
  std::ofstream corpus(dir / "corpus.jsonl");
  for (const auto& d : c.documents()) corpus << json{{"doc_id", d.doc_id}, {"text", d.text}}.dump() << "\n";
  std::ofstream labels(dir / "labels.txt");
  for (const std::string name : {"sig", "sig_b"}) {
    const auto& cat = c.category("sig");
    for (DocIndex i = 0; i < c.size(); ++i) {
      labels << name << " " << c.document(i).doc_id << " " << (cat.is_positive(i) ? 1 : 0) << "\n";
    }
  }
  write_text(dir / "groups.csv", "category_id,difficulty,prevalence\nsig,hard,rare\nsig_b,easy,common\n");
}

ExperimentConfig base_config(const fs::path& dir) {
  return parse_experiment_config(R"({
    "corpus": "corpus.jsonl",
    "labels": "labels.txt",
    "batch_size": 20,
    "rng_seed": 5,
    "output_dir": "out"
  })",
                                 dir);
}

class RunnerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = testing::make_temp_dir("runner");
    write_inputs(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  fs::path dir;
};

TEST(ExperimentConfigTest, DefaultsFollowProtocol) {
  const auto c = parse_experiment_config(R"({"corpus":"c.jsonl","labels":"l.txt"})");
  EXPECT_EQ(c.batch_size, 200u);
  EXPECT_DOUBLE_EQ(c.recall_target, 0.8);
  EXPECT_EQ(c.seed_sets, 10);
  EXPECT_EQ(c.splade.effective_top_s(), 3052u);
  EXPECT_EQ(c.splade.vocab_size, 30522u);
  ASSERT_EQ(c.protocols.size(), 1u);
  EXPECT_EQ(c.protocols[0].label(), "one_phase-relevance-uniform");
  EXPECT_EQ(c.feature_modes, (std::vector<FeatureMode>{FeatureMode::bm25}));
}

TEST(ExperimentConfigTest, TwoPhaseProtocolDefaults) {
  const auto c = parse_experiment_config(
      R"({"corpus":"c","labels":"l","protocols":[{"workflow":"two_phase"}]})");
  EXPECT_EQ(c.protocols[0].strategy, SamplingStrategy::uncertainty);
  EXPECT_EQ(c.protocols[0].cost, CostStructure::expensive_training());
}

TEST(ExperimentConfigTest, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_experiment_config(R"({"corpus":"c","labels":"l","batchsize":5})"), Error);
  EXPECT_THROW(parse_experiment_config(R"({"corpus":"c"})"), Error);
  auto c = parse_experiment_config(R"({"corpus":"c","labels":"l","recall_target":1.5})");
  EXPECT_THROW(validate(c), Error);
}

TEST(ExperimentConfigTest, HashIgnoresParallelismAndOutput) {
  auto a = parse_experiment_config(R"({"corpus":"c","labels":"l"})");
  auto b = a;
  b.parallelism = 8;
  b.output_dir = "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.batch_size = 100;
  EXPECT_NE(config_hash(a), config_hash(b));
  const auto round = parse_experiment_config(experiment_config_json(a));
  EXPECT_EQ(config_hash(round), config_hash(a));
}

TEST(RunSpecTest, IdFormat) {
  RunSpec s{"catA", 3, FeatureMode::fused, WorkflowKind::two_phase, SamplingStrategy::uncertainty};
  EXPECT_EQ(s.id(), "catA__fused__two_phase-uncertainty__s3");
}

TEST(GridTest, FortyFiveCategoriesTenSeeds) {
  auto c = parse_experiment_config(R"({"corpus":"c","labels":"l"})");
  std::vector<std::string> cats;
  for (int i = 0; i < 45; ++i) cats.push_back("c" + std::to_string(i));
  EXPECT_EQ(enumerate_grid(c, cats).size(), 450u);
  // Two protocols sharing a (workflow, strategy) pair share runs.
  c.protocols.push_back(c.protocols[0]);
  c.protocols.back().cost_name = "expensive_training";
  EXPECT_EQ(enumerate_grid(c, cats).size(), 450u);
}

TEST_F(RunnerTest, GridWritesOneRecordPerRunAndResumes) {
  auto cfg = base_config(dir);
  const auto summary = run_experiment(cfg, 2);
  EXPECT_EQ(summary.total, 20u);
  EXPECT_EQ(summary.executed, 20u);
  EXPECT_EQ(summary.failed, 0u);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "out" / "records")) files += e.path().extension() == ".jsonl";
  EXPECT_EQ(files, 20u);
  EXPECT_TRUE(fs::exists(dir / "out" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "out" / "config.json"));
  EXPECT_EQ(read_manifest(dir / "out").runs.size(), 20u);

  const auto victim = dir / "out" / "records" / "sig__bm25__one_phase-relevance__s4.jsonl";
  const auto before = slurp(victim);
  const auto untouched = dir / "out" / "records" / "sig__bm25__one_phase-relevance__s5.jsonl";
  const auto untouched_time = fs::last_write_time(untouched);
  fs::remove(victim);
  const auto again = run_experiment(cfg, 1);
  EXPECT_EQ(again.executed, 1u);
  EXPECT_EQ(again.skipped, 19u);
  EXPECT_EQ(slurp(victim), before);
  EXPECT_EQ(fs::last_write_time(untouched), untouched_time);

  auto changed = cfg;
  changed.batch_size = 30;
  EXPECT_THROW(run_experiment(changed, 1), Error);
}

TEST_F(RunnerTest, RecordsDoNotDependOnWorkerCount) {
  auto cfg = base_config(dir);
  cfg.seed_sets = 3;
  cfg.output_dir = dir / "w1";
  run_experiment(cfg, 1);
  cfg.output_dir = dir / "w3";
  run_experiment(cfg, 3);
  for (const auto& e : fs::directory_iterator(dir / "w1" / "records")) {
    EXPECT_EQ(slurp(e.path()), slurp(dir / "w3" / "records" / e.path().filename()));
  }
}

TEST_F(RunnerTest, AggregateAgainstItselfAndHalvedCosts) {
  auto cfg = base_config(dir);
  cfg.seed_sets = 3;
  run_experiment(cfg, 1);
  const auto out = dir / "out";

  auto report = aggregate(out, FeatureMode::bm25, dir / "groups.csv");
  ASSERT_EQ(report.overall.size(), 1u);
  EXPECT_EQ(report.overall[0].relative_cost, 1.0);
  ASSERT_EQ(report.grouped.size(), 2u);
  for (const auto& cell : report.grouped) {
    EXPECT_EQ(cell.relative_cost, 1.0);
    EXPECT_EQ(cell.categories, 1u);
  }

  // Add a fake "splade" mode whose every run reviews half as many documents.
  auto config_json = json::parse(slurp(out / "config.json"));
  config_json["feature_modes"] = {"bm25", "splade"};
  write_text(out / "config.json", config_json.dump(2));
  auto manifest = json::parse(slurp(out / "manifest.json"));
  json runs = manifest["runs"];
  for (auto& [id, entry] : manifest["runs"].items()) {
    auto record = read_run_record(out / entry["record"].get<std::string>());
    for (auto& it : record.iterations) it.cumulative_reviewed *= 2;
    write_run_record(record, out / entry["record"].get<std::string>());
    record.config.feature_mode = FeatureMode::splade;
    for (auto& it : record.iterations) it.cumulative_reviewed /= 2;
    json copy = entry;
    copy["feature_mode"] = "splade";
    const std::string rel = "records/" + id + ".splade.jsonl";
    copy["record"] = rel;
    write_run_record(record, out / rel);
    runs[id + "-splade"] = copy;
  }
  manifest["runs"] = runs;
  write_text(out / "manifest.json", manifest.dump(2));

  report = aggregate(out, FeatureMode::bm25);
  ASSERT_EQ(report.overall.size(), 2u);
  for (const auto& cell : report.overall) {
    EXPECT_DOUBLE_EQ(cell.relative_cost, cell.mode == FeatureMode::bm25 ? 1.0 : 0.5);
  }
  write_aggregate_report(report, dir / "report");
  EXPECT_TRUE(fs::exists(dir / "report" / "relative_cost.csv"));
  EXPECT_TRUE(fs::exists(dir / "report" / "report.txt"));
  EXPECT_NE(slurp(dir / "report" / "relative_cost.csv").find("0.5000"), std::string::npos);

  EXPECT_THROW(aggregate(out, FeatureMode::fused), Error);
}

TEST_F(RunnerTest, DynamicsForTwoPhaseRun) {
  auto cfg = base_config(dir);
  cfg.seed_sets = 1;
  cfg.categories = {"sig"};
  cfg.protocols = {Protocol{WorkflowKind::two_phase, SamplingStrategy::uncertainty,
                            "expensive_training", CostStructure::expensive_training()}};
  cfg.max_iterations = 8;
  run_experiment(cfg, 1);
  const auto id = "sig__bm25__two_phase-uncertainty__s0";
  const auto out = emit_dynamics(dir / "out", id, dir / "dyn");
  EXPECT_EQ(out.rows, read_run_record(dir / "out" / "records" / (std::string(id) + ".jsonl")).iterations.size());
  const auto csv = slurp(out.csv);
  EXPECT_EQ(csv.rfind("iteration,p1_pos,p1_neg,p2_pos,p2_neg,total,depth_zero_flag\n", 0), 0u);
  const auto svg = slurp(out.svg);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_THROW(emit_dynamics(dir / "out", "nope", dir / "dyn"), Error);
}

TEST(DynamicsChartTest, DepthZeroMarker) {
  CostDynamics d{{0, 10, 10, 5, 50, 75, false}, {1, 20, 40, 3, 20, 83, false}, {2, 30, 60, 0, 0, 90, true}};
  const auto svg = render_dynamics_svg(d, "t");
  EXPECT_NE(svg.find("depth-zero"), std::string::npos);
  EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);
  d.back().depth_zero = false;
  EXPECT_EQ(render_dynamics_svg(d, "t").find("depth-zero"), std::string::npos);
}

TEST(DedupeTest, DropsRepeatedTexts) {
  const auto dir = testing::make_temp_dir("dedupe");
  write_text(dir / "in.jsonl",
             "{\"doc_id\":\"a\",\"text\":\"same\"}\n{\"doc_id\":\"b\",\"text\":\"other\"}\n"
             "{\"doc_id\":\"c\",\"text\":\"same\"}\n");
  const auto s = dedupe_corpus(dir / "in.jsonl", dir / "out.jsonl");
  EXPECT_EQ(s.read, 3u);
  EXPECT_EQ(s.written, 2u);
  EXPECT_EQ(s.dropped, 1u);
  EXPECT_EQ(slurp(dir / "out.jsonl").find("\"c\""), std::string::npos);
  EXPECT_EQ(md5_hex(""), "d41d8cd98f00b204e9800998ecf8427e");
  fs::remove_all(dir);
}

#ifdef TARSIM_CLI_PATH
int cli(const std::string& args) {
  const int status = std::system((std::string(TARSIM_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

TEST_F(RunnerTest, CommandLineEndToEnd) {
  const auto d = dir.string();
  write_text(dir / "config.json", R"({"corpus":"corpus.jsonl","labels":"labels.txt","batch_size":25,
    "seed_sets":2,"categories":["sig"],"protocols":[{"workflow":"two_phase","max_iterations":null}]})");
  EXPECT_EQ(cli("run --config " + d + "/config.json"), 2);  // unknown protocol key
  write_text(dir / "config.json", R"({"corpus":"corpus.jsonl","labels":"labels.txt","batch_size":25,
    "seed_sets":2,"categories":["sig"],"max_iterations":5,
    "protocols":[{"workflow":"one_phase"},{"workflow":"two_phase"}]})");
  EXPECT_EQ(cli("run --config " + d + "/config.json --output-dir " + d + "/cli_out --workers 2"), 0);
  EXPECT_EQ(read_manifest(dir / "cli_out").runs.size(), 4u);
  EXPECT_EQ(cli("aggregate --run-dir " + d + "/cli_out --out " + d + "/cli_report"), 0);
  EXPECT_TRUE(fs::exists(dir / "cli_report" / "relative_cost.csv"));
  EXPECT_EQ(cli("dynamics --run-dir " + d + "/cli_out --run sig__bm25__two_phase-uncertainty__s1 --out " + d +
                "/cli_dyn"),
            0);
  EXPECT_TRUE(fs::exists(dir / "cli_dyn" / "sig__bm25__two_phase-uncertainty__s1.dynamics.svg"));
  EXPECT_EQ(cli("encode-bm25 --corpus " + d + "/corpus.jsonl --out " + d + "/bm25.bin"), 0);
  EXPECT_EQ(read_matrix_cache(dir / "bm25.bin").n_rows(), 300u);
  EXPECT_EQ(cli("dedupe --in " + d + "/corpus.jsonl --out " + d + "/dedup.jsonl"), 0);
}

TEST_F(RunnerTest, ValidateVectorsCommand) {
  const auto d = dir.string();
  write_text(dir / "small.jsonl", "{\"doc_id\":\"x\",\"text\":\"a\"}\n{\"doc_id\":\"y\",\"text\":\"b\"}\n");
  write_text(dir / "good.jsonl",
             "{\"doc_id\":\"x\",\"vector\":{\"5\":1.5}}\n{\"doc_id\":\"y\",\"vector\":{}}\n");
  write_text(dir / "bad.jsonl", "{\"doc_id\":\"x\",\"vector\":{\"5\":-1.5}}\n");
  EXPECT_EQ(cli("validate-vectors --vectors " + d + "/good.jsonl --corpus " + d + "/small.jsonl --cache-out " + d +
                "/splade.bin"),
            0);
  EXPECT_EQ(read_matrix_cache(dir / "splade.bin").nnz(), 1u);
  EXPECT_EQ(cli("validate-vectors --vectors " + d + "/bad.jsonl --corpus " + d + "/small.jsonl"), 1);
  EXPECT_EQ(cli("validate-vectors --vectors " + d + "/good.jsonl --vocab-size 5"), 1);
}
#endif

}  // namespace
}  // namespace tarsim
