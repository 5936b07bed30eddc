// tarsim: technology-assisted review simulation CLI.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "tarsim/corpus.hpp"
#include "tarsim/error.hpp"
#include "tarsim/experiment_config.hpp"
#include "tarsim/runner.hpp"
#include "tarsim/sparse_features.hpp"

namespace {

constexpr const char* kWorkersEnv = "TARSIM_WORKERS";

std::size_t workers_from_env() {
  const char* value = std::getenv(kWorkersEnv);
  if (value == nullptr || *value == '\0') return 0;
  try {
    const long n = std::stol(value);
    if (n < 1) throw std::invalid_argument("not positive");
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw tarsim::Error(fmt::format("{}='{}' is not a positive integer", kWorkersEnv, value));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Technology-assisted review simulation with sparse features"};
  app.require_subcommand(1);

  // dedupe
  std::string dedupe_in, dedupe_out;
  auto* dedupe = app.add_subcommand("dedupe", "Drop documents whose text MD5 was already seen");
  dedupe->add_option("--in", dedupe_in, "Input corpus JSONL")->required()->check(CLI::ExistingFile);
  dedupe->add_option("--out", dedupe_out, "Output corpus JSONL")->required();

  // encode-bm25
  std::string bm25_corpus, bm25_out, bm25_vocab;
  tarsim::Bm25Params bm25_params;
  std::size_t max_token_length = tarsim::TokenizerConfig{}.max_token_length;
  auto* encode = app.add_subcommand("encode-bm25", "Encode a corpus with BM25-saturated weights");
  encode->add_option("--corpus", bm25_corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  encode->add_option("--out", bm25_out, "Binary matrix cache to write")->required();
  encode->add_option("--vocab-out", bm25_vocab, "Write the column vocabulary, one token per line");
  encode->add_option("--k1", bm25_params.k1, "BM25 k1")->capture_default_str();
  encode->add_option("--b", bm25_params.b, "BM25 b")->capture_default_str();
  encode->add_option("--max-token-length", max_token_length, "Drop longer tokens")
      ->capture_default_str();

  // validate-vectors
  std::string vv_vectors, vv_corpus, vv_cache_out;
  std::size_t vv_vocab = tarsim::kSpladeVocabSize;
  std::size_t vv_top_s = 0;
  auto* validate = app.add_subcommand("validate-vectors", "Check a sparse-vector JSONL file");
  validate->add_option("--vectors", vv_vectors, "Vector JSONL")->required()->check(CLI::ExistingFile);
  validate->add_option("--corpus", vv_corpus, "Corpus JSONL; enables id coverage checks")
      ->check(CLI::ExistingFile);
  validate->add_option("--vocab-size", vv_vocab, "Feature space size")->capture_default_str();
  validate->add_option("--top-s", vv_top_s, "Maximum entries per document (default: vocab/10)");
  validate->add_option("--cache-out", vv_cache_out,
                       "With --corpus: write the pruned matrix as a binary cache");

  // run
  std::string config_path, output_dir, rng_seed_str;
  std::size_t workers = 0;
  int seed_sets = 0;
  std::size_t batch_size = 0;
  double recall_target = 0.0;
  int max_iterations = -1;
  std::vector<std::string> categories, feature_modes;
  auto* run = app.add_subcommand("run", "Execute the experiment grid");
  run->add_option("--config", config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--output-dir", output_dir, "Override output_dir");
  run->add_option("--workers", workers, fmt::format("Worker threads (env {})", kWorkersEnv));
  run->add_option("--seed-sets", seed_sets, "Override seed_sets");
  run->add_option("--batch-size", batch_size, "Override batch_size");
  run->add_option("--recall-target", recall_target, "Override recall_target");
  run->add_option("--max-iterations", max_iterations, "Override max_iterations");
  run->add_option("--rng-seed", rng_seed_str, "Override rng_seed");
  run->add_option("--categories", categories, "Override the category filter");
  run->add_option("--feature-modes", feature_modes, "Override feature_modes (bm25 splade fused)");

  // aggregate
  std::string agg_dir, agg_baseline = "bm25", agg_groups, agg_out;
  auto* agg = app.add_subcommand("aggregate", "Relative-cost tables from a run directory");
  agg->add_option("--run-dir", agg_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  agg->add_option("--baseline", agg_baseline, "Baseline feature mode")->capture_default_str();
  agg->add_option("--groups", agg_groups, "Category group CSV")->check(CLI::ExistingFile);
  agg->add_option("--out", agg_out, "Report directory (default: <run-dir>/report)");

  // dynamics
  std::string dyn_dir, dyn_run, dyn_out, dyn_cost;
  auto* dyn = app.add_subcommand("dynamics", "Cost dynamics CSV and SVG chart for one run");
  dyn->add_option("--run-dir", dyn_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  dyn->add_option("--run", dyn_run, "Run id (see manifest.json)")->required();
  dyn->add_option("--out", dyn_out, "Output directory (default: <run-dir>/dynamics)");
  dyn->add_option("--cost", dyn_cost, "Cost preset (uniform, expensive_training)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dedupe) {
      const auto s = tarsim::dedupe_corpus(dedupe_in, dedupe_out);
      fmt::print("read {} records, wrote {}, dropped {} duplicates\n", s.read, s.written,
                 s.dropped);
      return 0;
    }

    if (*encode) {
      tarsim::TokenizerConfig tok;
      tok.max_token_length = max_token_length;
      const auto collection = tarsim::load_corpus(bm25_corpus, tok);
      const auto enc = tarsim::encode_bm25(collection, bm25_params);
      tarsim::write_matrix_cache(enc.matrix, std::filesystem::path(bm25_out));
      if (!bm25_vocab.empty()) {
        std::ofstream vocab(bm25_vocab);
        for (const auto& t : enc.vocabulary) vocab << t << '\n';
      }
      const auto stats = tarsim::matrix_stats(enc.matrix);
      fmt::print("{} documents, {} features, {:.2f} nonzeros per document\n",
                 enc.matrix.n_rows(), enc.matrix.n_cols(), stats.avg_nnz_per_row);
      return 0;
    }

    if (*validate) {
      const std::size_t cap = vv_top_s > 0 ? vv_top_s : tarsim::default_top_s(vv_vocab);
      std::optional<tarsim::LabeledCollection> collection;
      if (!vv_corpus.empty()) collection = tarsim::load_corpus(vv_corpus);
      std::ifstream in(vv_vectors);
      const auto report = tarsim::validate_sparse_vectors(
          in, collection ? &*collection : nullptr, vv_vocab, cap);
      for (const auto& e : report.errors) std::cerr << "error: " << e << '\n';
      fmt::print("{} records, mean nnz {:.2f}, max nnz {}, {} errors\n", report.records,
                 report.mean_nnz, report.max_nnz, report.errors.size());
      if (report.ok() && collection && !vv_cache_out.empty()) {
        tarsim::VectorLoadOptions opts;
        opts.vocab_size = vv_vocab;
        opts.top_s = cap;
        const auto matrix = tarsim::load_sparse_vectors(vv_vectors, *collection, opts);
        tarsim::write_matrix_cache(matrix, std::filesystem::path(vv_cache_out));
      }
      return report.ok() ? 0 : 1;
    }

    if (*run) {
      auto config = tarsim::load_experiment_config(config_path);
      if (!output_dir.empty()) config.output_dir = output_dir;
      if (seed_sets > 0) config.seed_sets = seed_sets;
      if (batch_size > 0) config.batch_size = batch_size;
      if (recall_target > 0.0) config.recall_target = recall_target;
      if (max_iterations >= 0) config.max_iterations = max_iterations;
      if (!rng_seed_str.empty()) config.rng_seed = std::stoull(rng_seed_str);
      if (!categories.empty()) config.categories = categories;
      if (!feature_modes.empty()) {
        config.feature_modes.clear();
        for (const auto& m : feature_modes) {
          config.feature_modes.push_back(tarsim::parse_feature_mode(m));
        }
      }
      if (workers == 0) workers = workers_from_env();
      const auto s = tarsim::run_experiment(config, workers);
      fmt::print("{}: {} runs, {} executed, {} skipped, {} failed\n", s.run_dir.string(), s.total,
                 s.executed, s.skipped, s.failed);
      return s.failed == 0 ? 0 : 1;
    }

    if (*agg) {
      const auto report = tarsim::aggregate(
          agg_dir, tarsim::parse_feature_mode(agg_baseline),
          agg_groups.empty() ? std::nullopt : std::optional<std::filesystem::path>(agg_groups));
      const std::filesystem::path out =
          agg_out.empty() ? std::filesystem::path(agg_dir) / "report" : std::filesystem::path(agg_out);
      tarsim::write_aggregate_report(report, out);
      std::ifstream text(out / "report.txt");
      std::cout << text.rdbuf();
      return 0;
    }

    if (*dyn) {
      const std::filesystem::path out =
          dyn_out.empty() ? std::filesystem::path(dyn_dir) / "dynamics" : std::filesystem::path(dyn_out);
      std::optional<tarsim::CostStructure> cost;
      if (!dyn_cost.empty()) cost = tarsim::cost_preset(dyn_cost);
      const auto r = tarsim::emit_dynamics(dyn_dir, dyn_run, out, cost);
      fmt::print("wrote {} ({} rows) and {}\n", r.csv.string(), r.rows, r.svg.string());
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "tarsim: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
