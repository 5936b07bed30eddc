#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "tarsim/classifier.hpp"
#include "tarsim/random.hpp"
#include "tarsim/sparse_features.hpp"
#include "tarsim/workflow.hpp"

namespace {

using namespace tarsim;

// Zipf-ish background text; relevant documents add a few signature words.
LabeledCollection make_collection(std::size_t n_docs, std::size_t n_relevant) {
  Rng rng(1);
  std::vector<Document> docs;
  CategoryLabels labels{"bench", {}, std::nullopt};
  for (std::size_t i = 0; i < n_docs; ++i) {
    Document d;
    d.doc_id = "d" + std::to_string(i);
    const auto len = 50 + uniform_index(rng, 150);
    for (std::uint64_t t = 0; t < len; ++t) {
      const auto u = static_cast<double>(uniform_index(rng, 1u << 20)) / (1u << 20);
      d.tokens.push_back("w" + std::to_string(static_cast<std::size_t>(u * u * 20000)));
    }
    if (i % (n_docs / n_relevant) == 0) {
      for (int k = 0; k < 5; ++k) d.tokens.push_back("sig" + std::to_string(uniform_index(rng, 10)));
      labels.positives.push_back(static_cast<DocIndex>(i));
    }
    docs.push_back(std::move(d));
  }
  return LabeledCollection(std::move(docs)).with_categories({{"bench", labels}});
}

const LabeledCollection& collection() {
  static const auto c = make_collection(20000, 400);
  return c;
}

void BM_EncodeBm25(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(encode_bm25(collection()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(collection().size()));
}
BENCHMARK(BM_EncodeBm25)->Unit(benchmark::kMillisecond);

void BM_Train(benchmark::State& state) {
  static const auto matrix = encode_bm25(collection()).matrix;
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<DocIndex> rows;
  std::vector<Relevance> labels;
  const auto& cat = collection().category("bench");
  for (std::size_t i = 0; i < n; ++i) {
    rows.push_back(static_cast<DocIndex>(i));
    labels.push_back(cat.is_positive(static_cast<DocIndex>(i)) ? Relevance::relevant : Relevance::non_relevant);
  }
  for (auto _ : state) benchmark::DoNotOptimize(train(matrix, rows, labels));
}
BENCHMARK(BM_Train)->Arg(200)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_PredictAll(benchmark::State& state) {
  static const auto matrix = encode_bm25(collection()).matrix;
  std::vector<DocIndex> rows(matrix.n_rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<DocIndex>(i);
  std::vector<DocIndex> train_rows(rows.begin(), rows.begin() + 1000);
  std::vector<Relevance> labels;
  for (auto r : train_rows) {
    labels.push_back(collection().category("bench").is_positive(r) ? Relevance::relevant : Relevance::non_relevant);
  }
  const auto model = train(matrix, train_rows, labels);
  for (auto _ : state) benchmark::DoNotOptimize(predict_proba(model, matrix, rows));
}
BENCHMARK(BM_PredictAll)->Unit(benchmark::kMillisecond);

void BM_RankDepth(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  std::vector<ScoredDoc> scores;
  std::vector<Relevance> gold(n, Relevance::non_relevant);
  for (DocIndex i = 0; i < n; ++i) {
    scores.push_back({i, static_cast<double>(uniform_index(rng, 1u << 30)) / (1u << 30)});
    if (i % 50 == 0) gold[i] = Relevance::relevant;
  }
  const auto total = static_cast<std::int64_t>(n / 50);
  for (auto _ : state) benchmark::DoNotOptimize(rank_depth_to_target(scores, 0, total, 0.8, gold));
}
BENCHMARK(BM_RankDepth)->Arg(10000)->Arg(800000)->Unit(benchmark::kMillisecond);

void BM_PruneTopS(benchmark::State& state) {
  Rng rng(4);
  SparseVector v;
  for (std::uint32_t f = 0; f < kSpladeVocabSize; f += 3) {
    v.entries.push_back({f, static_cast<float>(uniform_index(rng, 1000)) / 1000.0F});
  }
  for (auto _ : state) benchmark::DoNotOptimize(prune_top_s(v, default_top_s(kSpladeVocabSize)));
}
BENCHMARK(BM_PruneTopS);

}  // namespace

BENCHMARK_MAIN();
