#include <sstream>

#include <gtest/gtest.h>

#include "synthetic.hpp"
#include "tarsim/error.hpp"
#include "tarsim/sparse_features.hpp"

namespace tarsim {
namespace {

LabeledCollection corpus_from(const std::string& jsonl) {
  std::istringstream in(jsonl);
  return read_corpus(in);
}

SparseVector vec(std::initializer_list<FeatureEntry> entries) { return SparseVector{entries}; }

TEST(Bm25WeightTest, HandEvaluatedValues) {
  EXPECT_EQ(bm25_weight(0, 5, 5, 1.2, 0.75), 0.0);
  EXPECT_NEAR(bm25_weight(1, 4, 4, 1.2, 0.75), 1.0 / 2.2, 1e-15);  // 0.454545...
  EXPECT_NEAR(bm25_weight(1000, 4, 4, 1.2, 0.75), 1000.0 / 1001.2, 1e-15);
}

TEST(Bm25WeightTest, RejectsInvalidParameters) {
  EXPECT_THROW(bm25_weight(1, 1, 0, 1.2, 0.75), Error);
  EXPECT_THROW(bm25_weight(1, 1, 1, 0.0, 0.75), Error);
  EXPECT_THROW(bm25_weight(1, 1, 1, 1.2, 1.5), Error);
  EXPECT_THROW(bm25_weight(-1, 1, 1, 1.2, 0.75), Error);
}

TEST(Bm25WeightTest, BoundedAndStrictlyIncreasingInTf) {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const double dl = static_cast<double>(uniform_index(rng, 500));
    const double avgdl = 1.0 + static_cast<double>(uniform_index(rng, 300));
    const double k1 = 0.1 + static_cast<double>(uniform_index(rng, 30)) / 10.0;
    const double b = static_cast<double>(uniform_index(rng, 11)) / 10.0;
    double prev = -1.0;
    for (double tf = 0; tf <= 50; tf += 1) {
      const double w = bm25_weight(tf, dl, avgdl, k1, b);
      ASSERT_GE(w, 0.0);
      ASSERT_LT(w, 1.0);
      ASSERT_GT(w, prev);
      prev = w;
    }
  }
}

TEST(EncodeBm25Test, MatchesHandEvaluation) {
  auto c = corpus_from("{\"doc_id\":\"0\",\"text\":\"a a b\"}\n{\"doc_id\":\"1\",\"text\":\"b\"}\n"
                       "{\"doc_id\":\"2\",\"text\":\"\"}\n");
  // avgdl = 4/3 here, so recompute the hand values for that length.
  const auto enc = encode_bm25(c);
  ASSERT_EQ(enc.vocabulary, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(enc.matrix.n_rows(), 3u);
  const auto row0 = enc.matrix.row(0);
  ASSERT_EQ(row0.size(), 2u);
  const double avgdl = 4.0 / 3.0;
  EXPECT_FLOAT_EQ(row0[0].weight, static_cast<float>(2.0 / (2.0 + 1.2 * (0.25 + 0.75 * 3.0 / avgdl))));
  EXPECT_FLOAT_EQ(row0[1].weight, static_cast<float>(1.0 / (1.0 + 1.2 * (0.25 + 0.75 * 3.0 / avgdl))));
  EXPECT_TRUE(enc.matrix.row(2).empty());
}

TEST(EncodeBm25Test, TwoDocumentExampleWithAvgdlTwo) {
  // "a a b" and "b": avgdl = 2, dl(doc0) = 3.
  auto c = corpus_from("{\"doc_id\":\"0\",\"text\":\"a a b\"}\n{\"doc_id\":\"1\",\"text\":\"b\"}\n");
  ASSERT_DOUBLE_EQ(c.avg_doc_length(), 2.0);
  const auto enc = encode_bm25(c);
  const auto row0 = enc.matrix.row(0);
  EXPECT_FLOAT_EQ(row0[0].weight, static_cast<float>(2.0 / (2.0 + 1.2 * (0.25 + 0.75 * 1.5))));
  EXPECT_FLOAT_EQ(row0[1].weight, static_cast<float>(1.0 / (1.0 + 1.2 * (0.25 + 0.75 * 1.5))));
}

TEST(EncodeBm25Test, SingleDocumentIgnoresB) {
  for (double b : {0.0, 0.3, 0.75, 1.0}) {
    auto c = corpus_from("{\"doc_id\":\"0\",\"text\":\"x y z\"}\n");
    const auto enc = encode_bm25(c, {1.2, b});
    ASSERT_EQ(enc.matrix.row(0).size(), 3u);
    for (const auto& e : enc.matrix.row(0)) EXPECT_FLOAT_EQ(e.weight, static_cast<float>(1.0 / 2.2));
  }
}

TEST(EncodeBm25Test, EmptyDocumentGivesEmptyRow) {
  auto c = corpus_from("{\"doc_id\":\"0\",\"text\":\"\"}\n");
  const auto enc = encode_bm25(c);
  EXPECT_EQ(enc.matrix.n_rows(), 1u);
  EXPECT_EQ(enc.matrix.nnz(), 0u);
}

TEST(PruneTopSTest, KeepsHighestWeights) {
  EXPECT_EQ(prune_top_s(vec({{1, 0.9F}, {2, 0.5F}, {3, 0.1F}}), 2), vec({{1, 0.9F}, {2, 0.5F}}));
}

TEST(PruneTopSTest, TiesGoToLowerIndex) {
  EXPECT_EQ(prune_top_s(vec({{1, 0.5F}, {2, 0.5F}, {3, 0.5F}}), 2), vec({{1, 0.5F}, {2, 0.5F}}));
  EXPECT_EQ(prune_top_s(vec({{3, 0.5F}, {7, 0.9F}, {1, 0.5F}}), 2), vec({{1, 0.5F}, {7, 0.9F}}));
}

TEST(PruneTopSTest, ShortVectorUnchangedAtDefaultCap) {
  SparseVector v;
  for (std::uint32_t i = 0; i < 100; ++i) v.entries.push_back({i * 7, 0.01F * static_cast<float>(i + 1)});
  EXPECT_EQ(prune_top_s(v, default_top_s(kSpladeVocabSize)), v);
}

TEST(PruneTopSTest, RejectsZero) { EXPECT_THROW(prune_top_s(vec({{1, 1.0F}}), 0), Error); }

TEST(PruneTopSTest, IdempotentAndBounded) {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    SparseVector v;
    for (std::uint32_t f = 0; f < 200; ++f) {
      if (uniform_index(rng, 3) == 0) {
        v.entries.push_back({f, static_cast<float>(uniform_index(rng, 6)) / 5.0F});
      }
    }
    const std::size_t s = 1 + uniform_index(rng, 80);
    const auto once = prune_top_s(v, s);
    ASSERT_EQ(prune_top_s(once, s), once);
    ASSERT_LE(once.nnz(), s);
    ASSERT_TRUE(std::is_sorted(once.entries.begin(), once.entries.end(),
                               [](auto a, auto b) { return a.index < b.index; }));
  }
}

class SparseVectorsTest : public ::testing::Test {
 protected:
  LabeledCollection collection =
      corpus_from("{\"doc_id\":\"d1\",\"text\":\"a\"}\n{\"doc_id\":\"d2\",\"text\":\"b\"}\n");

  SparseMatrix load(const std::string& jsonl, VectorLoadOptions opts = {}) {
    std::istringstream in(jsonl);
    return read_sparse_vectors(in, collection, opts);
  }
};

TEST_F(SparseVectorsTest, AlignsAndSortsRows) {
  auto m = load("{\"doc_id\":\"d2\",\"vector\":{}}\n"
                "{\"doc_id\":\"d1\",\"vector\":{\"17\":2.5,\"3\":0.1}}\n");
  EXPECT_EQ(m.n_cols(), kSpladeVocabSize);
  EXPECT_EQ(m.family(), FeatureFamily::splade);
  const auto row = m.row(0);
  ASSERT_EQ(row.size(), 2u);
  EXPECT_EQ(row[0], (FeatureEntry{3, 0.1F}));
  EXPECT_EQ(row[1], (FeatureEntry{17, 2.5F}));
  EXPECT_TRUE(m.row(1).empty());
}

TEST_F(SparseVectorsTest, MissingDocument) {
  try {
    load("{\"doc_id\":\"d1\",\"vector\":{\"1\":1}}\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "no vector for d2");
  }
}

TEST_F(SparseVectorsTest, RejectsBadRecords) {
  auto expect_error = [&](const std::string& jsonl, const std::string& fragment) {
    try {
      load(jsonl);
      FAIL() << "no error for " << jsonl;
    } catch (const Error& e) {
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };
  expect_error("{\"doc_id\":\"d1\",\"vector\":{\"1\":-0.5}}\n", "negative weight");
  expect_error("{\"doc_id\":\"d1\",\"vector\":{\"30522\":1}}\n", "out of range");
  expect_error("{\"doc_id\":\"dX\",\"vector\":{}}\n", "unknown doc_id dX");
  expect_error("{\"doc_id\":\"d1\",\"vector\":{\"a\":1}}\n", "not a nonnegative integer");
  expect_error("{\"doc_id\":\"d1\",\"vector\":{}}\n{\"doc_id\":\"d1\",\"vector\":{}}\n", "duplicate");
}

TEST_F(SparseVectorsTest, PrunesAtLoadAndNormalizes) {
  VectorLoadOptions opts;
  opts.vocab_size = 10;
  opts.top_s = 1;
  auto m = load("{\"doc_id\":\"d1\",\"vector\":{\"1\":3,\"2\":4}}\n{\"doc_id\":\"d2\",\"vector\":{}}\n",
                opts);
  ASSERT_EQ(m.row(0).size(), 1u);
  EXPECT_EQ(m.row(0)[0].index, 2u);

  opts.top_s = 5;
  opts.l2_normalize = true;
  m = load("{\"doc_id\":\"d1\",\"vector\":{\"1\":3,\"2\":4}}\n{\"doc_id\":\"d2\",\"vector\":{}}\n",
           opts);
  EXPECT_FLOAT_EQ(m.row(0)[0].weight, 0.6F);
  EXPECT_FLOAT_EQ(m.row(0)[1].weight, 0.8F);
}

TEST_F(SparseVectorsTest, DefaultCapHoldsForEveryRow) {
  std::string line = "{\"doc_id\":\"d1\",\"vector\":{";
  for (int f = 0; f < 5000; ++f) line += (f ? "," : "") + std::string("\"") + std::to_string(f) + "\":" + std::to_string(1 + f % 97);
  line += "}}\n{\"doc_id\":\"d2\",\"vector\":{\"5\":1}}\n";
  auto m = load(line);
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    EXPECT_LE(m.row(r).size(), 3052u);
    for (const auto& e : m.row(r)) EXPECT_LT(e.index, m.n_cols());
  }
  EXPECT_EQ(m.row(0).size(), 3052u);
}

TEST_F(SparseVectorsTest, ValidationCollectsAllErrors) {
  std::istringstream in("{\"doc_id\":\"d1\",\"vector\":{\"1\":-1}}\n"
                        "{\"doc_id\":\"dX\",\"vector\":{\"2\":1}}\n"
                        "garbage\n");
  const auto report = validate_sparse_vectors(in, &collection, 10);
  EXPECT_FALSE(report.ok());
  // negative weight, unknown dX, malformed line, no vector for d1 and d2
  EXPECT_EQ(report.errors.size(), 5u);
  EXPECT_EQ(report.records, 1u);

  std::istringstream good("{\"doc_id\":\"d1\",\"vector\":{\"1\":1}}\n{\"doc_id\":\"d2\",\"vector\":{\"2\":1,\"3\":2}}\n");
  const auto ok = validate_sparse_vectors(good, &collection, 10, 2);
  EXPECT_TRUE(ok.ok());
  EXPECT_DOUBLE_EQ(ok.mean_nnz, 1.5);
  EXPECT_EQ(ok.max_nnz, 2u);
}

TEST(SparseMatrixTest, RejectsInvalidLayout) {
  EXPECT_THROW(SparseMatrix(FeatureFamily::bm25, 5, {0, 2}, {{3, 1.0F}, {1, 1.0F}}), Error);
  EXPECT_THROW(SparseMatrix(FeatureFamily::bm25, 2, {0, 1}, {{3, 1.0F}}), Error);
  EXPECT_THROW(SparseMatrix(FeatureFamily::bm25, 5, {0, 1}, {{3, -1.0F}}), Error);
  EXPECT_THROW(SparseMatrix(FeatureFamily::bm25, 5, {0, 2}, {{3, 1.0F}}), Error);
}

TEST(MatrixStatsTest, AveragesAndDensity) {
  std::vector<SparseVector> rows{vec({{0, 1}, {1, 1}}), vec({{0, 1}, {3, 1}, {5, 1}, {9, 1}})};
  const auto m = SparseMatrix::from_rows(FeatureFamily::splade, 10, rows);
  const auto s = matrix_stats(m);
  EXPECT_DOUBLE_EQ(s.avg_nnz_per_row, 3.0);
  EXPECT_DOUBLE_EQ(s.density, 0.3);
  try {
    matrix_stats(SparseMatrix(FeatureFamily::splade, 10, {0}, {}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "empty matrix");
  }
}

TEST(MatrixCacheTest, RoundTripsAndRejectsCorruption) {
  const auto collection = testing::make_signature_corpus({.n_docs = 200, .n_relevant = 10});
  const auto m = encode_bm25(collection).matrix;
  std::stringstream buffer;
  write_matrix_cache(m, buffer);
  EXPECT_EQ(read_matrix_cache(buffer), m);

  std::string bytes = buffer.str();
  bytes[0] = 'X';
  std::istringstream bad_magic(bytes);
  EXPECT_THROW(read_matrix_cache(bad_magic), Error);
  std::istringstream truncated(buffer.str().substr(0, 40));
  EXPECT_THROW(read_matrix_cache(truncated), Error);
}

TEST(DefaultsTest, TopSForReleasedVocabulary) {
  EXPECT_EQ(kSpladeVocabSize, 30522u);
  EXPECT_EQ(default_top_s(kSpladeVocabSize), 3052u);
  EXPECT_EQ(VectorLoadOptions{}.effective_top_s(), 3052u);
  EXPECT_DOUBLE_EQ(Bm25Params{}.k1, 1.2);
  EXPECT_DOUBLE_EQ(Bm25Params{}.b, 0.75);
}

}  // namespace
}  // namespace tarsim
