#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tarsim/corpus.hpp"

namespace tarsim {

enum class FeatureFamily : std::uint32_t { bm25 = 0, splade = 1 };

std::string_view to_string(FeatureFamily family) noexcept;

/// Vocabulary size of the released BERT-based SPLADE checkpoints.
inline constexpr std::size_t kSpladeVocabSize = 30522;

/// Keep the top tenth of the vocabulary: 3052 features for 30522.
constexpr std::size_t default_top_s(std::size_t vocab_size) noexcept {
  return vocab_size / 10 > 0 ? vocab_size / 10 : 1;
}

struct FeatureEntry {
  std::uint32_t index;
  float weight;

  friend bool operator==(const FeatureEntry&, const FeatureEntry&) = default;
};

struct SparseVector {
  /// Sorted by strictly increasing feature index; weights nonnegative.
  std::vector<FeatureEntry> entries;

  std::size_t nnz() const noexcept { return entries.size(); }
  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

/// Row-compressed document x feature matrix with nonnegative float weights.
/// Immutable after construction.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Validates the layout: offsets.size() == n_rows + 1, indices strictly
  /// increasing within each row and < n_cols, weights finite and >= 0.
  SparseMatrix(FeatureFamily family, std::size_t n_cols, std::vector<std::uint64_t> row_offsets,
               std::vector<FeatureEntry> entries);

  static SparseMatrix from_rows(FeatureFamily family, std::size_t n_cols,
                                std::span<const SparseVector> rows);

  FeatureFamily family() const noexcept { return family_; }
  std::size_t n_rows() const noexcept { return row_offsets_.empty() ? 0 : row_offsets_.size() - 1; }
  std::size_t n_cols() const noexcept { return n_cols_; }
  std::size_t nnz() const noexcept { return entries_.size(); }

  std::span<const FeatureEntry> row(std::size_t i) const {
    return {entries_.data() + row_offsets_.at(i), entries_.data() + row_offsets_.at(i + 1)};
  }

  const std::vector<std::uint64_t>& row_offsets() const noexcept { return row_offsets_; }
  const std::vector<FeatureEntry>& entries() const noexcept { return entries_; }

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  FeatureFamily family_ = FeatureFamily::bm25;
  std::size_t n_cols_ = 0;
  std::vector<std::uint64_t> row_offsets_{0};
  std::vector<FeatureEntry> entries_;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Saturated term frequency tf / (tf + k1 * ((1 - b) + b * dl / avgdl)).
/// No IDF factor. Throws on avgdl <= 0, k1 <= 0, b outside [0, 1] or tf/dl < 0.
double bm25_weight(double tf, double dl, double avgdl, double k1, double b);

struct Bm25Encoding {
  SparseMatrix matrix;
  /// Token for each column, in first-appearance order over the collection.
  std::vector<std::string> vocabulary;
};

Bm25Encoding encode_bm25(const LabeledCollection& collection, const Bm25Params& params = {});

/// Keeps the s highest-weight entries; ties go to the lower feature index.
/// The result is sorted by feature index. Throws when s == 0.
SparseVector prune_top_s(SparseVector vector, std::size_t s);

SparseMatrix l2_normalize_rows(const SparseMatrix& matrix);

struct VectorLoadOptions {
  std::size_t vocab_size = kSpladeVocabSize;
  /// Defaults to default_top_s(vocab_size).
  std::optional<std::size_t> top_s;
  bool l2_normalize = false;

  std::size_t effective_top_s() const noexcept { return top_s.value_or(default_top_s(vocab_size)); }
};

/// Reads learned-sparse vectors in the JSONL interchange format
/// {"doc_id": str, "vector": {"<feature index>": weight, ...}} and aligns
/// them to collection order, pruning each row to top-s at load time.
SparseMatrix read_sparse_vectors(std::istream& in, const LabeledCollection& collection,
                                 const VectorLoadOptions& options = {});
SparseMatrix load_sparse_vectors(const std::filesystem::path& path,
                                 const LabeledCollection& collection,
                                 const VectorLoadOptions& options = {});

struct VectorValidation {
  std::size_t records = 0;
  std::size_t max_nnz = 0;
  double mean_nnz = 0.0;
  std::vector<std::string> errors;

  bool ok() const noexcept { return errors.empty(); }
};

/// Collects every schema violation in an interchange file instead of
/// stopping at the first one. When `collection` is given, unknown and
/// missing doc ids are reported too. `max_nnz` flags over-long records.
VectorValidation validate_sparse_vectors(std::istream& in, const LabeledCollection* collection,
                                         std::size_t vocab_size,
                                         std::optional<std::size_t> max_nnz = std::nullopt);

struct MatrixStats {
  double avg_nnz_per_row;
  double density;
};

/// Throws tarsim::Error("empty matrix") for a matrix without rows.
MatrixStats matrix_stats(const SparseMatrix& matrix);

/// Binary cache: magic "TARSMAT1", u32 format version, u32 family,
/// u64 n_rows, u64 n_cols, u64 nnz, then row offsets (u64), feature
/// indices (u32) and weights (f32), all little-endian.
void write_matrix_cache(const SparseMatrix& matrix, std::ostream& out);
void write_matrix_cache(const SparseMatrix& matrix, const std::filesystem::path& path);
SparseMatrix read_matrix_cache(std::istream& in);
SparseMatrix read_matrix_cache(const std::filesystem::path& path);

}  // namespace tarsim
