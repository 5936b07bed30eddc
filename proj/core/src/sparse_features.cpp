#include "tarsim/sparse_features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "tarsim/error.hpp"

namespace tarsim {
namespace {

struct VectorRecord {
  std::string doc_id;
  SparseVector vector;
};

std::uint32_t parse_feature_index(const std::string& key, std::size_t vocab_size) {
  std::uint64_t value = 0;
  const char* first = key.data();
  const char* last = key.data() + key.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (key.empty() || ec != std::errc{} || ptr != last) {
    throw Error(fmt::format("feature index '{}' is not a nonnegative integer", key));
  }
  if (value >= vocab_size) {
    throw Error(fmt::format("feature index {} out of range for vocab size {}", value, vocab_size));
  }
  return static_cast<std::uint32_t>(value);
}

// Parses one interchange line. Zero weights carry no signal and are dropped.
VectorRecord parse_vector_record(const std::string& line, std::size_t vocab_size) {
  nlohmann::json record;
  try {
    record = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(fmt::format("malformed JSON: {}", e.what()));
  }
  if (!record.is_object() || !record.contains("doc_id") || !record["doc_id"].is_string()) {
    throw Error("missing string field doc_id");
  }
  if (!record.contains("vector") || !record["vector"].is_object()) {
    throw Error("missing object field vector");
  }
  VectorRecord out;
  out.doc_id = record["doc_id"].get<std::string>();
  auto& entries = out.vector.entries;
  for (const auto& [key, value] : record["vector"].items()) {
    const auto index = parse_feature_index(key, vocab_size);
    if (!value.is_number()) {
      throw Error(fmt::format("weight for feature {} is not a number", key));
    }
    const double w = value.get<double>();
    if (!std::isfinite(w)) {
      throw Error(fmt::format("non-finite weight for feature {}", key));
    }
    if (w < 0.0) {
      throw Error(fmt::format("negative weight {} for feature {}", w, key));
    }
    if (w > 0.0) {
      entries.push_back({index, static_cast<float>(w)});
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const FeatureEntry& a, const FeatureEntry& b) { return a.index < b.index; });
  auto dup = std::adjacent_find(entries.begin(), entries.end(),
                                [](const FeatureEntry& a, const FeatureEntry& b) {
                                  return a.index == b.index;
                                });
  if (dup != entries.end()) {
    throw Error(fmt::format("feature index {} listed twice", dup->index));
  }
  return out;
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

std::string_view to_string(FeatureFamily family) noexcept {
  switch (family) {
    case FeatureFamily::bm25: return "bm25";
    case FeatureFamily::splade: return "splade";
  }
  return "?";
}

SparseMatrix::SparseMatrix(FeatureFamily family, std::size_t n_cols,
                           std::vector<std::uint64_t> row_offsets,
                           std::vector<FeatureEntry> entries)
    : family_(family), n_cols_(n_cols), row_offsets_(std::move(row_offsets)),
      entries_(std::move(entries)) {
  if (row_offsets_.empty() || row_offsets_.front() != 0 || row_offsets_.back() != entries_.size()) {
    throw Error("sparse matrix: row offsets do not span the entry array");
  }
  if (n_cols_ > std::numeric_limits<std::uint32_t>::max()) {
    throw Error("sparse matrix: too many columns");
  }
  for (std::size_t r = 0; r + 1 < row_offsets_.size(); ++r) {
    if (row_offsets_[r] > row_offsets_[r + 1]) {
      throw Error(fmt::format("sparse matrix: row offsets decrease at row {}", r));
    }
    for (auto k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      const auto& e = entries_[k];
      if (e.index >= n_cols_) {
        throw Error(fmt::format("sparse matrix: row {} has feature {} >= n_cols {}", r, e.index,
                                n_cols_));
      }
      if (!(e.weight >= 0.0F) || !std::isfinite(e.weight)) {
        throw Error(fmt::format("sparse matrix: row {} has invalid weight {}", r, e.weight));
      }
      if (k > row_offsets_[r] && entries_[k - 1].index >= e.index) {
        throw Error(fmt::format("sparse matrix: row {} feature indices not strictly increasing", r));
      }
    }
  }
}

SparseMatrix SparseMatrix::from_rows(FeatureFamily family, std::size_t n_cols,
                                     std::span<const SparseVector> rows) {
  std::vector<std::uint64_t> offsets;
  offsets.reserve(rows.size() + 1);
  offsets.push_back(0);
  std::vector<FeatureEntry> entries;
  for (const auto& row : rows) {
    entries.insert(entries.end(), row.entries.begin(), row.entries.end());
    offsets.push_back(entries.size());
  }
  return SparseMatrix(family, n_cols, std::move(offsets), std::move(entries));
}

double bm25_weight(double tf, double dl, double avgdl, double k1, double b) {
  if (!(avgdl > 0.0)) {
    throw Error("bm25_weight: average document length must be positive (empty collection?)");
  }
  if (!(k1 > 0.0)) throw Error("bm25_weight: k1 must be positive");
  if (!(b >= 0.0 && b <= 1.0)) throw Error("bm25_weight: b must lie in [0, 1]");
  if (tf < 0.0 || dl < 0.0) throw Error("bm25_weight: negative term frequency or length");
  if (tf == 0.0) return 0.0;
  return tf / (tf + k1 * ((1.0 - b) + b * dl / avgdl));
}

Bm25Encoding encode_bm25(const LabeledCollection& collection, const Bm25Params& params) {
  Bm25Encoding out;
  std::unordered_map<std::string_view, std::uint32_t> columns;
  std::vector<std::uint64_t> offsets{0};
  std::vector<FeatureEntry> entries;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> counts;  // (column, tf)
  const double avgdl = collection.avg_doc_length();

  for (const auto& doc : collection.documents()) {
    counts.clear();
    for (const auto& token : doc.tokens) {
      auto [it, inserted] =
          columns.try_emplace(token, static_cast<std::uint32_t>(out.vocabulary.size()));
      if (inserted) out.vocabulary.push_back(token);
      counts.emplace_back(it->second, 1);
    }
    std::sort(counts.begin(), counts.end());
    const auto dl = static_cast<double>(doc.length());
    for (std::size_t i = 0; i < counts.size();) {
      std::size_t j = i;
      while (j < counts.size() && counts[j].first == counts[i].first) ++j;
      const auto tf = static_cast<double>(j - i);
      entries.push_back(
          {counts[i].first, static_cast<float>(bm25_weight(tf, dl, avgdl, params.k1, params.b))});
      i = j;
    }
    offsets.push_back(entries.size());
  }
  out.matrix = SparseMatrix(FeatureFamily::bm25, out.vocabulary.size(), std::move(offsets),
                            std::move(entries));
  return out;
}

SparseVector prune_top_s(SparseVector vector, std::size_t s) {
  if (s == 0) throw Error("prune_top_s: s must be at least 1");
  auto& entries = vector.entries;
  if (entries.size() > s) {
    auto by_weight = [](const FeatureEntry& a, const FeatureEntry& b) {
      return a.weight != b.weight ? a.weight > b.weight : a.index < b.index;
    };
    std::nth_element(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(s - 1),
                     entries.end(), by_weight);
    entries.resize(s);
  }
  std::sort(entries.begin(), entries.end(),
            [](const FeatureEntry& a, const FeatureEntry& b) { return a.index < b.index; });
  return vector;
}

SparseMatrix l2_normalize_rows(const SparseMatrix& matrix) {
  std::vector<FeatureEntry> entries = matrix.entries();
  for (std::size_t r = 0; r < matrix.n_rows(); ++r) {
    const auto begin = matrix.row_offsets()[r];
    const auto end = matrix.row_offsets()[r + 1];
    double sq = 0.0;
    for (auto k = begin; k < end; ++k) sq += double(entries[k].weight) * entries[k].weight;
    if (sq <= 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (auto k = begin; k < end; ++k) {
      entries[k].weight = static_cast<float>(entries[k].weight * inv);
    }
  }
  return SparseMatrix(matrix.family(), matrix.n_cols(), matrix.row_offsets(), std::move(entries));
}

SparseMatrix read_sparse_vectors(std::istream& in, const LabeledCollection& collection,
                                 const VectorLoadOptions& options) {
  const std::size_t top_s = options.effective_top_s();
  std::vector<std::optional<SparseVector>> rows(collection.size());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    VectorRecord record;
    try {
      record = parse_vector_record(line, options.vocab_size);
    } catch (const Error& e) {
      throw Error(fmt::format("vector record at line {}: {}", line_no, e.what()));
    }
    const auto doc = collection.find(record.doc_id);
    if (!doc) {
      throw Error(fmt::format("vector record at line {}: unknown doc_id {}", line_no,
                              record.doc_id));
    }
    if (rows[*doc]) {
      throw Error(fmt::format("vector record at line {}: duplicate vector for {}", line_no,
                              record.doc_id));
    }
    rows[*doc] = prune_top_s(std::move(record.vector), top_s);
  }
  std::vector<SparseVector> aligned;
  aligned.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i]) {
      throw Error(fmt::format("no vector for {}", collection.documents()[i].doc_id));
    }
    aligned.push_back(std::move(*rows[i]));
  }
  auto matrix = SparseMatrix::from_rows(FeatureFamily::splade, options.vocab_size, aligned);
  return options.l2_normalize ? l2_normalize_rows(matrix) : matrix;
}

SparseMatrix load_sparse_vectors(const std::filesystem::path& path,
                                 const LabeledCollection& collection,
                                 const VectorLoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  return read_sparse_vectors(in, collection, options);
}

VectorValidation validate_sparse_vectors(std::istream& in, const LabeledCollection* collection,
                                         std::size_t vocab_size,
                                         std::optional<std::size_t> max_nnz) {
  VectorValidation report;
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t total_nnz = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    VectorRecord record;
    try {
      record = parse_vector_record(line, vocab_size);
    } catch (const Error& e) {
      report.errors.push_back(fmt::format("line {}: {}", line_no, e.what()));
      continue;
    }
    ++report.records;
    const auto nnz = record.vector.nnz();
    total_nnz += nnz;
    report.max_nnz = std::max(report.max_nnz, nnz);
    if (max_nnz && nnz > *max_nnz) {
      report.errors.push_back(fmt::format("line {}: {} has {} entries, above the cap of {}",
                                          line_no, record.doc_id, nnz, *max_nnz));
    }
    if (auto [it, inserted] = seen.emplace(record.doc_id, line_no); !inserted) {
      report.errors.push_back(fmt::format("line {}: duplicate vector for {} (first at line {})",
                                          line_no, record.doc_id, it->second));
    }
    if (collection != nullptr && !collection->find(record.doc_id)) {
      report.errors.push_back(fmt::format("line {}: unknown doc_id {}", line_no, record.doc_id));
    }
  }
  if (collection != nullptr) {
    for (const auto& doc : collection->documents()) {
      if (!seen.contains(doc.doc_id)) {
        report.errors.push_back(fmt::format("no vector for {}", doc.doc_id));
      }
    }
  }
  if (report.records > 0) {
    report.mean_nnz = static_cast<double>(total_nnz) / static_cast<double>(report.records);
  }
  return report;
}

MatrixStats matrix_stats(const SparseMatrix& matrix) {
  if (matrix.n_rows() == 0) throw Error("empty matrix");
  const auto rows = static_cast<double>(matrix.n_rows());
  const auto nnz = static_cast<double>(matrix.nnz());
  const double cells = rows * static_cast<double>(matrix.n_cols());
  return {nnz / rows, cells > 0.0 ? nnz / cells : 0.0};
}

}  // namespace tarsim
