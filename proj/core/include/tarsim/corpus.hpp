#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tarsim/tokenizer.hpp"

namespace tarsim {

/// Row index of a document. Fixed by corpus file order and shared by every
/// feature matrix built from the collection.
using DocIndex = std::uint32_t;

enum class Relevance : std::uint8_t { non_relevant = 0, relevant = 1 };

struct Document {
  std::string doc_id;
  std::string text;
  std::vector<std::string> tokens;

  std::size_t length() const noexcept { return tokens.size(); }
};

enum class Difficulty { hard, medium, easy };
enum class Prevalence { rare, medium, common };

struct CategoryGroup {
  Difficulty difficulty;
  Prevalence prevalence;

  friend bool operator==(const CategoryGroup&, const CategoryGroup&) = default;
  friend auto operator<=>(const CategoryGroup&, const CategoryGroup&) = default;
};

std::string_view to_string(Difficulty d) noexcept;
std::string_view to_string(Prevalence p) noexcept;
Difficulty parse_difficulty(std::string_view s);
Prevalence parse_prevalence(std::string_view s);

struct CategoryLabels {
  std::string category_id;
  /// Sorted row indices of the relevant documents.
  std::vector<DocIndex> positives;
  std::optional<CategoryGroup> group;

  bool is_positive(DocIndex doc) const noexcept;
  /// Dense gold label vector over a collection of `n_docs` documents.
  std::vector<Relevance> gold(std::size_t n_docs) const;
};

/// Documents plus per-category gold labels. Immutable once built; safe to
/// share read-only between concurrent runs.
class LabeledCollection {
 public:
  LabeledCollection() = default;
  explicit LabeledCollection(std::vector<Document> documents);

  const std::vector<Document>& documents() const noexcept { return documents_; }
  const Document& document(DocIndex i) const { return documents_.at(i); }
  std::size_t size() const noexcept { return documents_.size(); }
  double avg_doc_length() const noexcept { return avg_doc_length_; }

  std::optional<DocIndex> find(std::string_view doc_id) const;
  /// Throws tarsim::Error("unknown doc_id ...") when absent.
  DocIndex index_of(std::string_view doc_id) const;

  /// Categories usable for runs (at least one positive and one negative).
  const std::map<std::string, CategoryLabels>& categories() const noexcept { return categories_; }
  const CategoryLabels& category(std::string_view category_id) const;
  /// Categories dropped at label load time, with the reason.
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  LabeledCollection with_categories(std::map<std::string, CategoryLabels> categories,
                                    std::vector<std::string> warnings = {}) &&;

 private:
  std::vector<Document> documents_;
  std::unordered_map<std::string, DocIndex> index_;
  std::map<std::string, CategoryLabels> categories_;
  std::vector<std::string> warnings_;
  double avg_doc_length_ = 0.0;
};

/// JSONL, one {"doc_id": ..., "text": ...} object per line. Blank lines are
/// skipped; malformed records and duplicate ids are errors.
LabeledCollection read_corpus(std::istream& in, const TokenizerConfig& config = {});
LabeledCollection load_corpus(const std::filesystem::path& path, const TokenizerConfig& config = {});

/// qrels-style rows `category_id doc_id relevance` with relevance in {0,1}.
/// A category without positives (or without negatives) is excluded and a
/// warning recorded on the returned collection.
LabeledCollection read_labels(std::istream& in, LabeledCollection collection);
LabeledCollection load_labels(const std::filesystem::path& path, LabeledCollection collection);

/// CSV `category_id,difficulty,prevalence`; an optional header row is skipped.
std::map<std::string, CategoryGroup> read_group_table(std::istream& in);

/// Attaches groups to the collection's categories. Rows for categories not
/// present in the collection are ignored.
LabeledCollection read_groups(std::istream& in, LabeledCollection collection);
LabeledCollection load_groups(const std::filesystem::path& path, LabeledCollection collection);

}  // namespace tarsim
