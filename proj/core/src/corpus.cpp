#include "tarsim/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "tarsim/error.hpp"

namespace tarsim {
namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(fmt::format("cannot open {}", path.string()));
  }
  return in;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view to_string(Difficulty d) noexcept {
  switch (d) {
    case Difficulty::hard: return "hard";
    case Difficulty::medium: return "medium";
    case Difficulty::easy: return "easy";
  }
  return "?";
}

std::string_view to_string(Prevalence p) noexcept {
  switch (p) {
    case Prevalence::rare: return "rare";
    case Prevalence::medium: return "medium";
    case Prevalence::common: return "common";
  }
  return "?";
}

Difficulty parse_difficulty(std::string_view s) {
  if (s == "hard") return Difficulty::hard;
  if (s == "medium") return Difficulty::medium;
  if (s == "easy") return Difficulty::easy;
  throw Error(fmt::format("unknown difficulty '{}'", s));
}

Prevalence parse_prevalence(std::string_view s) {
  if (s == "rare") return Prevalence::rare;
  if (s == "medium") return Prevalence::medium;
  if (s == "common") return Prevalence::common;
  throw Error(fmt::format("unknown prevalence '{}'", s));
}

bool CategoryLabels::is_positive(DocIndex doc) const noexcept {
  return std::binary_search(positives.begin(), positives.end(), doc);
}

std::vector<Relevance> CategoryLabels::gold(std::size_t n_docs) const {
  std::vector<Relevance> labels(n_docs, Relevance::non_relevant);
  for (DocIndex d : positives) {
    labels.at(d) = Relevance::relevant;
  }
  return labels;
}

LabeledCollection::LabeledCollection(std::vector<Document> documents)
    : documents_(std::move(documents)) {
  index_.reserve(documents_.size());
  std::size_t total_tokens = 0;
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    const auto& doc = documents_[i];
    if (!index_.emplace(doc.doc_id, static_cast<DocIndex>(i)).second) {
      throw Error(fmt::format("duplicate doc_id {}", doc.doc_id));
    }
    total_tokens += doc.length();
  }
  if (!documents_.empty()) {
    avg_doc_length_ = static_cast<double>(total_tokens) / static_cast<double>(documents_.size());
  }
}

std::optional<DocIndex> LabeledCollection::find(std::string_view doc_id) const {
  auto it = index_.find(std::string(doc_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

DocIndex LabeledCollection::index_of(std::string_view doc_id) const {
  if (auto idx = find(doc_id)) return *idx;
  throw Error(fmt::format("unknown doc_id {}", doc_id));
}

const CategoryLabels& LabeledCollection::category(std::string_view category_id) const {
  auto it = categories_.find(std::string(category_id));
  if (it == categories_.end()) {
    throw Error(fmt::format("unknown category {}", category_id));
  }
  return it->second;
}

LabeledCollection LabeledCollection::with_categories(std::map<std::string, CategoryLabels> categories,
                                                     std::vector<std::string> warnings) && {
  for (auto& [id, labels] : categories) {
    std::sort(labels.positives.begin(), labels.positives.end());
    labels.positives.erase(std::unique(labels.positives.begin(), labels.positives.end()),
                           labels.positives.end());
    if (!labels.positives.empty() && labels.positives.back() >= documents_.size()) {
      throw Error(fmt::format("category {} references row {} beyond collection size {}", id,
                              labels.positives.back(), documents_.size()));
    }
  }
  categories_ = std::move(categories);
  warnings_.insert(warnings_.end(), std::make_move_iterator(warnings.begin()),
                   std::make_move_iterator(warnings.end()));
  return std::move(*this);
}

LabeledCollection read_corpus(std::istream& in, const TokenizerConfig& config) {
  std::vector<Document> documents;
  std::set<std::string, std::less<>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(fmt::format("malformed corpus record at line {}: {}", line_no, e.what()));
    }
    if (!record.is_object() || !record.contains("doc_id") || !record.contains("text") ||
        !record["doc_id"].is_string() || !record["text"].is_string()) {
      throw Error(fmt::format(
          "malformed corpus record at line {}: expected string fields doc_id and text", line_no));
    }
    Document doc;
    doc.doc_id = record["doc_id"].get<std::string>();
    doc.text = record["text"].get<std::string>();
    if (!seen.insert(doc.doc_id).second) {
      throw Error(fmt::format("duplicate doc_id {}", doc.doc_id));
    }
    doc.tokens = tokenize(doc.text, config);
    documents.push_back(std::move(doc));
  }
  return LabeledCollection(std::move(documents));
}

LabeledCollection load_corpus(const std::filesystem::path& path, const TokenizerConfig& config) {
  auto in = open_input(path);
  return read_corpus(in, config);
}

LabeledCollection read_labels(std::istream& in, LabeledCollection collection) {
  // category -> (doc -> relevance); std::map keeps category order stable.
  std::map<std::string, std::map<DocIndex, int>> judgments;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    std::istringstream fields(line);
    std::string category, doc_id, relevance, extra;
    if (!(fields >> category >> doc_id >> relevance) || (fields >> extra)) {
      throw Error(fmt::format(
          "malformed label row at line {}: expected 'category_id doc_id relevance'", line_no));
    }
    if (relevance != "0" && relevance != "1") {
      throw Error(fmt::format("label row at line {}: relevance must be 0 or 1, got '{}'", line_no,
                              relevance));
    }
    const DocIndex doc = collection.index_of(doc_id);
    const int value = relevance == "1" ? 1 : 0;
    auto [it, inserted] = judgments[category].emplace(doc, value);
    if (!inserted && it->second != value) {
      throw Error(fmt::format("conflicting labels for ({}, {}) at line {}", category, doc_id,
                              line_no));
    }
  }

  std::map<std::string, CategoryLabels> categories;
  std::vector<std::string> warnings;
  for (const auto& [category, docs] : judgments) {
    CategoryLabels labels;
    labels.category_id = category;
    for (const auto& [doc, value] : docs) {
      if (value == 1) labels.positives.push_back(doc);
    }
    if (labels.positives.empty()) {
      warnings.push_back(fmt::format("category {} has no relevant documents; excluded", category));
      continue;
    }
    if (labels.positives.size() == collection.size()) {
      warnings.push_back(
          fmt::format("category {} has no non-relevant documents; excluded", category));
      continue;
    }
    categories.emplace(category, std::move(labels));
  }
  return std::move(collection).with_categories(std::move(categories), std::move(warnings));
}

LabeledCollection load_labels(const std::filesystem::path& path, LabeledCollection collection) {
  auto in = open_input(path);
  return read_labels(in, std::move(collection));
}

std::map<std::string, CategoryGroup> read_group_table(std::istream& in) {
  std::map<std::string, CategoryGroup> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    std::vector<std::string_view> cells;
    std::string_view rest = line;
    while (true) {
      auto comma = rest.find(',');
      cells.push_back(trim(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cells.size() != 3) {
      throw Error(fmt::format("malformed group row at line {}: expected 3 columns", line_no));
    }
    if (line_no == 1 && cells[0] == "category_id") continue;
    try {
      table[std::string(cells[0])] =
          CategoryGroup{parse_difficulty(cells[1]), parse_prevalence(cells[2])};
    } catch (const Error& e) {
      throw Error(fmt::format("group row at line {}: {}", line_no, e.what()));
    }
  }
  return table;
}

LabeledCollection read_groups(std::istream& in, LabeledCollection collection) {
  const auto table = read_group_table(in);
  auto categories = collection.categories();
  for (auto& [id, labels] : categories) {
    if (auto it = table.find(id); it != table.end()) labels.group = it->second;
  }
  return std::move(collection).with_categories(std::move(categories));
}

LabeledCollection load_groups(const std::filesystem::path& path, LabeledCollection collection) {
  auto in = open_input(path);
  return read_groups(in, std::move(collection));
}

}  // namespace tarsim
