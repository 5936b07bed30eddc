#include <fstream>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "tarsim/error.hpp"
#include "tarsim/runner.hpp"

namespace tarsim {

std::string md5_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_md5(), nullptr) != 1) {
    throw Error("md5 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

DedupeSummary dedupe_corpus(const std::filesystem::path& in_path,
                            const std::filesystem::path& out_path) {
  std::ifstream in(in_path);
  if (!in) throw Error(fmt::format("cannot open {}", in_path.string()));
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot open {} for writing", out_path.string()));

  DedupeSummary summary;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(fmt::format("malformed corpus record at line {}: {}", line_no, e.what()));
    }
    if (!record.is_object() || !record.contains("text") || !record["text"].is_string()) {
      throw Error(fmt::format("malformed corpus record at line {}: missing text", line_no));
    }
    ++summary.read;
    if (!seen.insert(md5_hex(record["text"].get<std::string>())).second) {
      ++summary.dropped;
      continue;
    }
    out << line << '\n';
    ++summary.written;
  }
  return summary;
}

}  // namespace tarsim
