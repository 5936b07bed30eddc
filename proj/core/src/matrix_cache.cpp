#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "tarsim/error.hpp"
#include "tarsim/sparse_features.hpp"

namespace tarsim {
namespace {

static_assert(std::endian::native == std::endian::little,
              "matrix cache I/O assumes a little-endian host");

constexpr std::array<char, 8> kMagic = {'T', 'A', 'R', 'S', 'M', 'A', 'T', '1'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw Error("matrix cache: truncated file");
  }
  return value;
}

}  // namespace

void write_matrix_cache(const SparseMatrix& matrix, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  write_pod(out, kFormatVersion);
  write_pod(out, static_cast<std::uint32_t>(matrix.family()));
  write_pod(out, static_cast<std::uint64_t>(matrix.n_rows()));
  write_pod(out, static_cast<std::uint64_t>(matrix.n_cols()));
  write_pod(out, static_cast<std::uint64_t>(matrix.nnz()));
  for (auto offset : matrix.row_offsets()) write_pod(out, offset);
  for (const auto& e : matrix.entries()) write_pod(out, e.index);
  for (const auto& e : matrix.entries()) write_pod(out, e.weight);
  if (!out) throw Error("matrix cache: write failed");
}

void write_matrix_cache(const SparseMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot open {} for writing", path.string()));
  write_matrix_cache(matrix, out);
}

SparseMatrix read_matrix_cache(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error("matrix cache: bad magic");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw Error(fmt::format("matrix cache: unsupported format version {}", version));
  }
  const auto family = read_pod<std::uint32_t>(in);
  if (family > static_cast<std::uint32_t>(FeatureFamily::splade)) {
    throw Error(fmt::format("matrix cache: unknown feature family {}", family));
  }
  const auto n_rows = read_pod<std::uint64_t>(in);
  const auto n_cols = read_pod<std::uint64_t>(in);
  const auto nnz = read_pod<std::uint64_t>(in);

  std::vector<std::uint64_t> offsets(n_rows + 1);
  for (auto& o : offsets) o = read_pod<std::uint64_t>(in);
  std::vector<FeatureEntry> entries(nnz);
  for (auto& e : entries) e.index = read_pod<std::uint32_t>(in);
  for (auto& e : entries) e.weight = read_pod<float>(in);
  return SparseMatrix(static_cast<FeatureFamily>(family), n_cols, std::move(offsets),
                      std::move(entries));
}

SparseMatrix read_matrix_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  return read_matrix_cache(in);
}

}  // namespace tarsim
