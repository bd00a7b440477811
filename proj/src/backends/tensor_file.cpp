#include "provenance/backends/tensor_file.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include "provenance/error.hpp"

namespace provenance {

static_assert(std::endian::native == std::endian::little, "tensor files are read in host byte order");

namespace {

constexpr std::array<char, 4> kMagic{'P', 'V', 'T', 'W'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxDims = 8;

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw Error(ErrorCode::ModelFormat, "cannot open " + path.string());
  }

  void bytes(void* out, std::size_t n) {
    in_.read(static_cast<char*>(out), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw Error(ErrorCode::ModelFormat, path_.string() + ": unexpected end of file");
    }
  }
  template <typename T>
  T value() {
    T v;
    bytes(&v, sizeof v);
    return v;
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace

std::uint64_t Tensor::elements() const {
  return std::accumulate(shape.begin(), shape.end(), std::uint64_t{1}, std::multiplies<>());
}

TensorMap read_tensor_file(const std::filesystem::path& path) {
  Reader in(path);
  std::array<char, 4> magic{};
  in.bytes(magic.data(), magic.size());
  if (magic != kMagic) throw Error(ErrorCode::ModelFormat, path.string() + ": not a PVTW weight file");
  if (const auto version = in.value<std::uint32_t>(); version != kVersion) {
    throw Error(ErrorCode::ModelFormat, path.string() + ": unsupported version " + std::to_string(version));
  }
  const auto count = in.value<std::uint32_t>();
  const auto file_size = std::filesystem::file_size(path);

  TensorMap tensors;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto name_length = in.value<std::uint32_t>();
    if (name_length == 0 || name_length > 4096) throw Error(ErrorCode::ModelFormat, path.string() + ": bad tensor name");
    std::string name(name_length, '\0');
    in.bytes(name.data(), name.size());
    const auto ndim = in.value<std::uint32_t>();
    if (ndim > kMaxDims) throw Error(ErrorCode::ModelFormat, name + ": too many dimensions");
    Tensor tensor;
    tensor.shape.resize(ndim);
    for (auto& d : tensor.shape) d = in.value<std::uint64_t>();
    const auto n = tensor.elements();
    if (n > file_size / sizeof(float)) throw Error(ErrorCode::ModelFormat, name + ": shape exceeds file size");
    tensor.data.resize(n);
    in.bytes(tensor.data.data(), n * sizeof(float));
    if (!tensors.emplace(std::move(name), std::move(tensor)).second) {
      throw Error(ErrorCode::ModelFormat, path.string() + ": duplicate tensor");
    }
  }
  if (!in.at_end()) throw Error(ErrorCode::ModelFormat, path.string() + ": trailing bytes after last tensor");
  return tensors;
}

void write_tensor_file(const std::filesystem::path& path, const TensorMap& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
  const auto put = [&](const auto& v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  out.write(kMagic.data(), kMagic.size());
  put(kVersion);
  put(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) {
    if (tensor.elements() != tensor.data.size()) throw Error(ErrorCode::ModelFormat, name + ": shape/data mismatch");
    put(static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put(static_cast<std::uint32_t>(tensor.shape.size()));
    for (const auto d : tensor.shape) put(d);
    out.write(reinterpret_cast<const char*>(tensor.data.data()),
              static_cast<std::streamsize>(tensor.data.size() * sizeof(float)));
  }
  if (!out) throw Error(ErrorCode::ConfigError, "failed writing " + path.string());
}

}  // namespace provenance
