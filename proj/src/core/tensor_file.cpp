#include "polyfuse/core/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "polyfuse/core/error.hpp"

namespace polyfuse {

static_assert(std::endian::native == std::endian::little, "npy writer assumes little-endian host");

std::int64_t Tensor::numel() const {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write", tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write", tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_npy(const std::filesystem::path& path, const Tensor& tensor) {
  if (tensor.numel() != static_cast<std::int64_t>(tensor.data.size()))
    throw Error(ErrorCode::ShapeMismatch, "tensor data does not match shape", path.string());
  std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < tensor.shape.size(); ++i) {
    dict += std::to_string(tensor.shape[i]);
    if (tensor.shape.size() == 1 || i + 1 < tensor.shape.size()) dict += ",";
    if (i + 1 < tensor.shape.size()) dict += " ";
  }
  dict += "), }";
  // magic(6) + version(2) + header_len(2) + dict + padding + '\n' is a multiple of 64
  const std::size_t unpadded = 10 + dict.size() + 1;
  dict.append((64 - unpadded % 64) % 64, ' ');
  dict += '\n';

  std::string bytes;
  bytes.reserve(10 + dict.size() + tensor.data.size() * 4);
  bytes += "\x93NUMPY";
  bytes += static_cast<char>(1);
  bytes += static_cast<char>(0);
  const auto hlen = static_cast<std::uint16_t>(dict.size());
  bytes += static_cast<char>(hlen & 0xff);
  bytes += static_cast<char>(hlen >> 8);
  bytes += dict;
  const auto* raw = reinterpret_cast<const char*>(tensor.data.data());
  bytes.append(raw, tensor.data.size() * sizeof(float));
  write_file_atomic(path, bytes);
}

Tensor read_npy(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 10 || bytes.compare(0, 6, "\x93NUMPY") != 0)
    throw Error(ErrorCode::IoError, "not an npy file", path.string());
  const int major = static_cast<unsigned char>(bytes[6]);
  std::size_t header_len = 0;
  std::size_t offset = 0;
  if (major == 1) {
    header_len = static_cast<unsigned char>(bytes[8]) | (static_cast<unsigned char>(bytes[9]) << 8);
    offset = 10;
  } else {
    if (bytes.size() < 12) throw Error(ErrorCode::IoError, "truncated npy header", path.string());
    header_len = 0;
    for (int i = 0; i < 4; ++i) header_len |= static_cast<std::size_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
    offset = 12;
  }
  if (offset + header_len > bytes.size()) throw Error(ErrorCode::IoError, "truncated npy header", path.string());
  const std::string header = bytes.substr(offset, header_len);
  if (header.find("'<f4'") == std::string::npos || header.find("'fortran_order': False") == std::string::npos)
    throw Error(ErrorCode::IoError, "unsupported npy dtype or order", path.string());
  const auto open = header.find('(', header.find("'shape'"));
  const auto close = header.find(')', open);
  Tensor t;
  std::stringstream ss(header.substr(open + 1, close - open - 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(' ') == std::string::npos) continue;
    t.shape.push_back(std::stoll(item));
  }
  const std::size_t n = static_cast<std::size_t>(t.numel());
  const std::size_t data_off = offset + header_len;
  if (bytes.size() - data_off != n * sizeof(float))
    throw Error(ErrorCode::IoError, "npy payload size mismatch", path.string());
  t.data.resize(n);
  std::memcpy(t.data.data(), bytes.data() + data_off, n * sizeof(float));
  return t;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  write_file_atomic(path, doc.dump(2) + "\n");
}

nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("malformed JSON: ") + e.what(), path.string());
  }
}

}  // namespace polyfuse
