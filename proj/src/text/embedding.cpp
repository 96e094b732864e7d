#include "polyfuse/text/embedding.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "polyfuse/core/error.hpp"
#include "polyfuse/text/tokenizer.hpp"

namespace polyfuse::text {

const float* EmbeddingTable::find(const std::string& token) const {
  auto it = vocabulary.find(token);
  return it == vocabulary.end() ? nullptr : matrix.row(it->second).data();
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_float(std::string_view s, float& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

EmbeddingTable load_embeddings(const std::filesystem::path& path, int dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open embeddings " + path.string());
  std::vector<std::string> keys;
  std::vector<float> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2) continue;  // "count dim" header
    if (fields.size() != static_cast<std::size_t>(dim) + 1)
      throw Error(ErrorCode::ValidationError, "embeddings line " + std::to_string(line_no) + " has " +
                                                  std::to_string(fields.size() - 1) + " values, expected " +
                                                  std::to_string(dim));
    keys.emplace_back(fields[0]);
    for (int k = 1; k <= dim; ++k) {
      float v = 0.0f;
      if (!parse_float(fields[static_cast<std::size_t>(k)], v) || !std::isfinite(v))
        throw Error(ErrorCode::ValidationError, "embeddings line " + std::to_string(line_no) + " has a bad value");
      values.push_back(v);
    }
  }
  EmbeddingTable table;
  table.matrix.resize(static_cast<Eigen::Index>(keys.size()), dim);
  std::int64_t rows = 0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto tokens = tokenize(keys[i]);
    const std::string key = tokens.size() == 1 ? tokens.front() : keys[i];
    if (!table.vocabulary.emplace(key, rows).second) continue;
    table.matrix.row(rows) = Eigen::Map<const nn::RowVec<float>>(values.data() + i * static_cast<std::size_t>(dim), dim);
    ++rows;
  }
  table.matrix.conservativeResize(rows, dim);
  return table;
}

int TextTensor::length() const {
  int n = 0;
  for (std::uint8_t m : mask) n += m ? 1 : 0;
  return n;
}

TextTensor embed_sequence(const std::vector<std::string>& tokens, const EmbeddingTable& table, int window) {
  TextTensor t;
  t.values = nn::Mat<float>::Zero(window, table.dim());
  t.mask.assign(static_cast<std::size_t>(window), 0);
  const int n = std::min<int>(window, static_cast<int>(tokens.size()));
  for (int i = 0; i < n; ++i) {
    t.mask[static_cast<std::size_t>(i)] = 1;
    if (const float* row = table.find(tokens[static_cast<std::size_t>(i)]))
      t.values.row(i) = Eigen::Map<const nn::RowVec<float>>(row, table.dim());
  }
  return t;
}

TextTensor text_tensor_from_values(nn::Mat<float> values, int length) {
  TextTensor t;
  t.mask.assign(static_cast<std::size_t>(values.rows()), 0);
  for (int i = 0; i < std::min<int>(length, static_cast<int>(values.rows())); ++i) t.mask[static_cast<std::size_t>(i)] = 1;
  t.values = std::move(values);
  return t;
}

}  // namespace polyfuse::text
