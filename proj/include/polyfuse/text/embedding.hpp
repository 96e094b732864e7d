#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "polyfuse/nn/param.hpp"

namespace polyfuse::text {

inline constexpr int kEmbeddingDim = 300;
inline constexpr int kWindow = 60;

/// Pretrained word vectors: vocabulary index → row of matrix.
struct EmbeddingTable {
  std::unordered_map<std::string, std::int64_t> vocabulary;
  nn::Mat<float> matrix;  // |V| × dim

  int dim() const { return static_cast<int>(matrix.cols()); }
  std::size_t size() const { return vocabulary.size(); }
  const float* find(const std::string& token) const;
};

/// Parses the word-vector text format ("token v1 … vD" per line). An optional
/// leading "count dim" header line is skipped. Keys go through the tokenizer's
/// normalization so lookups match tokenized transcripts; the first occurrence
/// of a key wins. Throws ValidationError on wrong dimensions or non-finite
/// values, IoError when unreadable.
EmbeddingTable load_embeddings(const std::filesystem::path& path, int dim = kEmbeddingDim);

/// Fixed-length text input: window × dim values and a prefix mask.
struct TextTensor {
  nn::Mat<float> values;             // window × dim, rows past `length` are zero
  std::vector<std::uint8_t> mask;    // window entries, 1 for real tokens
  int length() const;
};

/// First min(|tokens|, window) rows are the token vectors (zero when out of
/// vocabulary); remaining rows are zero.
TextTensor embed_sequence(const std::vector<std::string>& tokens, const EmbeddingTable& table, int window = kWindow);

/// Builds the tensor from cached values and the token count.
TextTensor text_tensor_from_values(nn::Mat<float> values, int length);

}  // namespace polyfuse::text
