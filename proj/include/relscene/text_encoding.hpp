#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "relscene/descriptions.hpp"

namespace relscene {

inline constexpr int kDefaultTextDim = 768;

enum class EmbeddingKind : std::uint8_t { Point3D = 0, Visual2D = 1, Text = 2, HeadWeights = 3 };

std::string_view to_string(EmbeddingKind kind);

struct EmbeddingRecord {
  int object_index = 0;
  EmbeddingKind kind = EmbeddingKind::Text;
  std::vector<float> vector;
};

/// Sentence-encoder seam. encode() must be safe to call concurrently.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual int dim() const = 0;
  virtual std::vector<double> encode(std::string_view text) const = 0;
};

/// Hashed bag of character trigrams: each byte trigram is hashed with
/// FNV-1a 64, folded to 32 bits (low word xor high word) and counted in
/// bucket fold % dim; the counts are L2-normalized. Texts shorter than
/// three bytes hash as a single gram.
class MockTextEncoder : public TextEncoder {
 public:
  explicit MockTextEncoder(int dim = kDefaultTextDim);
  int dim() const override { return dim_; }
  std::vector<double> encode(std::string_view text) const override;

 private:
  int dim_;
};

std::vector<double> mock_text_encode(std::string_view text, int dim = kDefaultTextDim);

/// Throws DomainError for empty text, or when the encoder returns the
/// wrong dimension or non-finite values.
std::vector<double> encode_description(std::string_view text, const TextEncoder& encoder);

/// One Text record per description. Missing descriptions encode to the
/// zero vector with a warning.
std::vector<EmbeddingRecord> encode_descriptions(const DescriptionMap& records,
                                                 const TextEncoder& encoder);

struct PrecomputedEmbeddings {
  std::map<int, std::vector<float>> vectors;
  std::vector<int> missing;  // expected indices absent from the file
};

/// Reads an interchange file produced by an external encoder. Every vector
/// is checked against `expected_dim`; `expected_indices` drives the
/// missing-object report.
PrecomputedEmbeddings load_precomputed(const std::filesystem::path& path, int expected_dim,
                                       const std::vector<int>& expected_indices = {});

}  // namespace relscene
