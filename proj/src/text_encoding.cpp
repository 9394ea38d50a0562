#include "relscene/text_encoding.hpp"

#include <algorithm>
#include <cmath>

#include "relscene/errors.hpp"
#include "relscene/hash.hpp"
#include "relscene/io.hpp"
#include "relscene/log.hpp"

namespace relscene {

std::string_view to_string(EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::Point3D: return "point3d";
    case EmbeddingKind::Visual2D: return "visual2d";
    case EmbeddingKind::Text: return "text";
    case EmbeddingKind::HeadWeights: return "head_weights";
  }
  return "unknown";
}

MockTextEncoder::MockTextEncoder(int dim) : dim_(dim) {
  if (dim <= 0) throw DomainError("MockTextEncoder: dim must be positive");
}

std::vector<double> MockTextEncoder::encode(std::string_view text) const {
  return mock_text_encode(text, dim_);
}

std::vector<double> mock_text_encode(std::string_view text, int dim) {
  if (dim <= 0) throw DomainError("mock_text_encode: dim must be positive");
  std::vector<double> v(dim, 0.0);
  if (text.empty()) return v;
  auto add = [&](std::string_view gram) {
    const std::uint64_t h = fnv1a64(gram);
    const std::uint32_t folded =
        static_cast<std::uint32_t>(h) ^ static_cast<std::uint32_t>(h >> 32);
    v[folded % static_cast<std::uint32_t>(dim)] += 1.0;
  };
  if (text.size() < 3) {
    add(text);
  } else {
    for (std::size_t i = 0; i + 3 <= text.size(); ++i) add(text.substr(i, 3));
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

std::vector<double> encode_description(std::string_view text, const TextEncoder& encoder) {
  if (text.empty()) throw DomainError("encode_description: empty text");
  auto v = encoder.encode(text);
  if (static_cast<int>(v.size()) != encoder.dim()) {
    throw DomainError("encode_description: encoder returned dimension " +
                      std::to_string(v.size()) + ", expected " + std::to_string(encoder.dim()));
  }
  if (!std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); })) {
    throw DomainError("encode_description: encoder returned non-finite values");
  }
  return v;
}

std::vector<EmbeddingRecord> encode_descriptions(const DescriptionMap& records,
                                                 const TextEncoder& encoder) {
  std::vector<EmbeddingRecord> out;
  out.reserve(records.size());
  for (const auto& [idx, rec] : records) {
    EmbeddingRecord e{idx, EmbeddingKind::Text, std::vector<float>(encoder.dim(), 0.f)};
    if (rec.status == DescriptionStatus::Missing || rec.text.empty()) {
      warn("object " + std::to_string(idx) + " has no description; using a zero text embedding");
    } else {
      const auto v = encode_description(rec.text, encoder);
      std::transform(v.begin(), v.end(), e.vector.begin(),
                     [](double x) { return static_cast<float>(x); });
    }
    out.push_back(std::move(e));
  }
  return out;
}

PrecomputedEmbeddings load_precomputed(const std::filesystem::path& path, int expected_dim,
                                       const std::vector<int>& expected_indices) {
  const EmbeddingFile file = read_embedding_file(path);
  if (file.kind == EmbeddingKind::HeadWeights) {
    throw FormatError(path.string() + ": header field kind: head weights are not embeddings");
  }
  if (static_cast<int>(file.dim) != expected_dim) {
    throw FormatError(path.string() + ": header field dim: dimension mismatch (file " +
                      std::to_string(file.dim) + ", expected " + std::to_string(expected_dim) +
                      ")");
  }
  PrecomputedEmbeddings out;
  for (const auto& r : file.records) out.vectors.emplace(static_cast<int>(r.object_index), r.values);
  for (int idx : expected_indices) {
    if (!out.vectors.contains(idx)) out.missing.push_back(idx);
  }
  return out;
}

}  // namespace relscene
