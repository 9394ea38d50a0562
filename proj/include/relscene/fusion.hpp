#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "relscene/scene.hpp"

namespace relscene {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Stack of affine maps with a rectifier between consecutive layers (none
/// after the last). Depth 3 is the MLP head; depth 1 is a plain linear map.
class ProjectionHead {
 public:
  explicit ProjectionHead(std::vector<DenseLayer> layers);

  /// Uniform(-1/sqrt(in), 1/sqrt(in)) weights, zero bias.
  static ProjectionHead random(int in_dim, int hidden_dim, int out_dim, int depth,
                               std::uint64_t seed);

  int in_dim() const { return static_cast<int>(layers_.front().weight.cols()); }
  int out_dim() const { return static_cast<int>(layers_.back().weight.rows()); }
  int depth() const { return static_cast<int>(layers_.size()); }
  const std::vector<DenseLayer>& layers() const { return layers_; }

 private:
  std::vector<DenseLayer> layers_;
};

Eigen::VectorXd apply_head(const ProjectionHead& head, const Eigen::VectorXd& z);

struct HeadGradient {
  std::vector<DenseLayer> layers;  // d(loss)/d(weight), d(loss)/d(bias)
  Eigen::VectorXd input;           // d(loss)/d(z)
};

/// Backpropagates `upstream` = d(loss)/d(output) through the head. The
/// rectifier derivative at exactly 0 is taken as 0.
HeadGradient head_gradient(const ProjectionHead& head, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& upstream);

struct FusionConfig {
  int point_dim = 1024;
  int visual_dim = 1024;
  int text_dim = 768;
  int token_dim = 64;
  int hidden_dim = 256;
  int depth = 3;
};

struct ModalityHeads {
  ProjectionHead point;
  ProjectionHead visual;
  ProjectionHead text;

  static ModalityHeads random(const FusionConfig& config, std::uint64_t seed);
};

/// Learnable identifier embeddings: seeded unit Gaussian scaled by 0.02.
/// An index's vector depends only on (seed, index, dim).
class IdentifierEmbeddings {
 public:
  IdentifierEmbeddings(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}
  Eigen::VectorXd embedding(int index) const;
  int dim() const { return dim_; }

 private:
  int dim_;
  std::uint64_t seed_;
};

/// [identifier, point, visual, text] token vectors of one object.
struct ObjectTokenBlock {
  static constexpr int kSlots = 4;
  static constexpr const char* kSlotNames[kSlots] = {"obj", "vp", "vf", "vt"};

  Eigen::VectorXd identifier_embedding;
  Eigen::VectorXd f_vp;
  Eigen::VectorXd f_vf;
  Eigen::VectorXd f_vt;

  const Eigen::VectorXd& slot(int i) const;
  int dim() const { return static_cast<int>(identifier_embedding.size()); }
};

/// Projects each modality through its head. An empty modality vector is a
/// DomainError; zero-vector substitution happens upstream.
ObjectTokenBlock build_object_block(const Eigen::VectorXd& identifier_embedding,
                                    const Eigen::VectorXd& z_vp, const Eigen::VectorXd& z_vf,
                                    const Eigen::VectorXd& z_vt, const ModalityHeads& heads);

struct SceneTokens {
  std::vector<std::pair<std::string, ObjectTokenBlock>> sequence;  // ascending index
  /// 4n x d: rows obj_1, vp_1, vf_1, vt_1, obj_2, ...
  Eigen::MatrixXd matrix;
};

/// Orders blocks by ascending object index. With include_text false the
/// text slot is zeroed (embedding-level fusion disabled).
SceneTokens serialize_scene_tokens(const Scene& scene,
                                   const std::map<int, ObjectTokenBlock>& blocks,
                                   bool include_text = true);

struct ResponseSpan {
  std::size_t start = 0;
  std::size_t length = 0;
};

enum class LossMode { Strict, Lenient };

struct ResponseLoss {
  std::vector<double> per_position_nll;
  double total = 0.0;
};

/// Negative log-likelihood of `targets` summed over the response span only.
/// probabilities[t] is the next-token distribution at position t. Strict
/// mode rejects a zero target probability; lenient mode clamps at 1e-12.
ResponseLoss response_cross_entropy(const std::vector<std::vector<double>>& probabilities,
                                    const std::vector<int>& targets, ResponseSpan span,
                                    LossMode mode = LossMode::Strict);

}  // namespace relscene
