#include "relscene/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "relscene/errors.hpp"
#include "relscene/features.hpp"

namespace relscene {

ProjectionHead::ProjectionHead(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw DomainError("ProjectionHead: no layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.weight.rows() == 0 || layer.weight.cols() == 0) {
      throw DomainError("ProjectionHead: layer " + std::to_string(l) + " is empty");
    }
    if (layer.bias.size() != layer.weight.rows()) {
      throw DomainError("ProjectionHead: layer " + std::to_string(l) + " bias size mismatch");
    }
    if (l > 0 && layer.weight.cols() != layers_[l - 1].weight.rows()) {
      throw DomainError("ProjectionHead: layer " + std::to_string(l) + " input does not chain");
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw DomainError("ProjectionHead: layer " + std::to_string(l) + " has non-finite weights");
    }
  }
}

ProjectionHead ProjectionHead::random(int in_dim, int hidden_dim, int out_dim, int depth,
                                      std::uint64_t seed) {
  if (depth < 1) throw DomainError("ProjectionHead: depth must be >= 1");
  std::vector<DenseLayer> layers;
  int in = in_dim;
  for (int l = 0; l < depth; ++l) {
    const int out = (l == depth - 1) ? out_dim : hidden_dim;
    if (in <= 0 || out <= 0) throw DomainError("ProjectionHead: dimensions must be positive");
    const auto u = seeded_uniform(seed + 0x9e3779b97f4a7c15ULL * (l + 1),
                                  static_cast<std::size_t>(in) * out);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) layer.weight(r, c) = scale * u[static_cast<std::size_t>(r) * in + c];
    }
    layers.push_back(std::move(layer));
    in = out;
  }
  return ProjectionHead(std::move(layers));
}

Eigen::VectorXd apply_head(const ProjectionHead& head, const Eigen::VectorXd& z) {
  if (z.size() != head.in_dim()) {
    throw DomainError("apply_head: input dimension " + std::to_string(z.size()) +
                      ", head expects " + std::to_string(head.in_dim()));
  }
  Eigen::VectorXd x = z;
  const auto& layers = head.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    x = layers[l].weight * x + layers[l].bias;
    if (l + 1 < layers.size()) x = x.cwiseMax(0.0);
  }
  return x;
}

HeadGradient head_gradient(const ProjectionHead& head, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& upstream) {
  if (z.size() != head.in_dim()) throw DomainError("head_gradient: input dimension mismatch");
  if (upstream.size() != head.out_dim()) {
    throw DomainError("head_gradient: upstream gradient dimension mismatch");
  }
  const auto& layers = head.layers();
  const std::size_t depth = layers.size();
  // inputs[l] feeds layer l; pre[l] is its affine output
  std::vector<Eigen::VectorXd> inputs(depth), pre(depth);
  Eigen::VectorXd x = z;
  for (std::size_t l = 0; l < depth; ++l) {
    inputs[l] = x;
    pre[l] = layers[l].weight * x + layers[l].bias;
    x = (l + 1 < depth) ? Eigen::VectorXd(pre[l].cwiseMax(0.0)) : pre[l];
  }
  HeadGradient grad;
  grad.layers.resize(depth);
  Eigen::VectorXd delta = upstream;
  for (std::size_t l = depth; l-- > 0;) {
    if (l + 1 < depth) {
      delta = delta.cwiseProduct((pre[l].array() > 0.0).cast<double>().matrix());
    }
    grad.layers[l].weight = delta * inputs[l].transpose();
    grad.layers[l].bias = delta;
    delta = layers[l].weight.transpose() * delta;
  }
  grad.input = delta;
  return grad;
}

ModalityHeads ModalityHeads::random(const FusionConfig& c, std::uint64_t seed) {
  return {ProjectionHead::random(c.point_dim, c.hidden_dim, c.token_dim, c.depth, seed * 3 + 1),
          ProjectionHead::random(c.visual_dim, c.hidden_dim, c.token_dim, c.depth, seed * 3 + 2),
          ProjectionHead::random(c.text_dim, c.hidden_dim, c.token_dim, c.depth, seed * 3 + 3)};
}

Eigen::VectorXd IdentifierEmbeddings::embedding(int index) const {
  std::mt19937_64 rng(seed_ ^ (0xa5a5a5a5ULL + static_cast<std::uint64_t>(index) * 0x100000001b3ULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim_);
  for (int i = 0; i < dim_; ++i) v[i] = 0.02 * normal(rng);
  return v;
}

const Eigen::VectorXd& ObjectTokenBlock::slot(int i) const {
  switch (i) {
    case 0: return identifier_embedding;
    case 1: return f_vp;
    case 2: return f_vf;
    case 3: return f_vt;
  }
  throw DomainError("ObjectTokenBlock: slot out of range");
}

ObjectTokenBlock build_object_block(const Eigen::VectorXd& identifier_embedding,
                                    const Eigen::VectorXd& z_vp, const Eigen::VectorXd& z_vf,
                                    const Eigen::VectorXd& z_vt, const ModalityHeads& heads) {
  if (z_vp.size() == 0) throw DomainError("build_object_block: missing point embedding");
  if (z_vf.size() == 0) throw DomainError("build_object_block: missing visual embedding");
  if (z_vt.size() == 0) throw DomainError("build_object_block: missing text embedding");
  ObjectTokenBlock block{identifier_embedding, apply_head(heads.point, z_vp),
                         apply_head(heads.visual, z_vf), apply_head(heads.text, z_vt)};
  const int d = block.dim();
  if (block.f_vp.size() != d || block.f_vf.size() != d || block.f_vt.size() != d) {
    throw DomainError("build_object_block: head output dimension differs from identifier dimension");
  }
  return block;
}

SceneTokens serialize_scene_tokens(const Scene& scene, const std::map<int, ObjectTokenBlock>& blocks,
                                   bool include_text) {
  std::vector<int> indices;
  for (const auto& o : scene.objects) indices.push_back(o.index());
  std::sort(indices.begin(), indices.end());
  SceneTokens out;
  int dim = -1;
  for (int idx : indices) {
    const auto it = blocks.find(idx);
    if (it == blocks.end()) {
      throw DomainError("serialize_scene_tokens: no token block for " + make_identifier(idx));
    }
    ObjectTokenBlock block = it->second;
    if (dim < 0) dim = block.dim();
    if (block.dim() != dim) throw DomainError("serialize_scene_tokens: inconsistent token dimension");
    if (!include_text) block.f_vt.setZero();
    out.sequence.emplace_back(make_identifier(idx), std::move(block));
  }
  out.matrix.resize(static_cast<Eigen::Index>(out.sequence.size()) * ObjectTokenBlock::kSlots,
                    std::max(dim, 0));
  for (std::size_t i = 0; i < out.sequence.size(); ++i) {
    for (int s = 0; s < ObjectTokenBlock::kSlots; ++s) {
      out.matrix.row(static_cast<Eigen::Index>(i) * ObjectTokenBlock::kSlots + s) =
          out.sequence[i].second.slot(s).transpose();
    }
  }
  return out;
}

ResponseLoss response_cross_entropy(const std::vector<std::vector<double>>& probabilities,
                                    const std::vector<int>& targets, ResponseSpan span,
                                    LossMode mode) {
  if (span.length < 1) throw DomainError("response_cross_entropy: empty response span");
  if (targets.size() != probabilities.size()) {
    throw DomainError("response_cross_entropy: targets and distributions differ in length");
  }
  if (span.start + span.length > probabilities.size()) {
    throw DomainError("response_cross_entropy: response span exceeds sequence");
  }
  ResponseLoss loss;
  for (std::size_t t = span.start; t < span.start + span.length; ++t) {
    const auto& dist = probabilities[t];
    double sum = 0.0;
    for (double p : dist) {
      if (!(p >= 0.0)) throw DomainError("response_cross_entropy: negative or NaN probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw DomainError("response_cross_entropy: distribution at position " + std::to_string(t) +
                        " does not sum to 1");
    }
    const int target = targets[t];
    if (target < 0 || static_cast<std::size_t>(target) >= dist.size()) {
      throw DomainError("response_cross_entropy: target id out of vocabulary");
    }
    double p = dist[target];
    if (p <= 0.0) {
      if (mode == LossMode::Strict) {
        throw DomainError("response_cross_entropy: zero probability at target, position " +
                          std::to_string(t));
      }
      p = 1e-12;
    }
    p = std::max(p, mode == LossMode::Lenient ? 1e-12 : p);
    loss.per_position_nll.push_back(-std::log(p));
  }
  for (double v : loss.per_position_nll) loss.total += v;
  return loss;
}

}  // namespace relscene
