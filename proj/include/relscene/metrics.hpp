#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relscene/geometry.hpp"

namespace relscene {

enum class TaskKind { GroundSingle, GroundMulti, Caption, QA };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view s);

struct TaskInstance {
  std::string id;
  TaskKind kind = TaskKind::GroundSingle;
  std::string query;
  std::vector<Aabb> gt_boxes;
  std::vector<std::string> gt_texts;
  std::optional<int> target_object;
  nlohmann::json extra = nlohmann::json::object();
};

/// Arity rules per task kind. Throws DomainError.
void validate_task(const TaskInstance& task);

struct Prediction {
  std::string id;
  std::vector<Aabb> boxes;
  std::optional<std::string> text;
  nlohmann::json extra = nlohmann::json::object();
};

// Grounding. Instances and predictions are paired by position.

/// Fraction of instances whose single predicted box has IoU strictly
/// above `thr` with the ground truth. Wrong prediction arity scores 0.
double acc_at_iou(std::span<const TaskInstance> instances,
                  std::span<const Prediction> predictions, double thr);

/// Set F1 for one instance: maximum one-to-one matching where a pair
/// counts iff IoU >= thr. Empty/empty is 1, empty GT with predictions is 0.
double instance_f1(std::span<const Aabb> gt, std::span<const Aabb> pred, double thr);

double multi_object_f1(std::span<const TaskInstance> instances,
                       std::span<const Prediction> predictions, double thr);

// Text metrics. Candidates pair with reference sets by position.

/// Corpus BLEU up to order n, no smoothing, brevity penalty against the
/// closest reference length (shorter on ties).
double bleu(std::span<const std::string> candidates,
            std::span<const std::vector<std::string>> references, int n = 4);

/// Per-sentence BLEU with add-epsilon (1e-9) smoothing on every order.
double sentence_bleu(const std::string& candidate,
                     std::span<const std::string> references, int n = 4);

inline constexpr double kRougeBeta = 1.2;

/// LCS F-measure, max over references.
double rouge_l(const std::string& candidate, std::span<const std::string> references);
double rouge_l_corpus(std::span<const std::string> candidates,
                      std::span<const std::vector<std::string>> references);

/// Suffix-stripping stemmer used by meteor_lite.
std::string light_stem(const std::string& word);

/// METEOR without synonym tables: exact then stem alignment,
/// Fmean = 10PR/(R+9P), penalty 0.5 (chunks/matches)^3.
double meteor_lite(const std::string& candidate, std::span<const std::string> references);
double meteor_lite_corpus(std::span<const std::string> candidates,
                          std::span<const std::vector<std::string>> references);

struct CiderResult {
  double mean = 0.0;
  std::vector<double> per_item;
};

/// CIDEr (not CIDEr-D): tf-idf n-gram vectors for n = 1..4 with document
/// frequency over the reference sets, cosine averaged over references and
/// orders, times 10.
CiderResult cider(std::span<const std::string> candidates,
                  std::span<const std::vector<std::string>> reference_sets);

enum class CaptionMetric { Cider, Bleu4 };

/// Text metric gated by localization: instances whose predicted box has
/// IoU < thr score 0. CIDEr document frequencies always cover the whole
/// reference corpus.
double captioning_at_iou(std::span<const TaskInstance> instances,
                         std::span<const Prediction> predictions, double thr,
                         CaptionMetric metric);

int exact_match(std::string_view pred, std::span<const std::string> gt_answers);
/// EM, or token-sequence containment in either direction after
/// normalization.
int em_refined(std::string_view pred, std::span<const std::string> gt_answers);

struct InstanceScore {
  std::string id;
  TaskKind kind;
  std::map<std::string, double> metrics;
};

struct EvaluationReport {
  /// task kind -> metric name -> score
  std::map<std::string, std::map<std::string, double>> scores;
  std::vector<InstanceScore> instances;
};

/// Scores every task kind present. Predictions are matched to instances by
/// id; an instance without a prediction is scored against an empty one.
EvaluationReport evaluate(std::span<const TaskInstance> instances,
                          std::span<const Prediction> predictions);

}  // namespace relscene
