#include "relscene/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <unordered_map>

#include "relscene/assignment.hpp"
#include "relscene/errors.hpp"
#include "relscene/log.hpp"
#include "relscene/text_norm.hpp"

namespace relscene {

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::GroundSingle: return "ground_single";
    case TaskKind::GroundMulti: return "ground_multi";
    case TaskKind::Caption: return "caption";
    case TaskKind::QA: return "qa";
  }
  return "qa";
}

TaskKind parse_task_kind(std::string_view s) {
  if (s == "ground_single") return TaskKind::GroundSingle;
  if (s == "ground_multi") return TaskKind::GroundMulti;
  if (s == "caption") return TaskKind::Caption;
  if (s == "qa") return TaskKind::QA;
  throw DomainError("unknown task kind '" + std::string(s) + "'");
}

void validate_task(const TaskInstance& task) {
  const std::string where = "task '" + task.id + "': ";
  for (const auto& b : task.gt_boxes) {
    if (!b.valid()) throw DomainError(where + "ground-truth box has min > max");
  }
  switch (task.kind) {
    case TaskKind::GroundSingle:
      if (task.gt_boxes.size() != 1) throw DomainError(where + "ground_single needs exactly 1 box");
      break;
    case TaskKind::Caption:
      if (task.gt_boxes.size() != 1) throw DomainError(where + "caption needs exactly 1 box");
      if (task.gt_texts.empty()) throw DomainError(where + "caption needs a reference text");
      break;
    case TaskKind::QA:
      if (task.gt_texts.empty()) throw DomainError(where + "qa needs at least one answer");
      break;
    case TaskKind::GroundMulti:
      break;
  }
}

namespace {

void check_pairing(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DomainError(std::string(what) + ": " + std::to_string(a) + " instances but " +
                      std::to_string(b) + " predictions");
  }
}

using NgramCounts = std::unordered_map<std::string, int>;

NgramCounts ngram_counts(const std::vector<std::string>& toks, int n) {
  NgramCounts counts;
  if (static_cast<int>(toks.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key = toks[i];
    for (int k = 1; k < n; ++k) {
      key += ' ';
      key += toks[i + k];
    }
    ++counts[key];
  }
  return counts;
}

std::size_t closest_ref_length(std::size_t cand_len,
                               const std::vector<std::vector<std::string>>& refs) {
  std::size_t best = 0;
  bool have = false;
  for (const auto& r : refs) {
    const std::size_t len = r.size();
    if (!have) {
      best = len;
      have = true;
      continue;
    }
    const auto d_new = len > cand_len ? len - cand_len : cand_len - len;
    const auto d_old = best > cand_len ? best - cand_len : cand_len - best;
    if (d_new < d_old || (d_new == d_old && len < best)) best = len;
  }
  return best;
}

struct BleuCounts {
  std::vector<double> matches, totals;
  double cand_len = 0, ref_len = 0;
};

void accumulate_bleu(BleuCounts& acc, const std::vector<std::string>& cand,
                     const std::vector<std::vector<std::string>>& refs, int n) {
  for (int k = 1; k <= n; ++k) {
    const NgramCounts c = ngram_counts(cand, k);
    NgramCounts max_ref;
    for (const auto& r : refs) {
      for (const auto& [g, cnt] : ngram_counts(r, k)) {
        auto& m = max_ref[g];
        m = std::max(m, cnt);
      }
    }
    double match = 0, total = 0;
    for (const auto& [g, cnt] : c) {
      total += cnt;
      const auto it = max_ref.find(g);
      if (it != max_ref.end()) match += std::min(cnt, it->second);
    }
    acc.matches[k - 1] += match;
    acc.totals[k - 1] += total;
  }
  acc.cand_len += static_cast<double>(cand.size());
  acc.ref_len += static_cast<double>(closest_ref_length(cand.size(), refs));
}

double brevity_penalty(double c, double r) {
  if (c <= 0.0) return 0.0;
  if (c > r) return 1.0;
  return std::exp(1.0 - r / c);
}

std::vector<std::vector<std::string>> tokenize_all(std::span<const std::string> texts) {
  std::vector<std::vector<std::string>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(tokenize(t));
  return out;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

bool contains_sequence(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

double meteor_single(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  // alignment[i] = matched reference position for candidate word i
  std::vector<int> alignment(cand.size(), -1);
  std::vector<bool> ref_used(ref.size(), false);
  auto align_stage = [&](auto&& key) {
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (alignment[i] >= 0) continue;
      const std::string ck = key(cand[i]);
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (!ref_used[j] && key(ref[j]) == ck) {
          alignment[i] = static_cast<int>(j);
          ref_used[j] = true;
          break;
        }
      }
    }
  };
  align_stage([](const std::string& w) { return w; });
  align_stage([](const std::string& w) { return light_stem(w); });

  double matches = 0;
  int chunks = 0;
  int prev_ref = -2;
  bool in_chunk = false;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (alignment[i] < 0) {
      in_chunk = false;
      continue;
    }
    ++matches;
    if (!in_chunk || alignment[i] != prev_ref + 1) ++chunks;
    in_chunk = true;
    prev_ref = alignment[i];
  }
  if (matches == 0) return 0.0;
  const double p = matches / static_cast<double>(cand.size());
  const double r = matches / static_cast<double>(ref.size());
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(chunks) / matches;
  const double penalty = 0.5 * frag * frag * frag;
  return fmean * (1.0 - penalty);
}

template <typename F>
double corpus_mean(std::span<const std::string> candidates,
                   std::span<const std::vector<std::string>> references, F&& per_item,
                   const char* name) {
  check_pairing(candidates.size(), references.size(), name);
  if (candidates.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) sum += per_item(candidates[i], references[i]);
  return sum / static_cast<double>(candidates.size());
}

}  // namespace

double acc_at_iou(std::span<const TaskInstance> instances, std::span<const Prediction> predictions,
                  double thr) {
  check_pairing(instances.size(), predictions.size(), "acc_at_iou");
  if (instances.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    const auto& pred = predictions[i];
    if (inst.gt_boxes.size() != 1 || pred.boxes.size() != 1) {
      warn("acc_at_iou: instance '" + inst.id + "' does not have exactly one gt and one predicted box");
      continue;
    }
    if (iou_aabb(pred.boxes[0], inst.gt_boxes[0]) > thr) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(instances.size());
}

double instance_f1(std::span<const Aabb> gt, std::span<const Aabb> pred, double thr) {
  if (gt.empty()) return pred.empty() ? 1.0 : 0.0;
  if (pred.empty()) return 0.0;
  std::vector<std::vector<bool>> adj(pred.size(), std::vector<bool>(gt.size()));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < gt.size(); ++j) adj[i][j] = iou_aabb(pred[i], gt[j]) >= thr;
  }
  const double tp = max_matching_size(adj);
  const double fp = static_cast<double>(pred.size()) - tp;
  const double fn = static_cast<double>(gt.size()) - tp;
  return 2.0 * tp / (2.0 * tp + fp + fn);
}

double multi_object_f1(std::span<const TaskInstance> instances,
                       std::span<const Prediction> predictions, double thr) {
  check_pairing(instances.size(), predictions.size(), "multi_object_f1");
  if (instances.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    sum += instance_f1(instances[i].gt_boxes, predictions[i].boxes, thr);
  }
  return sum / static_cast<double>(instances.size());
}

double bleu(std::span<const std::string> candidates,
            std::span<const std::vector<std::string>> references, int n) {
  if (n < 1) throw DomainError("bleu: order must be >= 1");
  check_pairing(candidates.size(), references.size(), "bleu");
  if (candidates.empty()) throw DomainError("bleu: empty corpus");
  BleuCounts acc{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    accumulate_bleu(acc, tokenize(candidates[i]), tokenize_all(references[i]), n);
  }
  double log_sum = 0.0;
  for (int k = 0; k < n; ++k) {
    if (acc.totals[k] == 0.0 || acc.matches[k] == 0.0) return 0.0;
    log_sum += std::log(acc.matches[k] / acc.totals[k]);
  }
  return brevity_penalty(acc.cand_len, acc.ref_len) * std::exp(log_sum / n);
}

double sentence_bleu(const std::string& candidate, std::span<const std::string> references, int n) {
  if (n < 1) throw DomainError("sentence_bleu: order must be >= 1");
  constexpr double eps = 1e-9;
  BleuCounts acc{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  accumulate_bleu(acc, tokenize(candidate), tokenize_all(references), n);
  double log_sum = 0.0;
  for (int k = 0; k < n; ++k) log_sum += std::log((acc.matches[k] + eps) / (acc.totals[k] + eps));
  return std::clamp(brevity_penalty(acc.cand_len, acc.ref_len) * std::exp(log_sum / n), 0.0, 1.0);
}

double rouge_l(const std::string& candidate, std::span<const std::string> references) {
  const auto cand = tokenize(candidate);
  double best = 0.0;
  if (cand.empty()) return 0.0;
  const double beta2 = kRougeBeta * kRougeBeta;
  for (const auto& ref_text : references) {
    const auto ref = tokenize(ref_text);
    if (ref.empty()) continue;
    const double lcs = static_cast<double>(lcs_length(cand, ref));
    if (lcs == 0.0) continue;
    const double p = lcs / static_cast<double>(cand.size());
    const double r = lcs / static_cast<double>(ref.size());
    best = std::max(best, (1.0 + beta2) * r * p / (r + beta2 * p));
  }
  return best;
}

double rouge_l_corpus(std::span<const std::string> candidates,
                      std::span<const std::vector<std::string>> references) {
  return corpus_mean(candidates, references,
                     [](const std::string& c, const std::vector<std::string>& r) { return rouge_l(c, r); },
                     "rouge_l");
}

std::string light_stem(const std::string& word) {
  static const std::pair<std::string_view, std::string_view> rules[] = {
      {"ational", "ate"}, {"fulness", "ful"}, {"iveness", "ive"}, {"ization", "ize"},
      {"ingly", ""},      {"edly", ""},       {"ness", ""},       {"ment", ""},
      {"sses", "ss"},     {"ies", "y"},       {"ing", ""},        {"ed", ""},
      {"ly", ""},         {"es", ""},         {"s", ""}};
  for (const auto& [suffix, repl] : rules) {
    if (word.size() >= suffix.size() + 3 && word.ends_with(suffix)) {
      if (suffix == "s" && word.ends_with("ss")) return word;
      return word.substr(0, word.size() - suffix.size()) + std::string(repl);
    }
  }
  return word;
}

double meteor_lite(const std::string& candidate, std::span<const std::string> references) {
  const auto cand = tokenize(candidate);
  double best = 0.0;
  for (const auto& r : references) best = std::max(best, meteor_single(cand, tokenize(r)));
  return best;
}

double meteor_lite_corpus(std::span<const std::string> candidates,
                          std::span<const std::vector<std::string>> references) {
  return corpus_mean(candidates, references,
                     [](const std::string& c, const std::vector<std::string>& r) { return meteor_lite(c, r); },
                     "meteor_lite");
}

CiderResult cider(std::span<const std::string> candidates,
                  std::span<const std::vector<std::string>> reference_sets) {
  constexpr int kMaxN = 4;
  check_pairing(candidates.size(), reference_sets.size(), "cider");
  CiderResult result;
  if (candidates.empty()) return result;

  std::vector<std::vector<std::vector<std::string>>> refs;
  refs.reserve(reference_sets.size());
  for (const auto& set : reference_sets) refs.push_back(tokenize_all(set));

  // document frequency: number of items whose reference set contains the n-gram
  std::array<std::unordered_map<std::string, double>, kMaxN> df;
  for (const auto& set : refs) {
    for (int n = 1; n <= kMaxN; ++n) {
      std::unordered_map<std::string, bool> seen;
      for (const auto& r : set) {
        for (const auto& [g, cnt] : ngram_counts(r, n)) seen[g] = true;
      }
      for (const auto& [g, flag] : seen) df[n - 1][g] += 1.0;
    }
  }
  const double log_n = std::log(static_cast<double>(refs.size()));

  using TfIdf = std::unordered_map<std::string, double>;
  auto vectorize = [&](const std::vector<std::string>& toks, int n, double& norm) {
    TfIdf vec;
    norm = 0.0;
    for (const auto& [g, cnt] : ngram_counts(toks, n)) {
      const auto it = df[n - 1].find(g);
      const double d = it == df[n - 1].end() ? 1.0 : std::max(1.0, it->second);
      const double w = cnt * (log_n - std::log(d));
      vec[g] = w;
      norm += w * w;
    }
    norm = std::sqrt(norm);
    return vec;
  };

  double total = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto cand = tokenize(candidates[i]);
    double score = 0.0;
    if (!refs[i].empty()) {
      for (int n = 1; n <= kMaxN; ++n) {
        double cn = 0.0;
        const TfIdf cv = vectorize(cand, n, cn);
        double sum_cos = 0.0;
        for (const auto& r : refs[i]) {
          double rn = 0.0;
          const TfIdf rv = vectorize(r, n, rn);
          if (cn == 0.0 || rn == 0.0) continue;
          double dot = 0.0;
          for (const auto& [g, w] : cv) {
            const auto it = rv.find(g);
            if (it != rv.end()) dot += w * it->second;
          }
          sum_cos += dot / (cn * rn);
        }
        score += sum_cos / static_cast<double>(refs[i].size());
      }
      score = score / kMaxN * 10.0;
    }
    result.per_item.push_back(score);
    total += score;
  }
  result.mean = total / static_cast<double>(candidates.size());
  return result;
}

double captioning_at_iou(std::span<const TaskInstance> instances,
                         std::span<const Prediction> predictions, double thr,
                         CaptionMetric metric) {
  check_pairing(instances.size(), predictions.size(), "captioning_at_iou");
  if (instances.empty()) return 0.0;
  std::vector<std::string> cands;
  std::vector<std::vector<std::string>> refs;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    cands.push_back(predictions[i].text.value_or(""));
    refs.push_back(instances[i].gt_texts);
  }
  std::vector<double> raw;
  if (metric == CaptionMetric::Cider) {
    raw = cider(cands, refs).per_item;
  } else {
    for (std::size_t i = 0; i < cands.size(); ++i) raw.push_back(sentence_bleu(cands[i], refs[i], 4));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    const auto& pred = predictions[i];
    if (inst.gt_boxes.empty() || pred.boxes.empty()) continue;
    if (iou_aabb(pred.boxes[0], inst.gt_boxes[0]) < thr) continue;
    sum += raw[i];
  }
  return sum / static_cast<double>(instances.size());
}

int exact_match(std::string_view pred, std::span<const std::string> gt_answers) {
  const std::string p = normalize_answer(pred);
  for (const auto& g : gt_answers) {
    if (normalize_answer(g) == p) return 1;
  }
  return 0;
}

int em_refined(std::string_view pred, std::span<const std::string> gt_answers) {
  if (exact_match(pred, gt_answers)) return 1;
  const auto p = tokenize(normalize_answer(pred));
  for (const auto& g : gt_answers) {
    const auto t = tokenize(normalize_answer(g));
    if (contains_sequence(p, t) || contains_sequence(t, p)) return 1;
  }
  return 0;
}

EvaluationReport evaluate(std::span<const TaskInstance> instances,
                          std::span<const Prediction> predictions) {
  std::map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.id, &p).second) throw DomainError("duplicate prediction id '" + p.id + "'");
  }
  std::map<TaskKind, std::vector<TaskInstance>> groups;
  std::map<TaskKind, std::vector<Prediction>> group_preds;
  std::set<std::string> task_ids;
  for (const auto& inst : instances) {
    validate_task(inst);
    if (!task_ids.insert(inst.id).second) throw DomainError("duplicate task id '" + inst.id + "'");
    groups[inst.kind].push_back(inst);
    const auto it = by_id.find(inst.id);
    Prediction p;
    p.id = inst.id;
    if (it != by_id.end()) {
      p = *it->second;
    } else {
      warn("no prediction for task '" + inst.id + "'");
    }
    group_preds[inst.kind].push_back(std::move(p));
  }

  EvaluationReport report;
  std::map<std::string, InstanceScore> per_instance;
  for (const auto& [kind, insts] : groups) {
    const auto& preds = group_preds[kind];
    auto& scores = report.scores[std::string(to_string(kind))];
    std::vector<std::string> cands;
    std::vector<std::vector<std::string>> refs;
    for (std::size_t i = 0; i < insts.size(); ++i) {
      cands.push_back(preds[i].text.value_or(""));
      refs.push_back(insts[i].gt_texts);
    }
    std::vector<std::map<std::string, double>> item(insts.size());
    switch (kind) {
      case TaskKind::GroundSingle:
        scores["acc@0.25"] = acc_at_iou(insts, preds, 0.25);
        scores["acc@0.5"] = acc_at_iou(insts, preds, 0.5);
        for (std::size_t i = 0; i < insts.size(); ++i) {
          item[i]["iou"] = preds[i].boxes.size() == 1 ? iou_aabb(preds[i].boxes[0], insts[i].gt_boxes[0]) : 0.0;
        }
        break;
      case TaskKind::GroundMulti:
        scores["f1@0.25"] = multi_object_f1(insts, preds, 0.25);
        scores["f1@0.5"] = multi_object_f1(insts, preds, 0.5);
        for (std::size_t i = 0; i < insts.size(); ++i) {
          item[i]["f1@0.25"] = instance_f1(insts[i].gt_boxes, preds[i].boxes, 0.25);
          item[i]["f1@0.5"] = instance_f1(insts[i].gt_boxes, preds[i].boxes, 0.5);
        }
        break;
      case TaskKind::Caption: {
        scores["cider@0.5"] = captioning_at_iou(insts, preds, 0.5, CaptionMetric::Cider);
        scores["bleu4@0.5"] = captioning_at_iou(insts, preds, 0.5, CaptionMetric::Bleu4);
        const auto c = cider(cands, refs);
        for (std::size_t i = 0; i < insts.size(); ++i) {
          item[i]["iou"] = preds[i].boxes.empty() ? 0.0 : iou_aabb(preds[i].boxes[0], insts[i].gt_boxes[0]);
          item[i]["cider"] = c.per_item[i];
          item[i]["bleu4"] = sentence_bleu(cands[i], refs[i], 4);
        }
        break;
      }
      case TaskKind::QA: {
        const auto c = cider(cands, refs);
        scores["cider"] = c.mean;
        scores["bleu4"] = bleu(cands, refs, 4);
        scores["rouge_l"] = rouge_l_corpus(cands, refs);
        scores["meteor"] = meteor_lite_corpus(cands, refs);
        double em = 0, emr = 0;
        for (std::size_t i = 0; i < insts.size(); ++i) {
          item[i]["em"] = exact_match(cands[i], refs[i]);
          item[i]["em_r"] = em_refined(cands[i], refs[i]);
          item[i]["cider"] = c.per_item[i];
          em += item[i]["em"];
          emr += item[i]["em_r"];
        }
        scores["em"] = em / static_cast<double>(insts.size());
        scores["em_r"] = emr / static_cast<double>(insts.size());
        break;
      }
    }
    for (std::size_t i = 0; i < insts.size(); ++i) {
      per_instance[insts[i].id] = InstanceScore{insts[i].id, kind, std::move(item[i])};
    }
  }
  for (const auto& inst : instances) report.instances.push_back(per_instance[inst.id]);
  return report;
}

}  // namespace relscene
