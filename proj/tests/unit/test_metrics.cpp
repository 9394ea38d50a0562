#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "relscene/assignment.hpp"
#include "relscene/errors.hpp"
#include "relscene/log.hpp"
#include "relscene/metrics.hpp"
#include "relscene/text_norm.hpp"
#include "support/oracles.hpp"

using namespace relscene;
using relscene::testing::brute_force_f1;

namespace {

using Strings = std::vector<std::string>;

Aabb unit_shifted(double dx) { return Aabb{{dx, 0, 0}, {dx + 1, 1, 1}}; }

/// Shift giving IoU `iou` between the unit cube and its x-translate.
double shift_for(double iou) { return (1.0 - iou) / (1.0 + iou); }

TaskInstance ground(const std::string& id, Aabb box) {
  TaskInstance t;
  t.id = id;
  t.kind = TaskKind::GroundSingle;
  t.gt_boxes = {box};
  return t;
}

Prediction boxes(const std::string& id, std::vector<Aabb> b) {
  Prediction p;
  p.id = id;
  p.boxes = std::move(b);
  return p;
}

std::vector<Aabb> random_set(std::mt19937_64& rng, int n, const std::vector<Aabb>& near) {
  std::uniform_real_distribution<double> pos(0.0, 3.0), ext(0.3, 1.2), jit(-0.4, 0.4);
  std::bernoulli_distribution copy(0.6);
  std::vector<Aabb> out;
  for (int i = 0; i < n; ++i) {
    if (!near.empty() && copy(rng)) {
      const Aabb& b = near[std::uniform_int_distribution<std::size_t>(0, near.size() - 1)(rng)];
      out.push_back(b.translated({jit(rng), jit(rng), jit(rng)}));
    } else {
      const Vec3 lo{pos(rng), pos(rng), pos(rng)};
      out.push_back({lo, {lo.x + ext(rng), lo.y + ext(rng), lo.z + ext(rng)}});
    }
  }
  return out;
}

}  // namespace

TEST(Acc, Examples) {
  std::vector<TaskInstance> inst;
  std::vector<Prediction> same, disjoint, mixed;
  const double ious[] = {0.6, 0.3, 0.3, 0.9};
  for (int i = 0; i < 4; ++i) {
    const std::string id = "t" + std::to_string(i);
    inst.push_back(ground(id, unit_shifted(0)));
    same.push_back(boxes(id, {unit_shifted(0)}));
    disjoint.push_back(boxes(id, {unit_shifted(5)}));
    mixed.push_back(boxes(id, {unit_shifted(shift_for(ious[i]))}));
    ASSERT_NEAR(iou_aabb(mixed.back().boxes[0], inst.back().gt_boxes[0]), ious[i], 1e-12);
  }
  EXPECT_EQ(acc_at_iou(inst, same, 0.5), 1.0);
  EXPECT_EQ(acc_at_iou(inst, disjoint, 0.5), 0.0);
  EXPECT_EQ(acc_at_iou(inst, mixed, 0.5), 0.5);
  EXPECT_EQ(acc_at_iou(inst, mixed, 0.25), 1.0);

  set_warnings_enabled(false);
  mixed[3].boxes.push_back(unit_shifted(0));  // wrong arity scores 0
  EXPECT_EQ(acc_at_iou(inst, mixed, 0.5), 0.25);
  set_warnings_enabled(true);
}

TEST(Acc, StrictThreshold) {
  std::vector<TaskInstance> inst = {ground("a", unit_shifted(0))};
  std::vector<Prediction> pred = {boxes("a", {unit_shifted(shift_for(0.5))})};
  ASSERT_NEAR(iou_aabb(pred[0].boxes[0], inst[0].gt_boxes[0]), 0.5, 1e-15);
  // IoU exactly at the threshold is not a hit for Acc but is a match for F1
  const Aabb half_a{{0, 0, 0}, {2, 1, 1}}, half_b{{0, 0, 0}, {1, 1, 1}};
  ASSERT_EQ(iou_aabb(half_a, half_b), 0.5);
  inst[0].gt_boxes = {half_a};
  pred[0].boxes = {half_b};
  EXPECT_EQ(acc_at_iou(inst, pred, 0.5), 0.0);
  EXPECT_EQ(instance_f1(inst[0].gt_boxes, pred[0].boxes, 0.5), 1.0);
}

TEST(F1, Examples) {
  EXPECT_EQ(instance_f1({}, {}, 0.5), 1.0);
  std::vector<Aabb> a = {unit_shifted(0)};
  EXPECT_EQ(instance_f1({}, a, 0.5), 0.0);
  EXPECT_EQ(instance_f1(a, a, 0.5), 1.0);
  EXPECT_EQ(instance_f1(a, {}, 0.5), 0.0);
  std::vector<Aabb> gt = {unit_shifted(0), unit_shifted(10)};
  std::vector<Aabb> pred = {unit_shifted(0.05), unit_shifted(20), unit_shifted(30)};
  EXPECT_NEAR(instance_f1(gt, pred, 0.5), 0.4, 1e-12);
  EXPECT_NEAR(brute_force_f1(gt, pred, 0.5), 0.4, 1e-12);
}

TEST(F1, GreedyWouldUndercount) {
  // pred 0 overlaps both gts; greedy pairing it with gt 0 strands pred 1
  const std::vector<Aabb> gt = {Aabb{{0, 0, 0}, {1, 1, 1}}, Aabb{{0.3, 0, 0}, {1.3, 1, 1}}};
  const std::vector<Aabb> pred = {Aabb{{0.1, 0, 0}, {1.1, 1, 1}}, Aabb{{-0.05, 0, 0}, {0.95, 1, 1}}};
  EXPECT_EQ(brute_force_f1(gt, pred, 0.5), 1.0);
  EXPECT_EQ(instance_f1(gt, pred, 0.5), 1.0);
}

TEST(F1, MatchesBruteForce) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> size(0, 5);
  for (int t = 0; t < 500; ++t) {
    const auto gt = random_set(rng, size(rng), {});
    const auto pred = random_set(rng, size(rng), gt);
    for (double thr : {0.25, 0.5}) {
      ASSERT_NEAR(instance_f1(gt, pred, thr), brute_force_f1(gt, pred, thr), 1e-12);
    }
  }
}

TEST(Hungarian, MatchesPermutationSearch) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int t = 0; t < 200; ++t) {
    const int rows = 1 + t % 5, cols = 1 + (t / 5) % 5;
    std::vector<std::vector<double>> c(rows, std::vector<double>(cols));
    for (auto& r : c) for (auto& x : r) x = std::floor(u(rng));
    const auto a = hungarian_assignment(c);
    ASSERT_EQ(a.size(), static_cast<std::size_t>(rows));
    double got = 0.0;
    std::vector<bool> used(cols, false);
    int assigned = 0;
    for (int r = 0; r < rows; ++r) {
      if (a[r] < 0) continue;
      ASSERT_FALSE(used[a[r]]);
      used[a[r]] = true;
      got += c[r][a[r]];
      ++assigned;
    }
    ASSERT_EQ(assigned, std::min(rows, cols));
    // brute force: permute the larger side
    double best = 1e18;
    const int n = std::max(rows, cols);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      double s = 0.0;
      for (int r = 0; r < rows; ++r) {
        if (perm[r] < cols) s += c[r][perm[r]];
      }
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    ASSERT_NEAR(got, best, 1e-9);
  }
}

TEST(Bleu, HandCases) {
  const Strings c1 = {"the cat sat"};
  const std::vector<Strings> r1 = {{"the cat sat down"}};
  EXPECT_NEAR(bleu(c1, r1, 1), std::exp(-1.0 / 3.0), 1e-9);

  const Strings c2 = {"a red chair stands by the door"};
  const std::vector<Strings> r2 = {{"a red chair stands by the door"}};
  EXPECT_NEAR(bleu(c2, r2, 4), 1.0, 1e-12);

  const Strings c3 = {"green apples"};
  const std::vector<Strings> r3 = {{"a red chair"}};
  EXPECT_EQ(bleu(c3, r3, 4), 0.0);
  EXPECT_EQ(bleu(Strings{""}, r3, 1), 0.0);
  EXPECT_THROW(bleu(Strings{}, std::vector<Strings>{}, 4), DomainError);
  EXPECT_THROW(bleu(c1, r1, 0), DomainError);
}

TEST(Bleu, ClosestReferenceLength) {
  // refs of length 2 and 6 around a candidate of length 4: tie, shorter wins -> BP 1
  const Strings c = {"a b c d"};
  const std::vector<Strings> r = {{"a b", "a b c d e f"}};
  EXPECT_NEAR(bleu(c, r, 1), 1.0, 1e-12);
}

TEST(Bleu, CandidateAmongReferencesScoresOne) {
  std::mt19937_64 rng(8);
  const Strings vocab = {"the", "red", "chair", "is", "near", "a", "table", "lamp", "on", "left"};
  std::uniform_int_distribution<std::size_t> w(0, vocab.size() - 1);
  std::uniform_int_distribution<int> len(4, 12);
  for (int t = 0; t < 100; ++t) {
    auto sentence = [&] {
      std::string s;
      for (int i = 0, n = len(rng); i < n; ++i) s += (i ? " " : "") + vocab[w(rng)];
      return s;
    };
    const std::string cand = sentence();
    const std::vector<Strings> refs = {{sentence(), cand, sentence()}};
    ASSERT_NEAR(bleu(Strings{cand}, refs, 4), 1.0, 1e-12);
  }
}

TEST(SentenceBleu, SmoothedAndBounded) {
  EXPECT_NEAR(sentence_bleu("a red chair by the door", Strings{"a red chair by the door"}), 1.0, 1e-9);
  const double partial = sentence_bleu("a red chair", Strings{"a red chair by the door"});
  EXPECT_GT(partial, 0.0);
  EXPECT_LT(partial, 1.0);
}

TEST(Rouge, HandCase) {
  const double p = 1.0, r = 0.75, b2 = 1.2 * 1.2;
  EXPECT_NEAR(rouge_l("the cat sat", Strings{"the cat sat down"}), (1 + b2) * p * r / (r + b2 * p),
              1e-12);
  EXPECT_EQ(rouge_l("x y", Strings{"a b"}), 0.0);
  EXPECT_NEAR(rouge_l("a b c", Strings{"z", "a b c"}), 1.0, 1e-12);
}

TEST(Meteor, HandCases) {
  EXPECT_NEAR(meteor_lite("the cat sat", Strings{"the cat sat"}), 1.0 - 0.5 / 27.0, 1e-12);
  EXPECT_NEAR(meteor_lite("cats jumped", Strings{"cat jumps"}), 1.0 - 0.5 / 8.0, 1e-12);
  // two chunks of one word each: penalty 0.5 (2/2)^3
  const double p = 1.0, r = 1.0;
  EXPECT_NEAR(meteor_lite("sat cat", Strings{"cat sat"}), 10 * p * r / (r + 9 * p) * 0.5, 1e-12);
  EXPECT_EQ(meteor_lite("", Strings{"cat"}), 0.0);
  EXPECT_EQ(light_stem("jumped"), "jump");
  EXPECT_EQ(light_stem("glass"), "glass");
}

TEST(Cider, IdenticalItemScoresTen) {
  const Strings cands = {"a wooden table near the window", "two chairs"};
  const std::vector<Strings> refs = {{"a wooden table near the window"}, {"one red lamp"}};
  const auto c = cider(cands, refs);
  EXPECT_NEAR(c.per_item[0], 10.0, 1e-9);
}

TEST(Cider, NoOverlapIsZero) {
  const Strings cands = {"green apples", "blue sky"};
  const std::vector<Strings> refs = {{"a red chair"}, {"the lamp"}};
  EXPECT_EQ(cider(cands, refs).mean, 0.0);
}

TEST(Cider, ToyCorpusMatchesOracle) {
  const Strings cands = {"a red chair", "the blue sofa"};
  const std::vector<Strings> refs = {{"a red chair by the door"}, {"a blue sofa"}};
  const auto c = cider(cands, refs);
  const auto want = relscene::testing::cider_oracle(cands, refs);
  ASSERT_EQ(c.per_item.size(), 2u);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(c.per_item[i], want[i], 1e-9);
  EXPECT_NEAR(c.mean, (want[0] + want[1]) / 2, 1e-9);
  EXPECT_GT(c.mean, 0.0);
}

TEST(Cider, RandomCorporaMatchOracleAndStayInRange) {
  std::mt19937_64 rng(21);
  const Strings vocab = {"the", "red", "chair", "is", "near", "a", "table", "lamp", "on", "left"};
  std::uniform_int_distribution<std::size_t> w(0, vocab.size() - 1);
  std::uniform_int_distribution<int> len(1, 9), nref(1, 3), items(2, 5);
  auto sentence = [&] {
    std::string s;
    for (int i = 0, n = len(rng); i < n; ++i) s += (i ? " " : "") + vocab[w(rng)];
    return s;
  };
  for (int t = 0; t < 50; ++t) {
    Strings cands;
    std::vector<Strings> refs;
    for (int i = 0, n = items(rng); i < n; ++i) {
      cands.push_back(sentence());
      refs.emplace_back();
      for (int k = 0, m = nref(rng); k < m; ++k) refs.back().push_back(sentence());
    }
    const auto c = cider(cands, refs);
    const auto want = relscene::testing::cider_oracle(cands, refs);
    for (std::size_t i = 0; i < cands.size(); ++i) {
      ASSERT_NEAR(c.per_item[i], want[i], 1e-9);
      ASSERT_GE(c.per_item[i], -1e-12);
      ASSERT_LE(c.per_item[i], 10.0 + 1e-9);
    }
  }
}

TEST(TextMetrics, CaseAndWhitespaceInvariant) {
  const Strings cands = {"A Red chair  by the DOOR ", "the blue sofa"};
  const Strings lower = {"a red chair by the door", "the blue sofa"};
  const std::vector<Strings> refs = {{"  a red CHAIR near the door"}, {"A blue sofa"}};
  const std::vector<Strings> refs_lower = {{"a red chair near the door"}, {"a blue sofa"}};
  EXPECT_EQ(bleu(cands, refs, 4), bleu(lower, refs_lower, 4));
  EXPECT_EQ(cider(cands, refs).mean, cider(lower, refs_lower).mean);
  EXPECT_EQ(rouge_l_corpus(cands, refs), rouge_l_corpus(lower, refs_lower));
  EXPECT_EQ(meteor_lite_corpus(cands, refs), meteor_lite_corpus(lower, refs_lower));
}

TEST(ExactMatch, TruthTable) {
  EXPECT_EQ(exact_match("brown", Strings{"brown"}), 1);
  EXPECT_EQ(em_refined("brown", Strings{"brown"}), 1);
  EXPECT_EQ(exact_match("the brown chair", Strings{"brown chair"}), 0);
  EXPECT_EQ(em_refined("the brown chair", Strings{"brown chair"}), 1);
  EXPECT_EQ(exact_match("red", Strings{"blue"}), 0);
  EXPECT_EQ(em_refined("red", Strings{"blue"}), 0);
  EXPECT_EQ(exact_match("Brown.", Strings{"brown"}), 1);
  EXPECT_EQ(em_refined("chair", Strings{"the brown chair"}), 1);
  EXPECT_EQ(em_refined("air", Strings{"chair"}), 0);  // token containment, not substring
}

TEST(CaptionGate, PerfectBoxesEqualRawMetric) {
  std::vector<TaskInstance> inst;
  std::vector<Prediction> pred;
  const Strings texts = {"a red chair by the door", "the blue sofa under the window",
                         "a lamp on the left"};
  const Strings gts = {"a red chair near the door", "a blue sofa under a window",
                       "a tall lamp on the left side"};
  std::vector<Strings> refs;
  for (int i = 0; i < 3; ++i) {
    TaskInstance t;
    t.id = "c" + std::to_string(i);
    t.kind = TaskKind::Caption;
    t.gt_boxes = {unit_shifted(3.0 * i)};
    t.gt_texts = {gts[i]};
    inst.push_back(t);
    refs.push_back(t.gt_texts);
    Prediction p = boxes(t.id, {unit_shifted(3.0 * i)});
    p.text = texts[i];
    pred.push_back(p);
  }
  EXPECT_NEAR(captioning_at_iou(inst, pred, 0.5, CaptionMetric::Cider), cider(texts, refs).mean,
              1e-12);
  double sb = 0.0;
  for (int i = 0; i < 3; ++i) sb += sentence_bleu(texts[i], refs[i]);
  EXPECT_NEAR(captioning_at_iou(inst, pred, 0.5, CaptionMetric::Bleu4), sb / 3, 1e-12);

  // a missed box zeroes that item but keeps the corpus idf
  const double item0 = cider(texts, refs).per_item[0];
  pred[0].boxes = {unit_shifted(50)};
  EXPECT_NEAR(captioning_at_iou(inst, pred, 0.5, CaptionMetric::Cider),
              cider(texts, refs).mean - item0 / 3, 1e-12);
}

TEST(Evaluate, PairsById) {
  std::vector<TaskInstance> inst = {ground("a", unit_shifted(0)), ground("b", unit_shifted(5))};
  std::vector<Prediction> pred = {boxes("b", {unit_shifted(5)}), boxes("a", {unit_shifted(0)})};
  const auto r = evaluate(inst, pred);
  EXPECT_EQ(r.scores.at("ground_single").at("acc@0.5"), 1.0);
  ASSERT_EQ(r.instances.size(), 2u);
  EXPECT_EQ(r.instances[0].id, "a");

  set_warnings_enabled(false);
  const auto partial = evaluate(inst, std::vector<Prediction>{pred[0]});
  set_warnings_enabled(true);
  EXPECT_EQ(partial.scores.at("ground_single").at("acc@0.5"), 0.5);

  pred.push_back(pred[0]);
  EXPECT_THROW(evaluate(inst, pred), DomainError);
  inst.push_back(inst[0]);
  EXPECT_THROW(evaluate(inst, std::vector<Prediction>{}), DomainError);
}

TEST(Evaluate, ArityValidation) {
  TaskInstance t = ground("x", unit_shifted(0));
  t.gt_boxes.clear();
  EXPECT_THROW(validate_task(t), DomainError);
  t.kind = TaskKind::QA;
  EXPECT_THROW(validate_task(t), DomainError);
  t.gt_texts = {"yes"};
  EXPECT_NO_THROW(validate_task(t));
  t.kind = TaskKind::GroundMulti;
  EXPECT_NO_THROW(validate_task(t));
}

TEST(TextNorm, TokenizeAndNormalize) {
  EXPECT_EQ(tokenize("The cat, (sat)!  Down."), (Strings{"the", "cat", "sat", "down"}));
  EXPECT_EQ(normalize_answer("  The brown-chair!! "), "the brownchair");
}

TEST(Ranges, GroundingAndEmStayInUnitInterval) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> size(0, 4);
  const Strings answers = {"red", "the red chair", "blue", "", "a chair"};
  std::uniform_int_distribution<std::size_t> pick(0, answers.size() - 1);
  for (int t = 0; t < 200; ++t) {
    std::vector<TaskInstance> single, multi;
    std::vector<Prediction> sp, mp;
    for (int i = 0; i < 5; ++i) {
      const std::string id = std::to_string(i);
      const auto gt = random_set(rng, 1, {});
      single.push_back(ground(id, gt[0]));
      sp.push_back(boxes(id, random_set(rng, size(rng), gt)));
      TaskInstance m;
      m.id = id;
      m.kind = TaskKind::GroundMulti;
      m.gt_boxes = random_set(rng, size(rng), {});
      multi.push_back(m);
      mp.push_back(boxes(id, random_set(rng, size(rng), m.gt_boxes)));
    }
    set_warnings_enabled(false);
    const double acc = acc_at_iou(single, sp, 0.25);
    set_warnings_enabled(true);
    const double f1 = multi_object_f1(multi, mp, 0.25);
    ASSERT_GE(acc, 0.0);
    ASSERT_LE(acc, 1.0);
    ASSERT_GE(f1, 0.0);
    ASSERT_LE(f1, 1.0);
    const Strings gt = {answers[pick(rng)]};
    const int em = exact_match(answers[pick(rng)], gt);
    ASSERT_TRUE(em == 0 || em == 1);
  }
}
