#include <cmath>
#include <cstring>
#include <functional>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "relscene/backends.hpp"
#include "relscene/config.hpp"
#include "relscene/errors.hpp"
#include "relscene/io.hpp"
#include "support/synthetic.hpp"

using namespace relscene;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "relscene_io_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

EmbeddingFile sample_file(EmbeddingKind kind, int dim, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  EmbeddingFile f;
  f.kind = kind;
  f.dim = static_cast<std::uint32_t>(dim);
  for (int i = 0; i < n; ++i) {
    EmbeddingEntry e;
    e.object_index = static_cast<std::uint32_t>(1 + 2 * i);
    for (int k = 0; k < dim; ++k) e.values.push_back(g(rng));
    f.records.push_back(std::move(e));
  }
  return f;
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(EmbeddingFormat, RoundTripIsBitExact) {
  for (auto kind : {EmbeddingKind::Point3D, EmbeddingKind::Visual2D, EmbeddingKind::Text}) {
    const auto f = sample_file(kind, 17, 5, static_cast<std::uint64_t>(kind));
    const std::string bytes = encode_embedding_file(f);
    EXPECT_EQ(bytes.size(), 15u + 5u * (4u + 17u * 4u));
    EXPECT_EQ(bytes.substr(0, 4), "D3DE");
    const auto back = decode_embedding_file(bytes, "mem");
    EXPECT_EQ(back.kind, kind);
    EXPECT_EQ(back.dim, 17u);
    ASSERT_EQ(back.records.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(back.records[i].object_index, f.records[i].object_index);
      EXPECT_EQ(std::memcmp(back.records[i].values.data(), f.records[i].values.data(), 17 * 4), 0);
    }
    EXPECT_EQ(encode_embedding_file(back), bytes);
  }
}

TEST(EmbeddingFormat, LittleEndianHeader) {
  EmbeddingFile f;
  f.kind = EmbeddingKind::Text;
  f.dim = 2;
  f.records.push_back({258, {1.0f, -2.0f}});
  const std::string b = encode_embedding_file(f);
  const unsigned char want[] = {'D', '3', 'D', 'E', 1, 0, 2, 2, 0, 0, 0, 1, 0, 0, 0,
                                2, 1, 0, 0, 0, 0, 0x80, 0x3f, 0, 0, 0, 0xc0};
  ASSERT_EQ(b.size(), sizeof(want));
  for (std::size_t i = 0; i < sizeof(want); ++i) EXPECT_EQ(static_cast<unsigned char>(b[i]), want[i]) << i;
}

TEST(EmbeddingFormat, RejectsCorruption) {
  const std::string good = encode_embedding_file(sample_file(EmbeddingKind::Text, 4, 3, 1));

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_NE(error_of([&] { decode_embedding_file(bad_magic, "a.d3de"); }).find("magic"),
            std::string::npos);

  std::string bad_version = good;
  bad_version[4] = 9;
  EXPECT_NE(error_of([&] { decode_embedding_file(bad_version, "a.d3de"); }).find("version"),
            std::string::npos);

  std::string bad_kind = good;
  bad_kind[6] = 7;
  EXPECT_NE(error_of([&] { decode_embedding_file(bad_kind, "a.d3de"); }).find("kind"),
            std::string::npos);

  const std::string truncated = good.substr(0, good.size() - 3);
  const std::string msg = error_of([&] { decode_embedding_file(truncated, "a.d3de"); });
  EXPECT_NE(msg.find("a.d3de"), std::string::npos) << msg;
  EXPECT_NE(msg.find("record 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("truncated"), std::string::npos) << msg;

  EXPECT_NE(error_of([&] { decode_embedding_file(good + "x", "a.d3de"); }).find("trailing"),
            std::string::npos);
  EXPECT_FALSE(error_of([&] { decode_embedding_file(good.substr(0, 9), "a.d3de"); }).empty());

  auto nan_file = sample_file(EmbeddingKind::Text, 4, 3, 1);
  nan_file.records[1].values[2] = std::numeric_limits<float>::quiet_NaN();
  const std::string nan_msg =
      error_of([&] { decode_embedding_file(encode_embedding_file(nan_file), "n.d3de"); });
  EXPECT_NE(nan_msg.find("record 1"), std::string::npos) << nan_msg;
  EXPECT_NE(nan_msg.find("values[2]"), std::string::npos) << nan_msg;

  auto dup = sample_file(EmbeddingKind::Text, 4, 3, 1);
  dup.records[2].object_index = dup.records[0].object_index;
  EXPECT_NE(error_of([&] { decode_embedding_file(encode_embedding_file(dup), "d"); }).find("duplicate"),
            std::string::npos);
}

TEST(EmbeddingFormat, EncodeRejectsWrongRecordLength) {
  auto f = sample_file(EmbeddingKind::Text, 4, 2, 1);
  f.records[1].values.pop_back();
  EXPECT_THROW(encode_embedding_file(f), DomainError);
}

TEST(EmbeddingFormat, LoaderRejectsDimensionMismatch) {
  const fs::path dir = scratch("dim");
  write_embedding_file(dir / "t.d3de", sample_file(EmbeddingKind::Text, 8, 2, 3));
  EXPECT_THROW(load_precomputed(dir / "t.d3de", 16), FormatError);
  const auto ok = load_precomputed(dir / "t.d3de", 8, {1, 2, 3});
  EXPECT_EQ(ok.vectors.size(), 2u);
  EXPECT_EQ(ok.missing, (std::vector<int>{2}));
  EXPECT_THROW(read_embedding_file(dir / "absent.d3de"), FormatError);
}

TEST(HeadWeights, RoundTrip) {
  const auto head = ProjectionHead::random(6, 5, 4, 3, 99);
  const auto file = head_to_embedding_file(head);
  EXPECT_EQ(file.kind, EmbeddingKind::HeadWeights);
  EXPECT_EQ(file.head_layout, (std::vector<std::uint32_t>{3, 6, 5, 5, 4}));
  const auto back =
      head_from_embedding_file(decode_embedding_file(encode_embedding_file(file), "h"), "h");
  ASSERT_EQ(back.depth(), 3);
  for (int l = 0; l < 3; ++l) {
    const auto& a = head.layers()[l];
    const auto& b = back.layers()[l];
    ASSERT_EQ(a.weight.rows(), b.weight.rows());
    ASSERT_EQ(a.weight.cols(), b.weight.cols());
    for (int i = 0; i < a.weight.size(); ++i) {
      EXPECT_EQ(static_cast<float>(a.weight.data()[i]), static_cast<float>(b.weight.data()[i]));
    }
    for (int i = 0; i < a.bias.size(); ++i) EXPECT_EQ(static_cast<float>(a.bias[i]), b.bias[i]);
  }
  EXPECT_THROW(head_from_embedding_file(sample_file(EmbeddingKind::Text, 4, 1, 1), "t"),
               FormatError);
}

TEST(SceneFiles, RoundTrip) {
  const fs::path dir = scratch("scene");
  const Scene s = relscene::testing::random_scene(5);
  write_scene(s, dir / "scene.json");
  EXPECT_TRUE(fs::exists(dir / "scene.points.bin"));
  const Scene back = read_scene(dir / "scene.json");
  EXPECT_EQ(back.scene_id, s.scene_id);
  ASSERT_EQ(back.objects.size(), s.objects.size());
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    EXPECT_EQ(back.objects[i].index(), s.objects[i].index());
    EXPECT_EQ(back.objects[i].label(), s.objects[i].label());
    ASSERT_TRUE(std::equal(back.objects[i].points().begin(), back.objects[i].points().end(),
                           s.objects[i].points().begin(), s.objects[i].points().end()));
  }
  ASSERT_EQ(back.views.size(), s.views.size());
  for (std::size_t i = 0; i < s.views.size(); ++i) {
    EXPECT_EQ(back.views[i].view_id, s.views[i].view_id);
    EXPECT_EQ(back.views[i].world_to_camera, s.views[i].world_to_camera);
    EXPECT_EQ(back.views[i].fx, s.views[i].fx);
  }
  // rewriting is byte-stable
  write_scene(back, dir / "again.json");
  EXPECT_EQ(read_file(dir / "again.points.bin"), read_file(dir / "scene.points.bin"));
}

TEST(SceneFiles, ChecksumMismatchIsFormatError) {
  const fs::path dir = scratch("checksum");
  write_scene(relscene::testing::random_scene(6), dir / "scene.json");
  std::string blob = read_file(dir / "scene.points.bin");
  blob[blob.size() / 2] ^= 0x5a;
  write_file(dir / "scene.points.bin", blob);
  const std::string msg = error_of([&] { read_scene(dir / "scene.json"); });
  EXPECT_NE(msg.find("checksum"), std::string::npos) << msg;
  EXPECT_NE(msg.find("scene.points.bin"), std::string::npos) << msg;
}

TEST(SceneFiles, InvalidManifestFieldsAreNamed) {
  const fs::path dir = scratch("manifest");
  write_scene(relscene::testing::random_scene(7), dir / "scene.json");
  auto j = nlohmann::json::parse(read_file(dir / "scene.json"));
  j["views"][0]["fx"] = "wide";
  write_file(dir / "scene.json", j.dump());
  const std::string msg = error_of([&] { read_scene(dir / "scene.json"); });
  EXPECT_NE(msg.find("scene.json"), std::string::npos) << msg;
  EXPECT_NE(msg.find("fx"), std::string::npos) << msg;
}

TEST(Jsonl, DescriptionsPreserveUnknownFields) {
  const std::string text =
      R"({"identifier":"<OBJ001>","mentions":[{"name":"chair","object_index":2}],"object_index":1,"reviewer":"kim",)"
      R"("source_view":"v0","status":"generated","text":"the table is near the chair"})"
      "\n";
  const auto recs = descriptions_from_jsonl(text, "d.jsonl");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs.at(1).extra.at("reviewer"), "kim");
  EXPECT_EQ(recs.at(1).mentions.size(), 1u);
  EXPECT_EQ(descriptions_to_jsonl(recs), text);
}

TEST(Jsonl, TasksAndPredictionsRoundTrip) {
  TaskInstance t;
  t.id = "q1";
  t.kind = TaskKind::QA;
  t.query = "What color is it?";
  t.gt_texts = {"red"};
  t.target_object = 4;
  t.extra["split"] = "val";
  TaskInstance g;
  g.id = "g1";
  g.kind = TaskKind::GroundMulti;
  g.query = "all chairs";
  g.gt_boxes = {Aabb{{0, 0, 0}, {1, 2, 3}}, Aabb{{-1, -1, -1}, {0, 0, 0}}};
  const std::vector<TaskInstance> tasks = {t, g};
  const std::string text = tasks_to_jsonl(tasks);
  const auto back = tasks_from_jsonl(text, "t.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].extra.at("split"), "val");
  EXPECT_EQ(back[0].target_object, 4);
  EXPECT_EQ(back[1].gt_boxes[1].max.z, 0.0);
  EXPECT_EQ(tasks_to_jsonl(back), text);

  Prediction p;
  p.id = "g1";
  p.boxes = g.gt_boxes;
  p.text = "two chairs";
  const std::vector<Prediction> preds = {p};
  const auto pback = predictions_from_jsonl(predictions_to_jsonl(preds), "p.jsonl");
  EXPECT_EQ(predictions_to_jsonl(pback), predictions_to_jsonl(preds));
}

TEST(Jsonl, ErrorsNameFileRecordAndField) {
  const std::string text =
      R"({"id":"a","kind":"qa","query":"q","gt_boxes":[],"gt_texts":["x"]})"
      "\n\n"
      R"({"id":"b","kind":"bogus","query":"q","gt_boxes":[],"gt_texts":["x"]})"
      "\n";
  const std::string msg = error_of([&] { tasks_from_jsonl(text, "tasks.jsonl"); });
  EXPECT_NE(msg.find("tasks.jsonl"), std::string::npos) << msg;
  EXPECT_NE(msg.find("record 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("kind"), std::string::npos) << msg;

  const std::string missing = error_of([&] { tasks_from_jsonl(R"({"kind":"qa"})", "t"); });
  EXPECT_NE(missing.find("field 'id'"), std::string::npos) << missing;

  const std::string broken = error_of([&] { predictions_from_jsonl("{not json\n", "p.jsonl"); });
  EXPECT_NE(broken.find("p.jsonl: record 1: invalid JSON"), std::string::npos) << broken;

  const std::string box = error_of([&] {
    predictions_from_jsonl(R"({"id":"x","boxes":[[1,1,1,0,2,2]]})", "p.jsonl");
  });
  EXPECT_NE(box.find("boxes"), std::string::npos) << box;
}

TEST(Jsonl, PromptsRoundTrip) {
  PromptBundle b;
  b.task_id = "t";
  b.task_kind = "qa";
  b.system_text = "sys";
  b.scene_token_placeholder = "[<OBJ001> <FEAT>]";
  b.referenced_objects = {1, 3};
  b.injected_descriptions = {"<OBJ001> is near <OBJ003>."};
  b.user_text = "where?";
  b.full_text = "everything";
  const std::vector<PromptBundle> v = {b};
  const std::string text = prompts_to_jsonl(v);
  EXPECT_EQ(prompts_to_jsonl(prompts_from_jsonl(text, "p")), text);
}

TEST(Results, StableLayout) {
  EvaluationReport r;
  r.scores["ground_single"]["acc@0.5"] = 1.0;
  r.instances.push_back({"a", TaskKind::GroundSingle, {{"iou", 0.75}}});
  const std::string s = results_to_json(r);
  EXPECT_EQ(s.back(), '\n');
  const auto j = nlohmann::json::parse(s);
  EXPECT_EQ(j["scores"]["ground_single"]["acc@0.5"], 1.0);
  EXPECT_EQ(j["instances"][0]["id"], "a");
}

TEST(KeyValueConfig, Parsing) {
  const auto kv = parse_key_value_text(
      "# comment\n\n model_name = tiny \nquoted = \"  a\\nb \\\"q\\\" \"\nempty =\n", "c.conf");
  EXPECT_EQ(kv.at("model_name"), "tiny");
  EXPECT_EQ(kv.at("quoted"), "  a\nb \"q\" ");
  EXPECT_EQ(kv.at("empty"), "");
  EXPECT_THROW(parse_key_value_text("a = 1\na = 2\n", "c"), FormatError);
  EXPECT_THROW(parse_key_value_text("no equals sign\n", "c"), FormatError);
  EXPECT_TRUE(parse_bool_value("true", "k"));
  EXPECT_FALSE(parse_bool_value("0", "k"));
  EXPECT_THROW(parse_bool_value("maybe", "k"), FormatError);
  EXPECT_EQ(parse_int_value("42", "k"), 42);
  EXPECT_THROW(parse_int_value("4x", "k"), FormatError);
}

TEST(KeyValueConfig, BackendConfig) {
  const fs::path dir = scratch("cfg");
  write_file(dir / "b.conf",
             "endpoint_url = http://127.0.0.1:9/v1/chat/completions\nmodel_name = m\n"
             "max_retries = 1\nauth_token_env_var = RELSCENE_TOKEN\n");
  const auto c = BackendConfig::load(dir / "b.conf");
  EXPECT_EQ(c.model_name, "m");
  EXPECT_EQ(c.max_retries, 1);
  EXPECT_EQ(c.auth_token_env_var, "RELSCENE_TOKEN");
  write_file(dir / "bad.conf", "endpoint_url = http://x\nmodel_name = m\napi_key = secret\n");
  EXPECT_THROW(BackendConfig::load(dir / "bad.conf"), FormatError);
  write_file(dir / "neg.conf", "endpoint_url = http://x\nmodel_name = m\ntimeout_ms = -5\n");
  EXPECT_THROW(BackendConfig::load(dir / "neg.conf"), std::exception);
}
