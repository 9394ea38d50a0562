#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <regex>

#include <gtest/gtest.h>

#include "relscene/io.hpp"
#include "relscene/prompt.hpp"
#include "support/oracles.hpp"

using namespace relscene;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

/// Runs the CLI with stderr discarded.
RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + RELSCENE_CLI_PATH + "\" " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return {};
  RunResult r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "relscene_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

const char* kStages[] = {"ingest", "project", "describe", "encode", "fuse", "prompt", "answer", "eval"};

}  // namespace

TEST(Cli, E2eMockTwiceByteIdenticalAndFast) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto a = run_cli("run-e2e-mock --seed 42");
  const auto b = run_cli("run-e2e-mock --seed 42");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ASSERT_EQ(a.exit_code, 0);
  ASSERT_EQ(b.exit_code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_LT(secs, 10.0);
  const auto j = nlohmann::json::parse(a.out);
  EXPECT_EQ(j["scores"]["ground_single"]["acc@0.5"], 1.0);
}

TEST(Cli, StagedRunMatchesE2eAndRerunsAreStable) {
  const fs::path dir = scratch("staged");
  std::map<std::string, std::string> first;
  for (const char* stage : kStages) {
    const auto r = run_cli(std::string(stage) + " --out " + q(dir));
    ASSERT_EQ(r.exit_code, 0) << stage;
  }
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) first[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  for (const char* f : {"scene.json", "projections.json", "descriptions.jsonl", "embeddings/text.d3de",
                        "heads/point.d3de", "tokens.json", "prompts.jsonl", "predictions.jsonl",
                        "results.json"}) {
    EXPECT_TRUE(first.contains(f)) << f;
  }
  // every stage re-run reproduces its files byte for byte
  for (const char* stage : kStages) {
    ASSERT_EQ(run_cli(std::string(stage) + " --out " + q(dir)).exit_code, 0) << stage;
  }
  for (const auto& [name, bytes] : first) EXPECT_EQ(read_file(dir / name), bytes) << name;

  const auto e2e = run_cli("run-e2e-mock");
  EXPECT_EQ(first.at("results.json"), e2e.out);
}

TEST(Cli, EvalWithGroundTruthPredictionsIsPerfect) {
  const fs::path dir = scratch("gt_eval");
  const auto tasks = read_tasks(fs::path(RELSCENE_DATA_DIR) / "toy" / "tasks.jsonl");
  std::vector<Prediction> preds;
  for (const auto& t : tasks) {
    Prediction p;
    p.id = t.id;
    p.boxes = t.gt_boxes;
    if (!t.gt_texts.empty()) p.text = t.gt_texts.front();
    preds.push_back(p);
  }
  write_predictions(dir / "gt.jsonl", preds);
  const auto r = run_cli("eval --out " + q(dir) + " --predictions " + q(dir / "gt.jsonl"));
  ASSERT_EQ(r.exit_code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["scores"]["ground_single"]["acc@0.5"], 1.0);
  EXPECT_EQ(j["scores"]["ground_multi"]["f1@0.5"], 1.0);
  EXPECT_EQ(j["scores"]["qa"]["em"], 1.0);
  EXPECT_EQ(j["scores"]["caption"]["bleu4@0.5"], 1.0);
}

TEST(Cli, IdStyleInjectsNoCategoryNames) {
  const fs::path dir = scratch("style");
  ASSERT_EQ(run_cli("describe --out " + q(dir)).exit_code, 0);
  ASSERT_EQ(run_cli("prompt --style id --out " + q(dir)).exit_code, 0);
  const Scene scene = read_scene(fs::path(RELSCENE_DATA_DIR) / "toy" / "scene.json");
  const auto prompts = read_prompts(dir / "prompts.jsonl");
  ASSERT_FALSE(prompts.empty());
  std::size_t injected = 0;
  for (const auto& p : prompts) {
    for (const auto& d : p.injected_descriptions) {
      ++injected;
      EXPECT_TRUE(relscene::testing::vocabulary_hits(d, scene).empty()) << d;
    }
  }
  EXPECT_GT(injected, 0u);

  ASSERT_EQ(run_cli("prompt --style name --out " + q(dir)).exit_code, 0);
  int hits = 0;
  for (const auto& p : read_prompts(dir / "prompts.jsonl")) {
    for (const auto& d : p.injected_descriptions) hits += static_cast<int>(relscene::testing::vocabulary_hits(d, scene).size());
  }
  EXPECT_GT(hits, 0);

  ASSERT_EQ(run_cli("prompt --no-prompt-inject --out " + q(dir)).exit_code, 0);
  for (const auto& p : read_prompts(dir / "prompts.jsonl")) EXPECT_TRUE(p.injected_descriptions.empty());
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("--help").exit_code, 0);
  EXPECT_EQ(run_cli("").exit_code, 64);
  EXPECT_EQ(run_cli("frobnicate").exit_code, 64);
  EXPECT_EQ(run_cli("describe --style loud").exit_code, 64);
  EXPECT_EQ(run_cli("describe --scene /nonexistent/scene.json").exit_code, 2);
  const fs::path dir = scratch("exit");
  EXPECT_EQ(run_cli("describe --parallelism 0 --out " + q(dir)).exit_code, 2);
  write_file(dir / "bad.jsonl", "{\"id\": 1}\n");
  EXPECT_EQ(run_cli("eval --out " + q(dir) + " --tasks " + q(dir / "bad.jsonl")).exit_code, 2);
  write_file(dir / "dead.conf",
             "endpoint_url = http://127.0.0.1:1/v1/chat/completions\nmodel_name = m\n"
             "max_retries = 0\ntimeout_ms = 500\n");
  EXPECT_EQ(run_cli("describe --out " + q(dir) + " --backend " + q(dir / "dead.conf")).exit_code, 3);
}

TEST(Cli, BundledToyDataIsReproducible) {
  const fs::path dir = scratch("toy");
  const std::string cmd = std::string("\"") + RELSCENE_TOY_TOOL_PATH + "\" " + q(dir) + " 2>/dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  const fs::path toy = fs::path(RELSCENE_DATA_DIR) / "toy";
  for (const char* f : {"scene.json", "scene.points.bin", "tasks.jsonl"}) {
    EXPECT_EQ(read_file(dir / f), read_file(toy / f)) << f;
  }
}
