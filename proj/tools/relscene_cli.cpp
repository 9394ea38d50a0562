#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relscene/backends.hpp"
#include "relscene/errors.hpp"
#include "relscene/features.hpp"
#include "relscene/io.hpp"
#include "relscene/log.hpp"
#include "relscene/pipeline.hpp"
#include "relscene/projection.hpp"
#include "relscene/text_encoding.hpp"

namespace fs = std::filesystem;
using namespace relscene;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitBackend = 3;
constexpr int kExitUsage = 64;

struct RunConfig {
  std::string scene;
  std::string views;
  std::string tasks;
  std::string predictions;
  std::string out = "relscene_out";
  std::string style = "id";
  std::string backend = "mock";
  std::string prompt_template;
  bool no_embed_fusion = false;
  bool no_prompt_inject = false;
  bool no_fallback = false;
  double central_fraction = 0.5;
  int min_visible = 50;
  int parallelism = 4;
  std::uint64_t seed = 42;
  bool out_given = false;
};

fs::path toy_dir() { return fs::path(RELSCENE_DATA_DIR) / "toy"; }

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) {
    throw DomainError(std::string(what) + " not found: " + p.string());
  }
}

class Session {
 public:
  explicit Session(RunConfig cfg) : cfg_(std::move(cfg)), out_(cfg_.out) {
    options_.policy.central_fraction = cfg_.central_fraction;
    options_.policy.min_visible = cfg_.min_visible;
    options_.coverage.fallback = !cfg_.no_fallback;
    options_.style = parse_reference_style(cfg_.style);
    options_.flags.embedding_fusion = !cfg_.no_embed_fusion;
    options_.flags.prompt_injection = !cfg_.no_prompt_inject;
    if (cfg_.parallelism < 1) throw DomainError("--parallelism must be at least 1");
    options_.parallelism = cfg_.parallelism;
    options_.seed = cfg_.seed;
    if (!cfg_.prompt_template.empty()) {
      require_file(cfg_.prompt_template, "prompt template");
      options_.prompt_template = PromptTemplate::load(cfg_.prompt_template);
    }
    if (cfg_.backend != "mock") {
      require_file(cfg_.backend, "backend config");
      backend_config_ = BackendConfig::load(cfg_.backend);
      options_.parallelism = backend_config_->request_parallelism;
    }
  }

  const PipelineOptions& options() const { return options_; }
  const fs::path& out() const { return out_; }
  bool mock() const { return !backend_config_; }
  const BackendConfig& backend_config() const { return *backend_config_; }

  /// --scene, else the ingested copy in --out, else the bundled toy scene.
  const Scene& scene() {
    if (!scene_) {
      fs::path p = cfg_.scene;
      if (p.empty()) p = fs::is_regular_file(out_ / "scene.json") ? out_ / "scene.json"
                                                                    : toy_dir() / "scene.json";
      require_file(p, "scene manifest");
      Scene s = read_scene(p);
      if (!cfg_.views.empty()) {
        require_file(cfg_.views, "views file");
        s.views = read_views(cfg_.views);
        validate_scene(s);
      }
      scene_ = std::move(s);
    }
    return *scene_;
  }

  std::vector<TaskInstance> tasks() const {
    const fs::path p = cfg_.tasks.empty() ? toy_dir() / "tasks.jsonl" : fs::path(cfg_.tasks);
    require_file(p, "tasks file");
    return read_tasks(p);
  }

  DescriptionMap descriptions() const {
    const fs::path p = out_ / "descriptions.jsonl";
    require_file(p, "descriptions (run `describe` first)");
    return read_descriptions(p);
  }

  fs::path predictions_path() const {
    return cfg_.predictions.empty() ? out_ / "predictions.jsonl" : fs::path(cfg_.predictions);
  }

 private:
  RunConfig cfg_;
  fs::path out_;
  PipelineOptions options_;
  std::optional<BackendConfig> backend_config_;
  std::optional<Scene> scene_;
};

const char* kEmbeddingFiles[3] = {"point.d3de", "visual.d3de", "text.d3de"};

std::vector<int> scene_indices(const Scene& scene) {
  std::vector<int> out;
  for (const auto& o : scene.objects) out.push_back(o.index());
  return out;
}

int cmd_ingest(Session& s) {
  const Scene& scene = s.scene();
  write_scene(scene, s.out() / "scene.json");
  std::printf("%s: %zu objects, %zu views\n", scene.scene_id.c_str(), scene.objects.size(),
              scene.views.size());
  return 0;
}

int cmd_project(Session& s) {
  const Scene& scene = s.scene();
  const auto table = project_scene(scene, s.options().parallelism);
  write_file(s.out() / "projections.json", projections_to_json(scene, table, s.options().policy));
  return 0;
}

int cmd_describe(Session& s) {
  const Scene& scene = s.scene();
  std::unique_ptr<DescriptionBackend> backend;
  if (s.mock()) {
    backend = std::make_unique<MockDescriptionBackend>(scene);
  } else {
    backend = std::make_unique<HttpDescriptionBackend>(scene, s.backend_config());
  }
  const CoverageReport report = describe_scene(scene, *backend, s.options());
  write_descriptions(s.out() / "descriptions.jsonl", report.records);
  std::printf("generated %zu, fallback %zu, missing %zu\n", report.generated.size(),
              report.fallback.size(), report.missing.size());
  if (!s.mock() && report.generated.empty() && report.fallback.empty() &&
      !report.missing.empty()) {
    throw BackendError("every description request failed");
  }
  return 0;
}

int cmd_encode(Session& s) {
  const Scene& scene = s.scene();
  const auto emb = mock_scene_embeddings(scene, s.descriptions(), s.options().fusion,
                                         s.options().seed);
  const std::map<int, std::vector<float>>* tables[3] = {&emb.point, &emb.visual, &emb.text};
  const EmbeddingKind kinds[3] = {EmbeddingKind::Point3D, EmbeddingKind::Visual2D,
                                  EmbeddingKind::Text};
  const int dims[3] = {s.options().fusion.point_dim, s.options().fusion.visual_dim,
                       s.options().fusion.text_dim};
  for (int m = 0; m < 3; ++m) {
    std::vector<EmbeddingRecord> records;
    for (const auto& [idx, v] : *tables[m]) records.push_back({idx, kinds[m], v});
    write_embedding_file(s.out() / "embeddings" / kEmbeddingFiles[m],
                         make_embedding_file(kinds[m], dims[m], records));
  }
  return 0;
}

int cmd_fuse(Session& s) {
  const Scene& scene = s.scene();
  const FusionConfig& fc = s.options().fusion;
  const auto indices = scene_indices(scene);
  const int dims[3] = {fc.point_dim, fc.visual_dim, fc.text_dim};
  SceneEmbeddings emb;
  std::map<int, std::vector<float>>* tables[3] = {&emb.point, &emb.visual, &emb.text};
  for (int m = 0; m < 3; ++m) {
    const fs::path p = s.out() / "embeddings" / kEmbeddingFiles[m];
    require_file(p, "embedding file (run `encode` first)");
    *tables[m] = load_precomputed(p, dims[m], indices).vectors;
  }
  const ModalityHeads heads = ModalityHeads::random(fc, s.options().seed);
  const IdentifierEmbeddings ids(fc.token_dim, s.options().seed);
  const auto blocks = fuse_scene(scene, emb, heads, ids, fc);
  const bool with_text = s.options().flags.embedding_fusion;
  const SceneTokens tokens = serialize_scene_tokens(scene, blocks, with_text);
  write_embedding_file(s.out() / "heads" / "point.d3de", head_to_embedding_file(heads.point));
  write_embedding_file(s.out() / "heads" / "visual.d3de", head_to_embedding_file(heads.visual));
  write_embedding_file(s.out() / "heads" / "text.d3de", head_to_embedding_file(heads.text));
  write_file(s.out() / "tokens.json", tokens_to_json(scene, tokens, with_text));
  return 0;
}

int cmd_prompt(Session& s) {
  const Scene& scene = s.scene();
  const auto tasks = s.tasks();
  const auto prompts = build_task_prompts(scene, nullptr, s.descriptions(), tasks, s.options());
  std::vector<PromptBundle> bundles;
  for (const auto& p : prompts) bundles.push_back(p.bundle);
  write_prompts(s.out() / "prompts.jsonl", bundles);
  return 0;
}

int cmd_answer(Session& s) {
  const Scene& scene = s.scene();
  const auto tasks = s.tasks();
  const fs::path pp = s.out() / "prompts.jsonl";
  require_file(pp, "prompts (run `prompt` first)");
  const auto prompts = read_prompts(pp);
  std::map<std::string, const TaskInstance*> by_id;
  for (const auto& t : tasks) by_id[t.id] = &t;

  DescriptionMap descriptions;
  std::unique_ptr<AnswerBackend> backend;
  if (s.mock()) {
    descriptions = s.descriptions();
    backend = std::make_unique<MockAnswerBackend>(descriptions);
  } else {
    backend = std::make_unique<HttpAnswerBackend>(s.backend_config(),
                                                  s.options().prompt_template);
  }
  std::vector<Prediction> predictions;
  for (const auto& bundle : prompts) {
    const auto it = by_id.find(bundle.task_id);
    if (it == by_id.end()) {
      throw DomainError("prompt for unknown task '" + bundle.task_id + "'");
    }
    predictions.push_back(prediction_from_answer(scene, *it->second, backend->answer(bundle)));
  }
  write_predictions(s.predictions_path(), predictions);
  return 0;
}

int cmd_eval(Session& s) {
  const auto tasks = s.tasks();
  const fs::path pp = s.predictions_path();
  require_file(pp, "predictions file");
  const auto report = evaluate(tasks, read_predictions(pp));
  const std::string json = results_to_json(report);
  write_file(s.out() / "results.json", json);
  std::fwrite(json.data(), 1, json.size(), stdout);
  return 0;
}

int cmd_e2e(Session& s, bool out_given) {
  const auto tasks = s.tasks();
  const E2eResult r = run_e2e_mock(s.scene(), tasks, s.options());
  const std::string json = results_to_json(r.report);
  if (out_given) {
    write_descriptions(s.out() / "descriptions.jsonl", r.coverage.records);
    write_prompts(s.out() / "prompts.jsonl", r.prompts);
    write_predictions(s.out() / "predictions.jsonl", r.predictions);
    write_file(s.out() / "results.json", json);
  }
  std::fwrite(json.data(), 1, json.size(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object-centric 3D scene-language pipeline"};
  app.require_subcommand(1);
  RunConfig cfg;

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"ingest", "validate a scene (and optional views) and copy it into --out"},
      {"project", "project objects into every view; writes projections.json"},
      {"describe", "generate relational descriptions; writes descriptions.jsonl"},
      {"encode", "embed objects and descriptions; writes embeddings/*.d3de"},
      {"fuse", "project embeddings into token blocks; writes tokens.json, heads/*.d3de"},
      {"prompt", "assemble task prompts; writes prompts.jsonl"},
      {"answer", "query the language model; writes predictions.jsonl"},
      {"eval", "score predictions against tasks; writes results.json"},
      {"run-e2e-mock", "all stages with mock backends; prints the results JSON"},
  };
  std::vector<CLI::App*> commands;
  for (const auto& sub : subs) {
    CLI::App* c = app.add_subcommand(sub.name, sub.help);
    c->add_option("--scene", cfg.scene, "scene manifest (default: ingested or bundled toy scene)");
    c->add_option("--views", cfg.views, "views JSON replacing the scene's views");
    c->add_option("--tasks", cfg.tasks, "tasks JSONL (default: bundled toy tasks)");
    c->add_option("--predictions", cfg.predictions, "predictions JSONL (default: <out>/predictions.jsonl)");
    c->add_option("--out", cfg.out, "stage directory")->default_str("relscene_out");
    c->add_option("--style", cfg.style, "reference style in injected text")
        ->check(CLI::IsMember({"name", "name-id", "id"}))
        ->default_str("id");
    c->add_flag("--no-embed-fusion", cfg.no_embed_fusion, "zero the description token slot");
    c->add_flag("--no-prompt-inject", cfg.no_prompt_inject, "leave descriptions out of prompts");
    c->add_flag("--no-fallback", cfg.no_fallback, "do not describe never-central objects");
    c->add_option("--central-fraction", cfg.central_fraction, "central region fraction")
        ->check(CLI::Range(0.0, 1.0));
    c->add_option("--min-visible", cfg.min_visible, "minimum visible points of a key object")
        ->check(CLI::NonNegativeNumber);
    c->add_option("--backend", cfg.backend, "'mock' or a backend config file")->default_str("mock");
    c->add_option("--prompt-template", cfg.prompt_template, "dialogue template file");
    c->add_option("--parallelism", cfg.parallelism, "worker threads")->default_str("4");
    c->add_option("--seed", cfg.seed, "seed for mock encoders and heads")->default_str("42");
    commands.push_back(c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  const bool out_given = chosen->count("--out") > 0;
  try {
    Session s(cfg);
    if (name == "ingest") return cmd_ingest(s);
    if (name == "project") return cmd_project(s);
    if (name == "describe") return cmd_describe(s);
    if (name == "encode") return cmd_encode(s);
    if (name == "fuse") return cmd_fuse(s);
    if (name == "prompt") return cmd_prompt(s);
    if (name == "answer") return cmd_answer(s);
    if (name == "eval") return cmd_eval(s);
    return cmd_e2e(s, out_given);
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
