// more3d command-line front end: data generation, training, evaluation,
// inference, and mask export over the scene/QA pipeline.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "more3d/ablation.hpp"
#include "more3d/checkpoint.hpp"
#include "more3d/classes.hpp"
#include "more3d/errors.hpp"
#include "more3d/evaluate.hpp"
#include "more3d/gen_client.hpp"
#include "more3d/metrics.hpp"
#include "more3d/model.hpp"
#include "more3d/ply.hpp"
#include "more3d/qa.hpp"
#include "more3d/scene_gen.hpp"
#include "more3d/templates.hpp"
#include "more3d/text.hpp"
#include "more3d/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace more3d;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

struct GenDataArgs {
  int scenes = 10;
  int qa_per_scene = 5;
  std::uint64_t seed = 1;
  std::string out;
  double split = 0.8;
  int min_objects = 3;
  int max_objects = 7;
  double density = 800.0;
  std::string templates;
  bool external = false;
  std::string endpoint;
  std::string auth_env = "MORE3D_API_TOKEN";
};

int cmd_gen_data(const GenDataArgs& args) {
  if (args.scenes < 1) throw UsageError("--scenes must be >= 1");
  if (args.qa_per_scene < 1) throw UsageError("--qa-per-scene must be >= 1");
  if (args.min_objects < 1 || args.max_objects < args.min_objects) {
    throw UsageError("object count range is invalid");
  }
  if (!(args.split > 0.0 && args.split <= 1.0)) {
    throw UsageError("--split must be in (0, 1]");
  }
  if (args.external && args.endpoint.empty()) {
    throw UsageError("--external requires --endpoint URL");
  }

  const TemplateBank bank = args.templates.empty()
                                ? TemplateBank::load(TemplateBank::default_asset_path())
                                : TemplateBank::load(args.templates);

  fs::create_directories(args.out);
  fs::create_directories(args.out + "/scenes");

  std::vector<Scene> scenes;
  Rng layout_rng(Rng::mix(args.seed, 0x5ce2));
  for (int i = 0; i < args.scenes; ++i) {
    SceneSpec spec;
    char id[32];
    std::snprintf(id, sizeof(id), "scene_%04d", i);
    spec.id = id;
    spec.n_objects =
        static_cast<int>(layout_rng.uniform_int(args.min_objects, args.max_objects));
    spec.density = args.density;
    Scene scene = generate_scene(spec, Rng::mix(args.seed, 1000 + static_cast<std::uint64_t>(i)));
    write_scene(scene, args.out + "/scenes/" + scene.id + ".json");
    scenes.push_back(std::move(scene));
  }

  long total_shortfall = 0;
  long dropped_external = 0;
  std::vector<QASample> all_samples;
  if (args.external) {
    GenClientConfig cfg;
    cfg.endpoint = args.endpoint;
    cfg.auth_env = args.auth_env;
    std::vector<const Scene*> pointers;
    for (const auto& scene : scenes) pointers.push_back(&scene);
    const auto results = generate_qa_external_batch(pointers, cfg);
    for (const auto& result : results) {
      dropped_external += result.dropped;
      for (const auto& sample : result.samples) all_samples.push_back(sample);
    }
  } else {
    for (size_t i = 0; i < scenes.size(); ++i) {
      const QaGenResult result = generate_qa_templates(
          scenes[i], args.qa_per_scene,
          Rng::mix(args.seed, 2000 + static_cast<std::uint64_t>(i)), bank);
      total_shortfall += result.shortfall();
      for (const auto& sample : result.samples) all_samples.push_back(sample);
    }
  }
  if (total_shortfall > 0) {
    std::cerr << "warning: " << total_shortfall
              << " sample(s) not generated (scenes ran out of distinct "
                 "combinations)\n";
  }
  if (dropped_external > 0) {
    std::cerr << "warning: dropped " << dropped_external
              << " invalid externally generated sample(s)\n";
  }

  // Scene split: deterministic by scene order, train first.
  const int n_scenes = static_cast<int>(scenes.size());
  int n_train = static_cast<int>(args.split * n_scenes);
  if (n_train < 1) n_train = 1;
  if (n_train >= n_scenes && n_scenes > 1) n_train = n_scenes - 1;
  Dataset train_ds, val_ds;
  train_ds.split = Split::kTrain;
  val_ds.split = Split::kVal;
  for (int i = 0; i < n_scenes; ++i) {
    const auto& scene = scenes[static_cast<size_t>(i)];
    (i < n_train ? train_ds : val_ds).scenes.emplace(scene.id, scene);
  }
  for (const auto& sample : all_samples) {
    if (train_ds.scenes.count(sample.scene_id)) {
      train_ds.samples.push_back(sample);
    } else {
      val_ds.samples.push_back(sample);
    }
  }
  write_dataset(train_ds, args.out + "/train.jsonl");
  write_dataset(val_ds, args.out + "/val.jsonl");

  Dataset combined;
  combined.samples = all_samples;
  for (const auto& scene : scenes) combined.scenes.emplace(scene.id, scene);
  const DatasetStats stats = compute_stats(combined);
  std::ofstream stats_out(args.out + "/stats.json", std::ios::binary);
  stats_out << stats.to_json() << "\n";

  std::cout << "generated " << n_scenes << " scenes, "
            << train_ds.samples.size() << " train / " << val_ds.samples.size()
            << " val samples -> " << args.out << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string data;
  std::string config_path;
  std::string out;
  std::string resume;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr;
  std::optional<std::string> head_mode;
};

void apply_known_keys(const json& j, const std::string& where,
                      const std::vector<std::string>& known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw UsageError(where + ": unknown config key '" + it.key() + "'");
    }
  }
}

struct ResolvedTrainConfig {
  ModelConfig model;
  TrainConfig train;

  json to_json() const {
    json j;
    j["model"] = model.to_json();
    json t;
    t["epochs"] = train.epochs;
    t["lr"] = train.adam.lr;
    t["beta1"] = train.adam.beta1;
    t["beta2"] = train.adam.beta2;
    t["epsilon"] = train.adam.epsilon;
    t["seed"] = train.seed;
    t["shuffle"] = train.shuffle;
    t["ckpt_every"] = train.ckpt_every;
    t["eval_every"] = train.eval_every;
    t["gen_max_len"] = train.gen_max_len;
    t["loss_ans"] = train.losses.ans;
    t["loss_mask"] = train.losses.mask;
    t["loss_cls"] = train.losses.cls;
    j["train"] = t;
    return j;
  }
};

ResolvedTrainConfig resolve_train_config(const TrainArgs& args) {
  ResolvedTrainConfig resolved;
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path, std::ios::binary);
    if (!in) throw DataError("cannot open config: " + args.config_path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw DataError(std::string("config parse error: ") + e.what());
    }
    apply_known_keys(j, "config", {"model", "train"});
    if (j.contains("model")) {
      const json& m = j["model"];
      apply_known_keys(m, "config.model",
                       {"d_point", "d_model", "n_layers", "n_heads",
                        "context_len", "n_superpoints", "k_neighbors",
                        "n_classes", "head_mode", "seed"});
      if (m.contains("d_point")) resolved.model.d_point = m["d_point"].get<int>();
      if (m.contains("d_model")) resolved.model.d_model = m["d_model"].get<int>();
      if (m.contains("n_layers")) resolved.model.n_layers = m["n_layers"].get<int>();
      if (m.contains("n_heads")) resolved.model.n_heads = m["n_heads"].get<int>();
      if (m.contains("context_len")) resolved.model.context_len = m["context_len"].get<int>();
      if (m.contains("n_superpoints")) resolved.model.n_superpoints = m["n_superpoints"].get<int>();
      if (m.contains("k_neighbors")) resolved.model.k_neighbors = m["k_neighbors"].get<int>();
      if (m.contains("n_classes")) resolved.model.n_classes = m["n_classes"].get<int>();
      if (m.contains("head_mode")) {
        resolved.model.head_mode = head_mode_from_name(m["head_mode"].get<std::string>());
      }
      if (m.contains("seed")) resolved.model.seed = m["seed"].get<std::uint64_t>();
    }
    if (j.contains("train")) {
      const json& t = j["train"];
      apply_known_keys(t, "config.train",
                       {"epochs", "lr", "beta1", "beta2", "epsilon", "seed",
                        "shuffle", "ckpt_every", "eval_every", "gen_max_len",
                        "loss_ans", "loss_mask", "loss_cls"});
      if (t.contains("epochs")) resolved.train.epochs = t["epochs"].get<int>();
      if (t.contains("lr")) resolved.train.adam.lr = t["lr"].get<double>();
      if (t.contains("beta1")) resolved.train.adam.beta1 = t["beta1"].get<double>();
      if (t.contains("beta2")) resolved.train.adam.beta2 = t["beta2"].get<double>();
      if (t.contains("epsilon")) resolved.train.adam.epsilon = t["epsilon"].get<double>();
      if (t.contains("seed")) resolved.train.seed = t["seed"].get<std::uint64_t>();
      if (t.contains("shuffle")) resolved.train.shuffle = t["shuffle"].get<bool>();
      if (t.contains("ckpt_every")) resolved.train.ckpt_every = t["ckpt_every"].get<int>();
      if (t.contains("eval_every")) resolved.train.eval_every = t["eval_every"].get<int>();
      if (t.contains("gen_max_len")) resolved.train.gen_max_len = t["gen_max_len"].get<int>();
      if (t.contains("loss_ans")) resolved.train.losses.ans = t["loss_ans"].get<bool>();
      if (t.contains("loss_mask")) resolved.train.losses.mask = t["loss_mask"].get<bool>();
      if (t.contains("loss_cls")) resolved.train.losses.cls = t["loss_cls"].get<bool>();
    }
  }
  // flags win over the config file
  if (args.epochs) resolved.train.epochs = *args.epochs;
  if (args.seed) {
    resolved.train.seed = *args.seed;
    resolved.model.seed = *args.seed;
  }
  if (args.lr) resolved.train.adam.lr = *args.lr;
  if (args.head_mode) resolved.model.head_mode = head_mode_from_name(*args.head_mode);
  return resolved;
}

Dataset load_split(const std::string& data_dir, Split split) {
  const std::string path =
      data_dir + "/" + std::string(split_name(split)) + ".jsonl";
  if (!fs::exists(path)) {
    throw DataError("missing dataset file: " + path +
                    " (expected <data>/train.jsonl and <data>/val.jsonl)");
  }
  Dataset ds = read_dataset(path, split);
  ds.scenes = load_scene_dir(data_dir + "/scenes");
  return ds;
}

int cmd_train(const TrainArgs& args) {
  const ResolvedTrainConfig resolved = resolve_train_config(args);
  Dataset train_ds = load_split(args.data, Split::kTrain);
  Dataset val_ds = load_split(args.data, Split::kVal);

  std::vector<std::string> corpus;
  for (const auto& sample : train_ds.samples) {
    corpus.push_back(sample.question);
    corpus.push_back(sample.answer);
  }
  const Vocab vocab = Vocab::build(corpus);

  ModelConfig model_cfg = resolved.model;
  model_cfg.vocab_size = vocab.size();

  fs::create_directories(args.out);
  {
    std::ofstream cfg_out(args.out + "/resolved_config.json", std::ios::binary);
    cfg_out << resolved.to_json().dump(2) << "\n";
  }
  std::cout << "resolved config:\n" << resolved.to_json().dump(2) << "\n";

  Model<float> model(model_cfg);
  AdamState<float> opt;
  int start_epoch = 0;
  if (!args.resume.empty()) {
    const Checkpoint ckpt = read_checkpoint(args.resume);
    const LoadedModel loaded = parse_model_config(ckpt);
    if (loaded.config.to_json() != model_cfg.to_json()) {
      throw DataError("resume checkpoint config differs from requested config");
    }
    start_epoch = load_train_state(model, ckpt, &opt);
    std::cout << "resuming from epoch " << start_epoch << "\n";
  }

  const TrainResult result = train_loop(model, vocab, train_ds, val_ds,
                                        resolved.train, args.out, &opt,
                                        start_epoch);
  if (result.skipped_samples > 0) {
    std::cerr << "warning: skipped " << result.skipped_samples
              << " invalid sample(s)\n";
  }
  if (result.final_val) {
    std::cout << result.final_val->to_json() << "\n";
  }
  std::cout << "training done; checkpoints in " << args.out << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string data;
  std::string ckpt;
  std::string out = "eval_report.json";
  std::string split = "val";
  int gen_max_len = 48;
};

int cmd_eval(const EvalArgs& args) {
  const Checkpoint ckpt = read_checkpoint(args.ckpt);
  const LoadedModel loaded = parse_model_config(ckpt);
  Model<float> model(loaded.config);
  load_model_tensors(model, ckpt);
  const Split split = args.split == "train" ? Split::kTrain
                      : args.split == "val"
                          ? Split::kVal
                          : throw UsageError("--split must be train or val");
  Dataset ds = load_split(args.data, split);
  const EvalSummary summary =
      evaluate_model(model, loaded.vocab, ds, {args.gen_max_len});
  const std::string report = summary.to_json();
  std::cout << report << "\n";
  std::ofstream out(args.out, std::ios::binary);
  if (!out) throw DataError("cannot write report: " + args.out);
  out << report << "\n";
  return kExitOk;
}

struct InferArgs {
  std::string scene;
  std::string question;
  std::string ckpt;
  std::string out;
  int max_len = 48;
};

int cmd_infer(const InferArgs& args) {
  const Checkpoint ckpt = read_checkpoint(args.ckpt);
  const LoadedModel loaded = parse_model_config(ckpt);
  Model<float> model(loaded.config);
  load_model_tensors(model, ckpt);
  const Scene scene = read_scene(args.scene);
  const TokenSequence question =
      encode(loaded.vocab, args.question, TextOrigin::kQuestion);
  const Prediction<float> pred =
      model.predict(scene.cloud, question, args.max_len);
  const std::string answer = decode(loaded.vocab, pred.answer);
  std::cout << answer << "\n";
  if (pred.truncated) {
    std::cerr << "note: answer truncated at max_len " << args.max_len << "\n";
  }
  if (pred.iseg.count() == 0) {
    std::cerr << "note: answer contains no " << kSegLiteral
              << " markers; no masks written\n";
    return kExitOk;
  }
  fs::create_directories(args.out);
  const auto masks = masks_from_logits(pred.mask_logits);
  for (int k = 0; k < pred.iseg.count(); ++k) {
    int best_class = 0;
    for (int c = 1; c < pred.cls_logits.cols(); ++c) {
      if (pred.cls_logits(k, c) > pred.cls_logits(k, best_class)) best_class = c;
    }
    json j;
    j["index"] = k;
    j["class_id"] = best_class;
    j["class_name"] = class_name(best_class);
    json indices = json::array();
    for (size_t p = 0; p < masks[static_cast<size_t>(k)].bits.size(); ++p) {
      if (masks[static_cast<size_t>(k)].bits[p]) indices.push_back(p);
    }
    j["point_indices"] = std::move(indices);
    char name[32];
    std::snprintf(name, sizeof(name), "/mask_%02d.json", k);
    std::ofstream mask_out(args.out + name, std::ios::binary);
    if (!mask_out) throw DataError("cannot write mask file in " + args.out);
    mask_out << j.dump() << "\n";
  }
  write_colored_ply(scene.cloud, masks, args.out + "/cloud.ply");
  std::cout << "wrote " << pred.iseg.count() << " mask file(s) and cloud.ply to "
            << args.out << "\n";
  return kExitOk;
}

struct ExportArgs {
  std::string scene;
  std::string masks;
  std::string format = "ply";
  std::string out;
};

int cmd_export(const ExportArgs& args) {
  if (args.format != "ply") {
    throw UsageError("unsupported export format '" + args.format + "'");
  }
  const Scene scene = read_scene(args.scene);
  std::vector<std::string> mask_paths;
  for (const auto& entry : fs::directory_iterator(args.masks)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("mask_", 0) == 0 && entry.path().extension() == ".json") {
      mask_paths.push_back(entry.path().string());
    }
  }
  std::sort(mask_paths.begin(), mask_paths.end());
  if (mask_paths.empty()) {
    throw DataError("no mask_*.json files under " + args.masks);
  }
  std::vector<InstanceMask> masks;
  for (const auto& path : mask_paths) {
    std::ifstream in(path, std::ios::binary);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw DataError("mask file " + path + ": " + e.what());
    }
    InstanceMask mask;
    mask.bits.assign(scene.cloud.size(), 0);
    for (const auto& index : j.at("point_indices")) {
      const auto p = index.get<std::size_t>();
      if (p >= mask.bits.size()) {
        throw DataError("mask file " + path + " indexes point " +
                        std::to_string(p) + " beyond scene size " +
                        std::to_string(mask.bits.size()));
      }
      mask.bits[p] = 1;
    }
    masks.push_back(std::move(mask));
  }
  write_colored_ply(scene.cloud, masks, args.out);
  std::cout << "wrote " << args.out << " with " << masks.size()
            << " instance color(s)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-object 3D reasoning segmentation pipeline"};
  app.require_subcommand(1);

  GenDataArgs gen_args;
  auto* gen = app.add_subcommand("gen-data", "generate scenes and QA datasets");
  gen->add_option("--scenes", gen_args.scenes, "number of scenes");
  gen->add_option("--qa-per-scene", gen_args.qa_per_scene, "QA samples per scene");
  gen->add_option("--seed", gen_args.seed, "global seed");
  gen->add_option("--out", gen_args.out, "output directory")->required();
  gen->add_option("--split", gen_args.split, "train fraction of scenes");
  gen->add_option("--min-objects", gen_args.min_objects, "min objects per scene");
  gen->add_option("--max-objects", gen_args.max_objects, "max objects per scene");
  gen->add_option("--density", gen_args.density, "object points per cubic meter");
  gen->add_option("--templates", gen_args.templates, "template bank JSON");
  gen->add_flag("--external", gen_args.external, "use a chat endpoint instead of templates");
  gen->add_option("--endpoint", gen_args.endpoint, "chat completions URL");
  gen->add_option("--auth-env", gen_args.auth_env, "env var holding the bearer token");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train a model on a dataset directory");
  train->add_option("--data", train_args.data, "dataset directory")->required();
  train->add_option("--config", train_args.config_path, "JSON config file");
  train->add_option("--out", train_args.out, "output directory")->required();
  train->add_option("--resume", train_args.resume, "train checkpoint to resume");
  int epochs_flag = -1;
  train->add_option("--epochs", epochs_flag, "override epochs");
  std::uint64_t seed_flag = 0;
  bool seed_set = false;
  train->add_option("--seed", seed_flag, "override seed")
      ->each([&](const std::string&) { seed_set = true; });
  double lr_flag = 0.0;
  bool lr_set = false;
  train->add_option("--lr", lr_flag, "override learning rate")
      ->each([&](const std::string&) { lr_set = true; });
  std::string head_mode_flag;
  train->add_option("--head-mode", head_mode_flag, "unified|separated");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--data", eval_args.data, "dataset directory")->required();
  eval->add_option("--ckpt", eval_args.ckpt, "checkpoint file")->required();
  eval->add_option("--out", eval_args.out, "report path");
  eval->add_option("--split", eval_args.split, "train|val");
  eval->add_option("--max-len", eval_args.gen_max_len, "generation cap");

  InferArgs infer_args;
  auto* infer = app.add_subcommand("infer", "answer a question about one scene");
  infer->add_option("--scene", infer_args.scene, "scene JSON")->required();
  infer->add_option("--question", infer_args.question, "question text")->required();
  infer->add_option("--ckpt", infer_args.ckpt, "checkpoint file")->required();
  infer->add_option("--out", infer_args.out, "output directory")->required();
  infer->add_option("--max-len", infer_args.max_len, "generation cap");

  ExportArgs export_args;
  auto* exp = app.add_subcommand("export", "colored geometry from scene + masks");
  exp->add_option("--scene", export_args.scene, "scene JSON")->required();
  exp->add_option("--masks", export_args.masks, "directory of mask_*.json")->required();
  exp->add_option("--format", export_args.format, "output format (ply)");
  exp->add_option("--out", export_args.out, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (epochs_flag >= 0) train_args.epochs = epochs_flag;
  if (seed_set) train_args.seed = seed_flag;
  if (lr_set) train_args.lr = lr_flag;
  if (!head_mode_flag.empty()) train_args.head_mode = head_mode_flag;

  try {
    if (gen->parsed()) return cmd_gen_data(gen_args);
    if (train->parsed()) return cmd_train(train_args);
    if (eval->parsed()) return cmd_eval(eval_args);
    if (infer->parsed()) return cmd_infer(infer_args);
    if (exp->parsed()) return cmd_export(export_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
