#include "aparecium/cli/commands.hpp"

#include <fstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "aparecium/cli/kv_config.hpp"
#include "aparecium/core/errors.hpp"
#include "aparecium/core/image_io.hpp"
#include "aparecium/core/metrics.hpp"
#include "aparecium/eval/report.hpp"
#include "aparecium/inference/watermarker.hpp"
#include "aparecium/training/dataset.hpp"
#include "aparecium/training/trainer.hpp"

namespace aparecium::cli {

namespace fs = std::filesystem;

namespace {

struct ConfigFlags {
  std::string config;
  std::string profile;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* app, bool with_profile) {
    app->add_option("--config", config, "Key-value (YAML) config file");
    if (with_profile) app->add_option("--profile", profile, "Scale preset: desk or paper");
    app->add_option("--set", sets, "Override one key, e.g. --set lambdas.l1=5 (repeatable)");
    app->add_option("--seed", seed, "Random seed");
  }

  KeyValues merged() const {
    auto kv = merge_layers({config, sets, true});
    if (seed) kv["seed"] = std::to_string(*seed);
    return kv;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

ImageTensor load_input(const std::string& path) {
  if (!fs::exists(path)) throw MissingArtifactError("image not found: " + path);
  return load_image(path);
}

nlohmann::json box_json(const std::optional<CropBox>& box) {
  if (!box) return nullptr;
  return {box->x0, box->y0, box->x1, box->y1};
}

nlohmann::json extract_json(const infer::ExtractResult& r, const std::string& mask_path,
                            const std::optional<Message>& truth) {
  nlohmann::json j;
  j["located"] = r.located;
  j["foreground"] = r.foreground;
  j["crop_box"] = box_json(r.crop_box);
  j["mask_path"] = mask_path.empty() ? nlohmann::json(nullptr) : nlohmann::json(mask_path);
  j["message_hex"] = r.message ? nlohmann::json(message_to_hex(*r.message)) : nlohmann::json(nullptr);
  if (truth) j["ber_vs"] = r.message ? nlohmann::json(ber(*truth, *r.message)) : nlohmann::json(nullptr);
  return j;
}

void save_mask(const infer::ExtractResult& r, const std::string& path) {
  if (!path.empty()) save_image(ImageTensor(r.mask.tensor()), path);
}

// ---- train ----

struct TrainArgs {
  ConfigFlags cfg;
  std::string stage = "all";
  std::string run_dir;
  std::string data;
  std::string val;
  std::string init;
  bool resume = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  device();
  const auto kv = a.cfg.merged();
  const auto profile = profile_of(kv, a.cfg.profile, "paper");
  auto cfg = train::TrainConfig::for_profile(profile);
  cfg.apply(kv);
  cfg.profile = profile;
  if (!a.data.empty()) cfg.dataset_root = a.data;
  if (!a.val.empty()) cfg.val_root = a.val;
  cfg.validate();

  std::vector<int> stages;
  if (a.stage == "all") stages = {1, 2, 3};
  else if (a.stage == "1" || a.stage == "2" || a.stage == "3") stages = {a.stage[0] - '0'};
  else throw ConfigError("--stage must be 1, 2, 3 or all");
  if (stages.front() > 1 && cfg.dataset_root.empty()) throw ConfigError("stage 2/3 need a dataset (--data or dataset.root)");
  if (stages.size() > 1 && cfg.dataset_root.empty()) throw ConfigError("--stage all needs a dataset (--data or dataset.root)");

  const fs::path run_dir =
      a.run_dir.empty() ? run_root() / (profile + "-seed" + std::to_string(cfg.seed)) : fs::path(a.run_dir);
  fs::create_directories(run_dir);
  write_text(run_dir / "resolved_config.yaml", to_yaml(cfg.to_kv()));

  train::RunOptions opts;
  opts.resume = a.resume;
  std::vector<train::StageResult> results;
  if (!a.init.empty()) {
    if (stages.size() != 1 || stages.front() == 1) throw ConfigError("--init applies to a single stage 2 or 3");
    const auto s = stages.front();
    results.push_back(s == 2 ? train::run_stage2(cfg, run_dir, a.init, opts) : train::run_stage3(cfg, run_dir, a.init, opts));
  } else {
    results = train::run_stages(cfg, run_dir, stages, opts);
  }
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& r : results) {
    summary.push_back({{"stage", r.state.stage},
                       {"epochs", r.state.epoch},
                       {"steps", r.state.step},
                       {"checkpoint", r.checkpoint.string()},
                       {"final_means", r.state.loss_history.empty() ? nlohmann::json(nullptr)
                                                                    : nlohmann::json(r.state.loss_history.back())}});
    err << "stage " << r.state.stage << " done: " << r.state.epoch << " epochs, checkpoint " << r.checkpoint.string()
        << "\n";
  }
  out << summary.dump(2) << "\n";
  return kOk;
}

// ---- embed / extract / locate ----

struct EmbedArgs {
  std::string cover, message, ckpt, out, residual;
  bool json = false;
};

int cmd_embed(const EmbedArgs& a, std::ostream& out, std::ostream& err) {
  device();
  const auto w = infer::Watermarker::from_checkpoint(a.ckpt);
  const auto msg = hex_to_message(a.message, w.message_bits());
  const auto res = w.embed(load_input(a.cover), msg);
  for (const auto& warning : res.warnings) err << "warning: " << warning << "\n";
  save_image(res.encoded, a.out);
  if (!a.residual.empty()) save_image(res.residual, a.residual);
  nlohmann::json j = {{"out", a.out},
                      {"psnr", std::isinf(res.psnr) ? nlohmann::json("inf") : nlohmann::json(res.psnr)},
                      {"ssim", res.ssim},
                      {"warnings", res.warnings}};
  if (a.json) out << j.dump() << "\n";
  else out << "wrote " << a.out << " (PSNR " << res.psnr << " dB, SSIM " << res.ssim << ")\n";
  return kOk;
}

struct ExtractArgs {
  std::string photo, ckpt, mask_out, truth;
  bool json = false;
  std::vector<int> box;
};

int cmd_extract(const ExtractArgs& a, bool locate_only, std::ostream& out) {
  device();
  const auto w = infer::Watermarker::from_checkpoint(a.ckpt);
  const auto photo = load_input(a.photo);
  std::optional<Message> truth;
  if (!a.truth.empty()) truth = hex_to_message(a.truth, w.message_bits());
  infer::ExtractResult r;
  if (locate_only) {
    r = w.locate(photo);
  } else if (!a.box.empty()) {
    if (a.box.size() != 4) throw InputError("--box takes x0 y0 x1 y1");
    r = w.extract_with_gt_box(photo, CropBox{a.box[0], a.box[1], a.box[2], a.box[3]});
  } else {
    r = w.extract(photo);
  }
  save_mask(r, a.mask_out);
  auto j = extract_json(r, a.mask_out, truth);
  if (locate_only) j.erase("message_hex");
  if (a.json) {
    out << j.dump() << "\n";
  } else if (!r.located) {
    out << "not located (foreground " << r.foreground << ")\n";
  } else {
    out << "box " << r.crop_box->x0 << " " << r.crop_box->y0 << " " << r.crop_box->x1 << " " << r.crop_box->y1 << "\n";
    if (r.message) out << message_to_hex(*r.message) << "\n";
    if (truth && r.message) out << "ber " << ber(*truth, *r.message) << "\n";
  }
  return kOk;
}

// ---- evaluate ----

struct EvaluateArgs {
  ConfigFlags cfg;
  std::string ckpt, data, out;
  std::string distortions;
  int n = 0;
  bool no_combined = false;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  device();
  eval::EvalConfig ec;
  auto kv = a.cfg.merged();
  for (const auto& [k, v] : kv) {
    if (k == "seed") ec.seed = static_cast<std::uint64_t>(kv_int(k, v));
    else if (k == "profile") continue;
    else ec.set(k, v);
  }
  if (!a.distortions.empty()) ec.set("eval.distortions", a.distortions);
  if (a.n > 0) ec.n_images = a.n;
  if (a.no_combined) ec.combined = false;
  if (a.out.empty()) throw ConfigError("--out is required");
  fs::create_directories(a.out);
  write_text(fs::path(a.out) / "resolved_config.yaml", to_yaml(ec.to_kv()));

  const auto w = infer::Watermarker::from_checkpoint(a.ckpt);
  train::ImageFolder folder(a.data, {}, true);
  const eval::EvalSet set(w, folder, std::max(ec.n_images, ec.quality_images), ec.seed);
  const eval::EvalSet sweep_set(w, folder, ec.n_images, ec.seed);
  eval::Report report;
  report.quality = eval::run_quality_eval(w, set);
  report.sweeps = eval::run_digital_sweep(w, sweep_set, ec.sweeps());
  if (ec.combined) report.combined = eval::run_combined_distortion_eval(w, sweep_set, ec.seed, ec.combined_probability);
  const auto files = eval::emit_report(report, a.out);
  const int errors = report.sweeps.errors() + (report.combined ? report.combined->errors : 0);
  out << "PSNR " << report.quality.mean_psnr << " dB, SSIM " << report.quality.mean_ssim << ", BER "
      << report.quality.mean_ber << " over " << report.quality.n << " images; " << files.size() << " files in "
      << a.out << "\n";
  if (errors > 0) {
    err << errors << " sweep cells raised errors\n";
    return kInternal;
  }
  return kOk;
}

// ---- synth-data ----

struct SynthArgs {
  std::string out;
  int count = 100;
  int size = 160;
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const auto files = train::synth_images(a.out, a.count, a.size, a.seed);
  out << "wrote " << files.size() << " images to " << a.out << "\n";
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust image watermarking: train, embed, extract, evaluate", "aparecium"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Run training stages");
  train->add_option("--stage", train_args.stage, "1, 2, 3 or all")->capture_default_str();
  train->add_option("--run-dir", train_args.run_dir, "Output directory (default $APARECIUM_RUN_ROOT/<profile>-seed<seed>)");
  train->add_option("--data", train_args.data, "Training image folder (dataset.root)");
  train->add_option("--val", train_args.val, "Held-out image folder for per-epoch metrics (dataset.val_root)");
  train->add_option("--init", train_args.init, "Checkpoint of the previous stage (single-stage runs)");
  train->add_flag("--resume", train_args.resume, "Continue from the newest epoch checkpoint");
  train_args.cfg.attach(train, true);

  EmbedArgs embed_args;
  auto* embed = app.add_subcommand("embed", "Hide a message in a cover image");
  embed->add_option("--cover", embed_args.cover, "Cover image")->required();
  embed->add_option("--message", embed_args.message, "Message as hex")->required();
  embed->add_option("--ckpt", embed_args.ckpt, "Checkpoint directory")->required();
  embed->add_option("--out", embed_args.out, "Encoded image (PNG)")->required();
  embed->add_option("--residual", embed_args.residual, "Amplified residual image");
  embed->add_flag("--json", embed_args.json, "JSON output");

  ExtractArgs extract_args;
  auto* extract = app.add_subcommand("extract", "Locate and decode a watermark in a photo");
  extract->add_option("--photo", extract_args.photo, "Photo")->required();
  extract->add_option("--ckpt", extract_args.ckpt, "Checkpoint directory")->required();
  extract->add_option("--mask-out", extract_args.mask_out, "Write the predicted mask");
  extract->add_option("--truth", extract_args.truth, "Expected message (hex) to report BER");
  extract->add_option("--box", extract_args.box, "Decode this box (x0 y0 x1 y1) instead of the located one")
      ->expected(4);
  extract->add_flag("--json", extract_args.json, "JSON output");

  ExtractArgs locate_args;
  auto* locate = app.add_subcommand("locate", "Predict the watermark mask and crop box");
  locate->add_option("--photo", locate_args.photo, "Photo")->required();
  locate->add_option("--ckpt", locate_args.ckpt, "Checkpoint directory")->required();
  locate->add_option("--mask-out", locate_args.mask_out, "Write the predicted mask");
  locate->add_flag("--json", locate_args.json, "JSON output");

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Quality metrics and digital-distortion sweeps");
  evaluate->add_option("--ckpt", eval_args.ckpt, "Checkpoint directory")->required();
  evaluate->add_option("--data", eval_args.data, "Cover image folder")->required();
  evaluate->add_option("--out", eval_args.out, "Report directory")->required();
  evaluate->add_option("--distortions", eval_args.distortions, "Comma-separated subset (jpeg, noise, blur, ...)");
  evaluate->add_option("--n", eval_args.n, "Images per sweep cell");
  evaluate->add_flag("--no-combined", eval_args.no_combined, "Skip the combined-distortion row");
  eval_args.cfg.attach(evaluate, false);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth-data", "Write a folder of procedural test images");
  synth->add_option("--out", synth_args.out, "Output folder")->required();
  synth->add_option("--count", synth_args.count, "Number of images")->capture_default_str();
  synth->add_option("--size", synth_args.size, "Image side")->capture_default_str();
  synth->add_option("--seed", synth_args.seed, "Random seed")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return cmd_train(train_args, out, err);
    if (*embed) return cmd_embed(embed_args, out, err);
    if (*extract) return cmd_extract(extract_args, false, out);
    if (*locate) return cmd_extract(locate_args, true, out);
    if (*evaluate) return cmd_evaluate(eval_args, out, err);
    if (*synth) return cmd_synth(synth_args, out);
  } catch (const MissingArtifactError& e) {
    err << "error: " << e.what() << "\n";
    return kMissingArtifact;
  } catch (const IncompatibleCheckpointError& e) {
    err << "error: " << e.what() << "\n";
    return kMissingArtifact;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}

}  // namespace aparecium::cli
