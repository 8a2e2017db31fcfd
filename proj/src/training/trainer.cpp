#include "aparecium/training/trainer.hpp"

#include <chrono>
#include <fstream>
#include <numeric>
#include <optional>

#include "aparecium/core/errors.hpp"
#include "aparecium/core/metrics.hpp"
#include "aparecium/inference/watermarker.hpp"
#include "aparecium/models/checkpoint.hpp"
#include "aparecium/training/dataset.hpp"

namespace aparecium::train {

namespace fs = std::filesystem;
using distort::DistortionKind;
using distort::PipelineStage;

nlohmann::json TrainState::to_json() const {
  return {{"stage", stage},
          {"epoch", epoch},
          {"step", step},
          {"batches", batches},
          {"loss_history", loss_history},
          {"rng_state", rng_state}};
}

TrainState TrainState::from_json(const nlohmann::json& j) {
  TrainState s;
  s.stage = j.at("stage").get<int>();
  s.epoch = j.at("epoch").get<int>();
  s.step = j.at("step").get<long>();
  s.batches = j.at("batches").get<long>();
  s.loss_history = j.at("loss_history").get<std::vector<EpochMeans>>();
  s.rng_state = j.at("rng_state").get<std::string>();
  return s;
}

fs::path final_checkpoint(const fs::path& run_dir, int stage) {
  return run_dir / ("stage" + std::to_string(stage)) / "final";
}

fs::path log_path(const fs::path& run_dir) { return run_dir / "train_log.jsonl"; }

torch::Tensor random_bits(Rng& rng, int batch, int n) {
  auto out = torch::empty({batch, n}, torch::kFloat);
  auto* p = out.data_ptr<float>();
  std::uint64_t word = 0;
  int left = 0;
  for (int64_t i = 0; i < out.numel(); ++i) {
    if (left == 0) {
      word = rng.next_u64();
      left = 64;
    }
    p[i] = static_cast<float>(word & 1ULL);
    word >>= 1;
    --left;
  }
  return out;
}

LossBreakdown stage1_loss(const TrainConfig&, models::ModelSet& models, const torch::Tensor& messages,
                          const std::vector<distort::DistortionSpec>& specs, Rng& rng) {
  auto patterns = models.processor.forward(messages);
  if (!specs.empty()) patterns = distort::apply_pipeline(patterns, specs, rng);
  auto scores = models.extractor.forward(patterns);
  LossBreakdown b;
  b.terms["message"] = loss_stage1(messages, scores);
  b.weights["message"] = 1.0;
  b.total = b.terms["message"];
  return b;
}

LossBreakdown stage23_loss(const TrainConfig& cfg, models::ModelSet& models, int stage, const torch::Tensor& covers,
                           const torch::Tensor& backgrounds, const torch::Tensor& messages,
                           const std::vector<distort::DistortionSpec>& specs, Rng& rng) {
  const auto& mc = models.config;
  const auto& lambdas = cfg.stage(stage).lambdas;
  auto pattern = models.processor.forward(messages);
  auto encoded = models.encoder.forward(
      torch::cat({covers, resize_bilinear(pattern, mc.image_size, mc.image_size)}, 1));
  auto comp = distort::compose_onto_background(encoded, backgrounds, pattern,
                                               distort::filter_kind(specs, DistortionKind::Spatial), rng,
                                               cfg.composite_options());
  auto pixel = distort::filter_kind(specs, DistortionKind::Pixel);
  auto photo = pixel.empty() ? comp.composite : distort::apply_pipeline(comp.composite, pixel, rng);
  auto pred_mask = models.locator.forward(resize_bilinear(photo, mc.locator_size, mc.locator_size));
  auto decoded = models.decoder.forward(crop_and_resize(photo, comp.boxes, mc.image_size));
  if (stage == 2) return loss_stage2(covers, encoded, comp.gt_mask, pred_mask, comp.gt_pattern, decoded, lambdas);
  auto scores = models.extractor.forward(decoded);
  return loss_stage3(covers, encoded, comp.gt_mask, pred_mask, comp.gt_pattern, decoded, messages, scores, lambdas);
}

namespace {

class JsonLog {
 public:
  explicit JsonLog(const fs::path& path) : out_(path, std::ios::app) {
    if (!out_) throw InputError("cannot open training log " + path.string());
  }
  void write(const nlohmann::json& j) {
    out_ << j.dump() << "\n";
    out_.flush();
  }

 private:
  std::ofstream out_;
};

struct RunningMeans {
  std::map<std::string, double> sum;
  long count = 0;
  void add(const std::map<std::string, double>& v) {
    for (const auto& [k, x] : v) sum[k] += x;
    ++count;
  }
  EpochMeans means() const {
    EpochMeans m;
    for (const auto& [k, s] : sum) m[k] = count ? s / count : 0.0;
    return m;
  }
};

/// Distortion probabilities scaled by the warmup ramp after `batches` batches.
std::vector<distort::DistortionSpec> ramped(const std::vector<distort::DistortionSpec>& specs, int warmup,
                                            long batches) {
  if (warmup <= 0 || batches >= warmup) return specs;
  const double f = static_cast<double>(batches) / warmup;
  auto out = specs;
  for (auto& s : out)
    if (s.kind() != DistortionKind::Compose) s.probability *= f;
  return out;
}

std::optional<fs::path> latest_epoch_checkpoint(const fs::path& stage_dir) {
  if (!fs::is_directory(stage_dir)) return std::nullopt;
  std::optional<fs::path> best;
  for (const auto& e : fs::directory_iterator(stage_dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("epoch_", 0) != 0 || !fs::exists(e.path() / "manifest.json")) continue;
    if (!best || name > best->filename().string()) best = e.path();
  }
  return best;
}

void prune_checkpoints(const fs::path& stage_dir, int keep) {
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(stage_dir))
    if (e.path().filename().string().rfind("epoch_", 0) == 0) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  for (std::size_t i = 0; i + static_cast<std::size_t>(keep) < dirs.size(); ++i) fs::remove_all(dirs[i]);
}

std::string epoch_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "epoch_%03d", epoch);
  return buf;
}

models::ModelSet load_prerequisite(const TrainConfig& cfg, int stage, const fs::path& ckpt) {
  if (!fs::exists(ckpt / "manifest.json")) {
    throw MissingArtifactError("stage " + std::to_string(stage) + " needs a stage-" + std::to_string(stage - 1) +
                               " checkpoint, but " + ckpt.string() + " does not exist; run `train --stage " +
                               std::to_string(stage - 1) + "` first");
  }
  auto loaded = models::load_checkpoint(ckpt, &cfg.model);
  if (loaded.manifest.stage < stage - 1) {
    throw MissingArtifactError("checkpoint " + ckpt.string() + " is from stage " +
                               std::to_string(loaded.manifest.stage) + ", stage " + std::to_string(stage) +
                               " needs stage " + std::to_string(stage - 1));
  }
  return std::move(loaded.models);
}

/// Shared epoch loop. `batch_fn` runs one forward and returns the breakdown.
class StageRunner {
 public:
  StageRunner(const TrainConfig& cfg, int stage, fs::path run_dir, models::ModelSet models, const RunOptions& opts)
      : cfg_(cfg),
        sc_(cfg.stage(stage)),
        stage_(stage),
        run_dir_(std::move(run_dir)),
        stage_dir_(run_dir_ / ("stage" + std::to_string(stage))),
        models_(std::move(models)),
        opts_(opts),
        rng_(cfg.seed * 1000003ULL + static_cast<std::uint64_t>(stage)) {
    fs::create_directories(stage_dir_);
    models::prepare_for_stage(models_, stage);
    std::vector<torch::Tensor> params;
    for (auto r : models::trainable_roles(stage))
      for (auto& p : models_.at(r).parameters()) params.push_back(p);
    optimizer_ = std::make_unique<torch::optim::AdamW>(
        params, torch::optim::AdamWOptions(sc_.lr).weight_decay(sc_.weight_decay));
    state_.stage = stage;
    if (opts.resume) resume();
  }

  models::ModelSet& models() { return models_; }
  Rng& rng() { return rng_; }
  const TrainState& state() const { return state_; }

  template <typename BatchFn, typename EvalFn>
  StageResult run(int batches_per_epoch, BatchFn&& batch_fn, EvalFn&& eval_fn) {
    JsonLog log(log_path(run_dir_));
    int ran = 0;
    while (state_.epoch < sc_.epochs && (opts_.max_epochs == 0 || ran < opts_.max_epochs)) {
      const int epoch = state_.epoch + 1;
      const auto t0 = std::chrono::steady_clock::now();
      RunningMeans means;
      int pending = 0;
      optimizer_->zero_grad();
      for (int b = 0; b < batches_per_epoch; ++b) {
        auto br = batch_fn(epoch, b);
        (br.total / static_cast<double>(sc_.accumulate_every)).backward();
        auto values = br.values();
        means.add(values);
        ++state_.batches;
        if (++pending == sc_.accumulate_every) {
          step(pending);
          if (cfg_.log_every > 0 && state_.step % cfg_.log_every == 0) {
            log.write({{"type", "step"}, {"stage", stage_}, {"epoch", epoch}, {"step", state_.step},
                       {"losses", values}});
          }
        }
      }
      if (pending > 0) step(pending);
      auto epoch_means = means.means();
      state_.loss_history.push_back(epoch_means);
      state_.epoch = epoch;
      state_.rng_state = rng_.state();
      nlohmann::json eval = eval_fn();
      models_.train(true);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log.write({{"type", "epoch"}, {"stage", stage_}, {"epoch", epoch}, {"step", state_.step},
                 {"batches", state_.batches}, {"means", epoch_means}, {"eval", eval}, {"seconds", secs}});
      save(stage_dir_ / epoch_name(epoch));
      prune_checkpoints(stage_dir_, std::max(1, opts_.keep_checkpoints));
      ++ran;
    }
    StageResult result;
    result.state = state_;
    if (state_.epoch >= sc_.epochs) {
      const auto final_dir = stage_dir_ / "final";
      fs::remove_all(final_dir);
      save(final_dir);
      result.checkpoint = final_dir;
    } else {
      result.checkpoint = stage_dir_ / epoch_name(state_.epoch);
    }
    return result;
  }

 private:
  void step(int& pending) {
    optimizer_->step();
    optimizer_->zero_grad();
    ++state_.step;
    pending = 0;
  }

  void save(const fs::path& dir) {
    models::CheckpointManifest m;
    m.stage = stage_;
    m.seed = cfg_.seed;
    m.config = models_.config;
    m.extra = {{"train_state", state_.to_json()}, {"profile", cfg_.profile}, {"train_config", cfg_.to_kv()}};
    models::save_checkpoint(models_, m, dir, optimizer_.get());
  }

  void resume() {
    const auto latest = latest_epoch_checkpoint(stage_dir_);
    if (!latest) return;
    auto loaded = models::load_checkpoint(*latest, &cfg_.model);
    if (loaded.manifest.stage != stage_)
      throw IncompatibleCheckpointError("cannot resume stage " + std::to_string(stage_) + " from " + latest->string());
    for (auto r : models::kAllRoles) {
      torch::NoGradGuard guard;
      auto dst = models_.at(r).net->named_parameters();
      for (const auto& item : loaded.models.at(r).net->named_parameters()) dst[item.key()].copy_(item.value());
      auto dst_b = models_.at(r).net->named_buffers();
      for (const auto& item : loaded.models.at(r).net->named_buffers()) dst_b[item.key()].copy_(item.value());
    }
    models::load_optimizer(*latest, *optimizer_);
    state_ = TrainState::from_json(loaded.manifest.extra.at("train_state"));
    rng_.set_state(state_.rng_state);
    models::prepare_for_stage(models_, stage_);
  }

  const TrainConfig& cfg_;
  const StageConfig& sc_;
  int stage_;
  fs::path run_dir_;
  fs::path stage_dir_;
  models::ModelSet models_;
  RunOptions opts_;
  Rng rng_;
  TrainState state_;
  std::unique_ptr<torch::optim::AdamW> optimizer_;
};

struct BerEval {
  double clean = 0.0;
  double distorted = 0.0;
};

BerEval stage1_eval(const TrainConfig& cfg, models::ModelSet& models, const std::vector<distort::DistortionSpec>& specs) {
  torch::NoGradGuard guard;
  models.eval();
  Rng eval_rng(cfg.seed ^ 0x5eedULL);
  auto msgs = random_bits(eval_rng, cfg.eval_messages, cfg.model.message_bits);
  auto patterns = models.processor.forward(msgs);
  auto ber_of = [&](const torch::Tensor& p) {
    auto bits = (models.extractor.forward(p) > 0).to(torch::kFloat);
    return (bits != msgs).to(torch::kFloat).mean().item<double>();
  };
  BerEval e;
  e.clean = ber_of(patterns);
  e.distorted = specs.empty() ? e.clean : ber_of(distort::apply_pipeline(patterns, specs, eval_rng));
  return e;
}

nlohmann::json image_eval(const TrainConfig& cfg, const models::ModelSet& models, ImageFolder* val) {
  if (!val) return nlohmann::json::object();
  infer::Watermarker w(models);
  const auto n = std::min<std::size_t>(val->size(), static_cast<std::size_t>(std::max(cfg.val_images, 0)));
  double psnr_sum = 0, ssim_sum = 0, ber_sum = 0;
  int located = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto msg = random_message(cfg.seed + 7919 * (i + 1), cfg.model.message_bits);
    const auto cover = ImageTensor(val->image(i, cfg.model.image_size));
    const auto emb = w.embed(cover, msg);
    psnr_sum += emb.psnr;
    ssim_sum += emb.ssim;
    const auto ex = w.extract(emb.encoded);
    if (ex.located) {
      ++located;
      ber_sum += ber(msg, *ex.message);
    } else {
      ber_sum += 0.5;
    }
  }
  if (n == 0) return nlohmann::json::object();
  return {{"images", n},
          {"psnr", psnr_sum / n},
          {"ssim", ssim_sum / n},
          {"ber", ber_sum / n},
          {"locate_rate", static_cast<double>(located) / n}};
}

std::unique_ptr<ImageFolder> open_val(const TrainConfig& cfg) {
  if (cfg.val_root.empty() && cfg.val_list.empty()) return nullptr;
  const auto root = cfg.val_root.empty() ? cfg.dataset_root : cfg.val_root;
  return std::make_unique<ImageFolder>(root, cfg.val_list, cfg.cache_images);
}

StageResult run_stage23(const TrainConfig& cfg, int stage, const fs::path& run_dir, const fs::path& prev_ckpt,
                        const RunOptions& opts) {
  cfg.validate();
  auto models = load_prerequisite(cfg, stage, prev_ckpt);
  if (cfg.dataset_root.empty()) throw ConfigError("dataset.root is required for stage " + std::to_string(stage));
  ImageFolder train(cfg.dataset_root, cfg.train_list, cfg.cache_images);
  auto val = open_val(cfg);
  const auto& sc = cfg.stage(stage);
  const auto specs = cfg.pipeline(PipelineStage::II);
  StageRunner runner(cfg, stage, run_dir, std::move(models), opts);
  const int per_pass = static_cast<int>((train.size() + sc.batch_size - 1) / sc.batch_size);
  std::vector<std::size_t> order;
  auto batch_fn = [&](int, int b) {
    auto& rng = runner.rng();
    const int pass_batch = b % per_pass;
    if (pass_batch == 0) {
      order.resize(train.size());
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.integer(0, static_cast<int64_t>(i) - 1))]);
    }
    const auto begin = static_cast<std::size_t>(pass_batch) * sc.batch_size;
    const auto end = std::min(order.size(), begin + sc.batch_size);
    std::vector<std::size_t> idx(order.begin() + static_cast<long>(begin), order.begin() + static_cast<long>(end));
    std::vector<std::size_t> bg_idx;
    for (std::size_t i = 0; i < idx.size(); ++i)
      bg_idx.push_back(static_cast<std::size_t>(rng.integer(0, static_cast<int64_t>(train.size()) - 1)));
    auto covers = train.batch(idx, cfg.model.image_size);
    auto backgrounds = train.batch(bg_idx, cfg.canvas_size);
    auto msgs = random_bits(rng, static_cast<int>(idx.size()), cfg.model.message_bits);
    return stage23_loss(cfg, runner.models(), stage, covers, backgrounds, msgs,
                        ramped(specs, sc.warmup, runner.state().batches), rng);
  };
  auto eval_fn = [&]() { return image_eval(cfg, runner.models(), val.get()); };
  return runner.run(per_pass * sc.repeats, batch_fn, eval_fn);
}

}  // namespace

StageResult run_stage1(const TrainConfig& cfg, const fs::path& run_dir, const RunOptions& opts) {
  cfg.validate();
  auto models = models::build_models(cfg.model, cfg.seed);
  const auto& sc = cfg.stage(1);
  const auto specs = cfg.pipeline(PipelineStage::I);
  StageRunner runner(cfg, 1, run_dir, std::move(models), opts);
  torch::Tensor fixed;
  if (cfg.overfit) {
    Rng fixed_rng(cfg.seed ^ 0xf17edULL);
    fixed = random_bits(fixed_rng, sc.batch_size, cfg.model.message_bits);
  }
  auto batch_fn = [&](int, int) {
    auto msgs = cfg.overfit ? fixed : random_bits(runner.rng(), sc.batch_size, cfg.model.message_bits);
    return stage1_loss(cfg, runner.models(), msgs, ramped(specs, sc.warmup, runner.state().batches), runner.rng());
  };
  auto eval_fn = [&]() {
    nlohmann::json j;
    if (cfg.overfit) {
      torch::NoGradGuard guard;
      runner.models().eval();
      auto bits = (runner.models().extractor.forward(runner.models().processor.forward(fixed)) > 0).to(torch::kFloat);
      j["batch_ber"] = (bits != fixed).to(torch::kFloat).mean().item<double>();
    }
    const auto e = stage1_eval(cfg, runner.models(), specs);
    j["ber_clean"] = e.clean;
    j["ber_distorted"] = e.distorted;
    return j;
  };
  return runner.run(sc.steps_per_epoch, batch_fn, eval_fn);
}

StageResult run_stage2(const TrainConfig& cfg, const fs::path& run_dir, const fs::path& stage1_ckpt,
                       const RunOptions& opts) {
  return run_stage23(cfg, 2, run_dir, stage1_ckpt, opts);
}

StageResult run_stage3(const TrainConfig& cfg, const fs::path& run_dir, const fs::path& stage2_ckpt,
                       const RunOptions& opts) {
  return run_stage23(cfg, 3, run_dir, stage2_ckpt, opts);
}

std::vector<StageResult> run_stages(const TrainConfig& cfg, const fs::path& run_dir, const std::vector<int>& stages,
                                    const RunOptions& opts) {
  std::vector<StageResult> out;
  fs::path prev;
  for (int s : stages) {
    if (s == 1) {
      out.push_back(run_stage1(cfg, run_dir, opts));
    } else {
      if (prev.empty()) prev = final_checkpoint(run_dir, s - 1);
      out.push_back(s == 2 ? run_stage2(cfg, run_dir, prev, opts) : run_stage3(cfg, run_dir, prev, opts));
    }
    prev = out.back().checkpoint;
  }
  return out;
}

std::vector<EpochMeans> read_epoch_log(const fs::path& run_dir, int stage) {
  std::ifstream in(log_path(run_dir));
  if (!in) throw MissingArtifactError("no training log in " + run_dir.string());
  std::map<int, EpochMeans> by_epoch;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    if (j.value("type", "") != "epoch" || j.value("stage", 0) != stage) continue;
    // A resumed run rewrites later epochs; the last record wins.
    by_epoch[j.at("epoch").get<int>()] = j.at("means").get<EpochMeans>();
  }
  std::vector<EpochMeans> out;
  for (auto& [e, m] : by_epoch) out.push_back(std::move(m));
  return out;
}

}  // namespace aparecium::train
