#include "aparecium/training/config.hpp"

#include "aparecium/core/errors.hpp"

namespace aparecium::train {

StageConfig StageConfig::defaults(int stage) {
  StageConfig c;
  c.stage = stage;
  switch (stage) {
    case 1:
      c.epochs = 20;
      c.batch_size = 32;
      c.lr = 1e-3;
      c.accumulate_every = 1;
      c.lambdas = {0.0, 0.0, 0.0, 1.0};
      break;
    case 2:
      c.epochs = 14;
      c.batch_size = 10;
      c.lr = 1e-3;
      c.accumulate_every = 2;
      c.lambdas = {1.0, 1.0, 1.0, 0.0};
      break;
    case 3:
      c.epochs = 20;
      c.batch_size = 10;
      c.lr = 1e-4;
      c.accumulate_every = 2;
      c.lambdas = {10.0, 1.0, 1.0, 1.0};
      break;
    default: throw ConfigError("stage must be 1, 2 or 3");
  }
  return c;
}

TrainConfig TrainConfig::paper() { return TrainConfig{}; }

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.profile = "desk";
  c.model = models::ModelConfig::desk();
  c.canvas_size = 224;
  for (int s = 1; s <= 3; ++s) c.stage(s).epochs = 2;
  c.stage(1).steps_per_epoch = 800;
  c.stage(1).warmup = 600;
  c.stage(2).repeats = 20;
  c.stage(2).warmup = 200;
  c.stage(3).repeats = 20;
  c.eval_messages = 128;
  return c;
}

TrainConfig TrainConfig::for_profile(const std::string& name) {
  if (name == "paper") return paper();
  if (name == "desk") return desk();
  throw ConfigError("unknown profile '" + name + "' (valid: desk, paper)");
}

distort::CompositeOptions TrainConfig::composite_options() const {
  distort::CompositeOptions o;
  o.canvas_size = canvas_size;
  o.mask_size = model.locator_size;
  o.pattern_size = model.pattern_size;
  o.min_footprint = min_footprint;
  o.fill_canvas = fill_canvas;
  return o;
}

std::vector<distort::DistortionSpec> TrainConfig::pipeline(distort::PipelineStage stage) const {
  if (!distortions_enabled) return {};
  return distort::build_pipeline(stage, distortions);
}

namespace {

const char* kLambdaKeys[4] = {"l1", "l2", "l3", "l4"};

bool set_stage_key(StageConfig& s, const std::string& key, const std::string& full, const std::string& value) {
  if (key == "epochs") s.epochs = static_cast<int>(kv_int(full, value));
  else if (key == "batch_size") s.batch_size = static_cast<int>(kv_int(full, value));
  else if (key == "lr") s.lr = kv_double(full, value);
  else if (key == "weight_decay") s.weight_decay = kv_double(full, value);
  else if (key == "accumulate_every") s.accumulate_every = static_cast<int>(kv_int(full, value));
  else if (key == "steps_per_epoch") s.steps_per_epoch = static_cast<int>(kv_int(full, value));
  else if (key == "repeats") s.repeats = static_cast<int>(kv_int(full, value));
  else if (key == "warmup") s.warmup = static_cast<int>(kv_int(full, value));
  else if (key.rfind("lambdas.", 0) == 0) {
    const auto l = key.substr(8);
    for (int i = 0; i < 4; ++i) {
      if (l == kLambdaKeys[i]) {
        s.lambdas[static_cast<std::size_t>(i)] = kv_double(full, value);
        return true;
      }
    }
    return false;
  } else return false;
  return true;
}

bool set_model_key(models::ModelConfig& m, const std::string& key, const std::string& full, const std::string& value) {
  if (key == "message_bits") m.message_bits = static_cast<int>(kv_int(full, value));
  else if (key == "pattern_size") m.pattern_size = static_cast<int>(kv_int(full, value));
  else if (key == "image_size") m.image_size = static_cast<int>(kv_int(full, value));
  else if (key == "locator_size") m.locator_size = static_cast<int>(kv_int(full, value));
  else if (key == "processor_channels") m.processor_channels = kv_ints(full, value);
  else if (key == "encoder_base") m.encoder_base = static_cast<int>(kv_int(full, value));
  else if (key == "encoder_levels") m.encoder_levels = static_cast<int>(kv_int(full, value));
  else if (key == "encoder_cover_skip") m.encoder_cover_skip = kv_bool(full, value);
  else if (key == "decoder_base") m.decoder_base = static_cast<int>(kv_int(full, value));
  else if (key == "decoder_levels") m.decoder_levels = static_cast<int>(kv_int(full, value));
  else if (key == "locator_variant") m.locator_variant = value;
  else if (key == "extractor_family") m.extractor_family = value;
  else if (key == "extractor_depths") m.extractor_depths = kv_ints(full, value);
  else if (key == "extractor_dims") m.extractor_dims = kv_ints(full, value);
  else return false;
  return true;
}

}  // namespace

void TrainConfig::set(const std::string& key, const std::string& value) {
  auto after = [&](const std::string& prefix) { return key.substr(prefix.size()); };
  auto starts = [&](const std::string& prefix) { return key.rfind(prefix, 0) == 0; };
  bool ok = true;
  if (key == "profile") profile = value;
  else if (key == "seed") seed = static_cast<std::uint64_t>(kv_int(key, value));
  else if (key == "dataset.root") dataset_root = value;
  else if (key == "dataset.train_list") train_list = value;
  else if (key == "dataset.val_list") val_list = value;
  else if (key == "dataset.val_root") val_root = value;
  else if (key == "dataset.val_images") val_images = static_cast<int>(kv_int(key, value));
  else if (key == "dataset.cache") cache_images = kv_bool(key, value);
  else if (key == "compose.canvas_size") canvas_size = static_cast<int>(kv_int(key, value));
  else if (key == "compose.min_footprint") min_footprint = kv_double(key, value);
  else if (key == "compose.fill_canvas") fill_canvas = kv_bool(key, value);
  else if (key == "train.overfit") overfit = kv_bool(key, value);
  else if (key == "train.eval_messages") eval_messages = static_cast<int>(kv_int(key, value));
  else if (key == "train.log_every") log_every = static_cast<int>(kv_int(key, value));
  else if (key == "distortions.enabled") distortions_enabled = kv_bool(key, value);
  else if (key == "distortions.probability") distortions.probability = kv_double(key, value);
  else if (starts("distortions.")) {
    const auto rest = after("distortions.");
    const auto dot = rest.find('.');
    if (dot == std::string::npos) throw ConfigError("config key '" + key + "' needs distortions.<name>.<param>");
    const auto name = rest.substr(0, dot);
    distort::default_spec(name);  // rejects unknown names with the valid list
    const auto v = kv_doubles(key, value);
    if (v.empty() || v.size() > 2) throw ConfigError("config key '" + key + "' takes one value or a lo,hi pair");
    distortions.params[name][rest.substr(dot + 1)] = {v.front(), v.back()};
  } else if (starts("model.")) ok = set_model_key(model, after("model."), key, value);
  else if (starts("lambdas.")) ok = set_stage_key(stage(3), key, key, value);
  else if (starts("stage1.")) ok = set_stage_key(stage(1), after("stage1."), key, value);
  else if (starts("stage2.")) ok = set_stage_key(stage(2), after("stage2."), key, value);
  else if (starts("stage3.")) ok = set_stage_key(stage(3), after("stage3."), key, value);
  else ok = false;
  if (!ok) throw ConfigError("unknown config key '" + key + "'");
}

void TrainConfig::apply(const KeyValues& kv) {
  for (const auto& [k, v] : kv) set(k, v);
}

KeyValues TrainConfig::to_kv() const {
  KeyValues kv;
  kv["profile"] = profile;
  kv["seed"] = std::to_string(seed);
  kv["dataset.root"] = dataset_root.string();
  kv["dataset.train_list"] = train_list.string();
  kv["dataset.val_list"] = val_list.string();
  kv["dataset.val_root"] = val_root.string();
  kv["dataset.val_images"] = std::to_string(val_images);
  kv["dataset.cache"] = cache_images ? "true" : "false";
  kv["compose.canvas_size"] = std::to_string(canvas_size);
  kv["compose.min_footprint"] = kv_format(min_footprint);
  kv["compose.fill_canvas"] = fill_canvas ? "true" : "false";
  kv["train.overfit"] = overfit ? "true" : "false";
  kv["train.eval_messages"] = std::to_string(eval_messages);
  kv["train.log_every"] = std::to_string(log_every);
  kv["distortions.enabled"] = distortions_enabled ? "true" : "false";
  if (distortions.probability) kv["distortions.probability"] = kv_format(*distortions.probability);
  for (const auto& [name, params] : distortions.params)
    for (const auto& [p, r] : params) kv["distortions." + name + "." + p] = kv_format(std::vector<double>{r.lo, r.hi});
  const auto& m = model;
  kv["model.message_bits"] = std::to_string(m.message_bits);
  kv["model.pattern_size"] = std::to_string(m.pattern_size);
  kv["model.image_size"] = std::to_string(m.image_size);
  kv["model.locator_size"] = std::to_string(m.locator_size);
  kv["model.processor_channels"] = kv_format(m.processor_channels);
  kv["model.encoder_base"] = std::to_string(m.encoder_base);
  kv["model.encoder_levels"] = std::to_string(m.encoder_levels);
  kv["model.encoder_cover_skip"] = m.encoder_cover_skip ? "true" : "false";
  kv["model.decoder_base"] = std::to_string(m.decoder_base);
  kv["model.decoder_levels"] = std::to_string(m.decoder_levels);
  kv["model.locator_variant"] = m.locator_variant;
  kv["model.extractor_family"] = m.extractor_family;
  kv["model.extractor_depths"] = kv_format(m.extractor_depths);
  kv["model.extractor_dims"] = kv_format(m.extractor_dims);
  for (int s = 1; s <= 3; ++s) {
    const auto& st = stage(s);
    const std::string p = "stage" + std::to_string(s) + ".";
    kv[p + "epochs"] = std::to_string(st.epochs);
    kv[p + "batch_size"] = std::to_string(st.batch_size);
    kv[p + "lr"] = kv_format(st.lr);
    kv[p + "weight_decay"] = kv_format(st.weight_decay);
    kv[p + "accumulate_every"] = std::to_string(st.accumulate_every);
    kv[p + "steps_per_epoch"] = std::to_string(st.steps_per_epoch);
    kv[p + "repeats"] = std::to_string(st.repeats);
    kv[p + "warmup"] = std::to_string(st.warmup);
    for (int i = 0; i < 4; ++i) kv[p + "lambdas." + kLambdaKeys[i]] = kv_format(st.lambdas[static_cast<std::size_t>(i)]);
  }
  return kv;
}

void TrainConfig::validate() const {
  for (int s = 1; s <= 3; ++s) {
    const auto& st = stage(s);
    const std::string p = "stage" + std::to_string(s);
    if (st.epochs < 0) throw ConfigError(p + ".epochs must be >= 0");
    if (st.batch_size < 1) throw ConfigError(p + ".batch_size must be >= 1");
    if (st.accumulate_every < 1) throw ConfigError(p + ".accumulate_every must be >= 1");
    if (st.lr <= 0) throw ConfigError(p + ".lr must be positive");
    if (st.weight_decay < 0) throw ConfigError(p + ".weight_decay must be >= 0");
    if (st.steps_per_epoch < 1) throw ConfigError(p + ".steps_per_epoch must be >= 1");
    if (st.repeats < 1) throw ConfigError(p + ".repeats must be >= 1");
    if (st.warmup < 0) throw ConfigError(p + ".warmup must be >= 0");
    for (double l : st.lambdas)
      if (l < 0) throw ConfigError(p + ".lambdas must be non-negative");
  }
  if (canvas_size < model.image_size) throw ConfigError("compose.canvas_size must be >= model.image_size");
  if (min_footprint < 0 || min_footprint >= 1) throw ConfigError("compose.min_footprint must be in [0,1)");
  if (model.message_bits < 1) throw ConfigError("model.message_bits must be >= 1");
  for (auto st : {distort::PipelineStage::I, distort::PipelineStage::II}) pipeline(st);
}

}  // namespace aparecium::train
