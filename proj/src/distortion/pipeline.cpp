#include "aparecium/distortion/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <yaml-cpp/yaml.h>

#include "aparecium/core/errors.hpp"
#include "aparecium/distortion/jpeg.hpp"
#include "aparecium/distortion/pixel_ops.hpp"

namespace aparecium::distort {

namespace {

struct Entry {
  std::string name;
  DistortionKind kind;
  std::map<std::string, Range> defaults;
  std::map<std::string, Range> bounds;  // training caps
};

const std::vector<Entry>& registry() {
  static const std::vector<Entry> kEntries = {
      {"random_erase", DistortionKind::Pixel,
       {{"area", {0.02, 0.33}}, {"aspect", {0.3, 3.3}}},
       {{"area", {0.02, 0.33}}, {"aspect", {0.3, 3.3}}}},
      {"perspective", DistortionKind::Spatial, {{"scale", {0.0, 0.7}}}, {{"scale", {0.0, 0.7}}}},
      {"affine", DistortionKind::Spatial,
       {{"rotation", {0.0, 15.0}}, {"scale", {1.0, 2.0}}, {"translate", {0.0, 0.3}}},
       {{"rotation", {0.0, 15.0}}, {"scale", {0.15, 2.0}}, {"translate", {0.0, 0.3}}}},
      {"translation", DistortionKind::Spatial, {{"fraction", {0.0, 0.3}}}, {{"fraction", {0.0, 0.3}}}},
      {"compose", DistortionKind::Compose, {}, {}},
      {"brightness", DistortionKind::Pixel, {{"factor", {0.0, 0.3}}}, {{"factor", {0.0, 0.3}}}},
      {"contrast", DistortionKind::Pixel, {{"factor", {0.0, 0.3}}}, {{"factor", {0.0, 0.3}}}},
      {"saturation", DistortionKind::Pixel, {{"factor", {0.0, 0.3}}}, {{"factor", {0.0, 0.3}}}},
      {"hue", DistortionKind::Pixel, {{"factor", {0.0, 0.1}}}, {{"factor", {0.0, 0.1}}}},
      {"gaussian_blur", DistortionKind::Pixel,
       {{"kernel", {3.0, 3.0}}, {"sigma", {0.1, 1.0}}},
       {{"kernel", {3.0, 3.0}}, {"sigma", {0.1, 1.0}}}},
      {"motion_blur", DistortionKind::Pixel,
       {{"kernel", {3.0, 3.0}}, {"angle", {0.0, 360.0}}},
       {{"kernel", {3.0, 3.0}}, {"angle", {0.0, 360.0}}}},
      {"gaussian_noise", DistortionKind::Pixel,
       {{"variance", {0.05, 0.05}}, {"mean", {0.0, 0.0}}},
       {{"variance", {0.0, 0.05}}, {"mean", {0.0, 0.0}}}},
      {"jpeg", DistortionKind::Pixel, {{"quality", {50.0, 100.0}}}, {{"quality", {50.0, 100.0}}}},
      {"jpeg_codec", DistortionKind::Pixel, {{"quality", {50.0, 100.0}}}, {{"quality", {50.0, 100.0}}}},
  };
  return kEntries;
}

const Entry& lookup(const std::string& name) {
  for (const auto& e : registry()) {
    if (e.name == name) return e;
  }
  std::string valid;
  for (const auto& e : registry()) valid += (valid.empty() ? "" : ", ") + e.name;
  throw ConfigError("unknown distortion '" + name + "' (valid: " + valid + ")");
}

double signed_magnitude(Range r, Rng& rng) {
  const double m = rng.uniform(r.lo, r.hi);
  return rng.bernoulli(0.5) ? m : -m;
}

int odd_kernel(double v) {
  const int k = static_cast<int>(std::lround(v));
  return k % 2 == 0 ? k + 1 : k;
}

const std::vector<std::string> kPixelOrder = {"brightness",    "contrast",    "saturation",     "hue",
                                              "gaussian_blur", "motion_blur", "gaussian_noise", "jpeg"};

}  // namespace

Range DistortionSpec::param(const std::string& key) const {
  auto it = params.find(key);
  if (it == params.end()) throw ConfigError("distortion '" + name + "' is missing parameter '" + key + "'");
  return it->second;
}

DistortionKind DistortionSpec::kind() const { return lookup(name).kind; }

std::string to_string(PipelineStage stage) {
  switch (stage) {
    case PipelineStage::I: return "I";
    case PipelineStage::II: return "II";
    case PipelineStage::Eval: return "eval";
    case PipelineStage::Combined: return "combined";
  }
  return "?";
}

PipelineStage stage_from_string(const std::string& s) {
  if (s == "I" || s == "1") return PipelineStage::I;
  if (s == "II" || s == "2") return PipelineStage::II;
  if (s == "eval") return PipelineStage::Eval;
  if (s == "combined") return PipelineStage::Combined;
  throw ConfigError("unknown pipeline stage '" + s + "'");
}

const std::vector<std::string>& distortion_names() {
  static const std::vector<std::string> kNames = [] {
    std::vector<std::string> out;
    for (const auto& e : registry()) out.push_back(e.name);
    return out;
  }();
  return kNames;
}

DistortionSpec default_spec(const std::string& name) {
  const auto& e = lookup(name);
  return {e.name, e.defaults, e.kind == DistortionKind::Compose ? 1.0 : 0.5};
}

void validate_spec(const DistortionSpec& spec, bool training_bounds) {
  const auto& e = lookup(spec.name);
  if (spec.probability < 0.0 || spec.probability > 1.0) {
    throw ConfigError("probability of '" + spec.name + "' must lie in [0,1]");
  }
  for (const auto& [key, def] : e.defaults) {
    const auto r = spec.param(key);
    if (r.lo > r.hi) throw ConfigError("empty range for " + spec.name + "." + key);
    if (training_bounds && !r.within(e.bounds.at(key))) {
      const auto& b = e.bounds.at(key);
      throw ConfigError(spec.name + "." + key + " must lie within [" + std::to_string(b.lo) + ", " +
                        std::to_string(b.hi) + "]");
    }
  }
  for (const auto& [key, r] : spec.params) {
    if (!e.defaults.contains(key)) throw ConfigError("distortion '" + spec.name + "' has no parameter '" + key + "'");
  }
}

std::vector<DistortionSpec> build_pipeline(PipelineStage stage, const PipelineOverrides& overrides) {
  std::vector<DistortionSpec> out;
  switch (stage) {
    case PipelineStage::I: {
      out.push_back(default_spec("random_erase"));
      out.push_back(default_spec("perspective"));
      out.push_back(default_spec("affine"));
      break;
    }
    case PipelineStage::II: {
      out.push_back(default_spec("perspective"));
      auto affine = default_spec("affine");
      affine.params["scale"] = {0.15, 1.0};
      out.push_back(affine);
      out.push_back(default_spec("compose"));
      for (const auto& n : kPixelOrder) out.push_back(default_spec(n));
      break;
    }
    case PipelineStage::Combined: {
      out.push_back(default_spec("perspective"));
      out.push_back(default_spec("translation"));
      for (const auto& n : kPixelOrder) out.push_back(default_spec(n));
      break;
    }
    case PipelineStage::Eval: {
      if (overrides.eval_distortion.empty()) throw ConfigError("eval pipeline needs a distortion name");
      out.push_back(eval_spec(overrides.eval_distortion, overrides.eval_strength));
      return out;
    }
  }
  for (auto& spec : out) {
    if (auto it = overrides.params.find(spec.name); it != overrides.params.end()) {
      for (const auto& [k, r] : it->second) spec.params[k] = r;
    }
    if (overrides.probability && spec.kind() != DistortionKind::Compose) spec.probability = *overrides.probability;
    validate_spec(spec, true);
  }
  return out;
}

DistortionSpec eval_spec(const std::string& name, double strength) {
  auto spec = default_spec(name);
  spec.probability = 1.0;
  const Range fixed{strength, strength};
  if (name == "brightness" || name == "contrast" || name == "saturation" || name == "hue") {
    spec.params["factor"] = fixed;
  } else if (name == "gaussian_noise") {
    spec.params["variance"] = {strength * strength, strength * strength};
  } else if (name == "jpeg" || name == "jpeg_codec") {
    spec.params["quality"] = fixed;
  } else if (name == "gaussian_blur") {
    spec.params["kernel"] = fixed;
    spec.params["sigma"] = {100.0, 100.0};
  } else if (name == "motion_blur") {
    spec.params["kernel"] = fixed;
  } else if (name == "perspective") {
    spec.params["scale"] = fixed;
  } else if (name == "translation") {
    spec.params["fraction"] = fixed;
  } else if (name == "random_erase") {
    spec.params["area"] = fixed;
    spec.params["aspect"] = {1.0, 1.0};
  } else {
    throw ConfigError("distortion '" + name + "' has no single-strength form");
  }
  validate_spec(spec, false);
  return spec;
}

std::optional<double> identity_strength(const std::string& name) {
  if (name == "gaussian_blur" || name == "motion_blur") return 1.0;
  if (name == "jpeg" || name == "jpeg_codec" || name == "random_erase") return std::nullopt;
  lookup(name);
  return 0.0;
}

std::vector<DistortionSpec> filter_kind(const std::vector<DistortionSpec>& specs, DistortionKind kind) {
  std::vector<DistortionSpec> out;
  std::copy_if(specs.begin(), specs.end(), std::back_inserter(out),
               [kind](const DistortionSpec& s) { return s.kind() == kind; });
  return out;
}

DistortionDraw sample_draw(const std::vector<DistortionSpec>& specs, const WarpGeometry& geo, Rng& rng) {
  DistortionDraw draw;
  draw.reserve(specs.size());
  for (const auto& spec : specs) {
    SampledDistortion s;
    s.name = spec.name;
    s.fired = spec.kind() == DistortionKind::Compose ? true : rng.bernoulli(spec.probability);
    if (!s.fired) {
      draw.push_back(std::move(s));
      continue;
    }
    const auto& n = spec.name;
    if (n == "random_erase") {
      auto box = sample_erase_box(geo.image_h, geo.image_w, spec.param("area"), spec.param("aspect"), rng);
      s.values = {{"x0", box.x0}, {"y0", box.y0}, {"w", box.w},
                  {"h", box.h},   {"area", box.area_frac}, {"aspect", box.aspect}};
    } else if (n == "perspective") {
      auto disp = sample_perspective_displacement(geo, spec.param("scale"), rng);
      s.forward = perspective_forward(geo, disp);
    } else if (n == "affine") {
      const double rot = signed_magnitude(spec.param("rotation"), rng);
      const auto sr = spec.param("scale");
      const double scale = rng.uniform(sr.lo, sr.hi);
      const double tx = signed_magnitude(spec.param("translate"), rng) * geo.frame_w;
      const double ty = signed_magnitude(spec.param("translate"), rng) * geo.frame_h;
      s.values = {{"rotation", rot}, {"scale", scale}, {"tx", tx}, {"ty", ty}};
      s.forward = affine_forward(geo, rot, scale, tx, ty);
    } else if (n == "translation") {
      const double tx = signed_magnitude(spec.param("fraction"), rng) * geo.frame_w;
      const double ty = signed_magnitude(spec.param("fraction"), rng) * geo.frame_h;
      s.values = {{"tx", tx}, {"ty", ty}};
      s.forward = affine_forward(geo, 0.0, 1.0, tx, ty);
    } else if (n == "brightness" || n == "contrast" || n == "saturation" || n == "hue") {
      s.values = {{"delta", signed_magnitude(spec.param("factor"), rng)}};
    } else if (n == "gaussian_blur") {
      const auto kr = spec.param("kernel");
      const auto sr = spec.param("sigma");
      s.values = {{"kernel", odd_kernel(rng.uniform(kr.lo, kr.hi))}, {"sigma", rng.uniform(sr.lo, sr.hi)}};
    } else if (n == "motion_blur") {
      const auto kr = spec.param("kernel");
      const auto ar = spec.param("angle");
      s.values = {{"kernel", odd_kernel(rng.uniform(kr.lo, kr.hi))}, {"angle", rng.uniform(ar.lo, ar.hi)}};
    } else if (n == "gaussian_noise") {
      const auto vr = spec.param("variance");
      const auto mr = spec.param("mean");
      s.values = {{"variance", rng.uniform(vr.lo, vr.hi)}, {"mean", rng.uniform(mr.lo, mr.hi)}};
      s.seed = rng.next_u64();
    } else if (n == "jpeg" || n == "jpeg_codec") {
      const auto qr = spec.param("quality");
      s.values = {{"quality", rng.uniform(qr.lo, qr.hi)}};
    }
    draw.push_back(std::move(s));
  }
  return draw;
}

WarpTransform spatial_warp(const DistortionDraw& draw, const WarpGeometry& geo) {
  cv::Matx33d forward = geo.placement();
  for (const auto& s : draw) {
    if (!s.fired || lookup(s.name).kind != DistortionKind::Spatial) continue;
    forward = s.forward * forward;
  }
  return WarpTransform::from_forward(forward);
}

torch::Tensor apply_draw(const torch::Tensor& img, const DistortionDraw& draw) {
  if (img.dim() != 4 || img.size(0) != 1) throw InputError("apply_draw expects a single 1×C×H×W sample");
  const int h = static_cast<int>(img.size(2));
  const int w = static_cast<int>(img.size(3));
  auto out = img;
  cv::Matx33d pending = cv::Matx33d::eye();
  bool has_pending = false;
  auto flush = [&] {
    if (!has_pending) return;
    out = warp_image(out, WarpTransform::from_forward(pending), h, w);
    pending = cv::Matx33d::eye();
    has_pending = false;
  };
  for (const auto& s : draw) {
    if (!s.fired) continue;
    const auto kind = lookup(s.name).kind;
    if (kind == DistortionKind::Compose) continue;
    if (kind == DistortionKind::Spatial) {
      pending = s.forward * pending;
      has_pending = true;
      continue;
    }
    flush();
    const auto& n = s.name;
    const auto& v = s.values;
    auto scalar = [&](const char* key) { return torch::full({1}, v.at(key), torch::kDouble); };
    if (n == "random_erase") {
      EraseBox box;
      box.x0 = static_cast<int>(v.at("x0"));
      box.y0 = static_cast<int>(v.at("y0"));
      box.w = static_cast<int>(v.at("w"));
      box.h = static_cast<int>(v.at("h"));
      out = erase(out, {box});
    } else if (n == "brightness") {
      if (v.at("delta") != 0.0) out = adjust_brightness(out, scalar("delta"));
    } else if (n == "contrast") {
      if (v.at("delta") != 0.0) out = adjust_contrast(out, scalar("delta"));
    } else if (n == "saturation") {
      if (v.at("delta") != 0.0) out = adjust_saturation(out, scalar("delta"));
    } else if (n == "hue") {
      if (v.at("delta") != 0.0) out = adjust_hue(out, scalar("delta"));
    } else if (n == "gaussian_blur") {
      const int k = static_cast<int>(v.at("kernel"));
      if (k > 1) out = gaussian_blur(out, k, std::vector<double>{v.at("sigma")});
    } else if (n == "motion_blur") {
      const int k = static_cast<int>(v.at("kernel"));
      if (k > 1) out = motion_blur(out, k, std::vector<double>{v.at("angle")});
    } else if (n == "gaussian_noise") {
      Rng noise_rng(s.seed);
      out = gaussian_noise(out, v.at("variance"), noise_rng, v.at("mean"));
    } else if (n == "jpeg") {
      out = simulated_jpeg(out, std::vector<double>{v.at("quality")});
    } else if (n == "jpeg_codec") {
      out = codec_jpeg(out, static_cast<int>(std::lround(v.at("quality"))));
    }
  }
  flush();
  return out;
}

torch::Tensor apply_pipeline(const torch::Tensor& batch, const std::vector<DistortionSpec>& specs, Rng& rng,
                             std::vector<DistortionDraw>* draws) {
  if (batch.dim() != 4) throw InputError("apply_pipeline expects B×C×H×W");
  const auto geo = WarpGeometry::in_place(static_cast<int>(batch.size(3)), static_cast<int>(batch.size(2)));
  std::vector<torch::Tensor> outs;
  outs.reserve(static_cast<std::size_t>(batch.size(0)));
  for (int64_t b = 0; b < batch.size(0); ++b) {
    auto draw = sample_draw(specs, geo, rng);
    outs.push_back(apply_draw(batch.narrow(0, b, 1), draw));
    if (draws) draws->push_back(std::move(draw));
  }
  return torch::cat(outs, 0);
}

void save_pipeline(const std::vector<DistortionSpec>& specs, const std::filesystem::path& path) {
  YAML::Emitter em;
  em << YAML::BeginMap << YAML::Key << "distortions" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : specs) {
    em << YAML::BeginMap;
    em << YAML::Key << "name" << YAML::Value << s.name;
    em << YAML::Key << "probability" << YAML::Value << s.probability;
    em << YAML::Key << "params" << YAML::Value << YAML::BeginMap;
    for (const auto& [k, r] : s.params) {
      em << YAML::Key << k << YAML::Value << YAML::Flow << YAML::BeginSeq << r.lo << r.hi << YAML::EndSeq;
    }
    em << YAML::EndMap << YAML::EndMap;
  }
  em << YAML::EndSeq << YAML::EndMap;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream(path) << em.c_str() << "\n";
}

std::vector<DistortionSpec> load_pipeline(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError("pipeline file not found: " + path.string());
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw ConfigError("malformed pipeline file " + path.string() + ": " + e.what());
  }
  std::vector<DistortionSpec> out;
  for (const auto& node : root["distortions"]) {
    DistortionSpec s;
    s.name = node["name"].as<std::string>();
    s.probability = node["probability"] ? node["probability"].as<double>() : 0.5;
    if (node["params"]) {
      for (const auto& kv : node["params"]) {
        const auto seq = kv.second;
        if (seq.IsSequence() && seq.size() == 2) {
          s.params[kv.first.as<std::string>()] = {seq[0].as<double>(), seq[1].as<double>()};
        } else {
          const double v = seq.as<double>();
          s.params[kv.first.as<std::string>()] = {v, v};
        }
      }
    }
    validate_spec(s, false);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace aparecium::distort
