#include "aparecium/eval/harness.hpp"

#include <algorithm>
#include <cmath>

#include "aparecium/core/errors.hpp"
#include "aparecium/core/metrics.hpp"
#include "aparecium/distortion/pipeline.hpp"

namespace aparecium::eval {

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

std::uint64_t cell_seed(std::uint64_t seed, const std::string& name, std::size_t strength_index, int image) {
  std::uint64_t h = mix(0xcbf29ce484222325ULL, seed);
  for (unsigned char c : name) h = mix(h, c);
  return mix(mix(h, strength_index), static_cast<std::uint64_t>(image));
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

/// Fills the aggregate fields of a row from per-image outcomes.
void summarize(SweepRow& row, const EvalSet& set, const std::vector<double>& bers, const std::vector<bool>& located) {
  row.n = static_cast<int>(bers.size());
  double sum = 0, sq = 0, pess = 0;
  int hits = 0;
  row.image_ber.clear();
  for (std::size_t i = 0; i < bers.size(); ++i) {
    const double b = located[i] ? bers[i] : 0.5;
    row.image_ber.push_back(b);
    pess += b;
    if (located[i]) {
      ++hits;
      sum += bers[i];
      sq += bers[i] * bers[i];
    }
  }
  row.locate_rate = row.n ? static_cast<double>(hits) / row.n : 0.0;
  row.mean_ber = hits ? sum / hits : 0.0;
  row.std_ber = hits ? std::sqrt(std::max(0.0, sq / hits - row.mean_ber * row.mean_ber)) : 0.0;
  row.pessimistic_ber = row.n ? pess / row.n : 0.0;
  row.p50_ber = quantile(row.image_ber, 0.5);
  row.p90_ber = quantile(row.image_ber, 0.9);
  double ps = 0, ss = 0;
  for (int i = 0; i < set.size(); ++i) {
    ps += set.psnr(i);
    ss += set.ssim(i);
  }
  row.mean_psnr = set.size() ? ps / set.size() : 0.0;
  row.mean_ssim = set.size() ? ss / set.size() : 0.0;
}

}  // namespace

int SweepResult::errors() const {
  int e = 0;
  for (const auto& r : rows) e += r.errors;
  return e;
}

std::string canonical_sweep_name(const std::string& name) {
  if (name == "jpeg") return "jpeg_codec";
  if (name == "noise") return "gaussian_noise";
  if (name == "blur") return "gaussian_blur";
  return name;
}

const std::vector<std::string>& sweep_distortions() {
  static const std::vector<std::string> kNames = {"brightness",    "contrast",      "saturation",  "hue",
                                                  "gaussian_noise", "jpeg_codec",   "gaussian_blur", "motion_blur",
                                                  "perspective",   "translation"};
  return kNames;
}

std::vector<double> default_strengths(const std::string& distortion) {
  const auto name = canonical_sweep_name(distortion);
  auto linspace = [](double lo, double hi) {
    std::vector<double> v;
    for (int i = 0; i < 5; ++i) v.push_back(lo + (hi - lo) * i / 4.0);
    return v;
  };
  if (name == "brightness" || name == "contrast" || name == "saturation") return linspace(0.0, 0.3);
  if (name == "hue") return linspace(0.0, 0.1);
  if (name == "gaussian_noise") return linspace(0.0, std::sqrt(0.05));
  if (name == "jpeg_codec") return linspace(100.0, 50.0);
  if (name == "gaussian_blur" || name == "motion_blur") return {1.0, 3.0, 5.0, 7.0, 9.0};
  if (name == "perspective") return linspace(0.0, 0.7);
  if (name == "translation") return linspace(0.0, 0.3);
  distort::default_spec(name);  // unknown names -> ConfigError with the valid list
  throw ConfigError("distortion '" + name + "' cannot be swept");
}

std::vector<SweepSpec> EvalConfig::sweeps() const {
  std::vector<SweepSpec> out;
  for (const auto& d : distortions) {
    const auto name = canonical_sweep_name(d);
    SweepSpec s;
    s.distortion = name;
    auto it = strengths.find(name);
    s.strengths = it != strengths.end() ? it->second : default_strengths(name);
    s.n_images = n_images;
    s.seed = seed;
    out.push_back(std::move(s));
  }
  return out;
}

void EvalConfig::set(const std::string& key, const std::string& value) {
  if (key == "eval.n_images") n_images = static_cast<int>(kv_int(key, value));
  else if (key == "eval.quality_images") quality_images = static_cast<int>(kv_int(key, value));
  else if (key == "eval.seed") seed = static_cast<std::uint64_t>(kv_int(key, value));
  else if (key == "eval.combined") combined = kv_bool(key, value);
  else if (key == "eval.combined_probability") combined_probability = kv_double(key, value);
  else if (key == "eval.distortions") {
    distortions.clear();
    std::string item;
    for (char c : value + ",") {
      if (c == ',' || c == ' ' || c == '[' || c == ']') {
        if (!item.empty()) distortions.push_back(canonical_sweep_name(item));
        item.clear();
      } else {
        item += c;
      }
    }
    for (const auto& d : distortions) default_strengths(d);
  } else if (key.rfind("eval.strengths.", 0) == 0) {
    const auto name = canonical_sweep_name(key.substr(15));
    default_strengths(name);
    strengths[name] = kv_doubles(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

KeyValues EvalConfig::to_kv() const {
  KeyValues kv;
  kv["eval.n_images"] = std::to_string(n_images);
  kv["eval.quality_images"] = std::to_string(quality_images);
  kv["eval.seed"] = std::to_string(seed);
  kv["eval.combined"] = combined ? "true" : "false";
  if (combined_probability) kv["eval.combined_probability"] = kv_format(*combined_probability);
  std::string names;
  for (const auto& d : distortions) names += (names.empty() ? "" : ",") + d;
  kv["eval.distortions"] = names;
  for (const auto& [k, v] : strengths) kv["eval.strengths." + k] = kv_format(v);
  return kv;
}

EvalSet::EvalSet(const infer::Watermarker& w, train::ImageFolder& folder, int n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("evaluation needs at least one image");
  const int count = std::min<int>(n, static_cast<int>(folder.size()));
  const int side = w.config().image_size;
  for (int i = 0; i < count; ++i) {
    messages_.push_back(random_message(seed * 1000003ULL + static_cast<std::uint64_t>(i), w.message_bits()));
    covers_.emplace_back(folder.image(static_cast<std::size_t>(i), side));
    auto emb = w.embed(covers_.back(), messages_.back());
    encoded_.push_back(emb.encoded);
    psnr_.push_back(emb.psnr);
    ssim_.push_back(emb.ssim);
  }
}

QualityResult run_quality_eval(const infer::Watermarker& w, const EvalSet& set) {
  QualityResult q;
  q.n = set.size();
  double located = 0;
  for (int i = 0; i < set.size(); ++i) {
    q.mean_psnr += set.psnr(i);
    q.mean_ssim += set.ssim(i);
    const auto r = w.extract(set.encoded(i));
    if (r.located) {
      ++located;
      q.mean_ber += ber(set.message(i), *r.message);
    }
  }
  if (q.n) {
    q.mean_psnr /= q.n;
    q.mean_ssim /= q.n;
    q.locate_rate = located / q.n;
  }
  q.mean_ber = located ? q.mean_ber / located : 0.0;
  return q;
}

SweepResult run_digital_sweep(const infer::Watermarker& w, const EvalSet& set, const std::vector<SweepSpec>& specs) {
  SweepResult result;
  for (const auto& spec : specs) {
    const auto name = canonical_sweep_name(spec.distortion);
    default_strengths(name);
    if (spec.strengths.empty()) throw ConfigError("sweep '" + name + "' has no strengths");
    const int n = std::min(spec.n_images, set.size());
    for (std::size_t si = 0; si < spec.strengths.size(); ++si) {
      SweepRow row;
      row.distortion = name;
      row.strength = spec.strengths[si];
      const auto pipeline = std::vector<distort::DistortionSpec>{distort::eval_spec(name, row.strength)};
      std::vector<double> bers;
      std::vector<bool> located;
      for (int i = 0; i < n; ++i) {
        try {
          Rng rng(cell_seed(spec.seed, name, si, i));
          const ImageTensor photo(distort::apply_pipeline(set.encoded(i).batched(), pipeline, rng)[0]);
          const auto r = w.extract(photo);
          located.push_back(r.located);
          bers.push_back(r.located ? ber(set.message(i), *r.message) : 0.5);
        } catch (const std::exception&) {
          ++row.errors;
          located.push_back(false);
          bers.push_back(0.5);
        }
      }
      summarize(row, set, bers, located);
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

SweepRow run_combined_distortion_eval(const infer::Watermarker& w, const EvalSet& set, std::uint64_t seed,
                                      std::optional<double> probability) {
  distort::PipelineOverrides o;
  o.probability = probability;
  const auto pipeline = distort::build_pipeline(distort::PipelineStage::Combined, o);
  SweepRow row;
  row.distortion = "combined";
  std::vector<double> bers;
  std::vector<bool> located;
  for (int i = 0; i < set.size(); ++i) {
    try {
      Rng rng(cell_seed(seed, "combined", 0, i));
      const ImageTensor photo(distort::apply_pipeline(set.encoded(i).batched(), pipeline, rng)[0]);
      const auto r = w.extract(photo);
      located.push_back(r.located);
      bers.push_back(r.located ? ber(set.message(i), *r.message) : 0.5);
    } catch (const std::exception&) {
      ++row.errors;
      located.push_back(false);
      bers.push_back(0.5);
    }
  }
  summarize(row, set, bers, located);
  return row;
}

}  // namespace aparecium::eval
