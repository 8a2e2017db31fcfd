#include "doctest_torch.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "aparecium/core/errors.hpp"
#include "aparecium/core/message.hpp"
#include "aparecium/eval/harness.hpp"
#include "aparecium/eval/report.hpp"
#include "aparecium/inference/watermarker.hpp"
#include "aparecium/training/dataset.hpp"
#include "helpers.hpp"

using namespace aparecium;
using namespace aparecium::infer;
namespace fs = std::filesystem;
using testing_support::random_image;
using testing_support::tiny_model;

namespace {

/// Pins the locator output to all-foreground (+1) or all-background (-1).
void force_locator(models::ModelSet& m, int sign) {
  torch::NoGradGuard ng;
  for (auto& p : m.locator.net->named_parameters()) {
    if (p.key().ends_with("fuse.weight")) p.value().zero_();
    if (p.key().ends_with("fuse.bias")) p.value().fill_(50.0 * sign);
  }
}

Watermarker tiny_watermarker(int locator_sign = 0, std::uint64_t seed = 3) {
  auto m = models::build_models(tiny_model(), seed);
  if (locator_sign != 0) force_locator(m, locator_sign);
  return Watermarker(std::move(m));
}

class PassThrough : public models::Net {
 public:
  torch::Tensor forward(const torch::Tensor& x) override { return x.narrow(1, 0, 3); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct EvalFixture {
  fs::path data = testing_support::fresh_dir("eval_data");
  train::ImageFolder folder;
  EvalFixture() : folder(train::synth_images(data, 4, 40, 11), false) {}
};

}  // namespace

TEST_SUITE("inference_pipeline") {
  TEST_CASE("embed is deterministic and does not touch the cover") {
    auto w = tiny_watermarker();
    ImageTensor cover(random_image(1, 3, 32, 32));
    auto before = cover.tensor().clone();
    auto msg = random_message(5, 16);
    auto a = w.embed(cover, msg);
    auto b = w.embed(cover, msg);
    CHECK(torch::equal(a.encoded.tensor(), b.encoded.tensor()));
    CHECK(torch::equal(cover.tensor(), before));
    CHECK(a.encoded.tensor().sizes() == cover.tensor().sizes());
    CHECK(std::isfinite(a.psnr));
    CHECK(a.warnings.empty());

    auto c = w.embed(cover, msg.complemented());
    CHECK_FALSE(torch::equal(a.encoded.tensor(), c.encoded.tensor()));
  }

  TEST_CASE("embed handles gray covers and arbitrary sizes") {
    auto w = tiny_watermarker();
    auto msg = random_message(6, 16);
    auto gray = w.embed(ImageTensor(random_image(2, 1, 50, 70)), msg);
    CHECK(gray.encoded.channels() == 3);
    CHECK(gray.encoded.height() == 50);
    CHECK(gray.encoded.width() == 70);
    REQUIRE(gray.warnings.size() == 1);
    CHECK(gray.warnings[0].find("grayscale") != std::string::npos);
    CHECK(gray.encoded.tensor().min().item<float>() >= 0.0f);
    CHECK(gray.encoded.tensor().max().item<float>() <= 1.0f);
  }

  TEST_CASE("wrong message length is an input error") {
    auto w = tiny_watermarker();
    CHECK_THROWS_AS(w.embed(ImageTensor(random_image(1, 3, 32, 32)), random_message(1, 20)), InputError);
    CHECK_THROWS_AS(w.pattern_of(random_message(1, 8)), InputError);
  }

  TEST_CASE("extract is deterministic") {
    auto w = tiny_watermarker(+1);
    ImageTensor photo(random_image(4, 3, 48, 40));
    auto a = w.extract(photo);
    auto b = w.extract(photo);
    REQUIRE(a.located);
    REQUIRE(a.message.has_value());
    CHECK((*a.message == *b.message));
    CHECK(a.scores->logits == b.scores->logits);
    CHECK(torch::equal(a.mask.tensor(), b.mask.tensor()));
  }

  TEST_CASE("an all-foreground mask decodes the whole photo") {
    auto w = tiny_watermarker(+1);
    ImageTensor photo(random_image(7, 3, 48, 40));
    auto located = w.extract(photo);
    REQUIRE(located.located);
    CHECK(located.foreground == doctest::Approx(1.0));
    CHECK((*located.crop_box == CropBox{0, 0, 40, 48}));
    auto boxed = w.extract_with_gt_box(photo, {0, 0, 40, 48});
    CHECK(boxed.scores->logits == located.scores->logits);
  }

  TEST_CASE("an empty mask means not located") {
    auto w = tiny_watermarker(-1);
    ImageTensor photo(random_image(8, 3, 40, 40));
    auto r = w.extract(photo);
    CHECK_FALSE(r.located);
    CHECK(r.foreground == 0.0);
    CHECK_FALSE(r.crop_box.has_value());
    CHECK_FALSE(r.message.has_value());
    CHECK_FALSE(r.scores.has_value());
    CHECK_FALSE(w.locate(photo).located);
  }

  TEST_CASE("gt box outside the photo is rejected") {
    auto w = tiny_watermarker();
    ImageTensor photo(random_image(9, 3, 40, 40));
    CHECK_THROWS_AS(w.extract_with_gt_box(photo, {0, 0, 41, 40}), InputError);
    CHECK_THROWS_AS(w.extract_with_gt_box(photo, {-1, 0, 10, 10}), InputError);
    CHECK_THROWS_AS(w.extract_with_gt_box(photo, {5, 5, 5, 10}), InputError);
  }
}

TEST_SUITE("evaluation_harness") {
  TEST_CASE("identity encoder gives infinite PSNR") {
    EvalFixture fx;
    auto m = models::build_models(tiny_model(), 3);
    m.encoder.net = std::make_shared<PassThrough>();
    Watermarker w(std::move(m));
    eval::EvalSet set(w, fx.folder, 3, 1);
    auto q = eval::run_quality_eval(w, set);
    CHECK(q.n == 3);
    CHECK(std::isinf(q.mean_psnr));
    CHECK(q.mean_ssim == doctest::Approx(1.0));
  }

  TEST_CASE("unknown distortions are config errors") {
    EvalFixture fx;
    auto w = tiny_watermarker(+1);
    eval::EvalSet set(w, fx.folder, 2, 1);
    CHECK_THROWS_AS(eval::run_digital_sweep(w, set, {{"sharpen", {1.0}, 2, 0}}), ConfigError);
    CHECK_THROWS_AS(eval::default_strengths("sharpen"), ConfigError);
    eval::EvalConfig cfg;
    CHECK_THROWS_AS(cfg.set("eval.bogus", "1"), ConfigError);
  }

  TEST_CASE("aliases and default strengths") {
    CHECK(eval::canonical_sweep_name("jpeg") == "jpeg_codec");
    CHECK(eval::canonical_sweep_name("noise") == "gaussian_noise");
    CHECK(eval::canonical_sweep_name("blur") == "gaussian_blur");
    CHECK(eval::default_strengths("jpeg_codec") == std::vector<double>{100, 87.5, 75, 62.5, 50});
    CHECK(eval::default_strengths("gaussian_blur") == std::vector<double>{1, 3, 5, 7, 9});
    for (const auto& d : eval::sweep_distortions()) CHECK(eval::default_strengths(d).size() == 5);
  }

  TEST_CASE("strength-zero cells match the undistorted result") {
    EvalFixture fx;
    auto w = tiny_watermarker(+1);
    eval::EvalSet set(w, fx.folder, 3, 2);
    auto q = eval::run_quality_eval(w, set);
    for (const auto& d : eval::sweep_distortions()) {
      if (d == "jpeg_codec") continue;
      CAPTURE(d);
      auto r = eval::run_digital_sweep(w, set, {{d, {eval::default_strengths(d)[0]}, 3, 0}});
      REQUIRE(r.rows.size() == 1);
      CHECK(r.rows[0].errors == 0);
      CHECK(r.rows[0].locate_rate == 1.0);
      CHECK(r.rows[0].mean_ber == q.mean_ber);
    }
  }

  TEST_CASE("combined pipeline with zero probability is undistorted") {
    EvalFixture fx;
    auto w = tiny_watermarker(+1);
    eval::EvalSet set(w, fx.folder, 3, 2);
    auto q = eval::run_quality_eval(w, set);
    auto zero = eval::run_combined_distortion_eval(w, set, 9, 0.0);
    CHECK(zero.distortion == "combined");
    CHECK(zero.mean_ber == q.mean_ber);
    auto a = eval::run_combined_distortion_eval(w, set, 9);
    auto b = eval::run_combined_distortion_eval(w, set, 9);
    CHECK(a.image_ber == b.image_ber);
    CHECK(a.p50_ber <= a.p90_ber);
  }

  TEST_CASE("report files are complete and reproducible") {
    EvalFixture fx;
    auto w = tiny_watermarker(+1);
    eval::EvalSet set(w, fx.folder, 2, 2);
    eval::EvalConfig cfg;
    cfg.distortions = {"jpeg_codec", "gaussian_noise"};
    cfg.n_images = 2;
    eval::Report rep;
    rep.quality = eval::run_quality_eval(w, set);
    rep.sweeps = eval::run_digital_sweep(w, set, cfg.sweeps());
    rep.combined = eval::run_combined_distortion_eval(w, set, 4);
    CHECK(rep.sweeps.rows.size() == 10);
    CHECK(rep.sweeps.errors() == 0);

    auto out1 = testing_support::fresh_dir("report1");
    auto out2 = testing_support::fresh_dir("report2");
    auto files = eval::emit_report(rep, out1);
    eval::emit_report(rep, out2);
    for (const char* name : {"sweep_jpeg_codec.csv", "sweep_gaussian_noise.csv", "plot_jpeg_codec.png",
                             "plot_gaussian_noise.png", "all_sweeps.csv", "combined.csv", "summary.md"}) {
      CAPTURE(name);
      REQUIRE(fs::exists(out1 / name));
      CHECK(fs::file_size(out1 / name) > 0);
      CHECK(slurp(out1 / name) == slurp(out2 / name));
    }
    CHECK_FALSE(fs::exists(out1 / "sweep_brightness.csv"));

    std::istringstream csv(slurp(out1 / "sweep_jpeg_codec.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == eval::kSweepCsvHeader);
    int rows = 0;
    while (std::getline(csv, line)) rows += line.empty() ? 0 : 1;
    CHECK(rows == 5);
    CHECK(slurp(out1 / "all_sweeps.csv").find("p90_ber") != std::string::npos);
    CHECK(files.size() >= 7);
  }
}
