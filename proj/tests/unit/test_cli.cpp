#include "doctest_torch.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aparecium/cli/commands.hpp"
#include "aparecium/cli/kv_config.hpp"
#include "aparecium/core/errors.hpp"
#include "aparecium/core/image_io.hpp"
#include "aparecium/core/message.hpp"
#include "aparecium/models/checkpoint.hpp"
#include "helpers.hpp"

using namespace aparecium;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Tiny-model training settings that finish in seconds.
const char* kTinyYaml = R"(model:
  message_bits: 16
  pattern_size: 32
  image_size: 32
  locator_size: 32
  processor_channels: [32, 16, 16, 16]
  encoder_base: 8
  encoder_levels: 2
  decoder_base: 8
  decoder_levels: 2
  locator_variant: tiny
  extractor_depths: [1, 1, 1, 1]
  extractor_dims: [8, 16, 32, 64]
compose:
  canvas_size: 64
train:
  eval_messages: 4
stage1:
  epochs: 1
  steps_per_epoch: 2
  batch_size: 2
  warmup: 0
stage2:
  epochs: 1
  batch_size: 2
  repeats: 1
  warmup: 0
stage3:
  epochs: 1
  batch_size: 2
  repeats: 1
)";

fs::path tiny_config(const fs::path& dir) {
  auto p = dir / "tiny.yaml";
  std::ofstream(p) << kTinyYaml;
  return p;
}

/// Tiny checkpoint whose locator always (+1) or never (-1) fires.
fs::path forced_checkpoint(const fs::path& dir, int sign) {
  auto m = models::build_models(testing_support::tiny_model(), 5);
  {
    torch::NoGradGuard ng;
    for (auto& p : m.locator.net->named_parameters()) {
      if (p.key().ends_with("fuse.weight")) p.value().zero_();
      if (p.key().ends_with("fuse.bias")) p.value().fill_(50.0 * sign);
    }
  }
  models::save_checkpoint(m, {3, 1, m.config, {}}, dir);
  return dir;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 1") {
    CHECK(run({}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({"embed", "--cover", "x.png"}).code == 1);
    CHECK(run({"train", "--stage", "7"}).code == 1);
    CHECK(run({"--help"}).code == 0);
  }

  TEST_CASE("missing prerequisite checkpoint exits 2 and names it") {
    auto dir = testing_support::fresh_dir("cli_gate");
    auto data = dir / "data";
    REQUIRE(run({"synth-data", "--out", data.string(), "--count", "3", "--size", "40"}).code == 0);
    auto r = run({"train", "--stage", "2", "--run-dir", (dir / "run").string(), "--data", data.string(), "--config",
                  tiny_config(dir).string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("stage1") != std::string::npos);
    CHECK(r.err.find("--stage 1") != std::string::npos);

    auto missing = run({"embed", "--cover", (data / "img_0000.png").string(), "--message", "abcd", "--ckpt",
                        (dir / "nope").string(), "--out", (dir / "e.png").string()});
    CHECK(missing.code == 2);
    auto no_photo = run({"extract", "--photo", (dir / "absent.png").string(), "--ckpt", (dir / "nope").string()});
    CHECK(no_photo.code == 2);
  }

  TEST_CASE("unknown config keys exit 1") {
    auto dir = testing_support::fresh_dir("cli_badkey");
    auto r = run({"train", "--stage", "1", "--run-dir", (dir / "run").string(), "--set", "lambdas.l9=1"});
    CHECK(r.code == 1);
    CHECK(r.err.find("lambdas.l9") != std::string::npos);
    CHECK(run({"train", "--stage", "1", "--run-dir", (dir / "run").string(), "--set", "nonsense"}).code == 1);
  }

  TEST_CASE("synth-data writes the requested images") {
    auto dir = testing_support::fresh_dir("cli_synth");
    auto r = run({"synth-data", "--out", dir.string(), "--count", "3", "--size", "24", "--seed", "2"});
    REQUIRE(r.code == 0);
    for (int i = 0; i < 3; ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "img_%04d.png", i);
      auto img = load_image(dir / name);
      CHECK(img.channels() == 3);
      CHECK(img.height() == 24);
    }
  }

  TEST_CASE("training, embedding, extraction and evaluation end to end") {
    auto dir = testing_support::fresh_dir("cli_e2e");
    auto data = dir / "data";
    auto run_dir = dir / "run";
    REQUIRE(run({"synth-data", "--out", data.string(), "--count", "4", "--size", "40"}).code == 0);
    auto t = run({"train", "--stage", "all", "--run-dir", run_dir.string(), "--data", data.string(), "--config",
                  tiny_config(dir).string(), "--set", "lambdas.l1=5", "--seed", "3"});
    REQUIRE_MESSAGE(t.code == 0, t.err);
    auto summary = nlohmann::json::parse(t.out);
    REQUIRE(summary.size() == 3);
    CHECK(summary[2]["stage"] == 3);
    const auto resolved = slurp(run_dir / "resolved_config.yaml");
    CHECK(resolved.find("l1: 5") != std::string::npos);
    const fs::path ckpt = summary[2]["checkpoint"].get<std::string>();
    CHECK(models::read_manifest(ckpt).stage == 3);

    const std::string hex = "b3c5";
    auto e = run({"embed", "--cover", (data / "img_0001.png").string(), "--message", hex, "--ckpt", ckpt.string(),
                  "--out", (dir / "enc.png").string(), "--residual", (dir / "res.png").string(), "--json"});
    REQUIRE_MESSAGE(e.code == 0, e.err);
    auto ej = nlohmann::json::parse(e.out);
    CHECK(ej["out"] == (dir / "enc.png").string());
    CHECK(ej["psnr"].is_number());
    CHECK(ej["ssim"].is_number());
    CHECK(ej["warnings"].is_array());
    CHECK(load_image(dir / "enc.png").width() == 40);
    CHECK(fs::exists(dir / "res.png"));

    auto x = run({"extract", "--photo", (dir / "enc.png").string(), "--ckpt", ckpt.string(), "--truth", hex,
                  "--box", "0", "0", "40", "40", "--mask-out", (dir / "mask.png").string(), "--json"});
    REQUIRE_MESSAGE(x.code == 0, x.err);
    auto xj = nlohmann::json::parse(x.out);
    for (const char* k : {"located", "foreground", "crop_box", "mask_path", "message_hex", "ber_vs"})
      CHECK_MESSAGE(xj.contains(k), k);
    CHECK(xj["message_hex"].get<std::string>().size() == 4);
    CHECK(xj["ber_vs"].get<double>() >= 0.0);
    CHECK(fs::exists(dir / "mask.png"));
    auto x2 = run({"extract", "--photo", (dir / "enc.png").string(), "--ckpt", ckpt.string(), "--truth", hex,
                   "--box", "0", "0", "40", "40", "--json"});
    CHECK(nlohmann::json::parse(x2.out)["message_hex"] == xj["message_hex"]);

    auto bad_box = run({"extract", "--photo", (dir / "enc.png").string(), "--ckpt", ckpt.string(), "--box", "0",
                        "0", "80", "40"});
    CHECK(bad_box.code == 1);

    const auto before = slurp(ckpt / "manifest.json");
    auto ev = run({"evaluate", "--ckpt", ckpt.string(), "--data", data.string(), "--out", (dir / "eval").string(),
                   "--distortions", "jpeg,noise", "--n", "2", "--set", "eval.quality_images=2"});
    REQUIRE_MESSAGE(ev.code == 0, ev.err);
    CHECK(fs::exists(dir / "eval" / "sweep_jpeg_codec.csv"));
    CHECK(fs::exists(dir / "eval" / "sweep_gaussian_noise.csv"));
    CHECK_FALSE(fs::exists(dir / "eval" / "sweep_brightness.csv"));
    CHECK(fs::exists(dir / "eval" / "summary.md"));
    CHECK(slurp(ckpt / "manifest.json") == before);

    auto bad = run({"evaluate", "--ckpt", ckpt.string(), "--data", data.string(), "--out", (dir / "eval2").string(),
                    "--distortions", "sharpen"});
    CHECK(bad.code == 1);
  }

  TEST_CASE("stage 3 can start from a stage-2 checkpoint with new weights") {
    auto dir = testing_support::fresh_dir("cli_init");
    auto data = dir / "data";
    auto cfg = tiny_config(dir);
    REQUIRE(run({"synth-data", "--out", data.string(), "--count", "3", "--size", "40"}).code == 0);
    auto t = run({"train", "--stage", "all", "--run-dir", (dir / "a").string(), "--data", data.string(), "--config",
                  cfg.string()});
    REQUIRE_MESSAGE(t.code == 0, t.err);
    const auto s2 = dir / "a" / "stage2" / "final";
    auto r = run({"train", "--stage", "3", "--init", s2.string(), "--run-dir", (dir / "b").string(), "--data",
                  data.string(), "--config", cfg.string(), "--set", "lambdas.l1=10"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(fs::exists(dir / "b" / "stage3" / "final" / "manifest.json"));
    CHECK(slurp(dir / "b" / "resolved_config.yaml").find("l1: 10") != std::string::npos);
    CHECK(run({"train", "--stage", "1", "--init", s2.string(), "--run-dir", (dir / "c").string()}).code == 1);
  }

  TEST_CASE("locate reports not located on a watermark-free image") {
    auto dir = testing_support::fresh_dir("cli_locate");
    auto ckpt = forced_checkpoint(dir / "ckpt", -1);
    save_image(ImageTensor(testing_support::random_image(1, 3, 36, 36)), dir / "plain.png");
    auto r = run({"locate", "--photo", (dir / "plain.png").string(), "--ckpt", ckpt.string(), "--json"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["located"] == false);
    CHECK(j["crop_box"].is_null());
    CHECK_FALSE(j.contains("message_hex"));

    auto x = run({"extract", "--photo", (dir / "plain.png").string(), "--ckpt", ckpt.string(), "--json"});
    REQUIRE(x.code == 0);
    CHECK(nlohmann::json::parse(x.out)["message_hex"].is_null());
  }

  TEST_CASE("config layering") {
    auto dir = testing_support::fresh_dir("cli_layers");
    auto file = dir / "c.yaml";
    std::ofstream(file) << "seed: 1\nstage3:\n  lambdas:\n    l1: 2\nmodel:\n  extractor_dims: [1, 2]\n";
    auto kv = cli::read_kv_file(file);
    CHECK(kv.at("stage3.lambdas.l1") == "2");
    CHECK(kv.at("model.extractor_dims") == "1,2");

    ::setenv(cli::kEnvOverrides, "seed=2;stage3.lambdas.l1=3", 1);
    auto merged = cli::merge_layers({file, {"seed=4"}, true});
    CHECK(merged.at("seed") == "4");
    CHECK(merged.at("stage3.lambdas.l1") == "3");
    auto no_env = cli::merge_layers({file, {}, false});
    CHECK(no_env.at("seed") == "1");
    ::unsetenv(cli::kEnvOverrides);

    CHECK((cli::parse_kv_yaml(cli::to_yaml(kv)) == kv));
    CHECK_THROWS_AS(cli::parse_assignment("novalue"), ConfigError);
  }

  TEST_CASE("only the cpu device is accepted") {
    ::setenv(cli::kEnvDevice, "cuda", 1);
    CHECK_THROWS_AS(cli::device(), ConfigError);
    ::unsetenv(cli::kEnvDevice);
    CHECK(cli::device() == "cpu");
  }
}
