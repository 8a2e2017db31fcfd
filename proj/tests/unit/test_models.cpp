#include "doctest_torch.hpp"

#include "aparecium/core/errors.hpp"
#include "aparecium/models/checkpoint.hpp"
#include "aparecium/models/zoo.hpp"
#include "helpers.hpp"

using namespace aparecium;
using namespace aparecium::models;
using testing_support::tiny_model;

TEST_SUITE("model_zoo") {
  TEST_CASE("processor contract") {
    auto cfg = tiny_model();
    auto p = build_processor(cfg);
    p.net->eval();
    torch::NoGradGuard ng;
    for (int b : {1, 7}) {
      auto out = p.forward(torch::randint(0, 2, {b, 16}).to(torch::kFloat));
      CHECK(out.sizes() == torch::IntArrayRef({b, 1, 32, 32}));
      CHECK(out.min().item<float>() >= 0.0f);
      CHECK(out.max().item<float>() <= 1.0f);
    }
    auto bad = cfg;
    bad.processor_channels = {32, 16};
    CHECK_THROWS_AS(build_processor(bad), ConfigError);
    CHECK(build_processor(ModelConfig::paper()).parameter_count() > 0);
  }

  TEST_CASE("large inference batches are sliced without changing the result") {
    auto d = build_decoder(tiny_model());
    d.net->eval();
    torch::NoGradGuard ng;
    auto x = torch::rand({kInferenceChunk * 2 + 3, 3, 32, 32});
    auto whole = d.forward(x);
    auto direct = d.net->forward(x);
    CHECK(whole.sizes() == direct.sizes());
    CHECK(torch::allclose(whole, direct, 1e-5, 1e-6));
  }

  TEST_CASE("zero-weight processor ignores the message") {
    auto p = build_processor(tiny_model());
    {
      torch::NoGradGuard ng;
      for (auto& t : p.parameters()) {
        if (t.dim() > 1) t.zero_();
      }
    }
    p.net->eval();
    torch::NoGradGuard ng;
    auto a = p.forward(torch::zeros({1, 16}));
    auto b = p.forward(torch::ones({1, 16}));
    CHECK(torch::allclose(a, b));
    CHECK((a - a.flatten()[0]).abs().max().item<float>() < 1e-6f);
  }

  TEST_CASE("encoder contract") {
    auto e = build_encoder(tiny_model());
    e.net->eval();
    auto x = torch::rand({2, 4, 32, 32}).requires_grad_(true);
    auto y = e.forward(x);
    CHECK(y.sizes() == torch::IntArrayRef({2, 3, 32, 32}));
    CHECK(y.min().item<float>() >= 0.0f);
    CHECK(y.max().item<float>() <= 1.0f);
    y.sum().backward();
    for (int c = 0; c < 4; ++c) CHECK(x.grad().select(1, c).norm().item<double>() > 0.0);

    torch::NoGradGuard ng;
    auto batch = torch::rand({5, 4, 32, 32});
    auto together = e.forward(batch);
    auto alone = e.forward(batch.narrow(0, 3, 1));
    CHECK((together.narrow(0, 3, 1) - alone).abs().max().item<float>() < 1e-5f);
  }

  TEST_CASE("locator contract and sizes") {
    auto l = build_locator(tiny_model());
    l.net->eval();
    torch::NoGradGuard ng;
    auto y = l.forward(torch::randn({2, 3, 32, 32}) * 3);
    CHECK(y.sizes() == torch::IntArrayRef({2, 1, 32, 32}));
    CHECK(y.min().item<float>() >= 0.0f);
    CHECK(y.max().item<float>() <= 1.0f);

    auto cfg = ModelConfig::paper();
    const auto light = build_locator(cfg).parameter_count();
    CHECK(light >= 1'100'000 / 2);
    CHECK(light <= 1'100'000 * 2);
    cfg.locator_variant = "full";
    const auto full = build_locator(cfg).parameter_count();
    CHECK(full >= 44'000'000 / 2);
    CHECK(full <= 44'000'000 * 2);
    cfg.locator_variant = "huge";
    CHECK_THROWS_AS(build_locator(cfg), ConfigError);
  }

  TEST_CASE("decoder contract") {
    auto d = build_decoder(tiny_model());
    d.net->eval();
    torch::NoGradGuard ng;
    auto x = torch::rand({3, 3, 32, 32});
    auto a = d.forward(x);
    auto b = d.forward(x);
    CHECK(a.sizes() == torch::IntArrayRef({3, 1, 32, 32}));
    CHECK(torch::equal(a, b));
    CHECK(a.max().item<float>() > a.min().item<float>());
    CHECK(a.min().item<float>() >= 0.0f);
  }

  TEST_CASE("extractor contract for both backbones") {
    auto cfg = tiny_model();
    for (const std::string family : {"convnext", "resnet"}) {
      cfg.extractor_family = family;
      if (family == "resnet") {
        cfg.extractor_depths = {1, 1, 1, 1};
        cfg.extractor_dims = {4, 8, 8, 16};
      }
      auto x = build_extractor(cfg);
      x.net->eval();
      torch::NoGradGuard ng;
      auto y = x.forward(torch::zeros({2, 1, 32, 32}));
      CHECK(y.sizes() == torch::IntArrayRef({2, 16}));
      CHECK(torch::isfinite(y).all().item<bool>());
    }
    cfg.extractor_family = "vit";
    CHECK_THROWS_AS(build_extractor(cfg), ConfigError);
  }

  TEST_CASE("inputs of the wrong shape are rejected") {
    auto set = build_models(tiny_model(), 1);
    torch::NoGradGuard ng;
    CHECK_THROWS_AS(set.processor.forward(torch::zeros({1, 15})), InputError);
    CHECK_THROWS_AS(set.encoder.forward(torch::zeros({1, 3, 32, 32})), InputError);
    CHECK_THROWS_AS(set.decoder.forward(torch::zeros({1, 4, 32, 32})), InputError);
  }

  TEST_CASE("freezing is real") {
    auto set = build_models(tiny_model(), 2);
    prepare_for_stage(set, 2);
    CHECK(set.processor.frozen);
    CHECK(set.extractor.frozen);
    CHECK_FALSE(set.encoder.frozen);
    const auto before = set.processor.checksum();
    std::vector<torch::Tensor> params;
    for (auto& p : set.processor.parameters()) params.push_back(p);
    torch::optim::AdamW opt(params, torch::optim::AdamWOptions(1e-2));
    set.train();
    auto pat = set.processor.forward(torch::ones({2, 16}));
    auto scores = set.extractor.forward(pat);
    CHECK_FALSE(scores.requires_grad());
    opt.step();
    CHECK(set.processor.checksum() == before);
    CHECK_FALSE(set.processor.net->is_training());
    CHECK(set.encoder.net->is_training());
  }

  TEST_CASE("trainable roles per stage") {
    CHECK((trainable_roles(1) == std::vector<Role>{Role::Processor, Role::Extractor}));
    CHECK((trainable_roles(2) == std::vector<Role>{Role::Encoder, Role::Locator, Role::Decoder}));
    CHECK(trainable_roles(3).size() == 5);
    CHECK_THROWS_AS(trainable_roles(4), ConfigError);
  }

  TEST_CASE("model config serialization") {
    auto c = ModelConfig::desk();
    CHECK((ModelConfig::from_json(c.to_json()) == c));
    CHECK(c.hash() == ModelConfig::from_json(c.to_json()).hash());
    CHECK(c.hash() != ModelConfig::paper().hash());
    CHECK(role_from_string("locator") == Role::Locator);
    CHECK_THROWS_AS(role_from_string("critic"), ConfigError);
  }
}

TEST_SUITE("checkpoint") {
  TEST_CASE("save then load reproduces forward outputs exactly") {
    auto dir = testing_support::fresh_dir("ckpt_roundtrip");
    auto set = build_models(tiny_model(), 3);
    prepare_for_stage(set, 1);
    save_checkpoint(set, {1, 3, set.config, {}}, dir);
    auto loaded = load_checkpoint(dir);
    CHECK(loaded.manifest.stage == 1);
    CHECK(loaded.manifest.seed == 3);
    set.eval();
    torch::NoGradGuard ng;
    auto msg = torch::randint(0, 2, {2, 16}).to(torch::kFloat);
    auto img = torch::rand({2, 3, 32, 32});
    CHECK(torch::equal(set.processor.forward(msg), loaded.models.processor.forward(msg)));
    auto four = torch::rand({2, 4, 32, 32});
    CHECK(torch::equal(set.encoder.forward(four), loaded.models.encoder.forward(four)));
    CHECK(torch::equal(set.locator.forward(img), loaded.models.locator.forward(img)));
    CHECK(torch::equal(set.decoder.forward(img), loaded.models.decoder.forward(img)));
    auto pat = torch::rand({2, 1, 32, 32});
    CHECK(torch::equal(set.extractor.forward(pat), loaded.models.extractor.forward(pat)));
    for (Role r : kAllRoles) CHECK(set.at(r).checksum() == loaded.models.at(r).checksum());
  }

  TEST_CASE("stage-1 checkpoint prepared for stage 2 freezes processor and extractor") {
    auto dir = testing_support::fresh_dir("ckpt_stage");
    auto set = build_models(tiny_model(), 4);
    save_checkpoint(set, {1, 4, set.config, {}}, dir);
    auto loaded = load_checkpoint(dir);
    prepare_for_stage(loaded.models, 2);
    CHECK(loaded.models.processor.frozen);
    CHECK(loaded.models.extractor.frozen);
    for (auto& p : loaded.models.processor.parameters()) CHECK_FALSE(p.requires_grad());
  }

  TEST_CASE("load errors") {
    auto dir = testing_support::fresh_dir("ckpt_errors");
    CHECK_THROWS_AS(load_checkpoint(dir / "absent"), MissingArtifactError);
    auto set = build_models(tiny_model(), 5);
    save_checkpoint(set, {2, 5, set.config, {}}, dir);
    auto other = ModelConfig::desk();
    CHECK_THROWS_AS(load_checkpoint(dir, &other), IncompatibleCheckpointError);
    std::filesystem::remove(dir / "decoder.pt");
    try {
      load_checkpoint(dir);
      FAIL("missing role file was accepted");
    } catch (const MissingArtifactError& e) {
      CHECK(std::string(e.what()).find("decoder") != std::string::npos);
    }
  }
}
