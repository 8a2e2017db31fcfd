#include "aparecium/models/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "aparecium/core/errors.hpp"

namespace aparecium::models {

namespace fs = std::filesystem;

namespace {

constexpr int kFormat = 1;

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

}  // namespace

void save_checkpoint(const ModelSet& models, const CheckpointManifest& manifest, const fs::path& dir,
                     torch::optim::Optimizer* optimizer) {
  fs::create_directories(dir);
  nlohmann::json roles = nlohmann::json::array();
  for (Role r : kAllRoles) {
    const auto& h = models.at(r);
    torch::serialize::OutputArchive ar;
    h.net->save(ar);
    const std::string file = to_string(r) + ".pt";
    ar.save_to((dir / file).string());
    nlohmann::json shapes = nlohmann::json::object();
    for (const auto& item : h.net->named_parameters()) shapes[item.key()] = item.value().sizes().vec();
    roles.push_back({{"role", to_string(r)},
                     {"file", file},
                     {"parameters", h.parameter_count()},
                     {"checksum", hex64(h.checksum())},
                     {"frozen", h.frozen},
                     {"shapes", shapes}});
  }
  if (optimizer) {
    torch::serialize::OutputArchive ar;
    optimizer->save(ar);
    ar.save_to((dir / "optimizer.pt").string());
  }
  nlohmann::json j = {{"format", kFormat},
                      {"stage", manifest.stage},
                      {"seed", manifest.seed},
                      {"config", manifest.config.to_json()},
                      {"config_hash", hex64(manifest.config.hash())},
                      {"roles", roles},
                      {"has_optimizer", optimizer != nullptr},
                      {"extra", manifest.extra}};
  // Manifest last so a partially written directory is never mistaken for a checkpoint.
  const auto tmp = dir / "manifest.json.tmp";
  {
    std::ofstream out(tmp);
    out << j.dump(2) << "\n";
  }
  fs::rename(tmp, dir / "manifest.json");
}

CheckpointManifest read_manifest(const fs::path& dir) {
  const auto path = dir / "manifest.json";
  if (!fs::exists(path)) throw MissingArtifactError("no checkpoint at " + dir.string() + " (manifest.json missing)");
  std::ifstream in(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IncompatibleCheckpointError("unreadable manifest " + path.string() + ": " + e.what());
  }
  if (j.value("format", 0) != kFormat) throw IncompatibleCheckpointError("unsupported checkpoint format in " + path.string());
  CheckpointManifest m;
  m.stage = j.at("stage").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config = ModelConfig::from_json(j.at("config"));
  if (hex64(m.config.hash()) != j.at("config_hash").get<std::string>())
    throw IncompatibleCheckpointError("config hash in " + path.string() + " does not match its config");
  m.extra = j.value("extra", nlohmann::json::object());
  return m;
}

LoadedCheckpoint load_checkpoint(const fs::path& dir, const ModelConfig* expected) {
  auto manifest = read_manifest(dir);
  if (expected && expected->hash() != manifest.config.hash()) {
    throw IncompatibleCheckpointError("checkpoint " + dir.string() + " was built for model config " +
                                      hex64(manifest.config.hash()) + ", expected " + hex64(expected->hash()));
  }
  auto models = build_models(manifest.config, manifest.seed);
  for (Role r : kAllRoles) {
    const auto file = dir / (to_string(r) + ".pt");
    if (!fs::exists(file))
      throw MissingArtifactError("checkpoint " + dir.string() + " lacks weights for role " + to_string(r));
    try {
      torch::serialize::InputArchive ar;
      ar.load_from(file.string());
      models.at(r).net->load(ar);
    } catch (const c10::Error& e) {
      throw IncompatibleCheckpointError("weights for role " + to_string(r) + " do not fit: " + e.what_without_backtrace());
    }
  }
  models.eval();
  return {std::move(models), std::move(manifest)};
}

bool load_optimizer(const fs::path& dir, torch::optim::Optimizer& optimizer) {
  const auto file = dir / "optimizer.pt";
  if (!fs::exists(file)) return false;
  torch::serialize::InputArchive ar;
  ar.load_from(file.string());
  optimizer.load(ar);
  return true;
}

}  // namespace aparecium::models
