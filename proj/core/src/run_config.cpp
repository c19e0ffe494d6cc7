#include "shadowcomp/run_config.hpp"

#include <fstream>
#include <set>

#include "shadowcomp/errors.hpp"

namespace shadowcomp::harness {

using nlohmann::json;

void RunConfig::validate() const {
  network().validate();
  if (batch_size < 1) throw Error(ErrorKind::kConfig, "batch_size must be >= 1");
  if (learning_rate < 0.0) throw Error(ErrorKind::kConfig, "learning_rate must be >= 0");
  if (betas[0] < 0.0 || betas[0] >= 1.0 || betas[1] < 0.0 || betas[1] >= 1.0)
    throw Error(ErrorKind::kConfig, "betas must lie in [0, 1)");
  if (steps < 0 || epochs < 0)
    throw Error(ErrorKind::kConfig, "steps and epochs must be >= 0");
  if (checkpoint_every < 0 || eval_every < 0 || log_every < 0)
    throw Error(ErrorKind::kConfig, "cadences must be >= 0");
  if (data_augmentation) throw Error(ErrorKind::kConfig, "data augmentation is not supported");
  if (!(fallback_scale > 0.0)) throw Error(ErrorKind::kConfig, "fallback_scale must be > 0");
}

net::NetworkConfig RunConfig::network() const {
  net::NetworkConfig n;
  n.resolution = resolution;
  n.width_multiplier = width_multiplier;
  n.init_seed = init_seed;
  n.refine = !no_refine;
  n.literal_mean = literal_mean;
  n.fallback_scale = fallback_scale;
  return n;
}

json RunConfig::to_json() const {
  return json{{"train_data", train_data},
              {"finetune_data", finetune_data},
              {"test_data", test_data},
              {"resolution", resolution},
              {"width_multiplier", width_multiplier},
              {"init_seed", init_seed},
              {"batch_size", batch_size},
              {"learning_rate", learning_rate},
              {"betas", betas},
              {"epochs", epochs},
              {"steps", steps},
              {"seed", seed},
              {"checkpoint_dir", checkpoint_dir},
              {"checkpoint_every", checkpoint_every},
              {"eval_every", eval_every},
              {"log_every", log_every},
              {"no_refine", no_refine},
              {"literal_mean", literal_mean},
              {"rec_norm", losses::to_string(rec_norm)},
              {"fallback_scale", fallback_scale},
              {"data_augmentation", data_augmentation}};
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::kConfig, "config must be a JSON object");
  RunConfig c;
  const json defaults = c.to_json();
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw Error(ErrorKind::kConfig, "unknown config key '" + key + "'");
  }
  try {
    c.train_data = j.value("train_data", c.train_data);
    c.finetune_data = j.value("finetune_data", c.finetune_data);
    c.test_data = j.value("test_data", c.test_data);
    c.resolution = j.value("resolution", c.resolution);
    c.width_multiplier = j.value("width_multiplier", c.width_multiplier);
    c.init_seed = j.value("init_seed", c.init_seed);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.betas = j.value("betas", c.betas);
    c.epochs = j.value("epochs", c.epochs);
    c.steps = j.value("steps", c.steps);
    c.seed = j.value("seed", c.seed);
    c.checkpoint_dir = j.value("checkpoint_dir", c.checkpoint_dir);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.log_every = j.value("log_every", c.log_every);
    c.no_refine = j.value("no_refine", c.no_refine);
    c.literal_mean = j.value("literal_mean", c.literal_mean);
    c.rec_norm = losses::rec_norm_from_string(j.value("rec_norm", std::string("full")));
    c.fallback_scale = j.value("fallback_scale", c.fallback_scale);
    c.data_augmentation = j.value("data_augmentation", c.data_augmentation);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, path.string() + ": " + e.what());
  }
  return from_json(j);
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kConfig, "cannot write config " + path.string());
  out << to_json().dump(2) << '\n';
}

RunConfig RunConfig::full_scale() { return RunConfig{}; }

RunConfig RunConfig::desk_scale() {
  RunConfig c;
  c.resolution = 128;
  c.width_multiplier = 0.25;
  c.batch_size = 8;
  c.epochs = 0;
  c.steps = 2000;
  return c;
}

}  // namespace shadowcomp::harness
