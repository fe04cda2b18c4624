#include "pixelgame/run_config.hpp"

#include <charconv>
#include <cstdlib>

#include "pixelgame/config.hpp"

namespace pixelgame {

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string_view to_string(UtilitySharing s) {
  return s == UtilitySharing::Shared ? "shared" : "per_player";
}

UtilitySharing parse_sharing(std::string_view v) {
  if (v == "per_player") return UtilitySharing::PerPlayer;
  if (v == "shared") return UtilitySharing::Shared;
  fail(ErrorKind::Config, "utility_sharing must be 'per_player' or 'shared', got '" +
                              std::string(v) + "'");
}

}  // namespace

Entries game_config_entries(const GameConfig& c) {
  return {
      {"learning_rate", shortest(c.learning_rate)},
      {"batch_size", std::to_string(c.batch_size)},
      {"epochs", std::to_string(c.epochs)},
      {"crop", std::to_string(c.crop)},
      {"resize", std::to_string(c.resize)},
      {"threshold", shortest(c.threshold)},
      {"seed", std::to_string(c.seed)},
      {"use_mim", c.use_mim ? "true" : "false"},
      {"loss_mode_player1", std::string(to_string(c.loss_player1))},
      {"loss_mode_player2", std::string(to_string(c.loss_player2))},
      {"utility_components", c.utility_components.to_string()},
      {"utility_sharing", std::string(to_string(c.sharing))},
      {"ss_lambda", shortest(c.ss_lambda)},
      {"checkpoint_interval", std::to_string(c.checkpoint_interval)},
  };
}

bool apply_game_config_entry(GameConfig& c, const std::string& key, const std::string& value) {
  if (key == "learning_rate") c.learning_rate = parse_double(key, value);
  else if (key == "batch_size") c.batch_size = parse_int(key, value);
  else if (key == "epochs") c.epochs = parse_int(key, value);
  else if (key == "crop") c.crop = parse_int(key, value);
  else if (key == "resize") c.resize = parse_int(key, value);
  else if (key == "threshold") c.threshold = parse_double(key, value);
  else if (key == "seed") c.seed = parse_u64(key, value);
  else if (key == "use_mim") c.use_mim = parse_bool(key, value);
  else if (key == "loss_mode") c.loss_player1 = c.loss_player2 = parse_loss_kind(value);
  else if (key == "loss_mode_player1") c.loss_player1 = parse_loss_kind(value);
  else if (key == "loss_mode_player2") c.loss_player2 = parse_loss_kind(value);
  else if (key == "utility_components") c.utility_components = UtilityComponents::parse(value);
  else if (key == "utility_sharing") c.sharing = parse_sharing(value);
  else if (key == "ss_lambda") c.ss_lambda = parse_double(key, value);
  else if (key == "checkpoint_interval") c.checkpoint_interval = parse_int(key, value);
  else return false;
  return true;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (apply_game_config_entry(game, key, value)) return;
  if (key == "train_data") train_data = value;
  else if (key == "val_data") val_data = value;
  else if (key == "train_fraction") train_fraction = parse_double(key, value);
  else if (key == "scene_params") scene_params = value;
  else if (key == "out_dir") out_dir = value;
  else if (key == "device") device = value;
  else fail(ErrorKind::Config, "unknown config key '" + key + "'");
}

Entries RunConfig::entries() const {
  Entries out = game_config_entries(game);
  out.emplace_back("train_data", train_data);
  out.emplace_back("val_data", val_data);
  out.emplace_back("train_fraction", shortest(train_fraction));
  out.emplace_back("scene_params", scene_params);
  out.emplace_back("out_dir", out_dir);
  out.emplace_back("device", device);
  return out;
}

void RunConfig::validate() const {
  game.validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    fail(ErrorKind::Config, "train_fraction must lie in (0,1)");
  }
  if (train_data.empty()) fail(ErrorKind::Config, "train_data is required");
  if (device != "cpu") fail(ErrorKind::Config, "device '" + device + "' is not available (cpu only)");
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  RunConfig cfg;
  const KeyValueDocument doc = KeyValueDocument::load(path);
  for (const auto& [k, v] : doc.entries()) cfg.set(k, v);
  return cfg;
}

const std::vector<ConfigKeyDoc>& RunConfig::documented_keys() {
  static const std::vector<ConfigKeyDoc> docs = [] {
    const RunConfig d;
    std::vector<ConfigKeyDoc> out;
    const std::vector<std::pair<std::string, std::string>> help = {
        {"learning_rate", "Adam step size"},
        {"batch_size", "images per simultaneous update"},
        {"epochs", "passes over the training set"},
        {"crop", "random crop edge after resizing (px)"},
        {"resize", "training/evaluation resize edge (px)"},
        {"threshold", "binarization threshold for metrics"},
        {"seed", "master seed (weights, data order, crops, synth data)"},
        {"use_mim", "MIM attention on the skip connections"},
        {"loss_mode_player1", "game | dice | iou | ss (loss_mode sets both players)"},
        {"loss_mode_player2", "game | dice | iou | ss"},
        {"utility_components", "subset of U, A, G joined by '+'"},
        {"utility_sharing", "per_player | shared"},
        {"ss_lambda", "sensitivity weight of the ss loss"},
        {"checkpoint_interval", "epochs between checkpoints (0 = final only)"},
        {"train_data", "dataset directory or synth:N"},
        {"val_data", "dataset directory or synth:N (empty = split from train_data)"},
        {"train_fraction", "training share when splitting train_data"},
        {"scene_params", "key = value file with generator parameters"},
        {"out_dir", "output directory (PIXELGAME_OUT overrides)"},
        {"device", "compute device (cpu)"},
    };
    const Entries defaults = d.entries();
    for (const auto& [key, text] : help) {
      std::string value;
      for (const auto& [k, v] : defaults) {
        if (k == key) value = v;
      }
      out.push_back({key, value, text});
    }
    return out;
  }();
  return docs;
}

std::filesystem::path resolve_out_dir(const RunConfig& config) {
  if (const char* env = std::getenv("PIXELGAME_OUT"); env && *env) return env;
  return config.out_dir;
}

SceneParams scene_params_for(const RunConfig& config) {
  return config.scene_params.empty() ? SceneParams{} : load_scene_params(config.scene_params);
}

Dataset resolve_dataset(const std::string& source, std::uint64_t seed, const SceneParams& params,
                        std::optional<Split> split, std::vector<std::string>* warnings) {
  constexpr std::string_view prefix = "synth:";
  if (source.rfind(prefix, 0) == 0) {
    const int n = parse_int("synth", source.substr(prefix.size()));
    return synth_dataset(params, n, seed, split.value_or(Split::All));
  }
  LoadOptions opts;
  opts.split = split;
  return load_dataset(source, opts, warnings);
}

PreparedData prepare_training_data(const RunConfig& config) {
  PreparedData out;
  const SceneParams params = scene_params_for(config);
  const std::uint64_t seed = config.game.seed;
  if (!config.val_data.empty()) {
    out.train = resolve_dataset(config.train_data, seed, params, Split::Train, &out.warnings);
    // A different stream for generated validation scenes.
    out.val = resolve_dataset(config.val_data, seed ^ 0x5A5A5A5AULL, params, Split::Val, &out.warnings);
  } else if (config.train_data.rfind("synth:", 0) != 0 &&
             std::filesystem::exists(std::filesystem::path(config.train_data) / "splits" / "val.txt")) {
    out.train = resolve_dataset(config.train_data, seed, params, Split::Train, &out.warnings);
    out.val = resolve_dataset(config.train_data, seed, params, Split::Val, &out.warnings);
  } else {
    const Dataset all = resolve_dataset(config.train_data, seed, params, std::nullopt, &out.warnings);
    if (all.size() < 2) fail(ErrorKind::Data, "need at least two images to hold out a validation split");
    auto [tr, va] = resplit(all, config.train_fraction, seed);
    out.train = std::move(tr);
    out.val = std::move(va);
  }
  if (out.train.empty()) fail(ErrorKind::Data, "training set is empty");
  if (out.val.empty()) fail(ErrorKind::Data, "validation set is empty");
  return out;
}

}  // namespace pixelgame
