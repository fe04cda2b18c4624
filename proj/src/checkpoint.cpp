#include "pixelgame/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "pixelgame/run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pixelgame {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'P', 'G', 'C', 'K'};

json describe(PlayerNetwork<float>& net) {
  return json{{"variant", std::string(to_string(net.spec().variant))},
              {"dilations", net.spec().dilations()},
              {"channels", net.spec().channels},
              {"use_mim", net.use_mim()},
              {"seed", net.seed()}};
}

PlayerNetwork<float> rebuild(const json& j) {
  FdcnSpec spec = FdcnSpec::from_dilations(j.at("dilations").get<std::vector<int>>(),
                                           j.at("channels").get<int>());
  const std::string variant = j.at("variant").get<std::string>();
  if (variant != "custom") spec.variant = parse_variant(variant);
  return PlayerNetwork<float>(std::move(spec), j.at("use_mim").get<bool>(),
                              j.at("seed").get<std::uint64_t>());
}

json metrics_json(const MetricReport& m) { return json::array({m.precision, m.recall, m.f1, m.iou}); }

MetricReport metrics_from(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>()};
}

json history_json(const TrainHistory& history) {
  json rows = json::array();
  for (const auto& r : history.epochs) {
    const UtilityBundle& u = r.utility;
    rows.push_back(json{{"epoch", r.epoch},
                        {"utility", {u.u1, u.u2, u.g, u.a1, u.a2, u.phi1, u.phi2}},
                        {"player1", metrics_json(r.player1)},
                        {"player2", metrics_json(r.player2)},
                        {"fused", metrics_json(r.fused)}});
  }
  return rows;
}

TrainHistory history_from(const json& rows) {
  TrainHistory h;
  for (const auto& j : rows) {
    EpochRecord r;
    r.epoch = j.at("epoch").get<int>();
    const auto u = j.at("utility").get<std::vector<double>>();
    if (u.size() != 7) fail(ErrorKind::Version, "malformed history row in checkpoint");
    r.utility = {u[0], u[1], u[2], u[3], u[4], u[5], u[6]};
    r.player1 = metrics_from(j.at("player1"));
    r.player2 = metrics_from(j.at("player2"));
    r.fused = metrics_from(j.at("fused"));
    h.epochs.push_back(r);
  }
  return h;
}

template <typename V>
void put(std::ostream& out, V v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename V>
V get(std::istream& in, const fs::path& path) {
  V v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    fail(ErrorKind::Version, "truncated checkpoint '" + path.string() + "'");
  }
  return v;
}

}  // namespace

void save_checkpoint(const TrainedGame& game_in, const fs::path& path) {
  // state() hands out mutable pointers; nothing is modified here.
  auto& game = const_cast<TrainedGame&>(game_in);
  json header;
  header["players"] = json::array({describe(game.player1), describe(game.player2)});
  json cfg = json::object();
  for (const auto& [k, v] : game_config_entries(game.config)) cfg[k] = v;
  header["config"] = cfg;
  header["epochs_completed"] = game.history.size();
  header["history"] = history_json(game.history);

  json table = json::array();
  std::size_t offset = 0;
  std::vector<const Tensor<float>*> order;
  int player_index = 0;
  for (PlayerNetwork<float>* net : {&game.player1, &game.player2}) {
    for (const auto& e : net->state()) {
      const Shape s = e.tensor->shape();
      table.push_back(json{{"player", player_index},
                           {"name", e.name},
                           {"shape", {s.n, s.c, s.h, s.w}},
                           {"offset", offset}});
      offset += e.tensor->size();
      order.push_back(e.tensor);
    }
    ++player_index;
  }
  header["tensors"] = table;
  const std::string text = header.dump();

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write checkpoint '" + path.string() + "'");
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto* t : order) {
    out.write(reinterpret_cast<const char*>(t->data()),
              static_cast<std::streamsize>(t->size() * sizeof(float)));
  }
  if (!out) fail(ErrorKind::Io, "failed writing checkpoint '" + path.string() + "'");
}

TrainedGame load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open checkpoint '" + path.string() + "'");
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    fail(ErrorKind::Version, "'" + path.string() + "' is not a pixelgame checkpoint");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    fail(ErrorKind::Version, "checkpoint format version " + std::to_string(version) +
                                 " is not supported (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
  }
  const auto length = get<std::uint64_t>(in, path);
  if (length > (std::uint64_t{1} << 31)) fail(ErrorKind::Version, "implausible checkpoint header");
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) {
    fail(ErrorKind::Version, "truncated checkpoint header");
  }
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Version, std::string("unreadable checkpoint header: ") + e.what());
  }
  std::vector<float> blob;
  {
    const auto begin = in.tellg();
    in.seekg(0, std::ios::end);
    const auto end = in.tellg();
    in.seekg(begin);
    blob.resize(static_cast<std::size_t>(end - begin) / sizeof(float));
    in.read(reinterpret_cast<char*>(blob.data()),
            static_cast<std::streamsize>(blob.size() * sizeof(float)));
  }

  try {
    GameConfig cfg;
    for (const auto& [k, v] : header.at("config").items()) {
      apply_game_config_entry(cfg, k, v.get<std::string>());
    }
    const auto& players = header.at("players");
    if (players.size() != 2) fail(ErrorKind::Version, "checkpoint must hold two players");
    TrainedGame game(rebuild(players[0]), rebuild(players[1]), cfg);

    const auto& table = header.at("tensors");
    std::size_t row = 0;
    int player_index = 0;
    for (PlayerNetwork<float>* net : {&game.player1, &game.player2}) {
      for (const auto& e : net->state()) {
        if (row >= table.size()) fail(ErrorKind::Version, "checkpoint is missing tensors");
        const auto& t = table[row++];
        const auto shape = t.at("shape").get<std::vector<int>>();
        const Shape s = e.tensor->shape();
        if (t.at("player").get<int>() != player_index || t.at("name").get<std::string>() != e.name ||
            shape != std::vector<int>{s.n, s.c, s.h, s.w}) {
          fail(ErrorKind::Version, "checkpoint tensor '" + t.at("name").get<std::string>() +
                                       "' does not match the network (expected '" + e.name + "')");
        }
        const auto offset = t.at("offset").get<std::size_t>();
        if (offset + e.tensor->size() > blob.size()) {
          fail(ErrorKind::Version, "checkpoint data is truncated");
        }
        std::memcpy(e.tensor->data(), blob.data() + offset, e.tensor->size() * sizeof(float));
      }
      ++player_index;
    }
    if (row != table.size()) fail(ErrorKind::Version, "checkpoint holds unexpected tensors");
    if (header.contains("history")) game.history = history_from(header.at("history"));
    return game;
  } catch (const json::exception& e) {
    fail(ErrorKind::Version, std::string("malformed checkpoint header: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Version) throw;
    fail(ErrorKind::Version, std::string("checkpoint does not describe a valid game: ") + e.what());
  }
}

void write_npy(const fs::path& path, const std::vector<int>& shape, const std::vector<float>& values) {
  std::string dims;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    dims += std::to_string(shape[i]);
    if (shape.size() == 1 || i + 1 < shape.size()) dims += ",";
    if (i + 1 < shape.size()) dims += " ";
  }
  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': (" + dims + "), }";
  // Magic (6) + version (2) + length (2) + header + '\n' must be a multiple of 64.
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out.write("\x93NUMPY\x01\x00", 8);
  put<std::uint16_t>(out, static_cast<std::uint16_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!out) fail(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

void dump_features(TrainedGame& game, const GrayImage& image, const fs::path& dir) {
  fs::create_directories(dir);
  const Tensor<float> batch = to_batch<float>({&image});
  int player_no = 1;
  for (PlayerNetwork<float>* net : {&game.player1, &game.player2}) {
    if (!net->use_mim()) {
      fail(ErrorKind::Config, "feature dump needs MIM-enabled players");
    }
    std::vector<Tensor<float>> feats;
    net->forward(batch, false, false, &feats);
    int k = 0;
    for (const auto& pair : net->spec().skip_pairs) {
      ++k;
      MimBlock<float>& mim = net->mim_blocks()[*net->mim_index_for_encoder(pair.encoder)];
      const Tensor<float>& x = feats[pair.encoder];
      const Tensor<float> z = mim.forward(x, false, true);
      const std::string stem = "p" + std::to_string(player_no) + "_skip" + std::to_string(k);
      const Shape s = x.shape();
      const auto vec = [](const Tensor<float>& t) {
        return std::vector<float>(t.data(), t.data() + t.size());
      };
      write_npy(dir / (stem + "_x.npy"), {s.c, s.h, s.w}, vec(x));
      write_npy(dir / (stem + "_m2.npy"), {s.c}, vec(mim.last_m2()));
      write_npy(dir / (stem + "_m3.npy"), {s.h, s.w}, vec(mim.last_m3()));
      write_npy(dir / (stem + "_z.npy"), {s.c, s.h, s.w}, vec(z));
    }
    ++player_no;
  }
}

}  // namespace pixelgame
