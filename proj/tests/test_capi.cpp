#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pixelgame.h"

namespace fs = std::filesystem;

namespace {

fs::path fresh(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("pixelgame_capi_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void collect(const char* line, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(line); }

}  // namespace

TEST_SUITE("capi") {
  TEST_CASE("status to exit code mapping") {
    CHECK(pg_exit_code(PG_OK) == 0);
    CHECK(pg_exit_code(PG_ERR_CONFIG) == 1);
    CHECK(pg_exit_code(PG_ERR_ARGUMENT) == 1);
    CHECK(pg_exit_code(PG_ERR_DATA) == 2);
    CHECK(pg_exit_code(PG_ERR_IO) == 2);
    CHECK(pg_exit_code(PG_ERR_VERSION) == 2);
    CHECK(pg_exit_code(PG_ERR_GENERATION) == 2);
    CHECK(pg_exit_code(PG_ERR_DIVERGENCE) == 3);
    CHECK(pg_exit_code(PG_ERR_VERIFY) == 4);
    CHECK(std::string(pg_status_name(PG_ERR_DATA)) == "data error");
  }

  TEST_CASE("NULL arguments are rejected, not dereferenced") {
    CHECK(pg_config_new(nullptr) == PG_ERR_ARGUMENT);
    CHECK(pg_config_set(nullptr, "a", "b") == PG_ERR_ARGUMENT);
    CHECK(pg_game_load(nullptr, nullptr) == PG_ERR_ARGUMENT);
    CHECK(std::string(pg_last_error()).find("NULL") != std::string::npos);
    pg_config_free(nullptr);
    pg_game_free(nullptr);
    pg_plan_free(nullptr);
    CHECK(pg_game_epochs(nullptr) == 0);
  }

  TEST_CASE("configuration handle") {
    pg_config* cfg = nullptr;
    REQUIRE(pg_config_new(&cfg) == PG_OK);
    const char* v = nullptr;
    REQUIRE(pg_config_get(cfg, "learning_rate", &v) == PG_OK);
    CHECK(std::string(v) == "1e-05");
    CHECK(pg_config_set(cfg, "epochs", "3") == PG_OK);
    REQUIRE(pg_config_get(cfg, "epochs", &v) == PG_OK);
    CHECK(std::string(v) == "3");
    CHECK(pg_config_set(cfg, "epoch", "3") == PG_ERR_CONFIG);
    CHECK(std::string(pg_last_error()).find("epoch") != std::string::npos);
    CHECK(pg_config_set(cfg, "batch_size", "many") == PG_ERR_CONFIG);
    CHECK(pg_config_get(cfg, "nope", &v) == PG_ERR_CONFIG);
    CHECK(pg_config_set(cfg, "device", "gpu") == PG_OK);
    CHECK(pg_config_validate(cfg) == PG_ERR_CONFIG);
    const fs::path dir = fresh("cfg");
    REQUIRE(pg_config_set(cfg, "device", "cpu") == PG_OK);
    REQUIRE(pg_config_save(cfg, (dir / "a.cfg").c_str()) == PG_OK);
    pg_config* again = nullptr;
    REQUIRE(pg_config_load((dir / "a.cfg").c_str(), &again) == PG_OK);
    REQUIRE(pg_config_get(again, "epochs", &v) == PG_OK);
    CHECK(std::string(v) == "3");
    pg_config_free(again);
    pg_config_free(cfg);
    CHECK(pg_config_load((dir / "missing.cfg").c_str(), &again) == PG_ERR_IO);
    CHECK(pg_config_key_count() >= 20);
    const char *key, *def, *help;
    CHECK(pg_config_key_doc(0, &key, &def, &help) == 1);
    CHECK(pg_config_key_doc(pg_config_key_count(), &key, &def, &help) == 0);
  }

  TEST_CASE("synth, stats and their failure modes") {
    const fs::path dir = fresh("synth");
    std::vector<std::string> log;
    REQUIRE(pg_synth(nullptr, 4, 1, (dir / "ds").c_str(), collect, &log) == PG_OK);
    CHECK(fs::exists(dir / "ds" / "meta.csv"));
    pg_stats_summary s{};
    REQUIRE(pg_stats((dir / "ds").c_str(), 0, (dir / "stats").c_str(), &s, nullptr, nullptr) == PG_OK);
    CHECK(s.images == 4);
    CHECK(s.targets >= 4);
    fs::create_directories(dir / "empty");
    log.clear();
    CHECK(pg_stats((dir / "empty").c_str(), 0, nullptr, &s, collect, &log) == PG_OK);
    CHECK(s.images == 0);
    REQUIRE(log.size() == 1);
    CHECK(log[0].rfind("warning:", 0) == 0);
    std::ofstream(dir / "blocker") << "x";
    CHECK(pg_synth(nullptr, 1, 1, (dir / "blocker" / "ds").c_str(), nullptr, nullptr) == PG_ERR_IO);
    CHECK(pg_synth(nullptr, -1, 1, (dir / "x").c_str(), nullptr, nullptr) == PG_ERR_ARGUMENT);
  }

  TEST_CASE("train, reload, evaluate") {
    const fs::path dir = fresh("train");
    std::ofstream(dir / "scene.cfg") << "image_size = 24\narea_max = 12\narea_median = 4\n";
    pg_config* cfg = nullptr;
    REQUIRE(pg_config_new(&cfg) == PG_OK);
    for (auto [k, v] : std::vector<std::pair<const char*, std::string>>{
             {"epochs", "1"}, {"batch_size", "4"}, {"crop", "16"}, {"resize", "16"},
             {"train_data", "synth:6"}, {"scene_params", (dir / "scene.cfg").string()}}) {
      REQUIRE(pg_config_set(cfg, k, v.c_str()) == PG_OK);
    }
    pg_game* game = nullptr;
    std::vector<std::string> log;
    REQUIRE(pg_train(cfg, (dir / "run").c_str(), collect, &log, &game) == PG_OK);
    CHECK_FALSE(log.empty());
    CHECK(pg_game_epochs(game) == 1);
    CHECK(pg_game_parameter_count(game) == 1734482);
    const char* csv = nullptr;
    REQUIRE(pg_game_history_csv(game, &csv) == PG_OK);
    pg_game* loaded = nullptr;
    REQUIRE(pg_game_load((dir / "run" / "model.pgck").c_str(), &loaded) == PG_OK);
    const char* csv2 = nullptr;
    const std::string first = csv;
    REQUIRE(pg_game_history_csv(loaded, &csv2) == PG_OK);
    CHECK(first == csv2);
    pg_metrics m[3];
    REQUIRE(pg_synth((dir / "scene.cfg").c_str(), 3, 8, (dir / "test").c_str(), nullptr, nullptr) == PG_OK);
    REQUIRE(pg_game_evaluate(loaded, (dir / "test").c_str(), (dir / "eval.csv").c_str(), m, nullptr, nullptr) == PG_OK);
    CHECK(fs::exists(dir / "eval.csv"));
    CHECK(m[2].f1 >= 0.0);
    fs::create_directories(dir / "empty");
    CHECK(pg_game_evaluate(loaded, (dir / "empty").c_str(), nullptr, nullptr, nullptr, nullptr) == PG_ERR_DATA);
    REQUIRE(pg_game_dump_features(loaded, (dir / "test" / "images" / "scene_00000.png").c_str(),
                                  (dir / "features").c_str()) == PG_OK);
    CHECK(fs::exists(dir / "features" / "p2_skip1_m2.npy"));
    pg_game_free(loaded);
    pg_game_free(game);
    pg_config_free(cfg);

    std::ofstream(dir / "junk.pgck") << "not a checkpoint";
    CHECK(pg_game_load((dir / "junk.pgck").c_str(), &loaded) == PG_ERR_VERSION);
  }

  TEST_CASE("ablation plan overrides") {
    const fs::path dir = fresh("plan");
    std::ofstream(dir / "plan.cfg") << "axis = mim\nseed = 1\n";
    pg_plan* plan = nullptr;
    REQUIRE(pg_plan_load((dir / "plan.cfg").c_str(), &plan) == PG_OK);
    CHECK(pg_plan_set(plan, "seed", "5") == PG_OK);
    CHECK(pg_plan_set(plan, "levels", "with, sometimes") == PG_ERR_CONFIG);
    CHECK(pg_plan_set(plan, "bogus", "1") == PG_ERR_CONFIG);
    ::setenv("PIXELGAME_OUT", (dir / "env").c_str(), 1);
    const char* out = nullptr;
    REQUIRE(pg_plan_out_dir(plan, &out) == PG_OK);
    CHECK(fs::path(out) == dir / "env");
    ::unsetenv("PIXELGAME_OUT");
    pg_plan_free(plan);
    std::ofstream(dir / "bad.cfg") << "levels = U\n";
    CHECK(pg_plan_load((dir / "bad.cfg").c_str(), &plan) == PG_ERR_CONFIG);
  }

  TEST_CASE("verify reports every check") {
    int passed = 0, failed = 0;
    struct Counts {
      int* p;
      int* f;
    } counts{&passed, &failed};
    const auto cb = [](const char*, int ok, const char*, void* user) {
      auto* c = static_cast<Counts*>(user);
      ++*(ok ? c->p : c->f);
    };
    CHECK(pg_verify(cb, &counts) == PG_OK);
    CHECK(passed >= 15);
    CHECK(failed == 0);
  }
}
