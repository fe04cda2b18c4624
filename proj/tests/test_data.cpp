#include <doctest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <set>

#include "helpers.hpp"
#include "pixelgame/config.hpp"
#include "pixelgame/data.hpp"
#include "pixelgame/error.hpp"
#include "pixelgame/png_io.hpp"
#include "pixelgame/scr.hpp"

using namespace pixelgame;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << s;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Config;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("key value documents") {
    const auto doc = KeyValueDocument::parse("# comment\n a = 1 \n\nname=two words\n");
    REQUIRE(doc.entries().size() == 2);
    CHECK(doc.entries()[0] == std::pair<std::string, std::string>("a", "1"));
    CHECK(doc.entries()[1].second == "two words");
    CHECK(kind_of([] { KeyValueDocument::parse("a = 1\na = 2\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { KeyValueDocument::parse("just text\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { KeyValueDocument::load("/nonexistent/file.cfg"); }) == ErrorKind::Io);
  }

  TEST_CASE("scalar parsing names the offending key") {
    CHECK(parse_int("k", "42") == 42);
    CHECK(parse_double("k", "1e-5") == 1e-5);
    CHECK(parse_bool("k", "yes"));
    CHECK_FALSE(parse_bool("k", "false"));
    CHECK(parse_double_list("k", "0.5, 0.25,0.25") == std::vector<double>{0.5, 0.25, 0.25});
    try {
      parse_int("batch_size", "eight");
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("batch_size") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_int("k", "3.5"), Error);
  }
}

TEST_SUITE("synth") {
  TEST_CASE("scenes are deterministic per seed and consistent with their metadata") {
    const SceneParams params;
    const Scene a = synth_scene(params, 123), b = synth_scene(params, 123), c = synth_scene(params, 124);
    CHECK(a.image == b.image);
    CHECK(a.mask == b.mask);
    CHECK_FALSE(a.image == c.image);
    CHECK(a.image.height() == 64);
    const Components comps = connected_components(a.mask);
    CHECK(comps.count == static_cast<int>(a.meta.targets.size()));
    for (const auto& t : a.meta.targets) {
      CHECK(t.area >= params.area_min);
      CHECK(t.area <= params.area_max);
      CHECK(std::abs(t.achieved_scr - t.requested_scr) <= kScrTolerance * t.requested_scr + 1e-9);
    }
    for (double v : a.image.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }

  TEST_CASE("achieved contrast matches an independent SCR evaluation") {
    const Scene s = synth_scene(SceneParams{}, 7);
    const Components comps = connected_components(s.mask);
    REQUIRE(comps.count >= 1);
    BinaryMask first(s.mask.height(), s.mask.width());
    for (std::size_t i = 0; i < first.size(); ++i) first[i] = comps.labels[i] == 1;
    const double measured = scr(s.image, first).scr;
    bool matched = false;
    for (const auto& t : s.meta.targets) matched = matched || std::abs(t.achieved_scr - measured) < 1e-6;
    CHECK(matched);
  }

  TEST_CASE("fixed background and single target") {
    SceneParams p;
    p.background = BackgroundKind::Sea;
    p.target_count_pmf = {1.0};
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Scene s = synth_scene(p, seed);
      CHECK(s.meta.background == BackgroundKind::Sea);
      CHECK(s.meta.targets.size() == 1);
    }
  }

  TEST_CASE("impossible contrast is a generation error") {
    SceneParams p;
    p.scr_min = p.scr_median = p.scr_max = 1e6;
    CHECK(kind_of([&] { synth_scene(p, 1); }) == ErrorKind::Generation);
  }

  TEST_CASE("parameter validation") {
    SceneParams p;
    p.area_min = 50;
    p.area_max = 10;
    CHECK(kind_of([&] { p.validate(); }) == ErrorKind::Config);
    SceneParams q;
    q.target_count_pmf = {0.5, 0.2};
    CHECK(kind_of([&] { q.validate(); }) == ErrorKind::Config);
  }

  TEST_CASE("scene parameter files") {
    const fs::path dir = testutil::temp_dir("params");
    write_text(dir / "p.cfg", "image_size = 32\nbackground = cloud\nscr_median = 4\n");
    const SceneParams p = load_scene_params(dir / "p.cfg");
    CHECK(p.image_size == 32);
    CHECK(p.background == BackgroundKind::Cloud);
    CHECK(p.scr_median == 4.0);
    write_text(dir / "bad.cfg", "image_size = 32\ncolour = red\n");
    CHECK(kind_of([&] { load_scene_params(dir / "bad.cfg"); }) == ErrorKind::Config);
  }
}

TEST_SUITE("dataset") {
  TEST_CASE("save and load round trip with metadata and splits") {
    const fs::path dir = testutil::temp_dir("roundtrip");
    const Dataset ds = synth_dataset(SceneParams{}, 6, 99, Split::Train);
    save_dataset(ds, dir);
    CHECK(fs::exists(dir / "meta.csv"));
    CHECK(fs::exists(dir / "splits" / "train.txt"));
    const Dataset back = load_dataset(dir);
    REQUIRE(back.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(back.items[i].stem == ds.items[i].stem);
      CHECK(back.items[i].mask == ds.items[i].mask);
      // Images are stored as 8-bit PNG.
      CHECK(back.items[i].image == quantize_u8(ds.items[i].image));
      REQUIRE(back.items[i].meta.has_value());
      CHECK(back.items[i].meta->targets.size() == ds.items[i].meta->targets.size());
    }
    LoadOptions only_val;
    only_val.split = Split::Val;
    // No val.txt: the option is ignored and everything loads.
    CHECK(load_dataset(dir, only_val).size() == 6);
  }

  TEST_CASE("split files filter stems and order is lexicographic") {
    const fs::path dir = testutil::temp_dir("splits");
    save_dataset(synth_dataset(SceneParams{}, 4, 5), dir);
    write_text(dir / "splits" / "test.txt", "scene_00003\nscene_00001\n");
    LoadOptions opt;
    opt.split = Split::Test;
    const Dataset test = load_dataset(dir, opt);
    REQUIRE(test.size() == 2);
    CHECK(test.items[0].stem == "scene_00001");
    CHECK(test.items[1].stem == "scene_00003");
  }

  TEST_CASE("missing mask names the stem; empty directory warns") {
    const fs::path dir = testutil::temp_dir("missing");
    save_dataset(synth_dataset(SceneParams{}, 2, 5), dir);
    fs::remove(dir / "masks" / "scene_00001.png");
    try {
      load_dataset(dir);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Data);
      CHECK(std::string(e.what()).find("scene_00001") != std::string::npos);
    }
    const fs::path empty = testutil::temp_dir("empty");
    std::vector<std::string> warnings;
    CHECK(load_dataset(empty, {}, &warnings).empty());
    CHECK(warnings.size() == 1);
  }

  TEST_CASE("anti-aliased masks binarize at 128 with a warning") {
    const fs::path dir = testutil::temp_dir("aa");
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "masks");
    write_png(dir / "images" / "a.png", RawImage{1, 4, 1, {0, 50, 100, 200}});
    write_png(dir / "masks" / "a.png", RawImage{1, 4, 1, {0, 127, 128, 255}});
    std::vector<std::string> warnings;
    const Dataset ds = load_dataset(dir, {}, &warnings);
    REQUIRE(ds.size() == 1);
    CHECK(ds.items[0].mask[1] == 0);
    CHECK(ds.items[0].mask[2] == 1);
    CHECK(ds.items[0].image[3] == doctest::Approx(200.0 / 255.0));
    CHECK(warnings.size() == 1);
  }

  TEST_CASE("resplit is a seeded partition") {
    const Dataset ds = synth_dataset(SceneParams{}, 10, 1);
    const auto [a, b] = resplit(ds, 0.8, 3);
    CHECK(a.size() == 8);
    CHECK(b.size() == 2);
    CHECK(a.split == Split::Train);
    CHECK(b.split == Split::Val);
    std::set<std::string> stems;
    for (const auto& s : a.items) stems.insert(s.stem);
    for (const auto& s : b.items) stems.insert(s.stem);
    CHECK(stems.size() == 10);
    const auto [a2, b2] = resplit(ds, 0.8, 3);
    CHECK(a2.items[0].stem == a.items[0].stem);
    CHECK(b2.items[1].stem == b.items[1].stem);
  }

  TEST_CASE("resizing and augmentation") {
    GrayImage img(2, 2, {0.0, 1.0, 1.0, 0.0});
    const GrayImage up = resize_bilinear(img, 4, 4);
    CHECK(up(0, 0) == doctest::Approx(0.0));
    CHECK(up(0, 1) == doctest::Approx(0.25));
    CHECK(up(1, 1) == doctest::Approx(0.375));
    const GrayImage same = resize_bilinear(img, 2, 2);
    CHECK(same == img);
    BinaryMask m(2, 2, {1, 0, 0, 0});
    const BinaryMask mu = resize_nearest(m, 4, 4);
    CHECK(mu(1, 1) == 1);
    CHECK(mu(1, 2) == 0);

    std::mt19937_64 rng(1);
    GrayImage big(10, 10);
    BinaryMask bm(10, 10);
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 10; ++x) {
        big(y, x) = (y * 10 + x) / 100.0;
        bm(y, x) = (y + x) % 2;
      }
    const auto [ci, cm] = augment(big, bm, AugmentConfig{10, 6}, rng);
    CHECK(ci.height() == 6);
    CHECK(cm.width() == 6);
    // Image and mask share one crop window.
    const int y0 = static_cast<int>(std::lround(ci(0, 0) * 100)) / 10, x0 = static_cast<int>(std::lround(ci(0, 0) * 100)) % 10;
    CHECK(cm(0, 0) == (y0 + x0) % 2);
    CHECK(kind_of([&] { augment(big, bm, AugmentConfig{8, 9}, rng); }) == ErrorKind::Config);
  }

  TEST_CASE("8-connected components") {
    BinaryMask m(4, 5, {1, 0, 0, 0, 1,
                        0, 1, 0, 0, 1,
                        0, 0, 0, 0, 0,
                        1, 1, 0, 1, 0});
    const Components c = connected_components(m);
    CHECK(c.count == 4);
    std::multiset<int> areas(c.areas.begin(), c.areas.end());
    CHECK(areas == std::multiset<int>{2, 2, 2, 1});
    CHECK(c.labels[0] == c.labels[6]);
  }

  TEST_CASE("statistics") {
    Dataset ds;
    Sample a;
    a.image = GrayImage(8, 8, 0.1);
    a.mask = BinaryMask(8, 8);
    a.mask(2, 2) = 1;
    a.image(2, 2) = 0.9;
    a.image(1, 1) = 0.3;
    Sample b = a;
    b.mask(6, 6) = b.mask(6, 5) = 1;
    ds.items = {a, b};
    const StatsReport r = dataset_stats(ds);
    CHECK(r.images == 2);
    CHECK(r.targets == 3);
    CHECK(r.targets_per_image.at(1) == 1);
    CHECK(r.targets_per_image.at(2) == 1);
    CHECK(r.single_target_fraction() == doctest::Approx(0.5));
    CHECK(r.area_histogram.at(1) == 2);
    CHECK(r.area_histogram.at(2) == 1);
    CHECK(r.fraction_area_below(2) == doctest::Approx(2.0 / 3.0));
    CHECK(r.cumulative_area.back().second == doctest::Approx(1.0));
    // The (6,5)-(6,6) target sits on a flat background.
    CHECK(r.scr_undefined == 1);
    CHECK(r.scr_values.size() == 2);
    const StatsReport empty = dataset_stats(Dataset{});
    CHECK(empty.images == 0);
    CHECK(empty.single_target_fraction() == 0.0);
  }
}
