#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest_torch.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "oracles.hpp"
#include "tatsr/data.hpp"

namespace fs = std::filesystem;
using namespace tatsr;

namespace {
fs::path temp_dir(const std::string& tag) {
  auto p = fs::temp_directory_path() /
           ("tatsr_data_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}
}  // namespace

TEST_CASE("blur tags round-trip and parameters match the naming") {
  for (auto r : {BlurRadius::NONE, BlurRadius::R05_STAR, BlurRadius::R1,
                 BlurRadius::R15_STAR, BlurRadius::R2}) {
    CHECK(parse_blur_tag(blur_tag(r)) == r);
  }
  CHECK_THROWS_AS(parse_blur_tag("r7"), ConfigError);

  CHECK(blur_radius_px(BlurRadius::R05_STAR) == 1);
  CHECK(blur_radius_px(BlurRadius::R1) == 1);
  CHECK(blur_radius_px(BlurRadius::R15_STAR) == 3);
  CHECK(blur_radius_px(BlurRadius::R2) == 2);
  CHECK(blur_sigma(BlurRadius::R05_STAR) == doctest::Approx(0.5));
  CHECK(blur_sigma(BlurRadius::R1) == doctest::Approx(0.5));
  CHECK(blur_sigma(BlurRadius::R15_STAR) == doctest::Approx(1.5));
  CHECK(blur_sigma(BlurRadius::R2) == doctest::Approx(1.0));
  CHECK(blur_at_hr(BlurRadius::R05_STAR));
  CHECK(blur_at_hr(BlurRadius::R15_STAR));
  CHECK_FALSE(blur_at_hr(BlurRadius::R1));
  CHECK_FALSE(blur_at_hr(BlurRadius::R2));
}

TEST_CASE("gaussian_kernel1d matches the closed form") {
  for (auto [r, s] : std::vector<std::pair<int, double>>{{1, 0.5}, {2, 1.0}, {3, 1.5}}) {
    auto k = gaussian_kernel1d(r, s);
    auto ref = oracle::gauss1d(r, s);
    REQUIRE(k.numel() == static_cast<int64_t>(ref.size()));
    double sum = 0.0;
    for (int64_t i = 0; i < k.numel(); ++i) {
      CHECK(k[i].item<double>() == doctest::Approx(ref[static_cast<size_t>(i)])
                                       .epsilon(1e-6));
      sum += k[i].item<double>();
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("gaussian_blur matches a scalar full-2d reference") {
  torch::manual_seed(1);
  auto img = torch::rand({3, 12, 20});
  auto out = gaussian_blur(img, 3, 1.5);
  REQUIRE(out.sizes() == img.sizes());
  for (int64_t c = 0; c < 3; ++c) {
    auto chan = oracle::to_vec(img[c]);
    auto want = oracle::blur2d(chan, 12, 20, 3, 1.5);
    auto got = oracle::to_vec(out[c]);
    for (size_t i = 0; i < want.size(); ++i) {
      CHECK(std::abs(got[i] - want[i]) < 1e-5);
    }
  }
}

TEST_CASE("gaussian_blur of an impulse reproduces the separable stencil") {
  auto img = torch::zeros({1, 9, 9});
  img[0][4][4] = 1.0f;
  auto out = gaussian_blur(img, 1, 0.5);
  const auto k = oracle::gauss1d(1, 0.5);
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const double want = k[static_cast<size_t>(dy + 1)] * k[static_cast<size_t>(dx + 1)];
      CHECK(out[0][4 + dy][4 + dx].item<double>() ==
            doctest::Approx(want).epsilon(1e-5));
    }
  }
  CHECK(out[0][0][0].item<double>() == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("resize_bicubic keeps constants, shape, and range") {
  auto flat = torch::full({3, 32, 128}, 0.6f);
  auto small = resize_bicubic(flat, 16, 64);
  REQUIRE(small.sizes() == torch::IntArrayRef({3, 16, 64}));
  CHECK((small - 0.6f).abs().max().item<float>() < 1e-6f);

  torch::manual_seed(2);
  auto noisy = torch::rand({3, 32, 128});
  auto lr = resize_bicubic(noisy, 16, 64);
  CHECK(lr.min().item<float>() >= 0.0f);
  CHECK(lr.max().item<float>() <= 1.0f);
  auto up = resize_bicubic(lr, 32, 128);
  CHECK(up.sizes() == torch::IntArrayRef({3, 32, 128}));
}

TEST_CASE("degrade composes blur and downsample in the documented order") {
  torch::manual_seed(3);
  auto hr = torch::rand({3, 32, 128});

  auto plain = degrade(hr, {BlurRadius::NONE, 0.0});
  CHECK(torch::equal(plain, resize_bicubic(hr, 16, 64)));

  auto starred = degrade(hr, {BlurRadius::R15_STAR, 0.0});
  CHECK(torch::equal(starred, resize_bicubic(gaussian_blur(hr, 3, 1.5), 16, 64)));

  auto post = degrade(hr, {BlurRadius::R2, 0.0});
  CHECK(torch::equal(post, gaussian_blur(resize_bicubic(hr, 16, 64), 2, 1.0)));

  auto r1 = degrade(hr, {BlurRadius::R1, 0.0});
  CHECK(torch::equal(r1, gaussian_blur(resize_bicubic(hr, 16, 64), 1, 0.5)));
}

TEST_CASE("degrade noise is seeded and clamped") {
  auto hr = torch::rand({3, 32, 128});
  auto a = degrade(hr, {BlurRadius::NONE, 0.1}, 77);
  auto b = degrade(hr, {BlurRadius::NONE, 0.1}, 77);
  auto c = degrade(hr, {BlurRadius::NONE, 0.1}, 78);
  CHECK(torch::equal(a, b));
  CHECK_FALSE(torch::equal(a, c));
  CHECK(a.min().item<float>() >= 0.0f);
  CHECK(a.max().item<float>() <= 1.0f);
  auto clean = degrade(hr, {BlurRadius::NONE, 0.0}, 77);
  CHECK((a - clean).abs().mean().item<float>() > 0.01f);
}

TEST_CASE("compute_mask is a strict greater-than-mean threshold") {
  torch::manual_seed(4);
  auto img = torch::rand({2, 3, 8, 16});
  auto mask = compute_mask(img);
  REQUIRE(mask.sizes() == torch::IntArrayRef({2, 1, 8, 16}));
  for (int64_t n = 0; n < 2; ++n) {
    auto rgb = oracle::to_vec(img[n]);
    double mean = 0.0;
    std::vector<double> g(8 * 16);
    for (int64_t y = 0; y < 8; ++y) {
      for (int64_t x = 0; x < 16; ++x) {
        g[y * 16 + x] = oracle::grayscale_at(rgb, 8, 16, y, x);
        mean += g[y * 16 + x];
      }
    }
    mean /= 8 * 16;
    auto mask_plane = mask[n][0];
    auto am = mask_plane.accessor<float, 2>();
    for (int64_t y = 0; y < 8; ++y) {
      for (int64_t x = 0; x < 16; ++x) {
        const float want = g[y * 16 + x] > mean ? 1.0f : 0.0f;
        CHECK(am[y][x] == want);
      }
    }
  }

  auto flat = torch::full({3, 4, 4}, 0.5f);
  CHECK(compute_mask(flat).sum().item<float>() == 0.0f);  // nothing above the mean
}

TEST_CASE("render_word is deterministic and leaves ink on the canvas") {
  RenderStyle st;
  auto a = render_word("hello", st);
  auto b = render_word("hello", st);
  REQUIRE(a.sizes() == torch::IntArrayRef({3, 32, 128}));
  CHECK(torch::equal(a, b));
  CHECK(a.min().item<float>() >= 0.0f);
  CHECK(a.max().item<float>() <= 1.0f);
  CHECK(a.min().item<float>() < 0.3f);   // dark glyphs present
  CHECK(a.max().item<float>() > 0.9f);   // white background present

  auto c = render_word("world", st);
  CHECK_FALSE(torch::equal(a, c));
}

TEST_CASE("render_word squeezes wide text instead of truncating") {
  RenderStyle st;
  auto wide = render_word("abcdefghijklmnopqrstuvwx", st);
  REQUIRE(wide.sizes() == torch::IntArrayRef({3, 32, 128}));
  auto gray = to_grayscale(wide)[0];
  // ink must reach both horizontal ends: the word was squeezed, not cut
  auto cols = 1.0f - gray.mean(0);  // per-column inkiness
  const float peak = cols.max().item<float>();
  REQUIRE(peak > 0.05f);
  int64_t first = -1, last = -1;
  for (int64_t x = 0; x < 128; ++x) {
    if (cols[x].item<float>() > 0.2f * peak) {
      if (first < 0) first = x;
      last = x;
    }
  }
  CHECK(first >= 0);
  CHECK(first < 16);
  CHECK(last > 112);
}

TEST_CASE("draw_style is deterministic per id and stays in range") {
  auto s1 = draw_style(9, "w000001");
  auto s2 = draw_style(9, "w000001");
  auto s3 = draw_style(9, "w000002");
  CHECK(s1.font_face == s2.font_face);
  CHECK(s1.font_scale == s2.font_scale);
  CHECK(s1.fg == s2.fg);
  CHECK(s1.noise_seed == s2.noise_seed);
  const bool differs = s1.font_face != s3.font_face ||
                       s1.font_scale != s3.font_scale || s1.fg != s3.fg ||
                       s1.baseline_shift != s3.baseline_shift;
  CHECK(differs);
  CHECK(s1.font_scale >= 0.5);
  CHECK(s1.font_scale <= 1.5);
  CHECK(s1.thickness >= 1);
  for (int i = 0; i < 3; ++i) {
    CHECK(s1.fg[static_cast<size_t>(i)] >= 0.0);
    CHECK(s1.fg[static_cast<size_t>(i)] <= 1.0);
    CHECK(s1.bg[static_cast<size_t>(i)] >= 0.0);
    CHECK(s1.bg[static_cast<size_t>(i)] <= 1.0);
  }
}

TEST_CASE("random_word draws lowercase alphanumerics in the length band") {
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    auto w = random_word(rng, 3, 10);
    CHECK(w.size() >= 3);
    CHECK(w.size() <= 10);
    for (char ch : w) {
      const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9');
      CHECK(ok);
    }
  }
}

TEST_CASE("png round trip stays within quantization error") {
  auto dir = temp_dir("png");
  torch::manual_seed(5);
  auto img = torch::rand({3, 32, 128});
  save_png(img, dir / "x.png");
  auto back = load_png(dir / "x.png");
  REQUIRE(back.sizes() == img.sizes());
  CHECK((back - img).abs().max().item<float>() <= 0.5f / 255.0f + 1e-6f);
  fs::remove_all(dir);
}

TEST_CASE("manifest writes and parses losslessly") {
  auto dir = temp_dir("manifest");
  DatasetManifest m;
  m.root = dir;
  m.split = "train";
  m.entries = {
      {"a1", "train/lr/a1.png", "train/hr/a1.png", "hello", "r15_star"},
      {"b2", "train/lr/b2.png", "train/hr/b2.png", "w0rld9", "none"},
  };
  save_manifest(m);
  auto back = load_manifest(dir, "train");
  REQUIRE(back.entries.size() == 2);
  CHECK(back.entries[0].id == "a1");
  CHECK(back.entries[0].text == "hello");
  CHECK(back.entries[0].blur_tag == "r15_star");
  CHECK(back.entries[1].id == "b2");
  CHECK(back.entries[1].lr_path == "train/lr/b2.png");

  // duplicate ids are refused
  std::ofstream f(dir / "train.manifest.tsv", std::ios::app);
  f << "a1\ttrain/lr/a1.png\ttrain/hr/a1.png\tdup\tnone\n";
  f.close();
  CHECK_THROWS_AS(load_manifest(dir, "train"), DataError);
  fs::remove_all(dir);
}

TEST_CASE("load_manifest rejects malformed rows and missing files") {
  auto dir = temp_dir("badman");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "train.manifest.tsv");
    f << "only\tthree\tcols\n";
  }
  CHECK_THROWS_AS(load_manifest(dir, "train"), DataError);
  CHECK_THROWS_AS(load_manifest(dir / "nowhere", "train"), DataError);
  fs::remove_all(dir);
}

TEST_CASE("build_corpus writes the documented layout deterministically") {
  auto dir = temp_dir("corpus");
  SynthConfig cfg;
  cfg.out_root = dir / "run1";
  cfg.count = 12;
  cfg.train_split = 0.75;
  cfg.seed = 99;
  cfg.blur = BlurRadius::R15_STAR;
  auto [train_m, test_m] = build_corpus(cfg);
  CHECK(train_m.entries.size() == 9);
  CHECK(test_m.entries.size() == 3);

  std::set<std::string> ids;
  for (const auto& e : train_m.entries) {
    ids.insert(e.id);
    CHECK(fs::exists(dir / "run1" / e.lr_path));
    CHECK(fs::exists(dir / "run1" / e.hr_path));
    CHECK(e.lr_path == "train/lr/" + e.id + ".png");
    CHECK(e.hr_path == "train/hr/" + e.id + ".png");
    CHECK(e.blur_tag == "r15_star");
    CHECK(e.text.size() >= 3);
    CHECK(e.text.size() <= 10);
  }
  for (const auto& e : test_m.entries) {
    ids.insert(e.id);
    CHECK(e.lr_path == "test/lr/" + e.id + ".png");
  }
  CHECK(ids.size() == 12);
  CHECK(fs::exists(dir / "run1" / "train.manifest.tsv"));
  CHECK(fs::exists(dir / "run1" / "test.manifest.tsv"));

  // identical seed -> bitwise identical corpus
  cfg.out_root = dir / "run2";
  auto [train2, test2] = build_corpus(cfg);
  REQUIRE(train2.entries.size() == train_m.entries.size());
  for (size_t i = 0; i < train_m.entries.size(); ++i) {
    CHECK(train_m.entries[i].text == train2.entries[i].text);
    auto a = load_png(dir / "run1" / train_m.entries[i].hr_path);
    auto b = load_png(dir / "run2" / train2.entries[i].hr_path);
    CHECK(torch::equal(a, b));
    auto la = load_png(dir / "run1" / train_m.entries[i].lr_path);
    auto lb = load_png(dir / "run2" / train2.entries[i].lr_path);
    CHECK(torch::equal(la, lb));
  }

  // a different seed changes the words
  cfg.out_root = dir / "run3";
  cfg.seed = 100;
  auto [train3, test3] = build_corpus(cfg);
  bool any_diff = false;
  for (size_t i = 0; i < train_m.entries.size(); ++i) {
    any_diff = any_diff || train3.entries[i].text != train_m.entries[i].text;
  }
  CHECK(any_diff);
  fs::remove_all(dir);
}

TEST_CASE("load_dataset preserves manifest order and shuffles reproducibly") {
  auto dir = temp_dir("loadds");
  SynthConfig cfg;
  cfg.out_root = dir;
  cfg.count = 8;
  cfg.train_split = 0.75;
  cfg.seed = 5;
  auto [train_m, test_m] = build_corpus(cfg);

  auto plain = load_dataset(train_m);
  REQUIRE(plain.size() == train_m.entries.size());
  for (size_t i = 0; i < plain.size(); ++i) {
    CHECK(plain[i].id == train_m.entries[i].id);
    CHECK(plain[i].lr.sizes() == torch::IntArrayRef({3, 16, 64}));
    CHECK(plain[i].hr.sizes() == torch::IntArrayRef({3, 32, 128}));
    CHECK(plain[i].blur == BlurRadius::R15_STAR);
  }

  auto s1 = load_dataset(train_m, true, 123);
  auto s2 = load_dataset(train_m, true, 123);
  auto s3 = load_dataset(train_m, true, 124);
  REQUIRE(s1.size() == plain.size());
  std::vector<std::string> ids1, ids2, ids3, ids0;
  for (size_t i = 0; i < s1.size(); ++i) {
    ids1.push_back(s1[i].id);
    ids2.push_back(s2[i].id);
    ids3.push_back(s3[i].id);
    ids0.push_back(plain[i].id);
  }
  CHECK(ids1 == ids2);
  CHECK(ids1 != ids0);
  CHECK(ids1 != ids3);
  auto sorted1 = ids1, sorted0 = ids0;
  std::sort(sorted1.begin(), sorted1.end());
  std::sort(sorted0.begin(), sorted0.end());
  CHECK(sorted1 == sorted0);
  fs::remove_all(dir);
}
