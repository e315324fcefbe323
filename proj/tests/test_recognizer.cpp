#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest_torch.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "tatsr/data.hpp"
#include "tatsr/recognizer.hpp"

namespace fs = std::filesystem;
using namespace tatsr;

namespace {
fs::path temp_dir(const std::string& tag) {
  auto p = fs::temp_directory_path() /
           ("tatsr_rec_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path tiny_corpus(const std::string& tag, int64_t count) {
  auto dir = temp_dir(tag);
  SynthConfig cfg;
  cfg.out_root = dir;
  cfg.count = count;
  cfg.train_split = 0.75;
  cfg.seed = 7;
  build_corpus(cfg);
  return dir;
}
}  // namespace

TEST_CASE("charset maps symbols to classes with blank zero") {
  Charset cs;
  CHECK(cs.num_classes() == 37);
  CHECK(cs.class_of('a') == 1);
  CHECK(cs.class_of('z') == 26);
  CHECK(cs.class_of('0') == 27);
  CHECK(cs.class_of('9') == 36);
  CHECK(cs.symbol_of(1) == 'a');
  CHECK(cs.symbol_of(36) == '9');
  CHECK_THROWS_AS(cs.class_of('A'), DataError);
  CHECK_THROWS_AS(cs.class_of(' '), DataError);
  auto enc = cs.encode("ab9");
  REQUIRE(enc.size() == 3);
  CHECK(enc[0] == 1);
  CHECK(enc[1] == 2);
  CHECK(enc[2] == 36);
}

TEST_CASE("backbone config is validated") {
  BackboneConfig bad;
  bad.stage_channels = {64, 128, 256};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.width_strides = {2, 2, 1, 1, 3};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_NOTHROW(BackboneConfig{}.validate());
}

TEST_CASE("backbone pyramid has the documented shapes") {
  torch::manual_seed(0);
  CrnnBackbone bb{BackboneConfig{}};
  bb->eval();
  torch::NoGradGuard ng;
  auto pyr = bb->pyramid(torch::rand({2, 1, 32, 128}));
  REQUIRE(pyr.size() == 5);
  const int64_t want[5][3] = {
      {64, 16, 64}, {128, 8, 32}, {256, 4, 32}, {512, 2, 32}, {512, 1, 32}};
  for (size_t j = 0; j < 5; ++j) {
    CHECK(pyr[j].size(0) == 2);
    CHECK(pyr[j].size(1) == want[j][0]);
    CHECK(pyr[j].size(2) == want[j][1]);
    CHECK(pyr[j].size(3) == want[j][2]);
  }
}

TEST_CASE("logits are (T, B, classes)") {
  torch::manual_seed(1);
  Recognizer rec;
  rec->eval();
  torch::NoGradGuard ng;
  auto out = rec->logits(torch::rand({3, 1, 32, 128}));
  CHECK(out.sizes() == torch::IntArrayRef({32, 3, 37}));
}

TEST_CASE("greedy ctc decode matches a scalar reference") {
  Charset cs;
  torch::manual_seed(2);
  for (int i = 0; i < 100; ++i) {
    auto logits = torch::randn({32, 37});
    CHECK(ctc_greedy_decode(logits, cs) == oracle::ctc_decode(logits, cs.symbols));
  }

  // handcrafted: a a _ a b b -> "aab"
  auto t = torch::full({6, 37}, -10.0f);
  t[0][1] = 10;  // a
  t[1][1] = 10;  // a (repeat, collapses)
  t[2][0] = 10;  // blank
  t[3][1] = 10;  // a (new after blank)
  t[4][2] = 10;  // b
  t[5][2] = 10;  // b (repeat)
  CHECK(ctc_greedy_decode(t, cs) == "aab");

  auto blanks = torch::zeros({4, 37});
  blanks.index_put_({torch::indexing::Slice(), 0}, 10.0f);
  CHECK(ctc_greedy_decode(blanks, cs).empty());
}

TEST_CASE("extract_features requires loaded weights and keeps them pure") {
  torch::manual_seed(3);
  Recognizer rec;
  auto img = torch::rand({1, 1, 32, 128});
  CHECK_THROWS_AS(rec->extract_features(img), StateError);

  rec->mark_loaded();
  rec->train();  // even in train mode the extractor must not mutate BN stats
  std::vector<torch::Tensor> before;
  for (const auto& p : rec->backbone->buffers()) before.push_back(p.clone());

  auto pyr = rec->extract_features(img);
  REQUIRE(pyr.size() == 5);
  auto buffers = rec->backbone->buffers();
  REQUIRE(buffers.size() == before.size());
  for (size_t i = 0; i < buffers.size(); ++i) {
    CHECK(torch::equal(buffers[i], before[i]));
  }
  CHECK(rec->is_training());  // mode restored

  // and two calls agree bitwise
  auto pyr2 = rec->extract_features(img);
  for (size_t j = 0; j < 5; ++j) CHECK(torch::equal(pyr[j], pyr2[j]));
}

TEST_CASE("extract_features lets gradients reach the input") {
  torch::manual_seed(4);
  Recognizer rec;
  rec->mark_loaded();
  auto img = torch::rand({1, 1, 32, 128}, torch::requires_grad());
  auto pyr = rec->extract_features(img);
  pyr[4].sum().backward();
  REQUIRE(img.grad().defined());
  CHECK(img.grad().abs().sum().item<float>() > 0.0f);
}

TEST_CASE("extract_features accepts unbatched input") {
  Recognizer rec;
  rec->mark_loaded();
  auto pyr = rec->extract_features(torch::rand({1, 32, 128}));
  REQUIRE(pyr.size() == 5);
  CHECK(pyr[0].size(0) == 1);
  CHECK(pyr[0].size(1) == 64);
}

TEST_CASE("freeze disables every parameter") {
  Recognizer rec;
  rec->mark_loaded();
  CHECK_FALSE(rec->frozen());
  rec->freeze();
  CHECK(rec->frozen());
  for (const auto& p : rec->parameters()) CHECK_FALSE(p.requires_grad());
  CHECK_FALSE(rec->is_training());
}

TEST_CASE("recognize validates input and handles sizes") {
  torch::manual_seed(5);
  Recognizer rec;
  CHECK_THROWS_AS(rec->recognize(torch::rand({3, 32, 128})), StateError);
  rec->mark_loaded();
  auto text = rec->recognize(torch::rand({3, 32, 128}));
  for (char c : text) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
    CHECK(ok);
  }
  CHECK_NOTHROW(rec->recognize(torch::rand({1, 32, 128})));
  CHECK_NOTHROW(rec->recognize(torch::rand({1, 3, 32, 128})));
  CHECK_NOTHROW(rec->recognize(torch::rand({3, 20, 80})));  // resized internally
  CHECK_THROWS_AS(rec->recognize(torch::rand({2, 3, 32, 128})), ContractViolation);
  CHECK_THROWS_AS(rec->recognize(torch::rand({4, 32, 128})), ContractViolation);
}

TEST_CASE("training is seed-deterministic and improves ctc loss") {
  auto dir = tiny_corpus("train", 16);
  auto train_m = load_manifest(dir, "train");

  RecognizerTrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch = 6;
  cfg.seed = 11;
  cfg.quiet = true;
  auto r1 = train_recognizer(train_m, cfg);
  auto r2 = train_recognizer(train_m, cfg);
  CHECK(r1->loaded());

  auto p1 = r1->parameters();
  auto p2 = r2->parameters();
  REQUIRE(p1.size() == p2.size());
  for (size_t i = 0; i < p1.size(); ++i) CHECK(torch::equal(p1[i], p2[i]));

  cfg.seed = 12;
  auto r3 = train_recognizer(train_m, cfg);
  bool any_diff = false;
  auto p3 = r3->parameters();
  for (size_t i = 0; i < p1.size(); ++i) {
    any_diff = any_diff || !torch::equal(p1[i], p3[i]);
  }
  CHECK(any_diff);

  const double acc = hr_sequence_accuracy(r1, load_dataset(load_manifest(dir, "test")));
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
  fs::remove_all(dir);
}

TEST_CASE("training refuses words outside the charset") {
  auto dir = temp_dir("badword");
  SynthConfig scfg;
  scfg.out_root = dir;
  scfg.count = 4;
  scfg.train_split = 0.75;
  scfg.seed = 3;
  build_corpus(scfg);
  auto m = load_manifest(dir, "train");
  m.entries[0].text = "has space";
  save_manifest(m);
  auto reloaded = load_manifest(dir, "train");
  RecognizerTrainConfig cfg;
  cfg.epochs = 1;
  cfg.quiet = true;
  CHECK_THROWS_AS(train_recognizer(reloaded, cfg), DataError);
  fs::remove_all(dir);
}

TEST_CASE("checkpoint round trip preserves behaviour and refuses mismatches") {
  torch::manual_seed(6);
  Recognizer rec;
  rec->mark_loaded();
  auto dir = temp_dir("ckpt");
  save_recognizer(rec, dir / "rec");

  auto back = load_recognizer(dir / "rec");
  CHECK(back->loaded());
  auto img = torch::rand({1, 1, 32, 128});
  rec->eval();
  back->eval();
  torch::NoGradGuard ng;
  CHECK(torch::equal(rec->logits(img), back->logits(img)));

  Charset other;
  other.symbols = "abc";
  CHECK_THROWS_AS(load_recognizer(dir / "rec", &other), ConfigError);

  // tampered version number is refused
  auto meta_path = dir / "rec" / "meta.json";
  std::ifstream in(meta_path);
  std::string meta((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  in.close();
  auto pos = meta.find("\"version\"");
  REQUIRE(pos != std::string::npos);
  auto colon = meta.find(':', pos);
  meta.replace(colon + 1, meta.find_first_of(",}", colon) - colon - 1, " 999");
  std::ofstream out(meta_path, std::ios::binary);
  out << meta;
  out.close();
  CHECK_THROWS_AS(load_recognizer(dir / "rec"), ConfigError);

  CHECK_THROWS_AS(load_recognizer(dir / "missing"), DataError);
  fs::remove_all(dir);
}
