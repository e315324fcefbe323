#include "tatsr/recognizer.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace F = torch::nn::functional;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace tatsr {

int64_t Charset::class_of(char c) const {
  const auto pos = symbols.find(c);
  if (pos == std::string::npos) {
    throw DataError(std::string("character '") + c + "' not in charset");
  }
  return static_cast<int64_t>(pos) + 1;
}

std::vector<int64_t> Charset::encode(const std::string& text) const {
  std::vector<int64_t> out;
  out.reserve(text.size());
  for (char c : text) out.push_back(class_of(c));
  return out;
}

char Charset::symbol_of(int64_t cls) const {
  if (cls < 1 || cls > static_cast<int64_t>(symbols.size())) {
    throw ContractViolation("charset: class " + std::to_string(cls) +
                            " out of range");
  }
  return symbols[cls - 1];
}

void BackboneConfig::validate() const {
  if (stage_channels.size() != 5 || width_strides.size() != 5) {
    throw ConfigError("backbone: exactly 5 stages required");
  }
  for (auto s : width_strides) {
    if (s != 1 && s != 2) throw ConfigError("backbone: width strides must be 1 or 2");
  }
  for (auto c : stage_channels) {
    if (c < 1) throw ConfigError("backbone: channels must be >= 1");
  }
}

CrnnBackboneImpl::CrnnBackboneImpl(BackboneConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  int64_t in_ch = 1;
  for (size_t i = 0; i < cfg_.stage_channels.size(); ++i) {
    const auto out_ch = cfg_.stage_channels[i];
    const auto ws = cfg_.width_strides[i];
    torch::nn::Sequential stage(
        torch::nn::Conv2d(
            torch::nn::Conv2dOptions(in_ch, out_ch, 3).padding(1).bias(false)),
        torch::nn::BatchNorm2d(out_ch),
        torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions({2, ws})),
        torch::nn::ReLU());
    stages_.push_back(register_module("stage" + std::to_string(i + 1), stage));
    in_ch = out_ch;
  }
}

std::vector<torch::Tensor> CrnnBackboneImpl::pyramid(const torch::Tensor& gray) {
  std::vector<torch::Tensor> taps;
  taps.reserve(stages_.size());
  auto x = gray;
  for (auto& stage : stages_) {
    x = stage->forward(x);
    taps.push_back(x);
  }
  return taps;
}

RecognizerImpl::RecognizerImpl(RecognizerConfig cfg, Charset charset)
    : cfg_(std::move(cfg)), charset_(std::move(charset)) {
  backbone = register_module("backbone", CrnnBackbone(cfg_.backbone));
  const auto feat_ch = cfg_.backbone.stage_channels.back();
  lstm = register_module(
      "lstm", torch::nn::LSTM(torch::nn::LSTMOptions(feat_ch, cfg_.lstm_hidden)
                                  .bidirectional(true)
                                  .batch_first(true)));
  fc = register_module(
      "fc", torch::nn::Linear(2 * cfg_.lstm_hidden, charset_.num_classes()));
}

std::vector<torch::Tensor> RecognizerImpl::extract_features(
    const torch::Tensor& img) {
  if (!loaded_) {
    throw StateError("recognizer: extract_features called before weights were loaded");
  }
  check_image(img, 1, kHrHeight, kHrWidth, "extract_features input");
  auto x = ensure_batched(img);
  // inference mode regardless of the module's flag: feature extraction must
  // not touch batch-norm running stats
  const bool was_training = backbone->is_training();
  if (was_training) backbone->eval();
  auto taps = backbone->pyramid(x);
  if (was_training) backbone->train();
  return taps;
}

torch::Tensor RecognizerImpl::logits(const torch::Tensor& gray) {
  check_image(gray, 1, kHrHeight, kHrWidth, "recognizer input");
  auto x = ensure_batched(gray);
  auto feat = backbone->pyramid(x).back();  // (B, C, 1, W)
  auto seq = feat.squeeze(2).permute({0, 2, 1});  // (B, W, C)
  auto out = std::get<0>(lstm->forward(seq));     // (B, W, 2*hidden)
  return fc->forward(out).permute({1, 0, 2});     // (T, B, classes)
}

std::string RecognizerImpl::recognize(const torch::Tensor& img) {
  if (!loaded_) {
    throw StateError("recognizer: recognize called before weights were loaded");
  }
  torch::NoGradGuard ng;
  if (img.dim() != 3 && img.dim() != 4) {
    throw ContractViolation("recognize: expected (C,H,W) or (1,C,H,W)");
  }
  auto x = ensure_batched(img);
  if (x.size(0) != 1 || (x.size(1) != 1 && x.size(1) != 3)) {
    throw ContractViolation("recognize: expected a single 1- or 3-channel image");
  }
  auto gray = to_grayscale(x);
  if (gray.size(2) != kHrHeight || gray.size(3) != kHrWidth) {
    gray = resize_bicubic(gray, kHrHeight, kHrWidth);
  }
  const bool was_training = is_training();
  if (was_training) eval();
  auto lg = logits(gray).squeeze(1);  // (T, classes)
  if (was_training) train();
  return ctc_greedy_decode(lg, charset_);
}

void RecognizerImpl::freeze() {
  for (auto& p : parameters()) p.set_requires_grad(false);
  eval();
}

bool RecognizerImpl::frozen() const {
  for (const auto& p : parameters()) {
    if (p.requires_grad()) return false;
  }
  return !is_training();
}

std::string ctc_greedy_decode(const torch::Tensor& logits, const Charset& cs) {
  if (logits.dim() != 2 || logits.size(0) < 1) {
    throw ContractViolation("ctc_greedy_decode: expected (T, classes) with T >= 1");
  }
  auto path = logits.argmax(1).contiguous();
  auto acc = path.accessor<int64_t, 1>();
  std::string out;
  int64_t prev = 0;
  for (int64_t t = 0; t < path.size(0); ++t) {
    const int64_t cls = acc[t];
    if (cls != 0 && cls != prev) out.push_back(cs.symbol_of(cls));
    prev = cls;
  }
  return out;
}

namespace {

torch::Tensor augment_hr_gray(const torch::Tensor& gray,
                              const RecognizerTrainConfig& cfg, Rng& rng) {
  auto out = gray;
  if (cfg.aug_blur_prob > 0.0 && rng.uniform01() < cfg.aug_blur_prob) {
    out = gaussian_blur(out, 1, 0.5 + 0.5 * rng.uniform01());
  }
  if (cfg.aug_noise_std > 0.0) {
    const double std = cfg.aug_noise_std * rng.uniform01();
    if (std > 0.0) {
      out = (out + torch::randn_like(out) * std).clamp(0.0, 1.0);
    }
  }
  return out;
}

}  // namespace

Recognizer train_recognizer(const DatasetManifest& train,
                            const RecognizerTrainConfig& cfg) {
  if (train.entries.empty()) throw DataError("train_recognizer: empty manifest");
  torch::manual_seed(static_cast<int64_t>(cfg.seed));

  Recognizer rec;
  for (const auto& e : train.entries) {
    if (e.text.empty()) {
      throw DataError("train_recognizer: sample '" + e.id + "' has empty text");
    }
  }
  auto samples = load_dataset(train);

  std::vector<torch::Tensor> grays;
  grays.reserve(samples.size());
  for (const auto& s : samples) grays.push_back(to_grayscale(s.hr));

  torch::optim::Adam opt(rec->parameters(), torch::optim::AdamOptions(cfg.lr));
  rec->train();

  std::vector<int64_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  int64_t step = 0;
  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, "rec_epoch:" + std::to_string(epoch)));
    rng.shuffle(order);
    for (size_t off = 0; off < order.size(); off += cfg.batch) {
      const size_t n = std::min<size_t>(cfg.batch, order.size() - off);
      std::vector<torch::Tensor> batch;
      std::vector<int64_t> flat_targets, target_lens;
      batch.reserve(n);
      for (size_t k = 0; k < n; ++k) {
        const auto i = order[off + k];
        batch.push_back(augment_hr_gray(grays[i], cfg, rng));
        auto enc = rec->charset_.encode(samples[i].text);
        flat_targets.insert(flat_targets.end(), enc.begin(), enc.end());
        target_lens.push_back(static_cast<int64_t>(enc.size()));
      }
      auto x = torch::stack(batch);
      auto lg = rec->logits(x);  // (T, B, classes)
      auto log_probs = torch::log_softmax(lg, 2);
      auto targets = torch::tensor(flat_targets, torch::kLong);
      auto in_lens = torch::full({static_cast<int64_t>(n)}, lg.size(0), torch::kLong);
      auto tgt_lens = torch::tensor(target_lens, torch::kLong);
      auto loss = F::ctc_loss(log_probs, targets, in_lens, tgt_lens,
                              F::CTCLossFuncOptions().blank(0).zero_infinity(true));
      const double lv = loss.item<double>();
      if (!std::isfinite(lv)) {
        throw TrainingDiverged("recognizer training: non-finite loss at step " +
                               std::to_string(step));
      }
      opt.zero_grad();
      loss.backward();
      opt.step();
      if (!cfg.quiet && cfg.log_every > 0 && step % cfg.log_every == 0) {
        std::printf("[rec] epoch %lld step %lld ctc %.4f\n",
                    static_cast<long long>(epoch), static_cast<long long>(step), lv);
      }
      ++step;
    }
  }
  rec->eval();
  rec->mark_loaded();
  return rec;
}

double hr_sequence_accuracy(Recognizer& rec, const std::vector<SamplePair>& samples) {
  if (samples.empty()) throw DataError("hr_sequence_accuracy: no samples");
  int64_t correct = 0;
  for (const auto& s : samples) {
    if (rec->recognize(s.hr) == s.text) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

void save_recognizer(Recognizer& rec, const fs::path& dir) {
  fs::create_directories(dir);
  torch::save(rec, (dir / "weights.pt").string());
  json meta;
  meta["version"] = kRecognizerCheckpointVersion;
  meta["kind"] = "recognizer";
  meta["charset"] = rec->charset_.symbols;
  meta["stage_channels"] = rec->cfg_.backbone.stage_channels;
  meta["width_strides"] = rec->cfg_.backbone.width_strides;
  meta["lstm_hidden"] = rec->cfg_.lstm_hidden;
  std::ofstream out(dir / "meta.json", std::ios::binary);
  if (!out) throw DataError("cannot write " + (dir / "meta.json").string());
  out << meta.dump(2) << "\n";
}

Recognizer load_recognizer(const fs::path& dir, const Charset* expected) {
  std::ifstream in(dir / "meta.json", std::ios::binary);
  if (!in) throw DataError("cannot open " + (dir / "meta.json").string());
  json meta = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (meta.is_discarded()) {
    throw DataError("malformed meta.json in " + dir.string());
  }
  if (meta.value("version", -1) != kRecognizerCheckpointVersion) {
    throw ConfigError("recognizer checkpoint version mismatch in " + dir.string());
  }
  if (meta.value("kind", "") != "recognizer") {
    throw ConfigError("checkpoint at " + dir.string() + " is not a recognizer");
  }
  Charset cs{meta.value("charset", "")};
  if (expected && !(cs == *expected)) {
    throw ConfigError("recognizer charset mismatch: checkpoint has '" +
                      cs.symbols + "'");
  }
  RecognizerConfig cfg;
  cfg.backbone.stage_channels = meta.at("stage_channels").get<std::vector<int64_t>>();
  cfg.backbone.width_strides = meta.at("width_strides").get<std::vector<int64_t>>();
  cfg.lstm_hidden = meta.at("lstm_hidden").get<int64_t>();
  Recognizer rec(cfg, cs);
  torch::load(rec, (dir / "weights.pt").string());
  rec->eval();
  rec->mark_loaded();
  return rec;
}

}  // namespace tatsr
