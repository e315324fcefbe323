#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <string>
#include <vector>

#include "tatsr/common.hpp"
#include "tatsr/data.hpp"

namespace tatsr {

// CTC alphabet. Class 0 is the blank; symbol i maps to class i + 1.
struct Charset {
  std::string symbols = "abcdefghijklmnopqrstuvwxyz0123456789";

  int64_t num_classes() const { return static_cast<int64_t>(symbols.size()) + 1; }
  int64_t class_of(char c) const;                       // throws on unknown
  std::vector<int64_t> encode(const std::string& text) const;
  char symbol_of(int64_t cls) const;                    // cls in [1, num_classes)
  bool operator==(const Charset& o) const { return symbols == o.symbols; }
};

// Five conv stages, each halving height; widths follow width_strides.
// For 1x32x128 input the taps are (64,16,64), (128,8,32), (256,4,32),
// (512,2,32), (512,1,32).
struct BackboneConfig {
  std::vector<int64_t> stage_channels = {64, 128, 256, 512, 512};
  std::vector<int64_t> width_strides = {2, 2, 1, 1, 1};
  void validate() const;
};

struct CrnnBackboneImpl : torch::nn::Module {
  explicit CrnnBackboneImpl(BackboneConfig cfg = {});

  // (B, 1, 32, 128) -> five stage outputs, tapped after each stage's
  // pooling and activation.
  std::vector<torch::Tensor> pyramid(const torch::Tensor& gray);

  BackboneConfig cfg_;
  std::vector<torch::nn::Sequential> stages_;
};
TORCH_MODULE(CrnnBackbone);

struct RecognizerConfig {
  BackboneConfig backbone;
  int64_t lstm_hidden = 256;
};

// CRNN: backbone pyramid (doubles as the perceptual feature extractor),
// BiLSTM over the width axis, linear CTC head.
struct RecognizerImpl : torch::nn::Module {
  RecognizerImpl(RecognizerConfig cfg = {}, Charset charset = {});

  // Feature pyramid of a grayscale HR image, (1,32,128) or (B,1,32,128).
  // Runs the backbone in inference mode; gradients still reach the input.
  std::vector<torch::Tensor> extract_features(const torch::Tensor& img);

  // (B, 1, 32, 128) -> (T, B, num_classes) raw logits, T = 32.
  torch::Tensor logits(const torch::Tensor& gray);

  // Any RGB or grayscale image; resized to 32x128 when needed, then
  // greedy-CTC decoded.
  std::string recognize(const torch::Tensor& img);

  // Weights count as loaded once trained or deserialized.
  bool loaded() const { return loaded_; }
  void mark_loaded() { loaded_ = true; }
  // Disables grad on every parameter and switches to eval mode.
  void freeze();
  bool frozen() const;

  RecognizerConfig cfg_;
  Charset charset_;
  CrnnBackbone backbone{nullptr};
  torch::nn::LSTM lstm{nullptr};
  torch::nn::Linear fc{nullptr};
  bool loaded_ = false;
};
TORCH_MODULE(Recognizer);

// Argmax per step, collapse repeats, then drop blanks. logits is (T, classes).
std::string ctc_greedy_decode(const torch::Tensor& logits, const Charset& cs);

struct RecognizerTrainConfig {
  int64_t epochs = 30;
  int64_t batch = 32;
  double lr = 1e-3;
  uint64_t seed = 1;
  // light HR-space corruption so the recognizer tolerates restored images
  double aug_blur_prob = 0.3;
  double aug_noise_std = 0.02;
  int64_t log_every = 100;
  bool quiet = false;
};

// CTC training on the manifest's HR images. Throws TrainingDiverged on
// non-finite loss.
Recognizer train_recognizer(const DatasetManifest& train,
                            const RecognizerTrainConfig& cfg);

// Sequence accuracy of exact (normalized) matches on HR images.
double hr_sequence_accuracy(Recognizer& rec, const std::vector<SamplePair>& samples);

inline constexpr int kRecognizerCheckpointVersion = 1;

// Checkpoint directory: weights.pt plus meta.json (version, kind, charset,
// backbone recipe). Loading refuses version or charset mismatches.
void save_recognizer(Recognizer& rec, const std::filesystem::path& dir);
Recognizer load_recognizer(const std::filesystem::path& dir,
                           const Charset* expected = nullptr);

}  // namespace tatsr
