#pragma once

#include <torch/torch.h>

#include <array>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tatsr/common.hpp"

namespace tatsr {

// Canonical geometry: LR crops are 16x64, HR crops are 32x128.
inline constexpr int64_t kLrHeight = 16;
inline constexpr int64_t kLrWidth = 64;
inline constexpr int64_t kHrHeight = 32;
inline constexpr int64_t kHrWidth = 128;

// Blur settings for the degradation pipeline. Starred variants blur at HR
// resolution before downsampling, plain variants downsample first and blur
// at LR resolution. NONE is bicubic downsampling only.
enum class BlurRadius { NONE, R05_STAR, R1, R15_STAR, R2 };

inline constexpr std::array<BlurRadius, 4> kSweepRadii = {
    BlurRadius::R05_STAR, BlurRadius::R1, BlurRadius::R15_STAR, BlurRadius::R2};

std::string blur_tag(BlurRadius r);
BlurRadius parse_blur_tag(const std::string& tag);

// Pixel radius of the Gaussian kernel at the resolution the blur runs at.
int blur_radius_px(BlurRadius r);
// sigma = radius / 2
double blur_sigma(BlurRadius r);
bool blur_at_hr(BlurRadius r);

struct DegradeSpec {
  BlurRadius radius = BlurRadius::NONE;
  double noise_std = 0.0;  // additive Gaussian after blur+resize, then clamp
};

struct SamplePair {
  std::string id;
  torch::Tensor lr;  // (3, 16, 64) float32 in [0,1]
  torch::Tensor hr;  // (3, 32, 128) float32 in [0,1]
  std::string text;
  BlurRadius blur = BlurRadius::NONE;
};

struct ManifestEntry {
  std::string id;
  std::string lr_path;  // relative to the dataset root
  std::string hr_path;
  std::string text;
  std::string blur_tag;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::string split;  // "train" or "test"
  std::vector<ManifestEntry> entries;
};

// Odd-length 1-D Gaussian, normalized to sum 1. size = 2*radius+1.
torch::Tensor gaussian_kernel1d(int radius, double sigma);

// Separable Gaussian blur with replicate edge padding. (B,C,H,W) or (C,H,W).
torch::Tensor gaussian_blur(const torch::Tensor& img, int radius, double sigma);

// Bicubic resize (align_corners=false), values clamped to [0,1].
torch::Tensor resize_bicubic(const torch::Tensor& img, int64_t h, int64_t w);

// HR (3,32,128) -> LR (3,16,64). Starred radii blur before the downsample,
// plain radii after it; optional noise is drawn from `seed`.
torch::Tensor degrade(const torch::Tensor& hr, const DegradeSpec& spec,
                      uint64_t seed = 0);

// Text-region mask: grayscale pixels strictly above the per-image mean.
// (3,H,W) or (B,3,H,W) -> (1,H,W) / (B,1,H,W) float32 in {0,1}.
torch::Tensor compute_mask(const torch::Tensor& img);

// Word rendering. Glyphs are drawn with one of the built-in vector font
// faces, supersampled, and composited over a (possibly graded and noisy)
// background. Defaults give black-on-white with no texture.
struct RenderStyle {
  int font_face = 0;  // cv::HersheyFonts id, 0..7
  bool italic = false;
  double font_scale = 1.0;
  int thickness = 1;
  std::array<double, 3> fg = {0.0, 0.0, 0.0};
  std::array<double, 3> bg = {1.0, 1.0, 1.0};
  std::array<double, 3> bg2 = {1.0, 1.0, 1.0};  // right edge of the gradient
  double noise_std = 0.0;                       // background texture noise
  uint64_t noise_seed = 0;
  double baseline_shift = 0.0;  // vertical offset, fraction of height
};

// Renders a word as an HR crop (3, 32, 128), float32 in [0,1]. Text wider
// than the canvas is squeezed uniformly, never truncated.
torch::Tensor render_word(const std::string& text, const RenderStyle& style,
                          int64_t h = kHrHeight, int64_t w = kHrWidth);

// Deterministic style draw for sample `id` under a corpus seed.
RenderStyle draw_style(uint64_t seed, const std::string& id);

struct SynthConfig {
  std::filesystem::path out_root;
  int64_t count = 2200;
  double train_split = 10.0 / 11.0;
  uint64_t seed = 0;
  BlurRadius blur = BlurRadius::R15_STAR;
  double noise_std = 0.0;
  int64_t min_len = 3;
  int64_t max_len = 10;
};

// Renders words, degrades them, writes PNGs plus the two manifests, and
// returns (train, test). Deterministic under cfg.seed.
std::pair<DatasetManifest, DatasetManifest> build_corpus(const SynthConfig& cfg);

// Lowercase-alphanumeric word of length in [min_len, max_len].
std::string random_word(Rng& rng, int64_t min_len, int64_t max_len);

void save_manifest(const DatasetManifest& m);
DatasetManifest load_manifest(const std::filesystem::path& root,
                              const std::string& split);

// Loads every entry into memory, validating shapes. Shuffling is seeded.
std::vector<SamplePair> load_dataset(const DatasetManifest& m,
                                     bool shuffle = false, uint64_t seed = 0);
SamplePair load_sample(const DatasetManifest& m, const ManifestEntry& e);

// PNG I/O. Tensors are (3,H,W) float32 in [0,1]; files are 8-bit RGB.
// Quantization happens only here, never inside the training loop.
void save_png(const torch::Tensor& img, const std::filesystem::path& path);
torch::Tensor load_png(const std::filesystem::path& path);

}  // namespace tatsr
