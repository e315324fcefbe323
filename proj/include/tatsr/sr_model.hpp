#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <vector>

#include "tatsr/cctb.hpp"
#include "tatsr/common.hpp"
#include "tatsr/data.hpp"

namespace tatsr {

struct TpsConfig {
  int64_t grid_rows = 4;
  int64_t grid_cols = 8;
  int64_t localization_hidden = 256;
  double warp_scale = 0.25;  // max control-point offset in [-1,1] coords
  void validate() const;
};

// Thin-plate-spline alignment of the (image + mask) stack. A small
// localization net predicts per-control-point offsets from a fixed fiducial
// grid; the final layer is zero-initialized so the module starts as the
// identity warp. The pixel basis matrix is precomputed in double for the
// fixed 16x64 geometry.
struct TpsAlignImpl : torch::nn::Module {
  explicit TpsAlignImpl(TpsConfig cfg = {});

  // (B, 4, 16, 64) -> warped (B, 4, 16, 64)
  torch::Tensor forward(const torch::Tensor& x);
  // predicted control points, (B, K, 2) in [-1, 1] coordinates
  torch::Tensor predict_points(const torch::Tensor& x);

  TpsConfig cfg_;
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
  torch::Tensor fiducials_;  // (K, 2)
  torch::Tensor basis_;      // (H*W, K): pixel grid = basis_ @ control points
};
TORCH_MODULE(TpsAlign);

struct SrModelConfig {
  int64_t num_blocks = 4;
  int64_t channels = 128;
  bool use_tps = true;
  CctbConfig cctb;  // channels field is overridden by `channels`
  TpsConfig tps;
  static constexpr int64_t upscale = 2;
  void validate() const;
};

// Depth-to-space, factor 2: output[c, 2y+dy, 2x+dx] = input[4c + 2dy + dx, y, x].
torch::Tensor subpixel_upsample(const torch::Tensor& feat);
// Exact inverse of subpixel_upsample.
torch::Tensor space_to_depth(const torch::Tensor& img);

// Full restoration network: mask concat, optional TPS alignment, one 9x9
// stem conv, num_blocks criss-cross blocks with a global residual, then a
// sub-pixel x2 upsampler with a sigmoid-bounded RGB head.
struct SrModelImpl : torch::nn::Module {
  explicit SrModelImpl(SrModelConfig cfg = {});

  // (B, 3, 16, 64) or (3, 16, 64) -> (B, 3, 32, 128), values in [0, 1]
  torch::Tensor forward(const torch::Tensor& lr);

  SrModelConfig cfg_;
  TpsAlign tps{nullptr};
  torch::nn::Conv2d stem{nullptr}, up_conv{nullptr}, head{nullptr};
  std::vector<Cctb> blocks_;
};
TORCH_MODULE(SrModel);

inline constexpr int kSrCheckpointVersion = 1;

void save_sr_model(SrModel& model, const std::filesystem::path& dir);
SrModel load_sr_model(const std::filesystem::path& dir);

}  // namespace tatsr
