#pragma once

#include <torch/torch.h>

#include <array>
#include <vector>

#include "tatsr/common.hpp"
#include "tatsr/recognizer.hpp"

namespace tatsr {

struct LossWeights {
  double lambda2 = 0.1;
  double lambda_gp = 1e-4;
  double lambda_cp = 5e-4;
  std::array<double, 5> scale_weights = {1.4, 1.4, 1.4, 0.4, 0.4};

  // All weights must be >= 0, at least one of lambda2/lambda_cp must be
  // positive, and content loss without any pixel loss is refused (it trains
  // unstably).
  void validate() const;
};

struct LossBreakdown {
  torch::Tensor total;  // scalar, keeps the autograd graph
  double l2 = 0.0;
  double gp = 0.0;
  double cp = 0.0;
  std::array<double, 5> cp_per_scale = {0, 0, 0, 0, 0};
};

// Mean squared error over all elements.
torch::Tensor l2_loss(const torch::Tensor& sr, const torch::Tensor& hr);

// Mean L1 distance between forward-difference gradient fields,
// horizontal plus vertical.
torch::Tensor gradient_prior_loss(const torch::Tensor& sr, const torch::Tensor& hr);

// Squared L2 distance between two feature maps, normalized by C*H*W
// (batch-averaged when batched).
torch::Tensor cp_single_scale(const torch::Tensor& f_sr, const torch::Tensor& f_hr);

// Content perceptual loss: grayscale both images, run the frozen backbone,
// and combine the five per-scale distances with w.scale_weights. Gradients
// flow into sr only. Returns the weighted sum plus the raw per-scale values.
std::pair<torch::Tensor, std::array<double, 5>> cp_loss(
    const torch::Tensor& sr, const torch::Tensor& hr, Recognizer& phi,
    const LossWeights& w);

// Same, against a precomputed hr feature pyramid (from extract_features).
std::pair<torch::Tensor, std::array<double, 5>> cp_loss_cached(
    const torch::Tensor& sr, const std::vector<torch::Tensor>& hr_pyramid,
    Recognizer& phi, const LossWeights& w);

// lambda2 * l2 + lambda_gp * gp + lambda_cp * cp. phi may be null when
// lambda_cp is zero; hr_pyramid, when given, replaces the hr feature pass.
LossBreakdown total_loss(const torch::Tensor& sr, const torch::Tensor& hr,
                         Recognizer* phi, const LossWeights& w,
                         const std::vector<torch::Tensor>* hr_pyramid = nullptr);

}  // namespace tatsr
