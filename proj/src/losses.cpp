#include "tatsr/losses.hpp"

#include <sstream>

namespace tatsr {

void LossWeights::validate() const {
  if (lambda2 < 0.0 || lambda_gp < 0.0 || lambda_cp < 0.0) {
    throw ConfigError("loss weights must be >= 0");
  }
  for (double w : scale_weights) {
    if (w < 0.0) throw ConfigError("scale weights must be >= 0");
  }
  if (lambda2 == 0.0 && lambda_cp == 0.0) {
    throw ConfigError("at least one of lambda2 and lambda_cp must be positive");
  }
  if (lambda_cp > 0.0 && lambda2 == 0.0 && lambda_gp == 0.0) {
    throw ConfigError(
        "content loss without a pixel loss is refused: it trains unstably");
  }
}

namespace {

void check_same_shape(const torch::Tensor& a, const torch::Tensor& b,
                      const char* what) {
  if (!a.sizes().equals(b.sizes())) {
    std::ostringstream os;
    os << what << ": shape mismatch " << a.sizes() << " vs " << b.sizes();
    throw ContractViolation(os.str());
  }
}

void check_phi(Recognizer* phi) {
  if (!phi) throw StateError("cp loss requires a recognizer");
  if (!(*phi)->loaded()) {
    throw StateError("cp loss: recognizer weights not loaded");
  }
  if (!(*phi)->frozen()) {
    throw StateError("cp loss: recognizer must be frozen");
  }
}

}  // namespace

torch::Tensor l2_loss(const torch::Tensor& sr, const torch::Tensor& hr) {
  check_same_shape(sr, hr, "l2_loss");
  return (sr - hr).pow(2).mean();
}

torch::Tensor gradient_prior_loss(const torch::Tensor& sr, const torch::Tensor& hr) {
  check_same_shape(sr, hr, "gradient_prior_loss");
  using torch::indexing::None;
  using torch::indexing::Slice;
  auto dx = [](const torch::Tensor& t) {
    return t.index({torch::indexing::Ellipsis, Slice(), Slice(1, None)}) -
           t.index({torch::indexing::Ellipsis, Slice(), Slice(None, -1)});
  };
  auto dy = [](const torch::Tensor& t) {
    return t.index({torch::indexing::Ellipsis, Slice(1, None), Slice()}) -
           t.index({torch::indexing::Ellipsis, Slice(None, -1), Slice()});
  };
  return (dx(sr) - dx(hr)).abs().mean() + (dy(sr) - dy(hr)).abs().mean();
}

torch::Tensor cp_single_scale(const torch::Tensor& f_sr, const torch::Tensor& f_hr) {
  check_same_shape(f_sr, f_hr, "cp_single_scale");
  return (f_sr - f_hr).pow(2).mean();
}

namespace {

std::pair<torch::Tensor, std::array<double, 5>> combine_scales(
    const std::vector<torch::Tensor>& sr_pyr,
    const std::vector<torch::Tensor>& hr_pyr, const LossWeights& w) {
  if (sr_pyr.size() != 5 || hr_pyr.size() != 5) {
    throw ContractViolation("cp loss: expected 5-scale pyramids");
  }
  std::array<double, 5> per_scale{};
  torch::Tensor sum;
  for (int j = 0; j < 5; ++j) {
    auto d = cp_single_scale(sr_pyr[j], hr_pyr[j]);
    per_scale[j] = d.item<double>();
    auto term = w.scale_weights[j] * d;
    sum = j == 0 ? term : sum + term;
  }
  return {sum, per_scale};
}

}  // namespace

std::pair<torch::Tensor, std::array<double, 5>> cp_loss(const torch::Tensor& sr,
                                                        const torch::Tensor& hr,
                                                        Recognizer& phi,
                                                        const LossWeights& w) {
  check_same_shape(sr, hr, "cp_loss");
  check_phi(&phi);
  auto sr_pyr = phi->extract_features(to_grayscale(sr));
  std::vector<torch::Tensor> hr_pyr;
  {
    torch::NoGradGuard ng;
    hr_pyr = phi->extract_features(to_grayscale(hr));
  }
  return combine_scales(sr_pyr, hr_pyr, w);
}

std::pair<torch::Tensor, std::array<double, 5>> cp_loss_cached(
    const torch::Tensor& sr, const std::vector<torch::Tensor>& hr_pyramid,
    Recognizer& phi, const LossWeights& w) {
  check_phi(&phi);
  auto sr_pyr = phi->extract_features(to_grayscale(sr));
  return combine_scales(sr_pyr, hr_pyramid, w);
}

LossBreakdown total_loss(const torch::Tensor& sr, const torch::Tensor& hr,
                         Recognizer* phi, const LossWeights& w,
                         const std::vector<torch::Tensor>* hr_pyramid) {
  w.validate();
  LossBreakdown out;
  auto l2 = l2_loss(sr, hr);
  auto gp = gradient_prior_loss(sr, hr);
  out.l2 = l2.item<double>();
  out.gp = gp.item<double>();
  // Accumulate the total in double so it matches the reported breakdown
  // exactly; the cast keeps the autograd graph intact.
  out.total = w.lambda2 * l2.to(torch::kDouble) +
              w.lambda_gp * gp.to(torch::kDouble);
  if (w.lambda_cp > 0.0) {
    check_phi(phi);
    auto [cp, per_scale] =
        hr_pyramid ? cp_loss_cached(sr, *hr_pyramid, *phi, w)
                   : cp_loss(sr, hr, *phi, w);
    out.cp = cp.item<double>();
    out.cp_per_scale = per_scale;
    out.total = out.total + w.lambda_cp * cp.to(torch::kDouble);
  }
  return out;
}

}  // namespace tatsr
