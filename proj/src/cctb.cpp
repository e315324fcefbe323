#include "tatsr/cctb.hpp"

#include <cmath>

namespace F = torch::nn::functional;

namespace tatsr {

std::string layout_tag(CctbLayout l) {
  switch (l) {
    case CctbLayout::VERTICAL_FIRST: return "vertical_first";
    case CctbLayout::HORIZONTAL_FIRST: return "horizontal_first";
    case CctbLayout::PARALLEL_CONCAT: return "parallel_concat";
  }
  throw ContractViolation("layout_tag: bad enum value");
}

CctbLayout parse_layout_tag(const std::string& tag) {
  if (tag == "vertical_first") return CctbLayout::VERTICAL_FIRST;
  if (tag == "horizontal_first") return CctbLayout::HORIZONTAL_FIRST;
  if (tag == "parallel_concat") return CctbLayout::PARALLEL_CONCAT;
  throw ConfigError("unknown layout: '" + tag + "'");
}

void CctbConfig::validate() const {
  if (channels < 1) throw ConfigError("cctb: channels must be >= 1");
  if (heads < 1) throw ConfigError("cctb: heads must be >= 1");
  if (channels % heads != 0) {
    throw ConfigError("cctb: channels (" + std::to_string(channels) +
                      ") not divisible by heads (" + std::to_string(heads) + ")");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ConfigError("cctb: dropout must be in [0, 1)");
  }
}

torch::Tensor sinusoidal_encoding(int64_t len, int64_t dim) {
  using torch::indexing::None;
  using torch::indexing::Slice;
  auto pe = torch::zeros({len, dim}, torch::kFloat32);
  auto pos = torch::arange(len, torch::kFloat32).unsqueeze(1);
  auto div = torch::exp(torch::arange(0, dim, 2, torch::kFloat32) *
                        (-std::log(10000.0) / dim));
  pe.index_put_({Slice(), Slice(0, None, 2)}, torch::sin(pos * div));
  pe.index_put_({Slice(), Slice(1, None, 2)},
                torch::cos(pos * div.index({Slice(0, dim / 2)})));
  return pe;
}

AxialEncoderLayerImpl::AxialEncoderLayerImpl(int64_t channels, int64_t heads,
                                             int64_t ffn_dim, double dropout)
    : heads_(heads), dropout_(dropout) {
  norm1 = register_module("norm1", torch::nn::LayerNorm(
                                       torch::nn::LayerNormOptions({channels})));
  norm2 = register_module("norm2", torch::nn::LayerNorm(
                                       torch::nn::LayerNormOptions({channels})));
  qkv = register_module("qkv", torch::nn::Linear(channels, 3 * channels));
  proj = register_module("proj", torch::nn::Linear(channels, channels));
  ffn1 = register_module("ffn1", torch::nn::Linear(channels, ffn_dim));
  ffn2 = register_module("ffn2", torch::nn::Linear(ffn_dim, channels));
}

torch::Tensor AxialEncoderLayerImpl::forward(const torch::Tensor& x) {
  const auto n = x.size(0), l = x.size(1), c = x.size(2);
  const auto hd = c / heads_;

  auto h = norm1->forward(x);
  auto parts = qkv->forward(h).view({n, l, 3, heads_, hd}).permute({2, 0, 3, 1, 4});
  auto q = parts[0], k = parts[1], v = parts[2];  // (n, heads, l, hd)
  auto attn = torch::matmul(q, k.transpose(-2, -1)) / std::sqrt(double(hd));
  attn = torch::softmax(attn, -1);
  if (is_training() && dropout_ > 0.0) {
    attn = F::dropout(attn, F::DropoutFuncOptions().p(dropout_));
  }
  auto o = torch::matmul(attn, v).transpose(1, 2).reshape({n, l, c});
  auto y = x + proj->forward(o);

  h = norm2->forward(y);
  h = ffn2->forward(torch::relu(ffn1->forward(h)));
  if (is_training() && dropout_ > 0.0) {
    h = F::dropout(h, F::DropoutFuncOptions().p(dropout_));
  }
  return y + h;
}

CctbImpl::CctbImpl(const CctbConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  col_encoder = register_module(
      "col_encoder", AxialEncoderLayer(cfg_.channels, cfg_.heads,
                                       cfg_.resolved_ffn_dim(), cfg_.dropout));
  row_encoder = register_module(
      "row_encoder", AxialEncoderLayer(cfg_.channels, cfg_.heads,
                                       cfg_.resolved_ffn_dim(), cfg_.dropout));
  if (cfg_.layout == CctbLayout::PARALLEL_CONCAT) {
    mix = register_module(
        "mix", torch::nn::Conv2d(torch::nn::Conv2dOptions(2 * cfg_.channels,
                                                          cfg_.channels, 1)));
  }
}

torch::Tensor CctbImpl::vertical_pass(const torch::Tensor& x) {
  if (x.size(1) != cfg_.channels) {
    throw ContractViolation("cctb vertical_pass: channel mismatch");
  }
  const auto b = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  // columns become batch entries: (B, C, H, W) -> (B*W, H, C)
  auto seq = x.permute({0, 3, 2, 1}).reshape({b * w, h, c});
  seq = seq + sinusoidal_encoding(h, c).to(seq.options()).unsqueeze(0);
  seq = col_encoder->forward(seq);
  return seq.view({b, w, h, c}).permute({0, 3, 2, 1}).contiguous();
}

torch::Tensor CctbImpl::horizontal_pass(const torch::Tensor& x) {
  if (x.size(1) != cfg_.channels) {
    throw ContractViolation("cctb horizontal_pass: channel mismatch");
  }
  const auto b = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  // rows become batch entries: (B, C, H, W) -> (B*H, W, C)
  auto seq = x.permute({0, 2, 3, 1}).reshape({b * h, w, c});
  seq = seq + sinusoidal_encoding(w, c).to(seq.options()).unsqueeze(0);
  seq = row_encoder->forward(seq);
  return seq.view({b, h, w, c}).permute({0, 3, 1, 2}).contiguous();
}

torch::Tensor CctbImpl::forward(const torch::Tensor& x) {
  switch (cfg_.layout) {
    case CctbLayout::VERTICAL_FIRST:
      return horizontal_pass(vertical_pass(x));
    case CctbLayout::HORIZONTAL_FIRST:
      return vertical_pass(horizontal_pass(x));
    case CctbLayout::PARALLEL_CONCAT:
      return mix->forward(torch::cat({vertical_pass(x), horizontal_pass(x)}, 1));
  }
  throw ConfigError("cctb forward: unknown layout");
}

}  // namespace tatsr
