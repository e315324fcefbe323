#pragma once

#include <torch/torch.h>

#include <string>

#include "tatsr/common.hpp"

namespace tatsr {

// How the column pass and the row pass compose inside one block.
enum class CctbLayout { VERTICAL_FIRST, HORIZONTAL_FIRST, PARALLEL_CONCAT };

std::string layout_tag(CctbLayout l);
CctbLayout parse_layout_tag(const std::string& tag);

struct CctbConfig {
  int64_t channels = 128;
  int64_t heads = 4;
  int64_t ffn_dim = 0;  // 0 means 4 * channels
  double dropout = 0.0;
  CctbLayout layout = CctbLayout::VERTICAL_FIRST;

  int64_t resolved_ffn_dim() const { return ffn_dim > 0 ? ffn_dim : 4 * channels; }
  void validate() const;
};

// Fixed 1-D sinusoidal table, (len, dim) float32.
torch::Tensor sinusoidal_encoding(int64_t len, int64_t dim);

// One pre-norm transformer encoder layer over (N, L, C) sequences:
// x + attn(ln(x)), then x + ffn(ln(x)).
struct AxialEncoderLayerImpl : torch::nn::Module {
  AxialEncoderLayerImpl(int64_t channels, int64_t heads, int64_t ffn_dim,
                        double dropout);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr};
  torch::nn::Linear qkv{nullptr}, proj{nullptr}, ffn1{nullptr}, ffn2{nullptr};
  int64_t heads_;
  double dropout_;
};
TORCH_MODULE(AxialEncoderLayer);

// Criss-cross block: a shared column encoder applied to every column, a
// shared row encoder applied to every row, composed per the layout. Columns
// and rows fold into the batch dimension; positional encoding is added along
// the attended axis at pass entry.
struct CctbImpl : torch::nn::Module {
  explicit CctbImpl(const CctbConfig& cfg);

  // (B, C, H, W) -> (B, C, H, W); output column i depends on input column i only
  torch::Tensor vertical_pass(const torch::Tensor& x);
  // (B, C, H, W) -> (B, C, H, W); row-local, mirror of vertical_pass
  torch::Tensor horizontal_pass(const torch::Tensor& x);
  torch::Tensor forward(const torch::Tensor& x);

  CctbConfig cfg_;
  AxialEncoderLayer col_encoder{nullptr}, row_encoder{nullptr};
  torch::nn::Conv2d mix{nullptr};  // 1x1 projection, PARALLEL_CONCAT only
};
TORCH_MODULE(Cctb);

}  // namespace tatsr
