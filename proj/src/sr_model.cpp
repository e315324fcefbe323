#include "tatsr/sr_model.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace F = torch::nn::functional;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace tatsr {

void TpsConfig::validate() const {
  if (grid_rows < 2 || grid_cols < 2) {
    throw ConfigError("tps: control grid needs at least 2 points per axis");
  }
  if (localization_hidden < 1) throw ConfigError("tps: localization_hidden < 1");
  if (warp_scale <= 0.0) throw ConfigError("tps: warp_scale must be positive");
}

namespace {

// U(a, b) = d^2 log d^2 with the limit value 0 at d = 0
double tps_kernel(double dx, double dy) {
  const double d2 = dx * dx + dy * dy;
  return d2 > 0.0 ? d2 * std::log(d2) : 0.0;
}

torch::Tensor make_fiducials(const TpsConfig& cfg) {
  auto f = torch::empty({cfg.grid_rows * cfg.grid_cols, 2}, torch::kFloat64);
  auto acc = f.accessor<double, 2>();
  for (int64_t r = 0; r < cfg.grid_rows; ++r) {
    for (int64_t c = 0; c < cfg.grid_cols; ++c) {
      acc[r * cfg.grid_cols + c][0] = -1.0 + 2.0 * c / (cfg.grid_cols - 1);
      acc[r * cfg.grid_cols + c][1] = -1.0 + 2.0 * r / (cfg.grid_rows - 1);
    }
  }
  return f;
}

// rows: [U(p, f_1) .. U(p, f_K), 1, px, py] for each query point p
torch::Tensor tps_query_matrix(const torch::Tensor& points,
                               const torch::Tensor& fiducials) {
  const auto n = points.size(0), k = fiducials.size(0);
  auto q = torch::empty({n, k + 3}, torch::kFloat64);
  auto qa = q.accessor<double, 2>();
  auto pa = points.accessor<double, 2>();
  auto fa = fiducials.accessor<double, 2>();
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < k; ++j) {
      qa[i][j] = tps_kernel(pa[i][0] - fa[j][0], pa[i][1] - fa[j][1]);
    }
    qa[i][k] = 1.0;
    qa[i][k + 1] = pa[i][0];
    qa[i][k + 2] = pa[i][1];
  }
  return q;
}

}  // namespace

TpsAlignImpl::TpsAlignImpl(TpsConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  const auto k = cfg_.grid_rows * cfg_.grid_cols;

  conv1 = register_module(
      "conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(4, 32, 3).padding(1)));
  conv2 = register_module(
      "conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(32, 64, 3).padding(1)));
  const auto flat = 64 * (kLrHeight / 4) * (kLrWidth / 4);
  fc1 = register_module("fc1", torch::nn::Linear(flat, cfg_.localization_hidden));
  fc2 = register_module("fc2", torch::nn::Linear(cfg_.localization_hidden, k * 2));
  {
    torch::NoGradGuard ng;
    fc2->weight.zero_();
    fc2->bias.zero_();
  }

  auto fiducials = make_fiducials(cfg_);

  // L = [[K, P], [P^T, 0]] of the interpolation system, inverted once
  auto kk = tps_query_matrix(fiducials, fiducials);  // (K, K+3), last 3 cols = P
  auto l = torch::zeros({k + 3, k + 3}, torch::kFloat64);
  l.index_put_({torch::indexing::Slice(0, k)}, kk);
  l.index_put_({torch::indexing::Slice(k, k + 3), torch::indexing::Slice(0, k)},
               kk.index({torch::indexing::Slice(),
                         torch::indexing::Slice(k, k + 3)})
                   .transpose(0, 1));
  auto l_inv = torch::inverse(l);

  // query points: every output pixel center in align_corners=false coords
  auto pts = torch::empty({kLrHeight * kLrWidth, 2}, torch::kFloat64);
  auto pa = pts.accessor<double, 2>();
  for (int64_t y = 0; y < kLrHeight; ++y) {
    for (int64_t x = 0; x < kLrWidth; ++x) {
      pa[y * kLrWidth + x][0] = (2.0 * x + 1.0) / kLrWidth - 1.0;
      pa[y * kLrWidth + x][1] = (2.0 * y + 1.0) / kLrHeight - 1.0;
    }
  }
  auto q = tps_query_matrix(pts, fiducials);
  // grid = Q L^{-1} [C'; 0]: only the first K columns of Q L^{-1} survive
  auto basis = torch::matmul(q, l_inv)
                   .index({torch::indexing::Slice(),
                           torch::indexing::Slice(0, k)});

  fiducials_ = register_buffer("fiducials", fiducials.to(torch::kFloat32));
  basis_ = register_buffer("basis", basis.to(torch::kFloat32));
}

torch::Tensor TpsAlignImpl::predict_points(const torch::Tensor& x) {
  auto h = torch::relu(conv1->forward(x));
  h = F::max_pool2d(h, F::MaxPool2dFuncOptions(2));
  h = torch::relu(conv2->forward(h));
  h = F::max_pool2d(h, F::MaxPool2dFuncOptions(2));
  h = torch::relu(fc1->forward(h.flatten(1)));
  auto offsets = torch::tanh(fc2->forward(h)) * cfg_.warp_scale;
  return fiducials_.unsqueeze(0) + offsets.view({x.size(0), -1, 2});
}

torch::Tensor TpsAlignImpl::forward(const torch::Tensor& x) {
  check_image(x, 4, kLrHeight, kLrWidth, "tps_align input");
  bool unbatched = false;
  auto xb = ensure_batched(x, &unbatched);
  auto points = predict_points(xb);  // (B, K, 2)
  auto grid = torch::matmul(basis_.unsqueeze(0), points)
                  .view({xb.size(0), kLrHeight, kLrWidth, 2});
  auto out = F::grid_sample(xb, grid,
                            F::GridSampleFuncOptions()
                                .mode(torch::kBilinear)
                                .padding_mode(torch::kBorder)
                                .align_corners(false));
  return unbatched ? out.squeeze(0) : out;
}

void SrModelConfig::validate() const {
  if (num_blocks < 1) throw ConfigError("sr model: num_blocks must be >= 1");
  if (channels < 4) throw ConfigError("sr model: channels must be >= 4");
  CctbConfig c = cctb;
  c.channels = channels;
  c.validate();
  tps.validate();
}

torch::Tensor subpixel_upsample(const torch::Tensor& feat) {
  if (feat.size(-3) % 4 != 0) {
    throw ContractViolation("subpixel_upsample: channels not divisible by 4");
  }
  return torch::pixel_shuffle(feat, 2);
}

torch::Tensor space_to_depth(const torch::Tensor& img) {
  if (img.size(-2) % 2 != 0 || img.size(-1) % 2 != 0) {
    throw ContractViolation("space_to_depth: spatial dims not divisible by 2");
  }
  return torch::pixel_unshuffle(img, 2);
}

SrModelImpl::SrModelImpl(SrModelConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  cfg_.cctb.channels = cfg_.channels;
  if (cfg_.use_tps) {
    tps = register_module("tps", TpsAlign(cfg_.tps));
  }
  stem = register_module(
      "stem",
      torch::nn::Conv2d(torch::nn::Conv2dOptions(4, cfg_.channels, 9).padding(4)));
  for (int64_t i = 0; i < cfg_.num_blocks; ++i) {
    blocks_.push_back(
        register_module("block" + std::to_string(i + 1), Cctb(cfg_.cctb)));
  }
  up_conv = register_module(
      "up_conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(
                     cfg_.channels, 4 * cfg_.channels, 3).padding(1)));
  head = register_module(
      "head",
      torch::nn::Conv2d(torch::nn::Conv2dOptions(cfg_.channels, 3, 3).padding(1)));
}

torch::Tensor SrModelImpl::forward(const torch::Tensor& lr) {
  check_image(lr, 3, kLrHeight, kLrWidth, "sr model input");
  bool unbatched = false;
  auto x = ensure_batched(lr, &unbatched);
  auto mask = compute_mask(x);
  auto stack = torch::cat({x, mask}, 1);
  if (cfg_.use_tps) {
    stack = tps->forward(stack);
  }
  auto feat = stem->forward(stack);
  auto t = feat;
  for (auto& block : blocks_) {
    t = block->forward(t);
  }
  t = t + feat;
  auto up = subpixel_upsample(up_conv->forward(t));
  auto out = torch::sigmoid(head->forward(up));
  return unbatched ? out.squeeze(0) : out;
}

void save_sr_model(SrModel& model, const fs::path& dir) {
  fs::create_directories(dir);
  torch::save(model, (dir / "weights.pt").string());
  const auto& cfg = model->cfg_;
  json meta;
  meta["version"] = kSrCheckpointVersion;
  meta["kind"] = "sr_model";
  meta["num_blocks"] = cfg.num_blocks;
  meta["channels"] = cfg.channels;
  meta["use_tps"] = cfg.use_tps;
  meta["heads"] = cfg.cctb.heads;
  meta["ffn_dim"] = cfg.cctb.ffn_dim;
  meta["dropout"] = cfg.cctb.dropout;
  meta["layout"] = layout_tag(cfg.cctb.layout);
  meta["tps_grid_rows"] = cfg.tps.grid_rows;
  meta["tps_grid_cols"] = cfg.tps.grid_cols;
  meta["tps_hidden"] = cfg.tps.localization_hidden;
  meta["tps_warp_scale"] = cfg.tps.warp_scale;
  std::ofstream out(dir / "meta.json", std::ios::binary);
  if (!out) throw DataError("cannot write " + (dir / "meta.json").string());
  out << meta.dump(2) << "\n";
}

SrModel load_sr_model(const fs::path& dir) {
  std::ifstream in(dir / "meta.json", std::ios::binary);
  if (!in) throw DataError("cannot open " + (dir / "meta.json").string());
  json meta = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (meta.is_discarded()) throw DataError("malformed meta.json in " + dir.string());
  if (meta.value("version", -1) != kSrCheckpointVersion) {
    throw ConfigError("sr checkpoint version mismatch in " + dir.string());
  }
  if (meta.value("kind", "") != "sr_model") {
    throw ConfigError("checkpoint at " + dir.string() + " is not an sr model");
  }
  SrModelConfig cfg;
  cfg.num_blocks = meta.at("num_blocks").get<int64_t>();
  cfg.channels = meta.at("channels").get<int64_t>();
  cfg.use_tps = meta.at("use_tps").get<bool>();
  cfg.cctb.heads = meta.at("heads").get<int64_t>();
  cfg.cctb.ffn_dim = meta.at("ffn_dim").get<int64_t>();
  cfg.cctb.dropout = meta.at("dropout").get<double>();
  cfg.cctb.layout = parse_layout_tag(meta.at("layout").get<std::string>());
  cfg.tps.grid_rows = meta.at("tps_grid_rows").get<int64_t>();
  cfg.tps.grid_cols = meta.at("tps_grid_cols").get<int64_t>();
  cfg.tps.localization_hidden = meta.at("tps_hidden").get<int64_t>();
  cfg.tps.warp_scale = meta.at("tps_warp_scale").get<double>();
  SrModel model(cfg);
  torch::load(model, (dir / "weights.pt").string());
  model->eval();
  return model;
}

}  // namespace tatsr
