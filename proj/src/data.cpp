#include "tatsr/data.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

namespace F = torch::nn::functional;
namespace fs = std::filesystem;

namespace tatsr {

std::string blur_tag(BlurRadius r) {
  switch (r) {
    case BlurRadius::NONE: return "none";
    case BlurRadius::R05_STAR: return "r05_star";
    case BlurRadius::R1: return "r1";
    case BlurRadius::R15_STAR: return "r15_star";
    case BlurRadius::R2: return "r2";
  }
  throw ContractViolation("blur_tag: bad enum value");
}

BlurRadius parse_blur_tag(const std::string& tag) {
  if (tag == "none") return BlurRadius::NONE;
  if (tag == "r05_star") return BlurRadius::R05_STAR;
  if (tag == "r1") return BlurRadius::R1;
  if (tag == "r15_star") return BlurRadius::R15_STAR;
  if (tag == "r2") return BlurRadius::R2;
  throw ConfigError("unknown blur tag: '" + tag + "'");
}

int blur_radius_px(BlurRadius r) {
  switch (r) {
    case BlurRadius::NONE: return 0;
    case BlurRadius::R05_STAR: return 1;
    case BlurRadius::R1: return 1;
    case BlurRadius::R15_STAR: return 3;
    case BlurRadius::R2: return 2;
  }
  throw ContractViolation("blur_radius_px: bad enum value");
}

double blur_sigma(BlurRadius r) {
  switch (r) {
    case BlurRadius::NONE: return 0.0;
    case BlurRadius::R05_STAR: return 0.5;
    case BlurRadius::R1: return 0.5;
    case BlurRadius::R15_STAR: return 1.5;
    case BlurRadius::R2: return 1.0;
  }
  throw ContractViolation("blur_sigma: bad enum value");
}

bool blur_at_hr(BlurRadius r) {
  return r == BlurRadius::R05_STAR || r == BlurRadius::R15_STAR;
}

torch::Tensor gaussian_kernel1d(int radius, double sigma) {
  if (radius < 0) throw ContractViolation("gaussian_kernel1d: radius < 0");
  if (radius == 0) return torch::ones({1}, torch::kFloat64);
  if (sigma <= 0.0) throw ContractViolation("gaussian_kernel1d: sigma <= 0");
  auto k = torch::empty({2 * radius + 1}, torch::kFloat64);
  auto acc = k.accessor<double, 1>();
  for (int i = -radius; i <= radius; ++i) {
    acc[i + radius] = std::exp(-(double(i) * i) / (2.0 * sigma * sigma));
  }
  return k / k.sum();
}

torch::Tensor gaussian_blur(const torch::Tensor& img, int radius, double sigma) {
  if (radius == 0) return img;
  bool unbatched = false;
  auto x = ensure_batched(img, &unbatched);
  const auto c = x.size(1);
  auto k = gaussian_kernel1d(radius, sigma).to(x.dtype());
  auto kx = k.view({1, 1, 1, -1}).repeat({c, 1, 1, 1});
  auto ky = k.view({1, 1, -1, 1}).repeat({c, 1, 1, 1});
  namespace pad = torch::nn::functional;
  x = pad::pad(x, pad::PadFuncOptions({radius, radius, 0, 0}).mode(torch::kReplicate));
  x = F::conv2d(x, kx, F::Conv2dFuncOptions().groups(c));
  x = pad::pad(x, pad::PadFuncOptions({0, 0, radius, radius}).mode(torch::kReplicate));
  x = F::conv2d(x, ky, F::Conv2dFuncOptions().groups(c));
  return unbatched ? x.squeeze(0) : x;
}

torch::Tensor resize_bicubic(const torch::Tensor& img, int64_t h, int64_t w) {
  bool unbatched = false;
  auto x = ensure_batched(img, &unbatched);
  x = F::interpolate(x, F::InterpolateFuncOptions()
                            .size(std::vector<int64_t>{h, w})
                            .mode(torch::kBicubic)
                            .align_corners(false));
  x = x.clamp(0.0, 1.0);
  return unbatched ? x.squeeze(0) : x;
}

torch::Tensor degrade(const torch::Tensor& hr, const DegradeSpec& spec,
                      uint64_t seed) {
  check_image(hr, 3, kHrHeight, kHrWidth, "degrade input");
  const int r = blur_radius_px(spec.radius);
  const double sigma = blur_sigma(spec.radius);
  torch::Tensor lr;
  if (blur_at_hr(spec.radius)) {
    lr = resize_bicubic(gaussian_blur(hr, r, sigma), kLrHeight, kLrWidth);
  } else {
    lr = gaussian_blur(resize_bicubic(hr, kLrHeight, kLrWidth), r, sigma);
  }
  if (spec.noise_std > 0.0) {
    Rng rng(seed);
    auto noise = torch::empty_like(lr);
    auto flat = noise.view({-1});
    auto acc = flat.accessor<float, 1>();
    for (int64_t i = 0; i < flat.size(0); ++i) {
      acc[i] = static_cast<float>(rng.normal(0.0, spec.noise_std));
    }
    lr = lr + noise;
  }
  return lr.clamp(0.0, 1.0);
}

torch::Tensor compute_mask(const torch::Tensor& img) {
  check_image(img, 3, -1, -1, "compute_mask input");
  bool unbatched = false;
  auto x = ensure_batched(img, &unbatched);
  auto gray = to_grayscale(x);
  auto mean = gray.mean({1, 2, 3}, /*keepdim=*/true);
  auto mask = (gray > mean).to(torch::kFloat32);
  return unbatched ? mask.squeeze(0) : mask;
}

namespace {

constexpr int kSupersample = 4;

cv::Mat render_glyph_plane(const std::string& text, const RenderStyle& style,
                           int64_t h, int64_t w) {
  if (style.font_face < 0 || style.font_face > 7) {
    throw ConfigError("render_word: unknown font face " +
                      std::to_string(style.font_face));
  }
  const int face = style.font_face | (style.italic ? cv::FONT_ITALIC : 0);
  const double scale = style.font_scale * kSupersample;
  const int thick = std::max(1, style.thickness * kSupersample);
  const int sh = static_cast<int>(h) * kSupersample;
  const int sw = static_cast<int>(w) * kSupersample;

  int baseline = 0;
  cv::Size ts = cv::getTextSize(text, face, scale, thick, &baseline);
  const int margin = 2 * kSupersample;
  const int natural_w = ts.width + 2 * margin;
  const int canvas_w = std::max(sw, natural_w);

  cv::Mat canvas = cv::Mat::zeros(sh, canvas_w, CV_8UC1);
  const int x0 = (canvas_w - ts.width) / 2;
  int y0 = (sh + ts.height) / 2 +
           static_cast<int>(std::lround(style.baseline_shift * sh));
  y0 = std::clamp(y0, ts.height, sh - 1);
  cv::putText(canvas, text, {x0, y0}, face, scale, cv::Scalar(255), thick,
              cv::LINE_AA);

  // one area-averaging resize does both the squeeze and the downsample
  cv::Mat out;
  cv::resize(canvas, out, cv::Size(static_cast<int>(w), static_cast<int>(h)),
             0, 0, cv::INTER_AREA);
  return out;
}

}  // namespace

torch::Tensor render_word(const std::string& text, const RenderStyle& style,
                          int64_t h, int64_t w) {
  if (text.empty() || text.size() > 24) {
    throw ContractViolation("render_word: text length must be in [1, 24]");
  }
  cv::Mat glyphs = render_glyph_plane(text, style, h, w);

  auto out = torch::empty({3, h, w}, torch::kFloat32);
  Rng rng(style.noise_seed);
  auto acc = out.accessor<float, 3>();
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      const double a = glyphs.at<uchar>(static_cast<int>(y),
                                        static_cast<int>(x)) / 255.0;
      const double t = w > 1 ? double(x) / double(w - 1) : 0.0;
      const double n = style.noise_std > 0.0 ? rng.normal(0.0, style.noise_std)
                                             : 0.0;
      for (int c = 0; c < 3; ++c) {
        const double bg = style.bg[c] + (style.bg2[c] - style.bg[c]) * t + n;
        const double v = bg + (style.fg[c] - bg) * a;
        acc[c][y][x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

RenderStyle draw_style(uint64_t seed, const std::string& id) {
  Rng rng(derive_seed(seed, "style:" + id));
  RenderStyle s;
  // faces with full lowercase coverage at small sizes
  static const int faces[] = {0, 2, 3, 4, 6};
  s.font_face = faces[rng.uniform_int(0, 4)];
  s.italic = rng.uniform01() < 0.2;
  s.font_scale = rng.uniform(0.8, 1.1);
  s.thickness = static_cast<int>(rng.uniform_int(1, 2));
  s.baseline_shift = rng.uniform(-0.06, 0.06);
  const bool dark_text = rng.uniform01() < 0.7;
  const double fg_base = dark_text ? rng.uniform(0.0, 0.25) : rng.uniform(0.75, 1.0);
  const double bg_base = dark_text ? rng.uniform(0.65, 1.0) : rng.uniform(0.0, 0.35);
  for (int c = 0; c < 3; ++c) {
    s.fg[c] = std::clamp(fg_base + rng.uniform(-0.08, 0.08), 0.0, 1.0);
    s.bg[c] = std::clamp(bg_base + rng.uniform(-0.12, 0.12), 0.0, 1.0);
    s.bg2[c] = std::clamp(s.bg[c] + rng.uniform(-0.15, 0.15), 0.0, 1.0);
  }
  s.noise_std = rng.uniform(0.0, 0.03);
  s.noise_seed = rng.next_u64();
  return s;
}

std::string random_word(Rng& rng, int64_t min_len, int64_t max_len) {
  static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
  const int64_t len = rng.uniform_int(min_len, max_len);
  std::string w;
  w.reserve(len);
  for (int64_t i = 0; i < len; ++i) {
    // letters twice as likely as digits
    const int64_t pick = rng.uniform_int(0, 26 * 2 + 10 - 1);
    w.push_back(alphabet[pick < 52 ? pick / 2 : pick - 26]);
  }
  return w;
}

std::pair<DatasetManifest, DatasetManifest> build_corpus(const SynthConfig& cfg) {
  if (cfg.count < 1) throw ConfigError("build_corpus: count must be >= 1");
  if (cfg.train_split < 0.0 || cfg.train_split > 1.0) {
    throw ConfigError("build_corpus: train_split must be in [0,1]");
  }
  const int64_t n_train = std::llround(double(cfg.count) * cfg.train_split);

  Rng word_rng(derive_seed(cfg.seed, "words"));
  DatasetManifest train{cfg.out_root, "train", {}};
  DatasetManifest test{cfg.out_root, "test", {}};

  for (int64_t i = 0; i < cfg.count; ++i) {
    const bool is_train = i < n_train;
    DatasetManifest& m = is_train ? train : test;
    std::ostringstream idos;
    idos << "w" << std::setw(6) << std::setfill('0') << i;
    const std::string id = idos.str();
    const std::string text = random_word(word_rng, cfg.min_len, cfg.max_len);

    auto hr = render_word(text, draw_style(cfg.seed, id));
    DegradeSpec spec{cfg.blur, cfg.noise_std};
    auto lr = degrade(hr, spec, derive_seed(cfg.seed, "noise:" + id));

    const std::string rel_lr = m.split + "/lr/" + id + ".png";
    const std::string rel_hr = m.split + "/hr/" + id + ".png";
    save_png(lr, cfg.out_root / rel_lr);
    save_png(hr, cfg.out_root / rel_hr);
    m.entries.push_back({id, rel_lr, rel_hr, text, blur_tag(cfg.blur)});
  }
  save_manifest(train);
  save_manifest(test);
  return {train, test};
}

void save_manifest(const DatasetManifest& m) {
  fs::create_directories(m.root);
  const fs::path path = m.root / (m.split + ".manifest.tsv");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest: " + path.string());
  for (const auto& e : m.entries) {
    out << e.id << '\t' << e.lr_path << '\t' << e.hr_path << '\t' << e.text
        << '\t' << e.blur_tag << '\n';
  }
}

DatasetManifest load_manifest(const fs::path& root, const std::string& split) {
  const fs::path path = root / (split + ".manifest.tsv");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest: " + path.string());
  DatasetManifest m{root, split, {}};
  std::unordered_set<std::string> seen;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    size_t pos = 0;
    while (true) {
      const size_t tab = line.find('\t', pos);
      cols.push_back(line.substr(pos, tab == std::string::npos ? tab : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (cols.size() != 5) {
      throw DataError("manifest " + path.string() + " line " +
                      std::to_string(lineno) + ": expected 5 columns, got " +
                      std::to_string(cols.size()));
    }
    if (!seen.insert(cols[0]).second) {
      throw DataError("manifest " + path.string() + ": duplicate id " + cols[0]);
    }
    parse_blur_tag(cols[4]);
    m.entries.push_back({cols[0], cols[1], cols[2], cols[3], cols[4]});
  }
  return m;
}

SamplePair load_sample(const DatasetManifest& m, const ManifestEntry& e) {
  SamplePair s;
  s.id = e.id;
  s.text = e.text;
  s.blur = parse_blur_tag(e.blur_tag);
  try {
    s.lr = load_png(m.root / e.lr_path);
    s.hr = load_png(m.root / e.hr_path);
  } catch (const DataError& err) {
    throw DataError("sample '" + e.id + "': " + err.what());
  }
  check_image(s.lr, 3, kLrHeight, kLrWidth, "sample '" + e.id + "' lr");
  check_image(s.hr, 3, kHrHeight, kHrWidth, "sample '" + e.id + "' hr");
  return s;
}

std::vector<SamplePair> load_dataset(const DatasetManifest& m, bool shuffle,
                                     uint64_t seed) {
  std::vector<SamplePair> out;
  out.reserve(m.entries.size());
  for (const auto& e : m.entries) out.push_back(load_sample(m, e));
  if (shuffle) {
    Rng rng(seed);
    rng.shuffle(out);
  }
  return out;
}

void save_png(const torch::Tensor& img, const fs::path& path) {
  check_image(img, 3, -1, -1, "save_png input");
  if (img.dim() != 3) throw ContractViolation("save_png: expected (3,H,W)");
  auto x = (img.detach().to(torch::kFloat32).clamp(0, 1) * 255.0)
               .round()
               .to(torch::kUInt8)
               .permute({1, 2, 0})
               .contiguous();
  cv::Mat rgb(static_cast<int>(x.size(0)), static_cast<int>(x.size(1)), CV_8UC3,
              x.data_ptr<uint8_t>());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), bgr)) {
    throw DataError("cannot write image: " + path.string());
  }
}

torch::Tensor load_png(const fs::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw DataError("cannot read image: " + path.string());
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  auto t = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8)
               .permute({2, 0, 1})
               .to(torch::kFloat32)
               .div(255.0)
               .clone();
  return t;
}

}  // namespace tatsr
