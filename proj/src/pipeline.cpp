#include "tatsr/pipeline.hpp"

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <locale.h>
#include <wctype.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace F = torch::nn::functional;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace tatsr {

void TrainConfig::validate() const {
  if (lr <= 0.0) throw ConfigError("train: lr must be positive");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch < 1) throw ConfigError("train: batch must be >= 1");
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 ||
      adam_beta2 >= 1.0) {
    throw ConfigError("train: adam betas must be in [0, 1)");
  }
  loss.validate();
  model.validate();
}

namespace {

struct Stacked {
  torch::Tensor lr;  // (N, 3, 16, 64)
  torch::Tensor hr;  // (N, 3, 32, 128)
};

Stacked stack_pairs(const std::vector<SamplePair>& samples) {
  std::vector<torch::Tensor> lrs, hrs;
  lrs.reserve(samples.size());
  hrs.reserve(samples.size());
  for (const auto& s : samples) {
    lrs.push_back(s.lr);
    hrs.push_back(s.hr);
  }
  return {torch::stack(lrs), torch::stack(hrs)};
}

// per-scale stacks of the frozen backbone's pyramid over all samples
std::vector<torch::Tensor> cache_pyramids(const torch::Tensor& hr,
                                          Recognizer& rec, int64_t batch) {
  torch::NoGradGuard ng;
  std::vector<std::vector<torch::Tensor>> chunks(5);
  for (int64_t off = 0; off < hr.size(0); off += batch) {
    const auto n = std::min(batch, hr.size(0) - off);
    auto pyr = rec->extract_features(
        to_grayscale(hr.narrow(0, off, n)));
    for (int j = 0; j < 5; ++j) chunks[j].push_back(pyr[j]);
  }
  std::vector<torch::Tensor> out;
  out.reserve(5);
  for (int j = 0; j < 5; ++j) out.push_back(torch::cat(chunks[j]));
  return out;
}

double validation_accuracy(SrModel& model, const std::vector<SamplePair>& val,
                           Recognizer& rec) {
  torch::NoGradGuard ng;
  const bool was_training = model->is_training();
  model->eval();
  int64_t correct = 0;
  for (const auto& s : val) {
    auto sr = model->forward(s.lr);
    if (normalize_text(rec->recognize(sr)) == normalize_text(s.text)) ++correct;
  }
  if (was_training) model->train();
  return val.empty() ? 0.0 : double(correct) / double(val.size());
}

std::string loss_line(int64_t step, const LossBreakdown& b, double total) {
  json j;
  j["step"] = step;
  j["total"] = total;
  j["l2"] = b.l2;
  j["gp"] = b.gp;
  j["cp"] = b.cp;
  j["cp_per_scale"] = b.cp_per_scale;
  return j.dump();
}

}  // namespace

TrainResult train(const DatasetManifest& train_m, const DatasetManifest& val_m,
                  const TrainConfig& cfg, Recognizer* recognizer,
                  const fs::path& out_dir) {
  cfg.validate();
  if (train_m.entries.empty()) throw DataError("train: empty train manifest");
  const bool want_cp = cfg.loss.lambda_cp > 0.0;
  if (want_cp && !recognizer) {
    throw StateError("train: content loss enabled but no recognizer given");
  }
  if (recognizer && !(*recognizer)->loaded()) {
    throw StateError("train: recognizer weights not loaded");
  }
  if (recognizer) (*recognizer)->freeze();

  torch::manual_seed(static_cast<int64_t>(cfg.seed));
  auto train_samples = load_dataset(train_m);
  auto val_samples = (recognizer && cfg.val_every > 0 && !val_m.entries.empty())
                         ? load_dataset(val_m)
                         : std::vector<SamplePair>{};
  auto data = stack_pairs(train_samples);

  std::vector<torch::Tensor> hr_cache;
  if (want_cp && cfg.cache_hr_features) {
    hr_cache = cache_pyramids(data.hr, *recognizer, cfg.batch);
  }

  SrModel model(cfg.model);
  model->train();
  torch::optim::Adam opt(model->parameters(),
                         torch::optim::AdamOptions(cfg.lr).betas(
                             {cfg.adam_beta1, cfg.adam_beta2}));

  fs::create_directories(out_dir);
  TrainResult res;
  res.best_dir = out_dir / "best";
  res.last_dir = out_dir / "last";
  res.log_path = out_dir / "train_log.jsonl";
  std::ofstream log(res.log_path, std::ios::binary);
  if (!log) throw DataError("cannot write " + res.log_path.string());

  const int64_t n = data.lr.size(0);
  std::vector<int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  int64_t step = 0;
  bool have_last = false;
  bool done = false;
  for (int64_t epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
    Rng rng(derive_seed(cfg.seed, "sr_epoch:" + std::to_string(epoch)));
    rng.shuffle(order);
    for (int64_t off = 0; off < n && !done; off += cfg.batch) {
      const auto bsz = std::min<int64_t>(cfg.batch, n - off);
      auto idx = torch::tensor(
          std::vector<int64_t>(order.begin() + off, order.begin() + off + bsz),
          torch::kLong);
      auto lr_b = data.lr.index_select(0, idx);
      auto hr_b = data.hr.index_select(0, idx);

      std::vector<torch::Tensor> pyr_b;
      if (!hr_cache.empty()) {
        pyr_b.reserve(5);
        for (const auto& scale : hr_cache) pyr_b.push_back(scale.index_select(0, idx));
      }

      auto sr = model->forward(lr_b);
      auto breakdown = total_loss(sr, hr_b, recognizer, cfg.loss,
                                  hr_cache.empty() ? nullptr : &pyr_b);
      const double total = breakdown.total.item<double>();
      if (!std::isfinite(total)) {
        log.flush();
        throw TrainingDiverged("sr training: non-finite loss at step " +
                               std::to_string(step) +
                               (have_last ? "; last checkpoint kept at " +
                                                res.last_dir.string()
                                          : ""));
      }
      log << loss_line(step, breakdown, total) << "\n";

      opt.zero_grad();
      breakdown.total.backward();
      opt.step();

      res.final_l2 = breakdown.l2;
      ++step;
      if (cfg.max_steps > 0 && step >= cfg.max_steps) done = true;
      if (cfg.stop_l2_below > 0.0 && breakdown.l2 < cfg.stop_l2_below) {
        res.stopped_early = true;
        done = true;
      }
      if (!cfg.quiet && step % 100 == 0) {
        std::printf("[sr] epoch %lld step %lld total %.6f l2 %.6f\n",
                    static_cast<long long>(epoch), static_cast<long long>(step),
                    total, breakdown.l2);
      }
    }

    save_sr_model(model, res.last_dir);
    have_last = true;
    if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
      save_sr_model(model, out_dir / ("ckpt_epoch" + std::to_string(epoch + 1)));
    }

    const bool last_epoch = done || epoch + 1 == cfg.epochs;
    if (!val_samples.empty() &&
        ((epoch + 1) % cfg.val_every == 0 || last_epoch)) {
      const double acc = validation_accuracy(model, val_samples, *recognizer);
      if (!cfg.quiet) {
        std::printf("[sr] epoch %lld val_acc %.4f\n",
                    static_cast<long long>(epoch), acc);
      }
      if (acc > res.best_val_acc) {
        res.best_val_acc = acc;
        save_sr_model(model, res.best_dir);
      }
    }
  }

  if (res.best_val_acc < 0.0) {
    save_sr_model(model, res.best_dir);
  }
  res.steps = step;
  return res;
}

namespace {

locale_t text_locale() {
  static locale_t loc = newlocale(LC_ALL_MASK, "C.UTF-8", (locale_t)0);
  return loc;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

bool is_cont(unsigned char b) { return (b & 0xc0) == 0x80; }

}  // namespace

std::string normalize_text(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    const unsigned char b0 = s[i];
    char32_t cp = 0;
    size_t len = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xe0) == 0xc0 && i + 1 < s.size() && is_cont(s[i + 1])) {
      cp = (char32_t(b0 & 0x1f) << 6) | (s[i + 1] & 0x3f);
      len = 2;
    } else if ((b0 & 0xf0) == 0xe0 && i + 2 < s.size() && is_cont(s[i + 1]) &&
               is_cont(s[i + 2])) {
      cp = (char32_t(b0 & 0x0f) << 12) | (char32_t(s[i + 1] & 0x3f) << 6) |
           (s[i + 2] & 0x3f);
      len = 3;
    } else if ((b0 & 0xf8) == 0xf0 && i + 3 < s.size() && is_cont(s[i + 1]) &&
               is_cont(s[i + 2]) && is_cont(s[i + 3])) {
      cp = (char32_t(b0 & 0x07) << 18) | (char32_t(s[i + 1] & 0x3f) << 12) |
           (char32_t(s[i + 2] & 0x3f) << 6) | (s[i + 3] & 0x3f);
      len = 4;
    } else {
      ++i;  // malformed byte, drop it
      continue;
    }
    i += len;
    if (cp < 0x80) {
      if (cp >= 'a' && cp <= 'z') {
        out.push_back(static_cast<char>(cp));
      } else if (cp >= 'A' && cp <= 'Z') {
        out.push_back(static_cast<char>(cp - 'A' + 'a'));
      } else if (cp >= '0' && cp <= '9') {
        out.push_back(static_cast<char>(cp));
      }
    } else if (locale_t loc = text_locale()) {
      if (iswalnum_l(static_cast<wint_t>(cp), loc)) {
        append_utf8(out, static_cast<char32_t>(
                             towlower_l(static_cast<wint_t>(cp), loc)));
      }
    }
  }
  return out;
}

torch::Tensor bicubic_sr(const torch::Tensor& lr) {
  return resize_bicubic(lr, kHrHeight, kHrWidth);
}

EvalReport evaluate(const SrFn& sr_fn, const std::vector<SamplePair>& samples,
                    Recognizer& rec) {
  if (samples.empty()) throw DataError("evaluate: no samples");
  torch::NoGradGuard ng;
  EvalReport r;
  r.n_samples = static_cast<int64_t>(samples.size());
  int64_t correct = 0;
  std::map<std::string, std::pair<int64_t, int64_t>> by_len, by_blur;
  double psnr_sum = 0.0, ssim_sum = 0.0;
  for (const auto& s : samples) {
    auto sr = sr_fn(s.lr);
    check_image(sr, 3, kHrHeight, kHrWidth, "evaluate: sr output");
    const auto pred = rec->recognize(sr);
    const auto gt = normalize_text(s.text);
    const bool ok = normalize_text(pred) == gt;
    if (ok) ++correct;
    const std::string len_key = gt.size() < 9 ? "<9" : ">=9";
    auto& lb = by_len[len_key];
    ++lb.first;
    lb.second += ok;
    auto& bb = by_blur[blur_tag(s.blur)];
    ++bb.first;
    bb.second += ok;
    psnr_sum += psnr(sr, s.hr);
    ssim_sum += ssim(sr, s.hr);
    r.per_sample.push_back({s.id, pred, s.text, ok});
  }
  r.overall_acc = double(correct) / double(r.n_samples);
  for (const auto& [k, v] : by_len) {
    r.n_by_length[k] = v.first;
    r.acc_by_length[k] = double(v.second) / double(v.first);
  }
  for (const auto& [k, v] : by_blur) {
    r.n_by_blur[k] = v.first;
    r.acc_by_blur[k] = double(v.second) / double(v.first);
  }
  r.psnr = psnr_sum / double(r.n_samples);
  r.ssim = ssim_sum / double(r.n_samples);
  return r;
}

EvalReport evaluate(SrModel& model, const DatasetManifest& m, Recognizer& rec) {
  auto samples = load_dataset(m);
  model->eval();
  return evaluate([&](const torch::Tensor& lr) { return model->forward(lr); },
                  samples, rec);
}

std::string eval_report_to_json(const EvalReport& r) {
  json j;
  j["overall_acc"] = r.overall_acc;
  j["acc_by_length"] = r.acc_by_length;
  j["n_by_length"] = r.n_by_length;
  j["acc_by_blur"] = r.acc_by_blur;
  j["n_by_blur"] = r.n_by_blur;
  j["psnr"] = r.psnr;
  j["ssim"] = r.ssim;
  j["n_samples"] = r.n_samples;
  auto& rows = j["per_sample"] = json::array();
  for (const auto& p : r.per_sample) {
    rows.push_back({{"id", p.id},
                    {"pred", p.pred},
                    {"gt", p.gt},
                    {"correct", p.correct}});
  }
  return j.dump(2);
}

void save_eval_report(const EvalReport& r, const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << eval_report_to_json(r) << "\n";
}

double psnr(const torch::Tensor& a, const torch::Tensor& b) {
  if (!a.sizes().equals(b.sizes())) {
    throw ContractViolation("psnr: shape mismatch");
  }
  const double mse =
      (a.to(torch::kFloat64) - b.to(torch::kFloat64)).pow(2).mean().item<double>();
  if (mse < 1e-10) return 100.0;
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const torch::Tensor& a, const torch::Tensor& b) {
  if (!a.sizes().equals(b.sizes())) {
    throw ContractViolation("ssim: shape mismatch");
  }
  auto ga = ensure_batched(to_grayscale(a)).to(torch::kFloat64);
  auto gb = ensure_batched(to_grayscale(b)).to(torch::kFloat64);
  auto w1 = gaussian_kernel1d(5, 1.5);
  auto win = torch::matmul(w1.view({11, 1}), w1.view({1, 11})).view({1, 1, 11, 11});
  auto filt = [&](const torch::Tensor& t) { return F::conv2d(t, win); };
  auto mu_a = filt(ga);
  auto mu_b = filt(gb);
  auto var_a = filt(ga * ga) - mu_a * mu_a;
  auto var_b = filt(gb * gb) - mu_b * mu_b;
  auto cov = filt(ga * gb) - mu_a * mu_b;
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  auto num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
  auto den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
  return (num / den).mean().item<double>();
}

std::string suite_tag(AblationSuite s) {
  switch (s) {
    case AblationSuite::LOSS_WEIGHTS: return "loss_weights";
    case AblationSuite::SCALE_WEIGHTS: return "scale_weights";
    case AblationSuite::LAYOUTS: return "layouts";
    case AblationSuite::BLOCK_SWAP: return "block_swap";
  }
  throw ContractViolation("suite_tag: bad enum value");
}

AblationSuite parse_suite_tag(const std::string& tag) {
  if (tag == "loss_weights") return AblationSuite::LOSS_WEIGHTS;
  if (tag == "scale_weights") return AblationSuite::SCALE_WEIGHTS;
  if (tag == "layouts") return AblationSuite::LAYOUTS;
  if (tag == "block_swap") return AblationSuite::BLOCK_SWAP;
  throw ConfigError("unknown ablation suite: '" + tag + "'");
}

namespace {

std::string ratio_label(std::initializer_list<double> vs) {
  std::string out;
  for (double v : vs) {
    if (!out.empty()) out += ":";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    out += buf;
  }
  return out;
}

}  // namespace

std::vector<std::pair<std::string, TrainConfig>> suite_variants(
    AblationSuite suite, const TrainConfig& base) {
  std::vector<std::pair<std::string, TrainConfig>> out;
  auto add = [&](const std::string& label, auto&& mutate) {
    std::pair<std::string, TrainConfig> v{label, base};
    mutate(v.second);
    out.push_back(std::move(v));
  };
  switch (suite) {
    case AblationSuite::LOSS_WEIGHTS: {
      const double triples[][3] = {{1.0, 1e-4, 0.0},
                                   {1.0, 1e-4, 1e-4},
                                   {1.0, 1e-4, 5e-4},
                                   {0.1, 1e-4, 5e-4}};
      for (const auto& t : triples) {
        add(ratio_label({t[0], t[1], t[2]}), [&](TrainConfig& c) {
          c.loss.lambda2 = t[0];
          c.loss.lambda_gp = t[1];
          c.loss.lambda_cp = t[2];
        });
      }
      break;
    }
    case AblationSuite::SCALE_WEIGHTS: {
      const double rows[][5] = {{1.6, 1.6, 1.6, 0.0, 0.0},
                                {1.4, 1.4, 1.4, 0.4, 0.4},
                                {1.0, 1.0, 1.0, 1.0, 1.0},
                                {0.5, 0.9, 1.2, 1.2, 1.2}};
      for (const auto& r : rows) {
        add(ratio_label({r[0], r[1], r[2], r[3], r[4]}), [&](TrainConfig& c) {
          for (int j = 0; j < 5; ++j) c.loss.scale_weights[j] = r[j];
        });
      }
      break;
    }
    case AblationSuite::LAYOUTS: {
      for (auto l : {CctbLayout::PARALLEL_CONCAT, CctbLayout::HORIZONTAL_FIRST,
                     CctbLayout::VERTICAL_FIRST}) {
        add(layout_tag(l), [&](TrainConfig& c) { c.model.cctb.layout = l; });
      }
      break;
    }
    case AblationSuite::BLOCK_SWAP: {
      for (int64_t blocks : {1, 2, 4}) {
        add("blocks=" + std::to_string(blocks),
            [&](TrainConfig& c) { c.model.num_blocks = blocks; });
      }
      break;
    }
  }
  return out;
}

namespace {

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
                          c == '-' || c == '='
                      ? c
                      : '_');
  }
  return out;
}

}  // namespace

std::vector<AblationRow> run_ablation(AblationSuite suite, const TrainConfig& base,
                                      const DatasetManifest& train_m,
                                      const DatasetManifest& val_m,
                                      const DatasetManifest& test_m,
                                      Recognizer& rec, const fs::path& out_dir) {
  std::vector<AblationRow> rows;
  auto variants = suite_variants(suite, base);
  for (size_t i = 0; i < variants.size(); ++i) {
    const auto& [label, vcfg] = variants[i];
    const auto run_dir = out_dir / (std::to_string(i) + "_" + sanitize(label));
    if (!base.quiet) {
      std::printf("[ablate] %s variant %zu/%zu: %s\n",
                  suite_tag(suite).c_str(), i + 1, variants.size(),
                  label.c_str());
    }
    auto result = train(train_m, val_m, vcfg, &rec, run_dir);
    auto model = load_sr_model(result.best_dir);
    auto report = evaluate(model, test_m, rec);
    rows.push_back({label, report.overall_acc, report.psnr, report.ssim});
  }
  save_ablation_table(rows, out_dir / "ablation.tsv");
  return rows;
}

void save_ablation_table(const std::vector<AblationRow>& rows, const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "variant\taccuracy\tpsnr\tssim\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s\t%.6f\t%.4f\t%.6f\n", r.variant.c_str(),
                  r.acc, r.psnr, r.ssim);
    out << buf;
  }
}

std::vector<BlurSweepRow> bench_blur(SrModel& model, const DatasetManifest& m,
                                     Recognizer& rec) {
  auto samples = load_dataset(m);
  model->eval();
  std::vector<BlurSweepRow> rows;
  for (auto radius : kSweepRadii) {
    auto degraded = samples;
    for (auto& s : degraded) {
      s.lr = degrade(s.hr, DegradeSpec{radius, 0.0});
      s.blur = radius;
    }
    auto bi = evaluate(bicubic_sr, degraded, rec);
    auto md = evaluate([&](const torch::Tensor& lr) { return model->forward(lr); },
                       degraded, rec);
    rows.push_back({radius, bi.overall_acc, md.overall_acc});
  }
  return rows;
}

void save_blur_sweep(const std::vector<BlurSweepRow>& rows, const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "radius\tbicubic_acc\tmodel_acc\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s\t%.6f\t%.6f\n",
                  blur_tag(r.radius).c_str(), r.bicubic_acc, r.model_acc);
    out << buf;
  }
}

namespace {

cv::Mat tile_from_tensor(const torch::Tensor& img) {
  auto x = (img.detach().clamp(0, 1) * 255.0)
               .round()
               .to(torch::kUInt8)
               .permute({1, 2, 0})
               .contiguous();
  cv::Mat rgb(static_cast<int>(x.size(0)), static_cast<int>(x.size(1)), CV_8UC3);
  std::memcpy(rgb.data, x.data_ptr<uint8_t>(), x.numel());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

}  // namespace

void save_montage(const std::vector<SamplePair>& samples, const SrFn& sr_fn,
                  Recognizer& rec, const fs::path& path, int64_t max_rows) {
  if (samples.empty()) throw DataError("save_montage: no samples");
  torch::NoGradGuard ng;
  const int64_t rows = std::min<int64_t>(max_rows, samples.size());
  const int tile_w = static_cast<int>(kHrWidth), tile_h = static_cast<int>(kHrHeight);
  const int gap = 4, caption_h = 14;
  const int row_h = tile_h + caption_h + gap;
  cv::Mat canvas(static_cast<int>(rows) * row_h + gap, 4 * (tile_w + gap) + gap,
                 CV_8UC3, cv::Scalar(32, 32, 32));
  for (int64_t i = 0; i < rows; ++i) {
    const auto& s = samples[i];
    auto nearest = F::interpolate(s.lr.unsqueeze(0),
                                  F::InterpolateFuncOptions()
                                      .size(std::vector<int64_t>{kHrHeight, kHrWidth})
                                      .mode(torch::kNearest))
                       .squeeze(0);
    auto sr = sr_fn(s.lr);
    const torch::Tensor tiles[4] = {nearest, bicubic_sr(s.lr), sr, s.hr};
    const int y0 = static_cast<int>(i) * row_h + gap;
    for (int c = 0; c < 4; ++c) {
      auto tile = tile_from_tensor(tiles[c]);
      tile.copyTo(canvas(cv::Rect(gap + c * (tile_w + gap), y0, tile_w, tile_h)));
    }
    const std::string caption =
        "pred: " + rec->recognize(sr) + "   gt: " + s.text;
    cv::putText(canvas, caption, {gap, y0 + tile_h + caption_h - 3},
                cv::FONT_HERSHEY_SIMPLEX, 0.35, cv::Scalar(220, 220, 220), 1,
                cv::LINE_AA);
  }
  fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), canvas)) {
    throw DataError("cannot write montage: " + path.string());
  }
}

}  // namespace tatsr
