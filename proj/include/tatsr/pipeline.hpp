#pragma once

#include <torch/torch.h>

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tatsr/common.hpp"
#include "tatsr/data.hpp"
#include "tatsr/losses.hpp"
#include "tatsr/recognizer.hpp"
#include "tatsr/sr_model.hpp"

namespace tatsr {

struct TrainConfig {
  double lr = 5e-4;
  int64_t epochs = 60;   // full-scale profile uses 500
  int64_t batch = 32;    // full-scale profile uses 128
  uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  LossWeights loss;
  SrModelConfig model;
  int64_t checkpoint_every = 0;  // extra numbered checkpoints, 0 = off
  int64_t val_every = 5;         // epochs between validation passes, 0 = off
  int64_t max_steps = 0;         // 0 = no cap
  double stop_l2_below = 0.0;    // early stop threshold on train l2, 0 = off
  bool cache_hr_features = true;
  bool quiet = false;
  void validate() const;
};

struct TrainResult {
  std::filesystem::path best_dir;
  std::filesystem::path last_dir;
  std::filesystem::path log_path;
  double best_val_acc = -1.0;  // -1 when no validation pass ran
  int64_t steps = 0;
  double final_l2 = 0.0;
  bool stopped_early = false;
};

// SR training: shuffled epochs, per-step total loss + Adam update, one
// JSONL loss line per step, best-by-val-accuracy and last checkpoints under
// out_dir. The recognizer (frozen) drives the content loss and validation;
// it may be null only when lambda_cp is zero, in which case best == last.
// Non-finite loss aborts with TrainingDiverged, keeping the last-good
// checkpoint on disk.
TrainResult train(const DatasetManifest& train_m, const DatasetManifest& val_m,
                  const TrainConfig& cfg, Recognizer* recognizer,
                  const std::filesystem::path& out_dir);

// Lowercase, keep only alphanumerics (multi-byte sequences are decoded, not
// split), drop everything else including whitespace.
std::string normalize_text(const std::string& s);

struct EvalReport {
  double overall_acc = 0.0;
  std::map<std::string, double> acc_by_length;  // keys "<9", ">=9"
  std::map<std::string, int64_t> n_by_length;
  std::map<std::string, double> acc_by_blur;
  std::map<std::string, int64_t> n_by_blur;
  double psnr = 0.0;
  double ssim = 0.0;
  int64_t n_samples = 0;
  struct PerSample {
    std::string id, pred, gt;
    bool correct = false;
  };
  std::vector<PerSample> per_sample;
};

using SrFn = std::function<torch::Tensor(const torch::Tensor&)>;

// The x2 bicubic baseline "model".
torch::Tensor bicubic_sr(const torch::Tensor& lr);

// Runs sr_fn on every sample, recognizes the result, and scores exact
// matches after normalize_text on both sides. PSNR/SSIM against HR are
// reported as side metrics.
EvalReport evaluate(const SrFn& sr_fn, const std::vector<SamplePair>& samples,
                    Recognizer& rec);
EvalReport evaluate(SrModel& model, const DatasetManifest& m, Recognizer& rec);

std::string eval_report_to_json(const EvalReport& r);
void save_eval_report(const EvalReport& r, const std::filesystem::path& path);

// 10*log10(1/mse) for unit-range images, capped at 100 dB.
double psnr(const torch::Tensor& a, const torch::Tensor& b);
// Mean SSIM over an 11x11 Gaussian window (sigma 1.5) on grayscale,
// standard stabilizers, valid region only.
double ssim(const torch::Tensor& a, const torch::Tensor& b);

enum class AblationSuite { LOSS_WEIGHTS, SCALE_WEIGHTS, LAYOUTS, BLOCK_SWAP };
AblationSuite parse_suite_tag(const std::string& tag);
std::string suite_tag(AblationSuite s);

// The labelled variant configurations each suite trains, derived from `base`.
std::vector<std::pair<std::string, TrainConfig>> suite_variants(
    AblationSuite suite, const TrainConfig& base);

struct AblationRow {
  std::string variant;
  double acc = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

// Trains and evaluates each suite variant with a shared seed and data,
// writing per-variant runs plus an `ablation.tsv` table under out_dir.
std::vector<AblationRow> run_ablation(AblationSuite suite, const TrainConfig& base,
                                      const DatasetManifest& train_m,
                                      const DatasetManifest& val_m,
                                      const DatasetManifest& test_m,
                                      Recognizer& rec,
                                      const std::filesystem::path& out_dir);
void save_ablation_table(const std::vector<AblationRow>& rows,
                         const std::filesystem::path& path);

struct BlurSweepRow {
  BlurRadius radius = BlurRadius::NONE;
  double bicubic_acc = 0.0;
  double model_acc = 0.0;
};

// Re-degrades the split's HR images at each sweep radius and scores the
// bicubic baseline against the model.
std::vector<BlurSweepRow> bench_blur(SrModel& model, const DatasetManifest& m,
                                     Recognizer& rec);
void save_blur_sweep(const std::vector<BlurSweepRow>& rows,
                     const std::filesystem::path& path);

// LR (nearest x2) | bicubic | SR | HR tiles with prediction captions.
void save_montage(const std::vector<SamplePair>& samples, const SrFn& sr_fn,
                  Recognizer& rec, const std::filesystem::path& path,
                  int64_t max_rows = 16);

}  // namespace tatsr
