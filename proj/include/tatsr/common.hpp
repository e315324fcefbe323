#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tatsr {

// Error taxonomy. The CLI maps these onto process exit codes
// (config -> 2, data -> 3, divergence -> 4).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

// Single luma convention for every grayscale conversion in the project.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

// (..., 3, H, W) -> (..., 1, H, W). Differentiable, keeps dtype.
torch::Tensor to_grayscale(const torch::Tensor& img);

// Accepts (C,H,W) or (B,C,H,W); throws ContractViolation on mismatch.
// Pass -1 for a dimension that is not constrained.
void check_image(const torch::Tensor& t, int64_t channels, int64_t h, int64_t w,
                 const std::string& what);

// Returns the tensor as (B,C,H,W), remembering whether a batch dim was added.
torch::Tensor ensure_batched(const torch::Tensor& t, bool* was_unbatched = nullptr);

uint64_t mix64(uint64_t x);
uint64_t derive_seed(uint64_t global_seed, const std::string& key);

// mt19937_64 with explicitly coded draws; stdlib distribution objects are not
// pinned by the standard, these are.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }
  // [0, 1)
  double uniform01();
  // [lo, hi)
  double uniform(double lo, double hi);
  // [lo, hi] inclusive
  int64_t uniform_int(int64_t lo, int64_t hi);
  double normal(double mean, double stddev);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
      std::swap(v[i], v[uniform_int(0, i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tatsr
