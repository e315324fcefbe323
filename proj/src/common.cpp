#include "tatsr/common.hpp"

#include <cmath>
#include <sstream>

namespace tatsr {

torch::Tensor to_grayscale(const torch::Tensor& img) {
  if (img.size(-3) == 1) {
    return img;
  }
  if (img.size(-3) != 3) {
    throw ContractViolation("to_grayscale: expected 1 or 3 channels, got " +
                            std::to_string(img.size(-3)));
  }
  auto weights = torch::tensor({kLumaR, kLumaG, kLumaB}, img.options())
                     .view({3, 1, 1});
  return (img * weights).sum(-3, /*keepdim=*/true);
}

void check_image(const torch::Tensor& t, int64_t channels, int64_t h, int64_t w,
                 const std::string& what) {
  const auto dims = t.dim();
  if (dims != 3 && dims != 4) {
    throw ContractViolation(what + ": expected a (C,H,W) or (B,C,H,W) tensor, got " +
                            std::to_string(dims) + " dims");
  }
  auto bad = [&](const char* axis, int64_t want, int64_t got) {
    std::ostringstream os;
    os << what << ": expected " << axis << "=" << want << ", got " << got;
    throw ContractViolation(os.str());
  };
  if (channels >= 0 && t.size(-3) != channels) bad("channels", channels, t.size(-3));
  if (h >= 0 && t.size(-2) != h) bad("height", h, t.size(-2));
  if (w >= 0 && t.size(-1) != w) bad("width", w, t.size(-1));
}

torch::Tensor ensure_batched(const torch::Tensor& t, bool* was_unbatched) {
  if (t.dim() == 3) {
    if (was_unbatched) *was_unbatched = true;
    return t.unsqueeze(0);
  }
  if (was_unbatched) *was_unbatched = false;
  return t;
}

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t global_seed, const std::string& key) {
  uint64_t h = mix64(global_seed);
  for (unsigned char c : key) {
    h = mix64(h ^ static_cast<uint64_t>(c));
  }
  return h;
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

int64_t Rng::uniform_int(int64_t lo, int64_t hi) {
  const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  // rejection sampling keeps the draw unbiased
  const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return lo + static_cast<int64_t>(v % span);
}

double Rng::normal(double mean, double stddev) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + stddev * spare_;
  }
  double u = 0.0, v = 0.0, s = 0.0;
  do {
    u = uniform(-1.0, 1.0);
    v = uniform(-1.0, 1.0);
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return mean + stddev * u * m;
}

}  // namespace tatsr
