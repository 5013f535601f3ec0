#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "saadp/model.hpp"

namespace saadp {

// xoshiro256** with streams derived per (replication, stage) through a
// splitmix64 chain. 256-bit state; regeneration is bit-identical.
class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t s0, std::uint64_t s1, std::uint64_t s2, std::uint64_t s3)
      : state_{s0, s1, s2, s3} {}

  std::uint64_t next_u64();
  // Uniform double in [0,1) with 53 random bits.
  double next_canonical() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  // Inverse-transform draw from Uniform(a,b).
  double next_uniform(double a, double b) { return a + (b - a) * next_canonical(); }

 private:
  std::uint64_t state_[4] = {1, 2, 3, 4};
};

struct SeedPlan {
  std::uint64_t master_seed = 0;
};

// Deterministic stream for one (replication, stage) pair.
RngStream derive_stream(const SeedPlan& plan, std::uint64_t replication, int stage);

// The iid samples of one SAA replication: for each stage t=1..T, N draws
// of the d_t-component noise vector, stored sample-major.
struct SamplePool {
  std::uint64_t replication = 0;
  int sample_size = 0;  // N, same at every stage
  std::vector<std::vector<double>> stage_samples;  // [t-1] has N*d_t entries
  std::vector<int> stage_dims;

  int horizon() const { return static_cast<int>(stage_samples.size()); }
  // Scalar-noise view of stage t.
  std::span<const double> stage(int t) const {
    if (stage_dims[static_cast<std::size_t>(t - 1)] != 1)
      throw ModelError("sample pool: scalar access to vector-noise stage");
    return stage_samples[static_cast<std::size_t>(t - 1)];
  }
  double component(int t, int i, int k) const {
    const auto& s = stage_samples[static_cast<std::size_t>(t - 1)];
    return s[static_cast<std::size_t>(i) * static_cast<std::size_t>(stage_dims[static_cast<std::size_t>(t - 1)]) +
             static_cast<std::size_t>(k)];
  }
};

SamplePool draw_pool(const SeedPlan& plan, std::uint64_t replication, int N, const NoiseSpec& noise);

struct Moments {
  double mu2 = 0.0;
  double mu3 = 0.0;
  double mu4 = 0.0;
};

// Exact analytic central moments of one component.
Moments noise_moments(const UniformComponent& c);

}  // namespace saadp
