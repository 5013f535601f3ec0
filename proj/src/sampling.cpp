#include "saadp/sampling.hpp"

namespace saadp {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

inline std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

RngStream derive_stream(const SeedPlan& plan, std::uint64_t replication, int stage) {
  if (stage < 1) throw ConfigError("derive_stream: stage must be >= 1");
  // Mix (seed, r, t) into a splitmix chain, then expand to 256 bits.
  std::uint64_t s = plan.master_seed;
  s ^= splitmix64(s) ^ (replication * 0x9e3779b97f4a7c15ULL);
  s ^= splitmix64(s) ^ (static_cast<std::uint64_t>(stage) * 0xd1342543de82ef95ULL);
  std::uint64_t w[4];
  for (auto& wi : w) wi = splitmix64(s);
  // splitmix64 output is never all-zero across four words in practice;
  // guard the forbidden all-zero xoshiro state anyway.
  if ((w[0] | w[1] | w[2] | w[3]) == 0) w[0] = 1;
  return RngStream(w[0], w[1], w[2], w[3]);
}

SamplePool draw_pool(const SeedPlan& plan, std::uint64_t replication, int N, const NoiseSpec& noise) {
  if (N < 1) throw ConfigError("draw_pool: sample size must be >= 1");
  SamplePool pool;
  pool.replication = replication;
  pool.sample_size = N;
  const int T = noise.horizon();
  pool.stage_samples.resize(static_cast<std::size_t>(T));
  pool.stage_dims.resize(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    const auto& comps = noise.stages[static_cast<std::size_t>(t - 1)];
    const int d = static_cast<int>(comps.size());
    pool.stage_dims[static_cast<std::size_t>(t - 1)] = d;
    auto& out = pool.stage_samples[static_cast<std::size_t>(t - 1)];
    out.resize(static_cast<std::size_t>(N) * static_cast<std::size_t>(d));
    RngStream rng = derive_stream(plan, replication, t);
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < d; ++k)
        out[static_cast<std::size_t>(i) * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)] =
            rng.next_uniform(comps[static_cast<std::size_t>(k)].a, comps[static_cast<std::size_t>(k)].b);
  }
  return pool;
}

Moments noise_moments(const UniformComponent& c) { return Moments{c.mu2, c.mu3, c.mu4}; }

}  // namespace saadp
