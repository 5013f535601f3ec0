#include <doctest.h>

#include <cmath>

#include "saadp/sampling.hpp"

using namespace saadp;

TEST_CASE("derive_stream is deterministic per (plan, replication, stage)") {
  const SeedPlan plan{42};
  RngStream a = derive_stream(plan, 3, 7);
  RngStream b = derive_stream(plan, 3, 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK_THROWS_AS(derive_stream(plan, 0, 0), ConfigError);
}

TEST_CASE("distinct stages and replications give distinct streams") {
  const SeedPlan plan{42};
  CHECK(derive_stream(plan, 0, 1).next_u64() != derive_stream(plan, 0, 2).next_u64());
  CHECK(derive_stream(plan, 0, 1).next_u64() != derive_stream(plan, 1, 1).next_u64());
  CHECK(derive_stream(SeedPlan{1}, 0, 1).next_u64() != derive_stream(SeedPlan{2}, 0, 1).next_u64());
}

TEST_CASE("paired streams are empirically uncorrelated") {
  const SeedPlan plan{20250826};
  const int n = 10000;
  RngStream a = derive_stream(plan, 0, 1);
  RngStream b = derive_stream(plan, 1, 1);
  double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
  for (int i = 0; i < n; ++i) {
    const double x = a.next_canonical(), y = b.next_canonical();
    sa += x;
    sb += y;
    sab += x * y;
    saa += x * x;
    sbb += y * y;
  }
  const double corr = (sab / n - sa / n * sb / n) /
                      std::sqrt((saa / n - sa / n * sa / n) * (sbb / n - sb / n * sb / n));
  CHECK(std::abs(corr) < 0.05);
}

TEST_CASE("draw_pool stays in support and matches exact moments") {
  const double c = std::sqrt(3.0);
  const NoiseSpec noise = NoiseSpec::iid_scalar(1, -c, c);
  const SamplePool pool = draw_pool(SeedPlan{7}, 0, 1000000, noise);
  double mean = 0, var = 0;
  for (double x : pool.stage(1)) {
    CHECK(x >= -c);
    CHECK(x <= c);
    mean += x;
  }
  mean /= pool.sample_size;
  for (double x : pool.stage(1)) var += (x - mean) * (x - mean);
  var /= pool.sample_size - 1;
  CHECK(std::abs(mean) < 0.005);       // 3 sigma / sqrt(N) with sigma = 1
  CHECK(std::abs(var - 1.0) < 0.01);
  CHECK_THROWS_AS(draw_pool(SeedPlan{7}, 0, 0, noise), ConfigError);
}

TEST_CASE("draw_pool regeneration is bit identical") {
  const NoiseSpec noise = NoiseSpec::iid_scalar(3, -1.0, 1.0);
  const SamplePool a = draw_pool(SeedPlan{99}, 5, 100, noise);
  const SamplePool b = draw_pool(SeedPlan{99}, 5, 100, noise);
  CHECK(a.stage_samples == b.stage_samples);
}

TEST_CASE("noise_moments analytic values for Uniform(-sqrt(3), sqrt(3))") {
  const auto c = UniformComponent::make(-std::sqrt(3.0), std::sqrt(3.0));
  const auto m = noise_moments(c);
  CHECK(m.mu2 == doctest::Approx(1.0));        // c^2/3
  CHECK(m.mu3 == 0.0);
  CHECK(m.mu4 == doctest::Approx(9.0 / 5.0));  // c^4/5
}

TEST_CASE("large-pool empirical fourth moment matches analytic") {
  const auto comp = UniformComponent::make(-std::sqrt(3.0), std::sqrt(3.0));
  const NoiseSpec noise{{{comp}}};
  const SamplePool pool = draw_pool(SeedPlan{123}, 0, 1000000, noise);
  double m4 = 0;
  for (double x : pool.stage(1)) m4 += x * x * x * x;
  m4 /= pool.sample_size;
  // Var(xi^4) = mu8 - mu4^2 = 81/9 - 81/25; 4 sigma / sqrt(N) tolerance.
  const double sd = std::sqrt(81.0 / 9.0 - 81.0 / 25.0);
  CHECK(std::abs(m4 - 9.0 / 5.0) < 4.0 * sd / 1000.0);
}
