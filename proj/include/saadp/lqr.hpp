#pragma once

#include <Eigen/Dense>
#include <vector>

#include "saadp/model.hpp"
#include "saadp/sampling.hpp"

namespace saadp::lqr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Finite-horizon LQR: dynamics A x + B u + xi, cost x'Qx + u'Ru,
// terminal x'Q_{T+1}x, independent zero-mean noise components.
struct LqrModel {
  int horizon = 1;
  int state_dim = 1;
  int control_dim = 1;
  std::vector<MatrixXd> A, B, Q, R;  // per stage t = 1..T
  MatrixXd Q_terminal;
  NoiseSpec noise;  // state_dim components per stage, all zero-mean

  void validate() const;
  // The time-invariant §-style scalar benchmark (all matrices = 1).
  static LqrModel scalar_benchmark(int horizon, double noise_half_width);
};

struct RiccatiSolution {
  std::vector<MatrixXd> P;  // t = 1..T+1
  std::vector<MatrixXd> K;  // gains, t = 1..T
  std::vector<MatrixXd> M;  // closed loop A + B K, t = 1..T
  std::vector<double> q;    // t = 1..T+1, q_{T+1} = 0

  const MatrixXd& p(int t) const { return P[static_cast<std::size_t>(t - 1)]; }
  const MatrixXd& gain(int t) const { return K[static_cast<std::size_t>(t - 1)]; }
  const MatrixXd& closed_loop(int t) const { return M[static_cast<std::size_t>(t - 1)]; }
  double offset(int t) const { return q[static_cast<std::size_t>(t - 1)]; }
  double value(int t, const VectorXd& x) const { return x.dot(p(t) * x) + offset(t); }
};

RiccatiSolution riccati_backward(const LqrModel& model);

struct QuadraticNoiseMoments {
  double mean = 0.0;           // E[xi' P xi]
  double variance = 0.0;       // Var(xi' P xi)
  VectorXd third;              // E[(xi' P xi) xi]
};

// Closed-form moments of the quadratic form xi' P xi for independent,
// symmetric, zero-mean components.
QuadraticNoiseMoments quadratic_noise_moments(const MatrixXd& P,
                                              const std::vector<UniformComponent>& components);

// Exact SAA value functions V-hat_t(x) = x'P_t x + k_t'x + q_t for one
// sample pool, plus the constant policy offsets.
struct SaaClosedForm {
  std::vector<VectorXd> k;       // t = 1..T+1, k_{T+1} = 0
  std::vector<double> q_hat;     // t = 1..T+1
  std::vector<VectorXd> policy_offset;  // u-frak_t, t = 1..T
  std::vector<VectorXd> sample_mean;    // per-stage xi-bar

  const VectorXd& slope(int t) const { return k[static_cast<std::size_t>(t - 1)]; }
  double offset(int t) const { return q_hat[static_cast<std::size_t>(t - 1)]; }
  double value(int t, const RiccatiSolution& ric, const VectorXd& x) const {
    return x.dot(ric.p(t) * x) + slope(t).dot(x) + offset(t);
  }
};

SaaClosedForm saa_closed_form(const LqrModel& model, const RiccatiSolution& riccati, const SamplePool& pool);

// Covariance law of the limit of sqrt(N)(k_t, q_t - q_t): asymptotic
// variance of the SAA value-function error is x'S_t x + 2 c_t'x + v_t.
struct AsymptoticLaw {
  std::vector<MatrixXd> S;   // t = 1..T+1
  std::vector<VectorXd> c;   // t = 1..T+1
  std::vector<double> v;     // t = 1..T+1
  std::vector<VectorXd> gamma;  // t = 1..T

  const MatrixXd& s(int t) const { return S[static_cast<std::size_t>(t - 1)]; }
  const VectorXd& cross(int t) const { return c[static_cast<std::size_t>(t - 1)]; }
  double offset(int t) const { return v[static_cast<std::size_t>(t - 1)]; }
};

AsymptoticLaw asymptotic_recursion(const LqrModel& model, const RiccatiSolution& riccati);

double asym_variance_eval(const AsymptoticLaw& law, int t, const VectorXd& x);

struct VarianceDecomposition {
  double propagated = 0.0;
  double current = 0.0;
};

VarianceDecomposition variance_decomposition(const AsymptoticLaw& law, const RiccatiSolution& riccati,
                                             const LqrModel& model, int t, const VectorXd& x);

// Scalar conveniences for the benchmark instance.
inline VectorXd scalar_state(double x) { return VectorXd::Constant(1, x); }

}  // namespace saadp::lqr
