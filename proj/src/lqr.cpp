#include "saadp/lqr.hpp"

#include <cmath>

namespace saadp::lqr {

namespace {

void require_spd(const MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) throw ModelError(std::string(what) + ": not square");
  if (!m.isApprox(m.transpose(), 1e-12)) throw ModelError(std::string(what) + ": not symmetric");
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw ModelError(std::string(what) + ": not positive definite");
}

MatrixXd noise_covariance(const LqrModel& model, int t) {
  const auto& comps = model.noise.stages[static_cast<std::size_t>(t - 1)];
  MatrixXd sigma = MatrixXd::Zero(model.state_dim, model.state_dim);
  for (int i = 0; i < model.state_dim; ++i) sigma(i, i) = comps[static_cast<std::size_t>(i)].mu2;
  return sigma;
}

}  // namespace

void LqrModel::validate() const {
  if (horizon < 1) throw ModelError("lqr: horizon must be >= 1");
  const auto T = static_cast<std::size_t>(horizon);
  if (A.size() != T || B.size() != T || Q.size() != T || R.size() != T)
    throw ModelError("lqr: per-stage matrix count != horizon");
  if (noise.horizon() != horizon) throw ModelError("lqr: noise horizon mismatch");
  for (std::size_t t = 0; t < T; ++t) {
    if (A[t].rows() != state_dim || A[t].cols() != state_dim) throw ModelError("lqr: bad A dimensions");
    if (B[t].rows() != state_dim || B[t].cols() != control_dim) throw ModelError("lqr: bad B dimensions");
    require_spd(Q[t], "lqr Q_t");
    require_spd(R[t], "lqr R_t");
    const auto& comps = noise.stages[t];
    if (static_cast<int>(comps.size()) != state_dim) throw ModelError("lqr: noise dimension != state dimension");
    for (const auto& c : comps)
      if (std::abs(c.mean()) > 1e-12) throw ModelError("lqr: noise components must be zero-mean");
  }
  require_spd(Q_terminal, "lqr Q_{T+1}");
}

LqrModel LqrModel::scalar_benchmark(int horizon, double noise_half_width) {
  LqrModel m;
  m.horizon = horizon;
  m.state_dim = 1;
  m.control_dim = 1;
  const MatrixXd one = MatrixXd::Identity(1, 1);
  m.A.assign(static_cast<std::size_t>(horizon), one);
  m.B.assign(static_cast<std::size_t>(horizon), one);
  m.Q.assign(static_cast<std::size_t>(horizon), one);
  m.R.assign(static_cast<std::size_t>(horizon), one);
  m.Q_terminal = one;
  m.noise = NoiseSpec::iid_scalar(horizon, -noise_half_width, noise_half_width);
  return m;
}

RiccatiSolution riccati_backward(const LqrModel& model) {
  model.validate();
  const int T = model.horizon;
  RiccatiSolution sol;
  sol.P.resize(static_cast<std::size_t>(T) + 1);
  sol.K.resize(static_cast<std::size_t>(T));
  sol.M.resize(static_cast<std::size_t>(T));
  sol.q.assign(static_cast<std::size_t>(T) + 1, 0.0);
  sol.P[static_cast<std::size_t>(T)] = model.Q_terminal;
  for (int t = T; t >= 1; --t) {
    const std::size_t ti = static_cast<std::size_t>(t - 1);
    const MatrixXd& Pn = sol.P[ti + 1];
    const MatrixXd& A = model.A[ti];
    const MatrixXd& B = model.B[ti];
    const MatrixXd G = model.R[ti] + B.transpose() * Pn * B;
    Eigen::LLT<MatrixXd> llt(G);
    if (llt.info() != Eigen::Success) throw ModelError("riccati: R + B'PB not positive definite");
    const MatrixXd K = -llt.solve(B.transpose() * Pn * A);
    MatrixXd P = model.Q[ti] + A.transpose() * Pn * A + A.transpose() * Pn * B * K;
    P = 0.5 * (P + P.transpose()).eval();
    sol.K[ti] = K;
    sol.M[ti] = A + B * K;
    sol.P[ti] = P;
    const auto moments = quadratic_noise_moments(Pn, model.noise.stages[ti]);
    sol.q[ti] = sol.q[ti + 1] + moments.mean;
  }
  return sol;
}

QuadraticNoiseMoments quadratic_noise_moments(const MatrixXd& P,
                                              const std::vector<UniformComponent>& components) {
  const int n = static_cast<int>(components.size());
  if (P.rows() != n || P.cols() != n) throw ModelError("quadratic_noise_moments: dimension mismatch");
  for (const auto& c : components)
    if (std::abs(c.mean()) > 1e-12 || std::abs(c.mu3) > 1e-12)
      throw ModelError("quadratic_noise_moments: asymmetric components unsupported");
  QuadraticNoiseMoments out;
  out.third = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const auto& ci = components[static_cast<std::size_t>(i)];
    out.mean += P(i, i) * ci.mu2;
    out.variance += P(i, i) * P(i, i) * (ci.mu4 - ci.mu2 * ci.mu2);
    out.third(i) = P(i, i) * ci.mu3;  // zero under symmetry
    for (int j = i + 1; j < n; ++j)
      out.variance += 4.0 * P(i, j) * P(i, j) * ci.mu2 * components[static_cast<std::size_t>(j)].mu2;
  }
  return out;
}

SaaClosedForm saa_closed_form(const LqrModel& model, const RiccatiSolution& riccati, const SamplePool& pool) {
  const int T = model.horizon;
  if (pool.horizon() != T) throw ModelError("saa_closed_form: pool horizon mismatch");
  const int n = model.state_dim;
  SaaClosedForm cf;
  cf.k.assign(static_cast<std::size_t>(T) + 1, VectorXd::Zero(n));
  cf.q_hat.assign(static_cast<std::size_t>(T) + 1, 0.0);
  cf.policy_offset.resize(static_cast<std::size_t>(T));
  cf.sample_mean.resize(static_cast<std::size_t>(T));
  const int N = pool.sample_size;
  for (int t = T; t >= 1; --t) {
    const std::size_t ti = static_cast<std::size_t>(t - 1);
    if (pool.stage_dims[ti] != n) throw ModelError("saa_closed_form: sample dimension mismatch");
    const MatrixXd& Pn = riccati.P[ti + 1];
    const MatrixXd& B = model.B[ti];
    const MatrixXd G = model.R[ti] + B.transpose() * Pn * B;
    Eigen::LLT<MatrixXd> llt(G);

    VectorXd xi_bar = VectorXd::Zero(n);
    double quad_sum = 0.0;
    VectorXd xi(n);
    for (int i = 0; i < N; ++i) {
      for (int k = 0; k < n; ++k) xi(k) = pool.component(t, i, k);
      xi_bar += xi;
      quad_sum += xi.dot(Pn * xi);
    }
    xi_bar /= static_cast<double>(N);
    quad_sum /= static_cast<double>(N);
    cf.sample_mean[ti] = xi_bar;

    const VectorXd& k_next = cf.k[ti + 1];
    const VectorXd shift = 2.0 * Pn * xi_bar + k_next;
    cf.k[ti] = riccati.M[ti].transpose() * (k_next + 2.0 * Pn * xi_bar);
    cf.q_hat[ti] = cf.q_hat[ti + 1] + quad_sum + k_next.dot(xi_bar) -
                   0.25 * shift.dot(B * llt.solve(B.transpose() * shift));
    cf.policy_offset[ti] = llt.solve(B.transpose() * Pn * xi_bar + 0.5 * B.transpose() * k_next);
  }
  return cf;
}

AsymptoticLaw asymptotic_recursion(const LqrModel& model, const RiccatiSolution& riccati) {
  const int T = model.horizon;
  const int n = model.state_dim;
  AsymptoticLaw law;
  law.S.assign(static_cast<std::size_t>(T) + 1, MatrixXd::Zero(n, n));
  law.c.assign(static_cast<std::size_t>(T) + 1, VectorXd::Zero(n));
  law.v.assign(static_cast<std::size_t>(T) + 1, 0.0);
  law.gamma.resize(static_cast<std::size_t>(T));
  for (int t = T; t >= 1; --t) {
    const std::size_t ti = static_cast<std::size_t>(t - 1);
    const MatrixXd& Pn = riccati.P[ti + 1];
    const MatrixXd& M = riccati.M[ti];
    const MatrixXd sigma = noise_covariance(model, t);
    const auto moments = quadratic_noise_moments(Pn, model.noise.stages[ti]);
    law.gamma[ti] = 2.0 * Pn * moments.third;
    law.S[ti] = M.transpose() * (law.S[ti + 1] + 4.0 * Pn * sigma * Pn) * M;
    law.c[ti] = M.transpose() * (law.c[ti + 1] + law.gamma[ti]);
    law.v[ti] = law.v[ti + 1] + moments.variance;
  }
  return law;
}

double asym_variance_eval(const AsymptoticLaw& law, int t, const VectorXd& x) {
  if (t < 1 || t > static_cast<int>(law.v.size())) throw ConfigError("asym_variance_eval: stage out of range");
  return x.dot(law.s(t) * x) + 2.0 * law.cross(t).dot(x) + law.offset(t);
}

VarianceDecomposition variance_decomposition(const AsymptoticLaw& law, const RiccatiSolution& riccati,
                                             const LqrModel& model, int t, const VectorXd& x) {
  const std::size_t ti = static_cast<std::size_t>(t - 1);
  const MatrixXd& M = riccati.M[ti];
  const MatrixXd& Pn = riccati.P[ti + 1];
  const MatrixXd sigma = noise_covariance(model, t);
  const auto moments = quadratic_noise_moments(Pn, model.noise.stages[ti]);
  const VectorXd mx = M * x;
  VarianceDecomposition d;
  d.propagated = mx.dot(law.S[ti + 1] * mx) + law.v[ti + 1] + 2.0 * mx.dot(law.c[ti + 1]);
  d.current = 4.0 * mx.dot(Pn * sigma * Pn * mx) + moments.variance + 2.0 * mx.dot(law.gamma[ti]);
  return d;
}

}  // namespace saadp::lqr
