#include "augmented.hpp"

#include <cmath>

namespace mfdpc {

Eigen::Matrix<double, 8, 1> AugmentedState::vec() const {
  Eigen::Matrix<double, 8, 1> v;
  for (int i = 0; i < 4; ++i) {
    v(i) = e[i];
    v(4 + i) = nd[i];
  }
  return v;
}

AugmentedState AugmentedState::from(const Eigen::Ref<const Eigen::VectorXd>& v) {
  AugmentedState s;
  for (int i = 0; i < 4; ++i) {
    s.e[i] = v(i);
    s.nd[i] = v(4 + i);
  }
  return s;
}

void CostWeights::validate() const {
  if (Q.rows() != Q.cols()) throw DomainError("Q must be square");
  if (!Q.isApprox(Q.transpose(), 1e-12)) throw DomainError("Q must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
  if (es.eigenvalues().minCoeff() <= 0.0) throw DomainError("Q must be positive definite");
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  if ((gamma.array() < 0.0).any()) throw DomainError("gamma must be non-negative");
}

AugmentedState augment(const Vec4& n, const Vec4& nd) {
  AugmentedState s;
  for (int i = 0; i < 4; ++i) {
    s.e[i] = n[i] - nd[i];
    s.nd[i] = nd[i];
  }
  return s;
}

double log_cosh(double x) {
  const double a = std::fabs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

double control_cost(const Eigen::Ref<const Eigen::VectorXd>& mu, const CostWeights& w) {
  const double lam = w.lambda;
  double c = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double x = mu(i) / lam;
    if (!(std::fabs(x) < 1.0)) throw DomainError("|mu| must be strictly below lambda");
    c += w.gamma(i) * (2.0 * lam * mu(i) * std::atanh(x) + lam * lam * std::log1p(-x * x));
  }
  return c;
}

double policy_control_cost(const Eigen::Ref<const Eigen::VectorXd>& D, const CostWeights& w) {
  // mu = -lam tanh D gives gamma lam^2 (2 D tanh D - 2 ln cosh D)
  const double lam2 = w.lambda * w.lambda;
  double c = 0.0;
  for (Eigen::Index i = 0; i < D.size(); ++i)
    c += w.gamma(i) * lam2 * (2.0 * D(i) * std::tanh(D(i)) - 2.0 * log_cosh(D(i)));
  return c;
}

double stage_cost(const Eigen::Ref<const Eigen::VectorXd>& e, const Eigen::Ref<const Eigen::VectorXd>& mu,
                  const CostWeights& w) {
  return e.dot(w.Q * e) + control_cost(mu, w);
}

Eigen::VectorXd saturated_policy(const Eigen::Ref<const Eigen::VectorXd>& D, double lambda) {
  return -lambda * D.array().tanh().matrix();
}

AugmentedModel augmented_model(const TwoRegionNetwork& net, const AugmentedState& N, const ReferencePoint& ref,
                               const Vec4& q) {
  return augmented_model(net, N, ref, q, steady_state_control(net, N.nd, ref.theta, ref.q_nominal).u);
}

AugmentedModel augmented_model(const TwoRegionNetwork& net, const AugmentedState& N, const ReferencePoint& ref,
                               const Vec4& q, const Vec2& u_s) {
  Vec4 n;
  for (int i = 0; i < 4; ++i) n[i] = N.e[i] + N.nd[i];
  const DriftInput d = drift_and_input(net, n, q);
  AugmentedModel m;
  m.u_s = u_s;
  for (int i = 0; i < 4; ++i) {
    m.F(i) = d.f[i] + d.s[i][0] * u_s[0] + d.s[i][1] * u_s[1] - ref.theta[i];
    m.F(4 + i) = ref.theta[i];
    m.S(i, 0) = d.s[i][0];
    m.S(i, 1) = d.s[i][1];
    m.S(4 + i, 0) = 0.0;
    m.S(4 + i, 1) = 0.0;
  }
  return m;
}

Eigen::Matrix<double, 8, 1> augmented_rhs(const TwoRegionNetwork& net, const AugmentedState& N, const Vec2& mu,
                                          const Vec4& q, const CommandGenerator& gen, double t) {
  const ReferencePoint ref = gen.at(t);
  const AugmentedModel m = augmented_model(net, N, ref, q);
  return m.F + m.S * Eigen::Vector2d(mu[0], mu[1]);
}

double hamiltonian(const AugmentedState& N, const Vec2& mu, const Eigen::Ref<const Eigen::VectorXd>& grad_v,
                   const CostWeights& w, const TwoRegionNetwork& net, const Vec4& q, const CommandGenerator& gen,
                   double t) {
  const Eigen::Vector4d e(N.e[0], N.e[1], N.e[2], N.e[3]);
  const Eigen::Vector2d m(mu[0], mu[1]);
  return stage_cost(e, m, w) + grad_v.dot(augmented_rhs(net, N, mu, q, gen, t));
}

}  // namespace mfdpc
