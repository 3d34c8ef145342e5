// Augmented tracking system [e; nd], constrained-input cost and the saturated policy.
#pragma once

#include <Eigen/Dense>

#include "reference.hpp"

namespace mfdpc {

struct AugmentedState {
  Vec4 e{};
  Vec4 nd{};

  Eigen::Matrix<double, 8, 1> vec() const;
  static AugmentedState from(const Eigen::Ref<const Eigen::VectorXd>& v);
};

// Q acts on the error block only. R = diag(gamma).
struct CostWeights {
  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(4, 4) * 1e-4;
  Eigen::VectorXd gamma = Eigen::VectorXd::Ones(2);
  double lambda = 0.5;

  void validate() const;  // throws DomainError
};

AugmentedState augment(const Vec4& n, const Vec4& nd);

// ln cosh without overflow.
double log_cosh(double x);

// sum_i gamma_i [2 lambda mu_i atanh(mu_i/lambda) + lambda^2 ln(1 - mu_i^2/lambda^2)].
// Throws DomainError when any |mu_i| >= lambda.
double control_cost(const Eigen::Ref<const Eigen::VectorXd>& mu, const CostWeights& w);

// control_cost(-lambda tanh(D)) evaluated through D, finite even when tanh rounds to 1.
double policy_control_cost(const Eigen::Ref<const Eigen::VectorXd>& D, const CostWeights& w);

double stage_cost(const Eigen::Ref<const Eigen::VectorXd>& e, const Eigen::Ref<const Eigen::VectorXd>& mu,
                  const CostWeights& w);

Eigen::VectorXd saturated_policy(const Eigen::Ref<const Eigen::VectorXd>& D, double lambda);

// Drift F(N) and input matrix S(N) of the augmented system at the reference point.
// u_s comes from steady_state_control at nd, so singular references throw.
struct AugmentedModel {
  Eigen::Matrix<double, 8, 1> F;
  Eigen::Matrix<double, 8, 2> S;
  Vec2 u_s{};
};

AugmentedModel augmented_model(const TwoRegionNetwork& net, const AugmentedState& N, const ReferencePoint& ref,
                               const Vec4& q);
// Same with the feedforward supplied by the caller.
AugmentedModel augmented_model(const TwoRegionNetwork& net, const AugmentedState& N, const ReferencePoint& ref,
                               const Vec4& q, const Vec2& u_s);

Eigen::Matrix<double, 8, 1> augmented_rhs(const TwoRegionNetwork& net, const AugmentedState& N, const Vec2& mu,
                                          const Vec4& q, const CommandGenerator& gen, double t);

double hamiltonian(const AugmentedState& N, const Vec2& mu, const Eigen::Ref<const Eigen::VectorXd>& grad_v,
                   const CostWeights& w, const TwoRegionNetwork& net, const Vec4& q, const CommandGenerator& gen,
                   double t);

}  // namespace mfdpc
