// Linear plant dx/dt = A x + B mu with the state used directly as the tracking error.
// Small enough that its value function is known in closed form.
#pragma once

#include <cmath>
#include <vector>

#include "adp.hpp"

namespace mfdpc::testing {

class LinearEnv final : public LearningEnv {
 public:
  LinearEnv(Eigen::MatrixXd A, Eigen::MatrixXd B, std::vector<Eigen::VectorXd> starts)
      : A_(std::move(A)), B_(std::move(B)), starts_(std::move(starts)) {}

  int state_dim() const override { return static_cast<int>(A_.rows()); }
  int error_dim() const override { return static_cast<int>(A_.rows()); }
  int input_dim() const override { return static_cast<int>(B_.cols()); }
  std::size_t episode_count() const override { return starts_.size(); }

  Eigen::VectorXd reset(std::size_t ep) override {
    x_ = starts_.at(ep);
    t_ = 0.0;
    return x_;
  }

  Eigen::VectorXd step(const Eigen::VectorXd& mu, double dt, Eigen::VectorXd& next) override {
    auto f = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return A_ * x + B_ * mu; };
    const Eigen::VectorXd k1 = f(x_);
    const Eigen::VectorXd k2 = f(x_ + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = f(x_ + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = f(x_ + dt * k3);
    x_ += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t_ += dt;
    next = x_;
    return mu;
  }

  double time() const override { return t_; }
  bool bounded(const Eigen::VectorXd& N) const override { return N.allFinite() && N.norm() < 1e6; }

  void model(std::size_t, double, const Eigen::VectorXd& N, Eigen::VectorXd& F, Eigen::MatrixXd& S) const override {
    F = A_ * N;
    S = B_;
  }

 private:
  Eigen::MatrixXd A_, B_;
  std::vector<Eigen::VectorXd> starts_;
  Eigen::VectorXd x_;
  double t_ = 0.0;
};

// Value coefficient p of V = p x^2 for dx/dt = a x + b mu, cost q x^2 + g mu^2.
inline double riccati_scalar(double a, double b, double q, double g) {
  return g * (a + std::sqrt(a * a + q * b * b / g)) / (b * b);
}

struct ScalarToy {
  double a = -1.0, b = 1.0, q = 1.0, g = 1.0;
  // lambda large enough that tanh stays in its linear range, so the cost is quadratic
  double lambda = 20.0;

  BasisSpec basis() const {
    BasisSpec s;
    s.kind = "scalar";
    s.critic = MonomialBasis({{0, 0}}, Eigen::VectorXd::Ones(1));
    s.actor = MonomialBasis({{0}}, Eigen::VectorXd::Ones(1));
    return s;
  }
  CostWeights cost() const {
    CostWeights w;
    w.Q = Eigen::MatrixXd::Constant(1, 1, q);
    w.gamma = Eigen::VectorXd::Constant(1, g);
    w.lambda = lambda;
    return w;
  }
  LinearEnv env() const {
    std::vector<Eigen::VectorXd> x0;
    for (double v : {1.0, -0.8, 0.5, 1.3}) x0.push_back(Eigen::VectorXd::Constant(1, v));
    return LinearEnv(Eigen::MatrixXd::Constant(1, 1, a), Eigen::MatrixXd::Constant(1, 1, b), x0);
  }
  TrainSettings settings() const {
    TrainSettings ts;
    ts.collect.window = 0.5;
    ts.collect.dt = 0.005;
    ts.collect.windows_per_episode = 8;
    ts.noise.amplitude = 0.3;
    ts.noise.period_min = 0.5;
    ts.noise.period_max = 5.0;
    ts.noise.seed = 3;
    ts.state_stride = 10;
    ts.tol = 1e-6;
    ts.k_max = 30;
    return ts;
  }
  double value_coefficient() const { return riccati_scalar(a, b, q, g); }
};

}  // namespace mfdpc::testing
