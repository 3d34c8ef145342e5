// Off-policy integral reinforcement learning and the model-based policy-iteration oracle.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "augmented.hpp"
#include "basis.hpp"

namespace mfdpc {

// The learner's view of a plant. Model-free code only calls reset/step/bounded.
// model() exists for the model-based oracle and residual diagnostics.
class LearningEnv {
 public:
  virtual ~LearningEnv() = default;
  virtual int state_dim() const = 0;
  virtual int error_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual std::size_t episode_count() const = 0;
  virtual Eigen::VectorXd reset(std::size_t episode) = 0;
  // Holds feedback mu for dt (the env clamps the total control to its box) and
  // writes the new augmented state. Returns the feedback actually applied.
  virtual Eigen::VectorXd step(const Eigen::VectorXd& mu, double dt, Eigen::VectorXd& next) = 0;
  virtual double time() const = 0;
  virtual bool bounded(const Eigen::VectorXd& N) const = 0;
  virtual void model(std::size_t episode, double t, const Eigen::VectorXd& N, Eigen::VectorXd& F,
                     Eigen::MatrixXd& S) const = 0;
};

class InsufficientExcitation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InadmissiblePolicy : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct CriticActorWeights {
  Eigen::VectorXd Wc;
  Eigen::MatrixXd Wa;  // input_dim x p_a

  static CriticActorWeights zeros(const BasisSpec& b, int input_dim);
  Eigen::VectorXd D(const BasisSpec& b, const Eigen::Ref<const Eigen::VectorXd>& N) const;
  Eigen::VectorXd mu(const BasisSpec& b, const Eigen::Ref<const Eigen::VectorXd>& N, double lambda) const;
  double value(const BasisSpec& b, const Eigen::Ref<const Eigen::VectorXd>& N) const;
};

// Sum of sinusoids per channel. Each channel gets `count` terms of amplitude
// amplitude/count with frequencies drawn in [2pi/period_max, 2pi/period_min].
struct ProbingNoise {
  double amplitude = 0.05;  // absolute, same units as mu
  int count = 8;
  double period_min = 120.0;
  double period_max = 1200.0;
  std::uint64_t seed = 7;
};

struct ProbingSignal {
  Eigen::MatrixXd freq, phase;  // channels x count
  double amp = 0.0;
  Eigen::VectorXd at(double t) const;
};

ProbingSignal make_probing_signal(const ProbingNoise& spec, int channels, std::uint64_t stream);

// One IRL window. The path keeps every integrator step so the integrals can be
// re-evaluated for any target policy (off-policy reuse).
struct TransitionSample {
  std::size_t episode = 0;
  double t_start = 0.0;
  double dt = 1.0;
  Eigen::MatrixXd N_path;   // (L+1) x n
  Eigen::MatrixXd mu_path;  // L x m, behavior feedback held on each step
};

struct CollectSettings {
  int windows_per_episode = 20;
  double window = 60.0;
  double dt = 1.0;
};

std::vector<TransitionSample> collect_samples(LearningEnv& env, const BasisSpec& basis,
                                              const CriticActorWeights& policy, const ProbingNoise& noise,
                                              const CostWeights& w, const CollectSettings& cs,
                                              std::uint64_t stream = 0);

// Integrals of one window for the target policy (weights^(k)).
struct SampleIntegrals {
  double state_cost = 0.0;      // int e'Qe + Ubar(mu_k)
  Eigen::VectorXd dphi;         // phi(N_end) - phi(N_start)
  Eigen::MatrixXd correction;   // m x p_a, int gamma_i (mu_k,i - mu_i) phi_a
};

SampleIntegrals integrate_sample(const TransitionSample& s, const BasisSpec& basis, const CriticActorWeights& wk,
                                 const CostWeights& w);

struct IrlSolution {
  CriticActorWeights weights;
  double residual_norm = 0.0;
  double condition = 0.0;
};

IrlSolution irl_lstsq(const std::vector<TransitionSample>& samples, const CriticActorWeights& wk,
                      const BasisSpec& basis, const CostWeights& w, double cond_limit = 1e10);

struct IterationRecord {
  int k = 0;
  double wc_norm = 0.0;
  double wa_norm = 0.0;
  double change = 0.0;
  double residual = 0.0;
  double condition = 0.0;
};

struct TrainSettings {
  double tol = 1e-3;
  int k_max = 50;
  bool reuse_data = true;
  double cond_limit = 1e10;
  double divergence = 1e6;  // weight norm treated as divergence
  int state_stride = 10;
  CollectSettings collect;
  ProbingNoise noise;
};

struct TrainingResult {
  CriticActorWeights weights;
  std::vector<IterationRecord> log;
  std::vector<CriticActorWeights> history;  // weights after each iteration
  bool converged = false;
  std::vector<TransitionSample> samples;    // data of the final iteration
};

TrainingResult policy_iteration_model_free(LearningEnv& env, const CriticActorWeights& init, const BasisSpec& basis,
                                           const CostWeights& w, const TrainSettings& ts);

struct StateSample {
  Eigen::VectorXd N;
  std::size_t episode = 0;
  double t = 0.0;
};

// Every stride-th point of every recorded path, including the window start.
std::vector<StateSample> sample_states(const std::vector<TransitionSample>& samples, int stride);

TrainingResult policy_iteration_model_based(const LearningEnv& env, const std::vector<StateSample>& states,
                                            const CriticActorWeights& init, const BasisSpec& basis,
                                            const CostWeights& w, const TrainSettings& ts);

// RMS over probe states of e'Qe + grad V' F + lambda^2 sum gamma_i ln(1 - tanh^2 D_i).
double bellman_residual(const CriticActorWeights& weights, const BasisSpec& basis,
                        const std::vector<StateSample>& probes, const LearningEnv& env, const CostWeights& w);

// Column-normalized least squares. Returns x and writes the 2-norm condition number.
Eigen::VectorXd scaled_lstsq(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double* condition = nullptr);

}  // namespace mfdpc
