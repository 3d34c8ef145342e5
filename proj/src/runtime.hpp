// Closed-loop execution: feedforward plus learned feedback, demand realization,
// and the plant wrapper the learner trains against.
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "adp.hpp"

namespace mfdpc {

struct DemandProfile {
  enum class Shape { kPiecewise, kTrapezoid };
  Shape shape = Shape::kPiecewise;
  // piecewise: values[i] holds on [ends[i-1], ends[i]); the last value extends past the end
  std::vector<double> ends;
  std::vector<Vec4> values;
  // trapezoid: base until onset, linear ramp to peak, plateau, linear ramp back to base
  Vec4 base{}, peak{};
  double onset = 0.0, ramp = 900.0, plateau = 3600.0;
  // truncated Gaussian noise, sigma = noise_frac * nominal, redrawn per interval
  double noise_frac = 0.0;
  double redraw_interval = 60.0;
  std::uint64_t seed = 1;

  Vec4 nominal(double t) const;
};

Vec4 realize_demand(const DemandProfile& profile, double t);

struct TrainedPolicy {
  BasisSpec basis;
  CriticActorWeights weights;
  double lambda = 0.5;
};

enum class ControlMode { kTpc, kSpc, kUncontrolled };

struct ControllerConfig {
  ControlMode mode = ControlMode::kTpc;
  std::shared_ptr<const TrainedPolicy> policy;
  std::shared_ptr<const CommandGenerator> reference;
  double u_min = 0.1, u_max = 0.9;
  double control_interval = 60.0;
  // feedforward for channels whose transfer accumulation is below the floor
  Vec2 singular_fallback{0.9, 0.9};
};

struct ControlOutput {
  Vec2 u{};
  Vec2 mu{};
  Vec2 us{};
  Vec4 nd{};
  Vec4 e{};
};

ControlOutput compute_control(const TwoRegionNetwork& net, const ControllerConfig& cfg, const Vec4& n, double t);

struct ClosedLoopRow {
  Vec4 nd{}, e{};
  Vec2 mu{}, us{};
};

struct ClosedLoopTrace {
  SimulationTrace sim;
  std::vector<ClosedLoopRow> extra;  // aligned with sim.rows
};

ClosedLoopTrace run_closed_loop(const TwoRegionNetwork& net, const ControllerConfig& cfg,
                                const DemandProfile& profile, const Vec4& initial, double t0, double t1,
                                double dt);

// Training episode: start at reference time t_start with error e0 and roll from there.
struct Episode {
  std::shared_ptr<const CommandGenerator> reference;
  std::shared_ptr<const DemandProfile> demand;
  double t_start = 0.0;
  Vec4 e0{};
  Vec2 singular_fallback{0.9, 0.9};
};

// The MFD plant as seen by the learner. The feedforward u_s comes from the nominal
// model; the feedback is applied on top and the sum is clamped to the box.
class MfdLearningEnv final : public LearningEnv {
 public:
  MfdLearningEnv(TwoRegionNetwork net, std::vector<Episode> episodes, double u_min, double u_max);

  int state_dim() const override { return 8; }
  int error_dim() const override { return 4; }
  int input_dim() const override { return 2; }
  std::size_t episode_count() const override { return episodes_.size(); }
  Eigen::VectorXd reset(std::size_t episode) override;
  Eigen::VectorXd step(const Eigen::VectorXd& mu, double dt, Eigen::VectorXd& next) override;
  double time() const override { return t_; }
  bool bounded(const Eigen::VectorXd& N) const override;
  void model(std::size_t episode, double t, const Eigen::VectorXd& N, Eigen::VectorXd& F,
             Eigen::MatrixXd& S) const override;

  const std::vector<Episode>& episodes() const { return episodes_; }

 private:
  TwoRegionNetwork net_;
  std::vector<Episode> episodes_;
  double u_min_, u_max_;
  std::size_t cur_ = 0;
  double t_ = 0.0;
  Vec4 n_{};
};

}  // namespace mfdpc
