// Reference trajectories, equilibria and the steady-state feedforward.
#pragma once

#include <vector>

#include "mfd.hpp"

namespace mfdpc {

struct SetpointInterval {
  double start = 0.0;
  double end = 0.0;
  Vec4 nd{};
  Vec2 u_star{};  // diagnostics only; the controller recomputes u_s
  Vec4 q_nominal{};
};

struct SetpointSchedule {
  std::vector<SetpointInterval> intervals;
};

struct ReferencePoint {
  Vec4 nd{};
  Vec4 theta{};
  Vec4 q_nominal{};
};

class CommandGenerator {
 public:
  enum class Mode { kPiecewise, kTrajectory };

  static CommandGenerator piecewise(SetpointSchedule schedule);
  // Integrates trajectory_rhs from nd0 over [t0, t1] on a dt grid.
  static CommandGenerator trajectory(const TwoRegionNetwork& net, DemandFn q_hat, const Vec4& nd0, double u_max,
                                     double t0, double t1, double dt);

  Mode mode() const { return mode_; }
  double t_begin() const { return t0_; }
  double t_end() const { return t1_; }
  const SetpointSchedule& schedule() const { return schedule_; }

  // Throws DomainError outside the horizon. Piecewise mode is right-continuous.
  ReferencePoint at(double t) const;

 private:
  Mode mode_ = Mode::kPiecewise;
  double t0_ = 0.0, t1_ = 0.0;
  SetpointSchedule schedule_;
  // trajectory mode
  TwoRegionNetwork net_;
  DemandFn q_hat_;
  double u_max_ = 1.0;
  double dt_ = 1.0;
  std::vector<Vec4> grid_;
};

inline ReferencePoint reference_at(const CommandGenerator& gen, double t) { return gen.at(t); }

struct Equilibrium {
  Vec4 n{};
  Vec2 u{};
  int iterations = 0;
};

// Solves K(n*, u*, q) = 0 with region totals fixed. Throws NumericalError when the
// iteration stalls and DomainError when u* leaves [u_min, u_max].
Equilibrium equilibrium_solve(const TwoRegionNetwork& net, const Vec4& q, double n1_star, double n2_star,
                              double u_min = 0.0, double u_max = 1.0);

// Reference dynamics: the plant with both gates at u_max under nominal demand.
Vec4 trajectory_rhs(const TwoRegionNetwork& net, const Vec4& nd, const Vec4& q_hat, double u_max = 1.0);

struct SteadyState {
  Vec2 u{};
  double residual = 0.0;              // ||s u - (theta - f)||_2
  std::array<bool, 2> singular{};     // transfer accumulation below the floor
};

// Least-squares feedforward. Singular channels are reported, and their entry is 0.
SteadyState steady_state_solve(const TwoRegionNetwork& net, const Vec4& nd, const Vec4& theta, const Vec4& q_hat);

class SingularInputError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// As steady_state_solve, throwing SingularInputError on any singular channel.
SteadyState steady_state_control(const TwoRegionNetwork& net, const Vec4& nd, const Vec4& theta, const Vec4& q_hat);

// steady_state_solve with singular channels replaced by `fallback`. A zero input
// column leaves that channel undetermined, so any value satisfies the least-squares
// problem; the caller picks the nominal one.
Vec2 feedforward(const TwoRegionNetwork& net, const ReferencePoint& ref, const Vec2& fallback);

// One interval per period with the equilibrium for the period's nominal demand.
SetpointSchedule build_schedule(const TwoRegionNetwork& net, const std::vector<double>& ends,
                                const std::vector<Vec2>& totals, const DemandFn& q_nominal, double t0,
                                double u_min, double u_max);

}  // namespace mfdpc
