#include "runtime.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mfdpc {

Vec4 DemandProfile::nominal(double t) const {
  if (shape == Shape::kPiecewise) {
    if (values.empty()) throw DomainError("piecewise demand has no segments");
    const auto k = static_cast<std::size_t>(std::upper_bound(ends.begin(), ends.end(), t) - ends.begin());
    return values[std::min(k, values.size() - 1)];
  }
  double w;
  const double up_end = onset + ramp, down_start = up_end + plateau, down_end = down_start + ramp;
  if (t <= onset || t >= down_end) {
    w = 0.0;
  } else if (t < up_end) {
    w = (t - onset) / ramp;
  } else if (t <= down_start) {
    w = 1.0;
  } else {
    w = (down_end - t) / ramp;
  }
  Vec4 q;
  for (int i = 0; i < 4; ++i) q[i] = base[i] + w * (peak[i] - base[i]);
  return q;
}

Vec4 realize_demand(const DemandProfile& profile, double t) {
  Vec4 q = profile.nominal(t);
  if (profile.noise_frac <= 0.0) return q;
  const auto slot = static_cast<std::int64_t>(std::floor(t / profile.redraw_interval + 1e-9));
  // one independent stream per redraw slot keeps the draw random-access
  std::seed_seq seq{static_cast<std::uint32_t>(profile.seed), static_cast<std::uint32_t>(profile.seed >> 32),
                    static_cast<std::uint32_t>(slot), static_cast<std::uint32_t>(static_cast<std::uint64_t>(slot) >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (double& x : q) x = std::max(0.0, x + profile.noise_frac * x * nd(rng));
  return q;
}

ControlOutput compute_control(const TwoRegionNetwork& net, const ControllerConfig& cfg, const Vec4& n, double t) {
  ControlOutput out;
  if (cfg.mode == ControlMode::kUncontrolled) {
    out.u = {cfg.u_max, cfg.u_max};
    out.us = out.u;
    return out;
  }
  const ReferencePoint ref = cfg.reference->at(t);
  out.nd = ref.nd;
  out.us = feedforward(net, ref, cfg.singular_fallback);
  const AugmentedState N = augment(n, ref.nd);
  out.e = N.e;
  if (cfg.policy) {
    const Eigen::VectorXd mu = cfg.policy->weights.mu(cfg.policy->basis, N.vec(), cfg.policy->lambda);
    out.mu = {mu(0), mu(1)};
  }
  for (int i = 0; i < 2; ++i) out.u[i] = std::clamp(out.us[i] + out.mu[i], cfg.u_min, cfg.u_max);
  return out;
}

ClosedLoopTrace run_closed_loop(const TwoRegionNetwork& net, const ControllerConfig& cfg,
                                const DemandProfile& profile, const Vec4& initial, double t0, double t1,
                                double dt) {
  if (cfg.mode != ControlMode::kUncontrolled && !cfg.reference) throw DomainError("controller needs a reference");
  if (cfg.mode == ControlMode::kSpc && cfg.reference->mode() == CommandGenerator::Mode::kPiecewise) {
    const auto& iv = cfg.reference->schedule().intervals;
    for (const auto& s : iv) {
      const auto& f = iv.front().nd;
      if (std::fabs(s.nd[0] + s.nd[1] - f[0] - f[1]) > 1e-6 || std::fabs(s.nd[2] + s.nd[3] - f[2] - f[3]) > 1e-6)
        throw DomainError("SPC needs one constant set-point");
    }
  }
  ClosedLoopTrace out;
  Controller ctl = [&](double t, const Vec4& n) {
    const ControlOutput c = compute_control(net, cfg, n, t);
    out.extra.push_back({c.nd, c.e, c.mu, c.us});
    return c.u;
  };
  DemandFn dem = [&](double t) { return realize_demand(profile, t); };
  out.sim = integrate(net, initial, ctl, dem, t0, t1, dt, cfg.control_interval);
  // terminal row: report the reference there, reuse the last held action
  ClosedLoopRow last = out.extra.empty() ? ClosedLoopRow{} : out.extra.back();
  const auto& tail = out.sim.rows.back();
  if (cfg.mode != ControlMode::kUncontrolled) {
    const ReferencePoint ref = cfg.reference->at(tail.t);
    last.nd = ref.nd;
    last.e = augment(tail.n, ref.nd).e;
  }
  out.extra.push_back(last);
  return out;
}

MfdLearningEnv::MfdLearningEnv(TwoRegionNetwork net, std::vector<Episode> episodes, double u_min, double u_max)
    : net_(net), episodes_(std::move(episodes)), u_min_(u_min), u_max_(u_max) {}

Eigen::VectorXd MfdLearningEnv::reset(std::size_t episode) {
  cur_ = episode;
  const Episode& ep = episodes_.at(episode);
  t_ = ep.t_start;
  const ReferencePoint ref = ep.reference->at(t_);
  for (int i = 0; i < 4; ++i) n_[i] = ref.nd[i] + ep.e0[i];
  clamp_state(net_, n_);
  return augment(n_, ref.nd).vec();
}

Eigen::VectorXd MfdLearningEnv::step(const Eigen::VectorXd& mu, double dt, Eigen::VectorXd& next) {
  const Episode& ep = episodes_[cur_];
  const ReferencePoint ref = ep.reference->at(t_);
  const Vec2 us = feedforward(net_, ref, ep.singular_fallback);
  Vec2 u;
  Eigen::VectorXd applied(2);
  for (int i = 0; i < 2; ++i) {
    u[i] = std::clamp(us[i] + mu(i), u_min_, u_max_);
    applied(i) = u[i] - us[i];
  }
  n_ = rk4_step(net_, n_, u, realize_demand(*ep.demand, t_), dt);
  clamp_state(net_, n_);
  t_ += dt;
  next = augment(n_, ep.reference->at(t_).nd).vec();
  return applied;
}

bool MfdLearningEnv::bounded(const Eigen::VectorXd& N) const {
  if (!N.allFinite()) return false;
  const double n1 = N(0) + N(1) + N(4) + N(5);
  const double n2 = N(2) + N(3) + N(6) + N(7);
  return n1 < net_.curve1.n_jam && n2 < net_.curve2.n_jam;
}

void MfdLearningEnv::model(std::size_t episode, double t, const Eigen::VectorXd& N, Eigen::VectorXd& F,
                           Eigen::MatrixXd& S) const {
  const Episode& ep = episodes_.at(episode);
  const ReferencePoint ref = ep.reference->at(t);
  const Vec2 us = feedforward(net_, ref, ep.singular_fallback);
  const AugmentedModel m = augmented_model(net_, AugmentedState::from(N), ref, realize_demand(*ep.demand, t), us);
  F = m.F;
  S = m.S;
}

}  // namespace mfdpc
