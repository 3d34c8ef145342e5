#include "reference.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace mfdpc {

CommandGenerator CommandGenerator::piecewise(SetpointSchedule schedule) {
  if (schedule.intervals.empty()) throw DomainError("empty set-point schedule");
  for (std::size_t i = 0; i < schedule.intervals.size(); ++i) {
    const auto& iv = schedule.intervals[i];
    if (!(iv.end > iv.start)) throw DomainError("set-point interval has non-positive length");
    if (i > 0 && std::fabs(schedule.intervals[i - 1].end - iv.start) > 1e-9)
      throw DomainError("set-point intervals are not contiguous");
  }
  CommandGenerator g;
  g.mode_ = Mode::kPiecewise;
  g.t0_ = schedule.intervals.front().start;
  g.t1_ = schedule.intervals.back().end;
  g.schedule_ = std::move(schedule);
  return g;
}

CommandGenerator CommandGenerator::trajectory(const TwoRegionNetwork& net, DemandFn q_hat, const Vec4& nd0,
                                              double u_max, double t0, double t1, double dt) {
  if (!(dt > 0.0) || !(t1 > t0)) throw DomainError("bad trajectory horizon");
  CommandGenerator g;
  g.mode_ = Mode::kTrajectory;
  g.t0_ = t0;
  g.t1_ = t1;
  g.net_ = net;
  g.q_hat_ = std::move(q_hat);
  g.u_max_ = u_max;
  g.dt_ = dt;
  const long steps = static_cast<long>(std::ceil((t1 - t0) / dt - 1e-9));
  g.grid_.reserve(static_cast<std::size_t>(steps) + 1);
  Vec4 x = nd0;
  g.grid_.push_back(x);
  const Vec2 u{u_max, u_max};
  for (long k = 0; k < steps; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    // RK4 with time-varying nominal demand
    auto rhs = [&](double tt, const Vec4& y) { return dynamics_rhs(net, y, u, g.q_hat_(tt)); };
    const Vec4 k1 = rhs(t, x);
    Vec4 y;
    for (int i = 0; i < 4; ++i) y[i] = x[i] + 0.5 * dt * k1[i];
    const Vec4 k2 = rhs(t + 0.5 * dt, y);
    for (int i = 0; i < 4; ++i) y[i] = x[i] + 0.5 * dt * k2[i];
    const Vec4 k3 = rhs(t + 0.5 * dt, y);
    for (int i = 0; i < 4; ++i) y[i] = x[i] + dt * k3[i];
    const Vec4 k4 = rhs(t + dt, y);
    for (int i = 0; i < 4; ++i) x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    clamp_state(net, x);
    g.grid_.push_back(x);
  }
  return g;
}

ReferencePoint CommandGenerator::at(double t) const {
  const double tol = 1e-9;
  if (t < t0_ - tol || t > t1_ + tol) throw DomainError("reference queried outside its horizon");
  ReferencePoint r;
  if (mode_ == Mode::kPiecewise) {
    const auto& iv = schedule_.intervals;
    auto it = std::upper_bound(iv.begin(), iv.end(), t,
                               [](double tt, const SetpointInterval& s) { return tt < s.end; });
    if (it == iv.end()) it = std::prev(iv.end());
    r.nd = it->nd;
    r.q_nominal = it->q_nominal;
    r.theta = {0.0, 0.0, 0.0, 0.0};
    return r;
  }
  const double x = std::clamp((t - t0_) / dt_, 0.0, static_cast<double>(grid_.size() - 1));
  const auto k = std::min(static_cast<std::size_t>(x), grid_.size() - 1);
  const double w = x - static_cast<double>(k);
  if (w == 0.0 || k + 1 >= grid_.size()) {
    r.nd = grid_[k];
  } else {
    for (int i = 0; i < 4; ++i) r.nd[i] = (1.0 - w) * grid_[k][i] + w * grid_[k + 1][i];
  }
  r.q_nominal = q_hat_(t);
  r.theta = trajectory_rhs(net_, r.nd, r.q_nominal, u_max_);
  return r;
}

Equilibrium equilibrium_solve(const TwoRegionNetwork& net, const Vec4& q, double n1_star, double n2_star,
                              double u_min, double u_max) {
  if (!(n1_star > 0.0 && n1_star < net.curve1.n_jam && n2_star > 0.0 && n2_star < net.curve2.n_jam))
    throw DomainError("set-point outside (0, n_jam)");
  const double g1 = net.curve1.g(n1_star);
  const double g2 = net.curve2.g(n2_star);

  // Unknowns x = (n11, n22). With u eliminated the transfer rows vanish and
  // r(x) = (q11 + q21 - n11 G1/N1, q22 + q12 - n22 G2/N2).
  auto residual = [&](double a, double b) {
    return Vec2{q[k11] + q[k21] - a * g1 / n1_star, q[k22] + q[k12] - b * g2 / n2_star};
  };
  const double j1 = -g1 / n1_star, j2 = -g2 / n2_star;

  double a = 0.5 * n1_star, b = 0.5 * n2_star;
  const double tol = 1e-6;
  const int max_iter = 200;
  const double damping = 0.5;
  int it = 0;
  Vec2 r = residual(a, b);
  while (std::max(std::fabs(r[0]), std::fabs(r[1])) >= 0.01 * tol) {
    if (++it > max_iter) throw NumericalError("equilibrium solve did not converge");
    double da = -r[0] / j1, db = -r[1] / j2;
    // backtrack until the split stays strictly inside each region
    double step = 1.0;
    while (step > 1e-12 && !(a + step * da > 0.0 && a + step * da < n1_star && b + step * db > 0.0 &&
                             b + step * db < n2_star))
      step *= damping;
    if (step <= 1e-12) throw DomainError("set-point admits no interior OD split for this demand");
    a += step * da;
    b += step * db;
    r = residual(a, b);
  }

  Equilibrium e;
  e.iterations = it;
  e.n = {a, n1_star - a, n2_star - b, b};
  e.u = {q[k12] * n1_star / (e.n[k12] * g1), q[k21] * n2_star / (e.n[k21] * g2)};
  const Vec4 chk = dynamics_rhs(net, e.n, e.u, q);
  double worst = 0.0;
  for (double c : chk) worst = std::max(worst, std::fabs(c));
  if (!(worst < tol)) throw NumericalError("equilibrium residual above tolerance");
  for (double u : e.u)
    if (!(u >= u_min && u <= u_max)) throw DomainError("infeasible set-point: u* outside the actuator box");
  return e;
}

Vec4 trajectory_rhs(const TwoRegionNetwork& net, const Vec4& nd, const Vec4& q_hat, double u_max) {
  return dynamics_rhs(net, nd, {u_max, u_max}, q_hat);
}

SteadyState steady_state_solve(const TwoRegionNetwork& net, const Vec4& nd, const Vec4& theta, const Vec4& q_hat) {
  const DriftInput d = drift_and_input(net, nd, q_hat);
  Vec4 r;
  for (int i = 0; i < 4; ++i) r[i] = theta[i] - d.f[i];
  SteadyState out;
  out.singular = {nd[k12] < net.epsilon_floor || d.s1 == 0.0, nd[k21] < net.epsilon_floor || d.s2 == 0.0};
  // s^T s = diag(2 s1^2, 2 s2^2)
  out.u[0] = out.singular[0] ? 0.0 : (-r[k12] + r[k22]) / (2.0 * d.s1);
  out.u[1] = out.singular[1] ? 0.0 : (r[k11] - r[k21]) / (2.0 * d.s2);
  double res2 = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double fit = d.s[i][0] * out.u[0] + d.s[i][1] * out.u[1];
    res2 += (fit - r[i]) * (fit - r[i]);
  }
  out.residual = std::sqrt(res2);
  return out;
}

SteadyState steady_state_control(const TwoRegionNetwork& net, const Vec4& nd, const Vec4& theta, const Vec4& q_hat) {
  SteadyState s = steady_state_solve(net, nd, theta, q_hat);
  if (s.singular[0] || s.singular[1]) throw SingularInputError("transfer accumulation below epsilon floor");
  return s;
}

Vec2 feedforward(const TwoRegionNetwork& net, const ReferencePoint& ref, const Vec2& fallback) {
  const SteadyState s = steady_state_solve(net, ref.nd, ref.theta, ref.q_nominal);
  return {s.singular[0] ? fallback[0] : s.u[0], s.singular[1] ? fallback[1] : s.u[1]};
}

SetpointSchedule build_schedule(const TwoRegionNetwork& net, const std::vector<double>& ends,
                                const std::vector<Vec2>& totals, const DemandFn& q_nominal, double t0,
                                double u_min, double u_max) {
  if (ends.size() != totals.size() || ends.empty()) throw DomainError("schedule ends/totals length mismatch");
  SetpointSchedule s;
  double start = t0;
  for (std::size_t i = 0; i < ends.size(); ++i) {
    SetpointInterval iv;
    iv.start = start;
    iv.end = ends[i];
    iv.q_nominal = q_nominal(start);
    const Equilibrium e = equilibrium_solve(net, iv.q_nominal, totals[i][0], totals[i][1], u_min, u_max);
    iv.nd = e.n;
    iv.u_star = e.u;
    s.intervals.push_back(iv);
    start = ends[i];
  }
  return s;
}

}  // namespace mfdpc
