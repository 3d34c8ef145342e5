#include "mfd.hpp"

#include <algorithm>
#include <cmath>

namespace mfdpc {

double trip_completion(const MfdCurve& c, double n) {
  if (!(n >= 0.0) || n > c.n_jam) throw DomainError("accumulation outside [0, n_jam]");
  return c.g(n);
}

double critical_accumulation(const MfdCurve& c) {
  // dG/dn = 3 a3 n^2 + 2 a2 n + a1
  double qa = 3.0 * c.a3, qb = 2.0 * c.a2, qc = c.a1;
  std::vector<double> roots;
  if (qa == 0.0) {
    if (qb != 0.0) roots.push_back(-qc / qb);
  } else {
    double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      // numerically stable pair
      double sq = std::sqrt(disc);
      double t = -0.5 * (qb + std::copysign(sq, qb));
      if (t != 0.0) roots.push_back(qc / t);
      roots.push_back(t / qa);
    }
  }
  double best = -1.0;
  for (double r : roots) {
    if (!(r > 0.0 && r < c.n_jam)) continue;
    // second derivative negative means maximum
    if (6.0 * c.a3 * r + 2.0 * c.a2 >= 0.0) continue;
    if (best < 0.0 || c.g(r) > c.g(best)) best = r;
  }
  if (best < 0.0) throw DomainError("curve has no interior maximum");
  // the interior local max must also dominate the endpoint
  if (c.g(best) < c.g(c.n_jam)) throw DomainError("curve maximum sits at n_jam");
  return best;
}

DriftInput drift_and_input(const TwoRegionNetwork& net, const Vec4& n, const Vec4& q) {
  const double n1 = n[k11] + n[k12];
  const double n2 = n[k21] + n[k22];
  const double d1 = std::max(n1, net.epsilon_floor);
  const double d2 = std::max(n2, net.epsilon_floor);
  const double g1 = net.curve1.g(n1);
  const double g2 = net.curve2.g(n2);

  DriftInput r;
  r.f[k11] = -(n[k11] / d1) * g1 + q[k11];
  r.f[k12] = q[k12];
  r.f[k21] = q[k21];
  r.f[k22] = -(n[k22] / d2) * g2 + q[k22];
  r.s1 = (n[k12] / d1) * g1;
  r.s2 = (n[k21] / d2) * g2;
  r.s[k11] = {0.0, r.s2};
  r.s[k12] = {-r.s1, 0.0};
  r.s[k21] = {0.0, -r.s2};
  r.s[k22] = {r.s1, 0.0};
  return r;
}

Vec4 dynamics_rhs(const TwoRegionNetwork& net, const Vec4& n, const Vec2& u, const Vec4& q) {
  const DriftInput d = drift_and_input(net, n, q);
  // written out term by term so transfer flows cancel exactly in the sum
  const double t12 = u[0] * d.s1;
  const double t21 = u[1] * d.s2;
  return {d.f[k11] + t21, d.f[k12] - t12, d.f[k21] - t21, d.f[k22] + t12};
}

double internal_completion(const TwoRegionNetwork& net, const Vec4& n) {
  const double n1 = n[k11] + n[k12];
  const double n2 = n[k21] + n[k22];
  return n[k11] / std::max(n1, net.epsilon_floor) * net.curve1.g(n1) +
         n[k22] / std::max(n2, net.epsilon_floor) * net.curve2.g(n2);
}

namespace {

Vec4 axpy(const Vec4& x, double a, const Vec4& y) {
  return {x[0] + a * y[0], x[1] + a * y[1], x[2] + a * y[2], x[3] + a * y[3]};
}

}  // namespace

Vec4 rk4_step(const TwoRegionNetwork& net, const Vec4& n, const Vec2& u, const Vec4& q, double dt) {
  const Vec4 k1 = dynamics_rhs(net, n, u, q);
  const Vec4 k2 = dynamics_rhs(net, axpy(n, 0.5 * dt, k1), u, q);
  const Vec4 k3 = dynamics_rhs(net, axpy(n, 0.5 * dt, k2), u, q);
  const Vec4 k4 = dynamics_rhs(net, axpy(n, dt, k3), u, q);
  Vec4 out;
  for (int i = 0; i < 4; ++i) out[i] = n[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

bool clamp_state(const TwoRegionNetwork& net, Vec4& n) {
  bool moved = false;
  for (double& x : n) {
    if (x < 0.0) {
      x = 0.0;
      moved = true;
    }
  }
  auto cap = [&](int a, int b, double jam) {
    double tot = n[a] + n[b];
    if (tot > jam) {
      double k = jam / tot;
      n[a] *= k;
      n[b] *= k;
      moved = true;
    }
  };
  cap(k11, k12, net.curve1.n_jam);
  cap(k21, k22, net.curve2.n_jam);
  return moved;
}

SimulationTrace integrate(const TwoRegionNetwork& net, const Vec4& initial, const Controller& controller,
                          const DemandFn& demand, double t0, double t1, double dt, double hold_interval) {
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  const double ratio = hold_interval / dt;
  const long steps_per_hold = std::lround(ratio);
  if (steps_per_hold < 1 || std::fabs(ratio - static_cast<double>(steps_per_hold)) > 1e-9 * ratio)
    throw DomainError("dt must divide the control hold interval");
  const long holds = std::lround((t1 - t0) / hold_interval);

  SimulationTrace tr;
  tr.sample_dt = hold_interval;
  tr.rows.reserve(static_cast<std::size_t>(holds) + 1);

  Vec4 n = initial;
  bool clamped = clamp_state(net, n);
  double cum_in = 0.0, cum_out = 0.0;
  Vec2 u{};
  Vec4 q{};
  for (long h = 0; h < holds; ++h) {
    const double th = t0 + static_cast<double>(h) * hold_interval;
    u = controller(th, n);
    q = demand(th);
    TraceRow row{th, n, u, q, clamped, cum_in, cum_out};
    tr.rows.push_back(row);
    clamped = false;
    const double qsum = q[0] + q[1] + q[2] + q[3];
    for (long s = 0; s < steps_per_hold; ++s) {
      // same stages as rk4_step, also weighting the outflow for bookkeeping
      const Vec4 k1 = dynamics_rhs(net, n, u, q);
      const Vec4 y2 = axpy(n, 0.5 * dt, k1);
      const Vec4 k2 = dynamics_rhs(net, y2, u, q);
      const Vec4 y3 = axpy(n, 0.5 * dt, k2);
      const Vec4 k3 = dynamics_rhs(net, y3, u, q);
      const Vec4 y4 = axpy(n, dt, k3);
      const Vec4 k4 = dynamics_rhs(net, y4, u, q);
      const double out = (internal_completion(net, n) + 2.0 * internal_completion(net, y2) +
                          2.0 * internal_completion(net, y3) + internal_completion(net, y4)) / 6.0;
      for (int i = 0; i < 4; ++i) n[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      cum_in += dt * qsum;
      cum_out += dt * out;
      clamped = clamp_state(net, n) || clamped;
    }
  }
  tr.rows.push_back(TraceRow{t0 + static_cast<double>(holds) * hold_interval, n, u, q, clamped, cum_in, cum_out});
  return tr;
}

}  // namespace mfdpc
