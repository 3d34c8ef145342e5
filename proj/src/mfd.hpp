// Two-region MFD plant: trip completion curves, OD-level dynamics, RK4 integration.
#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfdpc {

using Vec4 = std::array<double, 4>;
using Vec2 = std::array<double, 2>;

// Index order for every OD 4-vector: 11, 12, 21, 22.
enum Od : int { k11 = 0, k12 = 1, k21 = 2, k22 = 3 };

class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MfdCurve {
  double a3 = 1.4877e-7 / 3600.0;
  double a2 = -2.9815e-3 / 3600.0;
  double a1 = 15.0912 / 3600.0;
  double n_jam = 10000.0;

  double g(double n) const { return ((a3 * n + a2) * n + a1) * n; }
  double dg(double n) const { return (3.0 * a3 * n + 2.0 * a2) * n + a1; }
};

// Throws DomainError outside [0, n_jam].
double trip_completion(const MfdCurve& c, double n);

// Root of dG/dn inside (0, n_jam) where G has its maximum.
double critical_accumulation(const MfdCurve& c);

struct TwoRegionNetwork {
  MfdCurve curve1;
  MfdCurve curve2;
  double epsilon_floor = 1.0;
};

struct DriftInput {
  Vec4 f{};
  // s[row][col]; col 0 drives u12, col 1 drives u21.
  std::array<Vec2, 4> s{};
  double s1 = 0.0;  // (n12/n1) G1
  double s2 = 0.0;  // (n21/n2) G2
};

DriftInput drift_and_input(const TwoRegionNetwork& net, const Vec4& n, const Vec4& q);
Vec4 dynamics_rhs(const TwoRegionNetwork& net, const Vec4& n, const Vec2& u, const Vec4& q);

// Internal completions (n11/n1)G1 + (n22/n2)G2, the flow leaving the network.
double internal_completion(const TwoRegionNetwork& net, const Vec4& n);

Vec4 rk4_step(const TwoRegionNetwork& net, const Vec4& n, const Vec2& u, const Vec4& q, double dt);

// Clamp to [0, n_jam] per region. Returns true if anything moved.
bool clamp_state(const TwoRegionNetwork& net, Vec4& n);

struct TraceRow {
  double t = 0.0;
  Vec4 n{};
  Vec2 u{};
  Vec4 q{};
  bool clamped = false;
  // Running totals since t0, accumulated with the RK4 stage weights.
  double cum_inflow = 0.0;
  double cum_completion = 0.0;
};

struct SimulationTrace {
  double sample_dt = 60.0;
  std::vector<TraceRow> rows;
};

using Controller = std::function<Vec2(double t, const Vec4& n)>;
using DemandFn = std::function<Vec4(double t)>;

// Fixed-step RK4 with the controller held for hold_interval seconds.
// Demand is sampled at the start of every hold interval as well.
// One trace row per hold interval plus the terminal state.
SimulationTrace integrate(const TwoRegionNetwork& net, const Vec4& initial, const Controller& controller,
                          const DemandFn& demand, double t0, double t1, double dt,
                          double hold_interval = 60.0);

}  // namespace mfdpc
