// Acceptance run: one PASS/FAIL line per criterion. Exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <unistd.h>

#include "experiment.hpp"
#include "linear_env.hpp"
#include "quadrature.hpp"

using namespace mfdpc;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  if (!ok) ++failures;
  fmt::print("criterion {:>2}: {}  {}\n", id, ok ? "PASS" : "FAIL", detail);
  std::fflush(stdout);
}

const std::string kConfigs = std::string(MFDPC_SOURCE_DIR) + "/configs/";
const TwoRegionNetwork kNet{};

struct SetpointRow {
  Vec4 q;
  double n1, n2;
  Vec4 n;
  Vec2 u;
};
const SetpointRow kSetpoints[] = {
    {{1.2, 1.6, 1.0, 1.4}, 2000, 2000, {814.5, 1185.5, 889.3, 1110.7}, {0.50, 0.42}},
    {{1.6, 1.6, 1.6, 1.6}, 3000, 3000, {1538.9, 1461.1, 1461.1, 1538.9}, {0.53, 0.53}},
    {{0.9, 0.9, 0.9, 0.9}, 1500, 1500, {591.6, 908.4, 908.4, 591.6}, {0.33, 0.33}},
};

void equilibria() {
  const auto t = Clock::now();
  double dn = 0.0, du = 0.0, k = 0.0;
  for (const auto& r : kSetpoints) {
    const Equilibrium eq = equilibrium_solve(kNet, r.q, r.n1, r.n2);
    for (int i = 0; i < 4; ++i) dn = std::max(dn, std::fabs(eq.n[i] - r.n[i]));
    for (int i = 0; i < 2; ++i) du = std::max(du, std::fabs(eq.u[i] - r.u[i]));
    for (double x : dynamics_rhs(kNet, eq.n, eq.u, r.q)) k = std::max(k, std::fabs(x));
  }
  const double s = seconds_since(t);
  report(1, dn <= 1.0 && du <= 0.01 && k < 1e-6 && s < 1.0,
         fmt::format("max|dn|={:.3f} veh max|du|={:.4f} max|K|={:.1e} time={:.3f}s", dn, du, k, s));
}

void constants() {
  const double ncr = critical_accumulation(kNet.curve1);
  const double g = trip_completion(kNet.curve1, 3392.0);
  report(2, std::fabs(ncr - 3392.0) <= 1.0 && std::fabs(g - 6.30) <= 0.01,
         fmt::format("n_cr={:.2f} G(3392)={:.4f}", ncr, g));
}

void conservation(const ClosedLoopTrace& tpc, const ClosedLoopTrace& spc) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> un(0.0, 2500.0), uu(0.0, 1.0), uq(0.0, 3.0);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    Vec4 n, q;
    for (int i = 0; i < 4; ++i) n[i] = un(rng), q[i] = uq(rng);
    const Vec2 u{uu(rng), uu(rng)};
    const Vec4 d = dynamics_rhs(kNet, n, u, q);
    const double lhs = d[0] + d[1] + d[2] + d[3];
    const double rhs = q[0] + q[1] + q[2] + q[3] - internal_completion(kNet, n);
    const double scale = std::max({1.0, std::fabs(rhs), q[0] + q[1] + q[2] + q[3]});
    worst = std::max(worst, std::fabs(lhs - rhs) / scale);
  }
  double book = 0.0;
  for (const auto* tr : {&tpc, &spc}) {
    const auto& rows = tr->sim.rows;
    const auto total = [](const Vec4& n) { return n[0] + n[1] + n[2] + n[3]; };
    for (const auto& r : rows)
      book = std::max(book, std::fabs(r.cum_inflow - r.cum_completion - (total(r.n) - total(rows.front().n))));
  }
  report(3, worst <= 1e-12 && book < 0.1,
         fmt::format("identity rel err={:.1e} bookkeeping max={:.2e} veh", worst, book));
}

void constrained_cost() {
  double worst_q = 0.0;
  for (double lam : {0.5, 1.0, 2.0}) {
    CostWeights c;
    c.lambda = lam;
    c.gamma = Eigen::Vector2d(1.0, 2.5);
    for (int k = 0; k < 100; ++k) {
      const double m = -0.99 * lam + 1.98 * lam * k / 99.0;
      worst_q = std::max(worst_q, std::fabs(control_cost(Eigen::Vector2d(m, 0.0), c) -
                                            testing::cost_by_quadrature(m, lam, 1.0)));
      worst_q = std::max(worst_q, std::fabs(control_cost(Eigen::Vector2d(0.0, m), c) -
                                            testing::cost_by_quadrature(m, lam, 2.5)));
    }
  }
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ug(0.2, 3.0), ul(0.1, 2.0), us(-3.0, 3.0), ud(-5.0, 5.0);
  double worst_s = 0.0;
  for (int k = 0; k < 1000; ++k) {
    CostWeights w;
    w.lambda = ul(rng);
    w.gamma = Eigen::Vector2d(ug(rng), ug(rng));
    Eigen::Matrix<double, 8, 2> S = Eigen::Matrix<double, 8, 2>::Zero();
    for (int i = 0; i < 4; ++i) S(i, 0) = us(rng), S(i, 1) = us(rng);
    const Eigen::Vector2d D0(ud(rng), ud(rng));
    const Eigen::Matrix<double, 8, 1> grad =
        S.transpose().completeOrthogonalDecomposition().solve(Eigen::Vector2d(2.0 * w.lambda * w.gamma.cwiseProduct(D0)));
    const Eigen::Vector2d D = (S.transpose() * grad).cwiseQuotient(w.gamma) / (2.0 * w.lambda);
    const Eigen::Vector2d th = D.array().tanh().matrix();
    double rhs = w.lambda * grad.dot(S * th);
    for (int i = 0; i < 2; ++i) rhs += w.lambda * w.lambda * w.gamma(i) * std::log(1.0 - th(i) * th(i));
    const double scale = std::max(1.0, std::fabs(rhs));
    worst_s = std::max(worst_s, std::fabs(control_cost(saturated_policy(D, w.lambda), w) - rhs) / scale);
  }
  report(4, worst_q <= 1e-9 && worst_s <= 1e-9,
         fmt::format("quadrature max err={:.1e} substitution max rel err={:.1e}", worst_q, worst_s));
}

void stationarity() {
  const Vec4 q{1.2, 1.6, 1.0, 1.4};
  const Equilibrium eq = equilibrium_solve(kNet, q, 2000, 2000);
  SetpointSchedule sched;
  sched.intervals.push_back({0.0, 3600.0, eq.n, eq.u, q});
  const CommandGenerator gen = CommandGenerator::piecewise(sched);
  CostWeights w;
  w.Q = Eigen::MatrixXd::Identity(4, 4) * 3e-6;
  Eigen::Matrix4d P;
  P << 2.0, 0.3, -0.2, 0.1, 0.3, 1.5, 0.4, -0.3, -0.2, 0.4, 1.8, 0.2, 0.1, -0.3, 0.2, 1.2;
  P *= 1e-4;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ue(-600.0, 600.0);
  const double lam = w.lambda, h = lam / 500.0;
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    Vec4 n;
    for (int i = 0; i < 4; ++i) n[i] = std::max(0.0, eq.n[i] + ue(rng));
    const AugmentedState N = augment(n, eq.n);
    Eigen::Matrix<double, 8, 1> g = Eigen::Matrix<double, 8, 1>::Zero();
    const Eigen::Vector4d e(N.e[0], N.e[1], N.e[2], N.e[3]);
    g.head(4) = 2.0 * (1.0 + N.nd[0] / 3000.0) * P * e;
    g(4) = e.dot(P * e) / 3000.0;
    const AugmentedModel m = augmented_model(kNet, N, gen.at(0.0), q);
    const Eigen::Vector2d D = (m.S.transpose() * g).cwiseQuotient(w.gamma) / (2.0 * lam);
    const Eigen::Vector2d star = saturated_policy(D, lam);
    const Eigen::Vector2d held = star.cwiseMax(-0.998 * lam).cwiseMin(0.998 * lam);
    for (int c = 0; c < 2; ++c) {
      double best = 0.0, hbest = 1e300;
      for (int j = -499; j <= 499; ++j) {
        Vec2 mu{held(0), held(1)};
        mu[c] = j * h;
        const double H = hamiltonian(N, mu, g, w, kNet, q, gen, 0.0);
        if (H < hbest) hbest = H, best = mu[c];
      }
      worst = std::max(worst, std::fabs(best - star(c)));
    }
  }
  report(5, worst <= h + 1e-12, fmt::format("max |grid argmin - policy|={:.2e} (step {:.1e})", worst, h));
}

void equivalence(const TrainingArtifact& mf, const TrainingArtifact& mb, double seconds) {
  const testing::ScalarToy toy;
  auto env = toy.env();
  const auto init = CriticActorWeights::zeros(toy.basis(), 1);
  const auto tmf = policy_iteration_model_free(env, init, toy.basis(), toy.cost(), toy.settings());
  const auto tmb = policy_iteration_model_based(env, sample_states(tmf.samples, toy.settings().state_stride), init,
                                                toy.basis(), toy.cost(), toy.settings());
  const double p = toy.value_coefficient();
  const double e_mf = std::fabs(tmf.weights.Wc(0) - p) / p, e_mb = std::fabs(tmb.weights.Wc(0) - p) / p;
  const double rel = (mf.policy.weights.Wc - mb.policy.weights.Wc).norm() / mb.policy.weights.Wc.norm();
  report(6, rel <= 0.05 && e_mf <= 0.02 && e_mb <= 0.02 && seconds < 300.0,
         fmt::format("example-1 |Wc_mf - Wc_mb|/|Wc_mb|={:.3f}; toy err mf={:.2e} mb={:.2e}; time={:.0f}s", rel, e_mf,
                     e_mb, seconds));
}

void tracking(const ClosedLoopTrace& tr, double seconds) {
  const double ends[] = {3600, 12600, 18000};
  double reg = 0.0, od = 0.0;
  for (int p = 0; p < 3; ++p) {
    const double tc = ends[p] - 60.0;
    for (const auto& r : tr.sim.rows) {
      if (std::fabs(r.t - tc) > 1e-6) continue;
      reg = std::max(reg, std::fabs(r.n[0] + r.n[1] - kSetpoints[p].n1) / kSetpoints[p].n1);
      reg = std::max(reg, std::fabs(r.n[2] + r.n[3] - kSetpoints[p].n2) / kSetpoints[p].n2);
      for (int i = 0; i < 4; ++i) od = std::max(od, std::fabs(r.n[i] - kSetpoints[p].n[i]) / kSetpoints[p].n[i]);
    }
  }
  report(7, reg <= 0.01 && od <= 0.02 && seconds < 120.0,
         fmt::format("max region err={:.3f}% max OD err={:.3f}% run={:.2f}s", 100 * reg, 100 * od, seconds));
}

void comparison(const Comparison& c) {
  const double tts_red = -c.tts_delta_pct, ctc_imp = c.ctc_delta_pct;
  report(8, c.tpc.tts < c.spc.tts && tts_red >= 10.0 && tts_red <= 30.0 && c.tpc.ctc > c.spc.ctc && ctc_imp >= 1.0 &&
                ctc_imp <= 6.0,
         fmt::format("TTS tpc={:.4e} spc={:.4e} reduction={:.2f}%; CTC tpc={:.1f} spc={:.1f} improvement={:.2f}%",
                     c.tpc.tts, c.spc.tts, tts_red, c.tpc.ctc, c.spc.ctc, ctc_imp));
}

void robustness() {
  const Experiment ex = load_experiment_file(kConfigs + "example2.cfg");
  const auto t = Clock::now();
  const TrainingArtifact a = train_policy(ex, false);
  const auto pol = std::make_shared<TrainedPolicy>(a.policy);
  double worst_rms = 0.0, min_u = 1.0;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    DemandProfile d = *ex.demand;
    d.seed = 1000 + s;
    const ClosedLoopTrace tr = simulate(ex, pol, ControlMode::kTpc, &d);
    const WindowTracking w = window_tracking(tr, ex.t1 - 3600.0, ex.t1);
    worst_rms = std::max({worst_rms, w.rms1 / w.ref_mean1, w.rms2 / w.ref_mean2});
    for (const auto& r : tr.sim.rows)
      if (r.t >= ex.t1 - 1800.0 - 1e-9) min_u = std::min({min_u, r.u[0], r.u[1]});
  }
  report(9, worst_rms < 0.05 && min_u > 0.95 * ex.u_max,
         fmt::format("worst final-hour rms/ref={:.2f}% min u (final 30 min)={:.4f} vs {:.3f}; training {} "
                     "({} iterations); total {:.0f}s",
                     100 * worst_rms, min_u, 0.95 * ex.u_max, a.result.converged ? "converged" : "not converged",
                     a.result.log.size(), seconds_since(t)));
}

void diagnostics(const Experiment& ex, const TrainingArtifact& a, double seconds) {
  auto env = make_training_env(ex);
  const auto probes = sample_states(a.result.samples, ex.train.state_stride);
  const double r1 = bellman_residual(a.result.history.front(), ex.basis, probes, *env, ex.cost);
  const double rk = bellman_residual(a.result.weights, ex.basis, probes, *env, ex.cost);
  const auto& log = a.result.log;
  report(10, rk * 10.0 <= r1 && a.result.converged && log.size() <= 50 && seconds < 600.0,
         fmt::format("residual iter1={:.3e} final={:.3e} ratio={:.1f}; change {:.1e} after {} iterations; train={:.0f}s",
                     r1, rk, r1 / rk, log.back().change, log.size(), seconds));
}

std::string slurp(const std::string& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void determinism(const Experiment& ex, const TrainingArtifact& first) {
  const fs::path dir = fs::temp_directory_path() / fmt::format("mfdpc_accept_{}", ::getpid());
  fs::create_directories(dir);
  const TrainingArtifact again = train_policy(ex, false);
  save_weights((dir / "w1.txt").string(), first);
  save_weights((dir / "w2.txt").string(), again);
  bool same = slurp((dir / "w1.txt").string()) == slurp((dir / "w2.txt").string());
  const auto pol = std::make_shared<TrainedPolicy>(load_weights((dir / "w1.txt").string()).policy);
  for (int k = 1; k <= 2; ++k) {
    const ClosedLoopTrace tr = simulate(ex, pol, ControlMode::kTpc);
    write_trace_csv((dir / fmt::format("t{}.csv", k)).string(), tr);
    write_text((dir / fmt::format("r{}.txt", k)).string(),
               report_text(compute_metrics(ex.net, tr, ex.tpc_reference.get()), ex.config_hash, ex.seed, "tpc"));
  }
  same = same && slurp((dir / "t1.csv").string()) == slurp((dir / "t2.csv").string());
  same = same && slurp((dir / "r1.txt").string()) == slurp((dir / "r2.txt").string());
  fs::remove_all(dir);
  report(11, same, same ? "weights, trace and report identical across reruns" : "reruns differ");
}

}  // namespace

int main() {
  const Experiment ex = load_experiment_file(kConfigs + "example1.cfg");
  auto t = Clock::now();
  const TrainingArtifact mf = train_policy(ex, false);
  const double train_s = seconds_since(t);
  t = Clock::now();
  const TrainingArtifact mb = train_policy(ex, true);
  const double mb_s = seconds_since(t);

  const auto pol = std::make_shared<TrainedPolicy>(mf.policy);
  t = Clock::now();
  const Comparison c = compare(ex, pol);
  const double run_s = seconds_since(t);

  equilibria();
  constants();
  conservation(c.tpc_trace, c.spc_trace);
  constrained_cost();
  stationarity();
  equivalence(mf, mb, train_s + mb_s);
  tracking(c.tpc_trace, run_s);
  comparison(c);
  robustness();
  diagnostics(ex, mf, train_s);
  determinism(ex, mf);

  fmt::print("{} of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
