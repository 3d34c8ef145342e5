#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "experiment.hpp"

using namespace mfdpc;
namespace fs = std::filesystem;

namespace {

const std::string kConfigs = std::string(MFDPC_SOURCE_DIR) + "/configs/";

std::string tmp(const std::string& name) {
  return (fs::temp_directory_path() / ("mfdpc_test_" + std::to_string(::getpid()) + "_" + name)).string();
}

SimulationTrace constant_trace(const Vec4& n, double h, int rows) {
  SimulationTrace tr;
  tr.sample_dt = h;
  for (int i = 0; i < rows; ++i) {
    TraceRow r;
    r.t = h * i;
    r.n = n;
    tr.rows.push_back(r);
  }
  return tr;
}

std::shared_ptr<const TrainedPolicy> zero_policy(const Experiment& ex) {
  auto p = std::make_shared<TrainedPolicy>();
  p->basis = ex.basis;
  p->weights = CriticActorWeights::zeros(ex.basis, 2);
  p->lambda = ex.cost.lambda;
  return p;
}

}  // namespace

TEST_CASE("config loading") {
  const Experiment d = load_experiment(Config{});
  CHECK(d.seed == 7);
  CHECK(d.t1 == 18000);
  CHECK(d.spc_reference != nullptr);
  CHECK(d.tpc_reference->schedule().intervals.size() == 3);

  CHECK_THROWS_AS(load_experiment(Config::parse("sim.t2: float = 5")), ConfigError);
  CHECK_THROWS_AS(load_experiment(Config::parse("sim.t1: string = long")), ConfigError);
  CHECK_THROWS_AS(load_experiment(Config::parse("sim.dt: float = 7")), ConfigError);
  CHECK_THROWS_AS(load_experiment(Config::parse("demand.values: float[] = 1 2 3")), ConfigError);
  CHECK_THROWS_AS(load_experiment(Config::parse("basis.kind: string = cubic")), ConfigError);
  CHECK_THROWS_AS(Config::parse("sim.t1 = 5"), ConfigError);
  CHECK_THROWS_AS(Config::parse("a: int = 1\na: int = 2"), ConfigError);
  CHECK_THROWS_AS(load_experiment_file(kConfigs + "missing.cfg"), ConfigError);

  // ints are accepted where a float is expected and hash like the float
  const Experiment i = load_experiment(Config::parse("sim.t1: int = 18000"));
  CHECK(i.config_hash == d.config_hash);

  Overrides ov;
  ov.seed = 8;
  const Experiment s = load_experiment(Config{}, ov);
  CHECK(s.seed == 8);
  CHECK(s.config_hash != d.config_hash);
  CHECK(load_experiment(Config{}, ov).config_hash == s.config_hash);
  ov = {};
  ov.dt = 0.5;
  CHECK(load_experiment(Config{}, ov).dt == 0.5);

  for (const char* name : {"example1.cfg", "example2.cfg"}) {
    const Experiment ex = load_experiment_file(kConfigs + name);
    CHECK(ex.basis.critic.size() == 50);
    CHECK(ex.basis.actor.size() == 30);
  }
}

TEST_CASE("metrics") {
  const TwoRegionNetwork net{};
  const Vec4 n{500, 400, 300, 200};
  const MetricsReport c = compute_metrics(net, constant_trace(n, 60, 61));
  CHECK(c.tts == doctest::Approx(1400.0 * 3600.0).epsilon(1e-12));
  CHECK(c.ctc == doctest::Approx(internal_completion(net, n) * 3600.0).epsilon(1e-12));

  CHECK_THROWS_AS(compute_metrics(net, SimulationTrace{}), DomainError);
  SimulationTrace bad = constant_trace(n, 60, 5);
  bad.rows[3].t += 7;
  CHECK_THROWS_AS(compute_metrics(net, bad), DomainError);

  SUBCASE("refinement and additivity") {
    // constant inputs make the hold interval irrelevant, so the two grids sample one path
    const Vec4 start{1200, 300, 900, 700};
    auto ctl = [](double, const Vec4&) { return Vec2{0.6, 0.4}; };
    auto dem = [](double) { return Vec4{1.0, 0.7, 0.5, 1.1}; };
    const auto coarse = integrate(net, start, ctl, dem, 0, 7200, 1.0, 60.0);
    const auto fine = integrate(net, start, ctl, dem, 0, 7200, 1.0, 6.0);
    const MetricsReport a = compute_metrics(net, coarse);
    const MetricsReport b = compute_metrics(net, fine);
    CHECK(std::fabs(a.tts - b.tts) <= 1e-4 * b.tts);
    CHECK(std::fabs(a.ctc - b.ctc) <= 1e-4 * b.ctc);

    SimulationTrace first, second;
    first.sample_dt = second.sample_dt = 60;
    for (const auto& r : coarse.rows) {
      if (r.t <= 3600) first.rows.push_back(r);
      if (r.t >= 3600) second.rows.push_back(r);
    }
    const double split = compute_metrics(net, first).tts + compute_metrics(net, second).tts;
    CHECK(split == doctest::Approx(a.tts).epsilon(1e-12));
  }
}

TEST_CASE("file round trips") {
  Experiment ex = load_experiment(Config::parse("sim.t1: float = 3600\nschedule.ends: float[] = 1800 3600\n"
                                                "schedule.totals: float[] = 2000 2000 3000 3000\n"
                                                "demand.ends: float[] = 1800\n"
                                                "demand.values: float[] = 1.2 1.6 1.0 1.4 1.6 1.6 1.6 1.6\n"));
  const auto pol = zero_policy(ex);
  const ClosedLoopTrace tr = simulate(ex, pol, ControlMode::kTpc);

  const std::string csv = tmp("trace.csv");
  write_trace_csv(csv, tr);
  {
    std::ifstream f(csv);
    std::string head;
    std::getline(f, head);
    CHECK(head == "t,n11,n12,n21,n22,u12,u21,q11,q12,q21,q22,clamped_flag,"
                  "nd_11,nd_12,nd_21,nd_22,e_11,e_12,e_21,e_22,mu_12,mu_21,us_12,us_21");
  }
  const SimulationTrace back = read_trace_csv(csv);
  REQUIRE(back.rows.size() == tr.sim.rows.size());
  const MetricsReport m1 = compute_metrics(ex.net, tr.sim);
  const MetricsReport m2 = compute_metrics(ex.net, back);
  CHECK(m2.tts == doctest::Approx(m1.tts).epsilon(1e-10));
  CHECK(m2.ctc == doctest::Approx(m1.ctc).epsilon(1e-10));
  fs::remove(csv);
  CHECK_THROWS_AS(read_trace_csv(csv), IoError);

  TrainingArtifact art;
  art.policy = *pol;
  art.policy.weights.Wc.setLinSpaced(-1.0 / 3.0, 2.0 / 7.0);
  art.policy.weights.Wa.setRandom();
  art.config_hash = ex.config_hash;
  art.result.converged = true;
  art.result.log.push_back({1, 2.0, 3.0, 0.5, 1e-3, 1e4});
  const std::string wpath = tmp("weights.txt");
  save_weights(wpath, art);
  const TrainingArtifact w = load_weights(wpath);
  CHECK(w.config_hash == ex.config_hash);
  CHECK(w.policy.basis.critic == art.policy.basis.critic);
  CHECK(w.policy.basis.actor == art.policy.basis.actor);
  CHECK(w.policy.weights.Wc == art.policy.weights.Wc);
  CHECK(w.policy.weights.Wa == art.policy.weights.Wa);
  CHECK(w.policy.lambda == art.policy.lambda);
  CHECK(w.result.converged);
  fs::remove(wpath);

  // reports are a pure function of their inputs
  const MetricsReport m = compute_metrics(ex.net, tr, ex.tpc_reference.get());
  CHECK(m.periods.size() == 2);
  CHECK(m.periods[0].t_check == 1740);
  const std::string r1 = report_text(m, ex.config_hash, ex.seed, "tpc");
  CHECK(r1 == report_text(m, ex.config_hash, ex.seed, "tpc"));
  CHECK(r1.find("config_hash = " + ex.config_hash) != std::string::npos);
  CHECK(r1.find("period.2.t_check = 3540") != std::string::npos);
}

TEST_CASE("comparison labels") {
  Experiment ex = load_experiment(Config::parse("sim.t1: float = 3600\nschedule.ends: float[] = 1800 3600\n"
                                                "schedule.totals: float[] = 2000 2000 3000 3000\n"
                                                "spc.totals: float[] = 2500 2500\n"));
  const Comparison c = compare(ex, zero_policy(ex));
  CHECK(c.tts_delta_pct == doctest::Approx(100.0 * (c.tpc.tts - c.spc.tts) / c.spc.tts));
  const std::string txt = comparison_text(c, ex.config_hash, ex.seed);
  std::ostringstream want;
  want << "spc.tts_veh_s = ";
  CHECK(txt.find(want.str()) != std::string::npos);
  CHECK(txt.find("tpc.tts_veh_s = ") != std::string::npos);

  // same runs as standalone simulations
  const auto spc = simulate(ex, zero_policy(ex), ControlMode::kSpc);
  CHECK(compute_metrics(ex.net, spc.sim).tts == c.spc.tts);
}

TEST_CASE("demand noise degrades tracking") {
  const Experiment noisy = load_experiment_file(kConfigs + "example2.cfg");
  const auto pol = zero_policy(noisy);
  const double rms_noisy = compute_metrics(noisy.net, simulate(noisy, pol, ControlMode::kTpc),
                                           noisy.tpc_reference.get()).tracking_rms;
  const double rms_clean = compute_metrics(noisy.net, simulate(noisy, pol, ControlMode::kTpc, noisy.nominal_demand.get()),
                                           noisy.tpc_reference.get()).tracking_rms;
  CHECK(rms_clean < rms_noisy);
}
