#include "experiment.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <random>
#include <sstream>

namespace mfdpc {

namespace {

// Defaults reproduce Example 1. Any key not listed here is rejected.
const char* kDefaults = R"(
seed: int = 7
train.seed: int = -1

network.coef_divisor: float = 3600
network.curve1: float[] = 1.4877e-7 -2.9815e-3 15.0912 10000
network.curve2: float[] = 1.4877e-7 -2.9815e-3 15.0912 10000
network.epsilon_floor: float = 1

sim.t0: float = 0
sim.t1: float = 18000
sim.dt: float = 1
sim.control_interval: float = 60
plant.initial: float[] = 450 1050 1750 750
actuator.u_min: float = 0.1
actuator.u_max: float = 0.9

reference.mode: string = schedule
schedule.ends: float[] = 3600 12600 18000
schedule.totals: float[] = 2000 2000 3000 3000 1500 1500
spc.totals: float[] = 3000 3000
trajectory.initial: float[] = 0 0 0 0
trajectory.dt: float = 1

demand.shape: string = piecewise
demand.ends: float[] = 3600 12600
demand.values: float[] = 1.2 1.6 1.0 1.4 1.6 1.6 1.6 1.6 0.9 0.9 0.9 0.9
demand.base: float[] = 0 0 0 0
demand.peak: float[] = 0 0 0 0
demand.onset: float = 0
demand.ramp: float = 900
demand.plateau: float = 3600
demand.noise_frac: float = 0
demand.redraw_interval: float = 60

cost.q_diag: float[] = 3e-6 3e-6 3e-6 3e-6
cost.gamma: float[] = 1 1
cost.lambda: float = 0.5

basis.kind: string = anchored
basis.scale: float[] = 1000 1000 1000 1000 3000 3000 3000 3000

train.tol: float = 1e-3
train.k_max: int = 50
train.data: string = reuse
train.window: float = 60
train.dt: float = 1
train.windows_per_episode: int = 20
train.noise_amplitude: float = 0.1
train.noise_count: int = 8
train.noise_period_min: float = 120
train.noise_period_max: float = 1200
train.state_stride: int = 10
train.cond_limit: float = 1e10
train.divergence: float = 1e6
train.episodes: string = setpoints
train.rollouts_per_ref: int = 8
train.random_refs: int = 7
train.random_demand: float[] = 0.8 1.8
train.random_totals: float[] = 1400 3200
train.random_u: float[] = 0.2 0.8
train.rollouts: int = 48
train.init_error_frac: float = 0.3
train.init_error_abs: float = 0
)";

Vec4 vec4(const std::vector<double>& a, const std::string& key) {
  if (a.size() != 4) throw ConfigError(key + " needs 4 values");
  return {a[0], a[1], a[2], a[3]};
}

std::vector<double> need(const Config& c, const std::string& key, std::size_t n) {
  const auto& a = c.get_array(key);
  if (a.size() != n) throw ConfigError(key + " needs " + std::to_string(n) + " values");
  return a;
}

MfdCurve curve_from(const Config& c, const std::string& key) {
  const auto a = need(c, key, 4);
  const double div = c.get_float("network.coef_divisor");
  if (!(div > 0.0)) throw ConfigError("network.coef_divisor must be positive");
  MfdCurve m;
  m.a3 = a[0] / div;
  m.a2 = a[1] / div;
  m.a1 = a[2] / div;
  m.n_jam = a[3];
  if (!(m.n_jam > 0.0)) throw ConfigError(key + ": n_jam must be positive");
  return m;
}

DemandProfile demand_from(const Config& c, std::uint64_t seed) {
  DemandProfile d;
  const std::string& shape = c.get_string("demand.shape");
  if (shape == "piecewise") {
    d.shape = DemandProfile::Shape::kPiecewise;
    d.ends = c.get_array("demand.ends");
    const auto& v = c.get_array("demand.values");
    if (v.size() != 4 * (d.ends.size() + 1)) throw ConfigError("demand.values needs 4 * (len(demand.ends) + 1) values");
    for (std::size_t i = 1; i < d.ends.size(); ++i)
      if (!(d.ends[i] > d.ends[i - 1])) throw ConfigError("demand.ends must increase");
    for (std::size_t k = 0; k < v.size() / 4; ++k) d.values.push_back({v[4 * k], v[4 * k + 1], v[4 * k + 2], v[4 * k + 3]});
  } else if (shape == "trapezoid") {
    d.shape = DemandProfile::Shape::kTrapezoid;
    d.base = vec4(c.get_array("demand.base"), "demand.base");
    d.peak = vec4(c.get_array("demand.peak"), "demand.peak");
    d.onset = c.get_float("demand.onset");
    d.ramp = c.get_float("demand.ramp");
    d.plateau = c.get_float("demand.plateau");
    if (!(d.ramp > 0.0) || d.plateau < 0.0) throw ConfigError("demand.ramp must be > 0 and demand.plateau >= 0");
  } else {
    throw ConfigError("demand.shape must be piecewise or trapezoid");
  }
  for (const auto& q : d.values)
    for (double x : q)
      if (x < 0.0) throw ConfigError("demand values must be non-negative");
  for (int i = 0; i < 4; ++i)
    if (d.base[i] < 0.0 || d.peak[i] < 0.0) throw ConfigError("demand values must be non-negative");
  d.noise_frac = c.get_float("demand.noise_frac");
  d.redraw_interval = c.get_float("demand.redraw_interval");
  if (d.noise_frac < 0.0 || !(d.redraw_interval > 0.0)) throw ConfigError("bad demand noise settings");
  d.seed = seed;
  return d;
}

std::vector<Vec2> pairs(const std::vector<double>& a, const std::string& key) {
  if (a.size() % 2 != 0 || a.empty()) throw ConfigError(key + " needs pairs of region totals");
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < a.size(); i += 2) out.push_back({a[i], a[i + 1]});
  return out;
}

}  // namespace

Config default_config() { return Config::parse(kDefaults, "<defaults>"); }

Experiment load_experiment(const Config& user, const Overrides& ov) {
  Config c = default_config();
  for (const auto& [k, v] : user.values()) {
    if (!c.has(k)) throw ConfigError("unknown config key: " + k);
    const ValueType want = c.values().at(k).type;
    if (v.type == want) {
      c.set(k, v);
    } else if (want == ValueType::kFloat && v.type == ValueType::kInt) {
      c.set_float(k, static_cast<double>(v.i));
    } else {
      throw ConfigError("config key " + k + " has the wrong type");
    }
  }
  if (ov.seed) c.set_int("seed", static_cast<std::int64_t>(*ov.seed));
  if (ov.dt) c.set_float("sim.dt", *ov.dt);

  Experiment ex;
  ex.resolved = c;
  ex.config_hash = c.hash();
  if (c.get_int("seed") < 0) throw ConfigError("seed must be non-negative");
  ex.seed = static_cast<std::uint64_t>(c.get_int("seed"));
  const std::int64_t ts = c.get_int("train.seed");
  ex.train_seed = ts < 0 ? ex.seed : static_cast<std::uint64_t>(ts);

  ex.net.curve1 = curve_from(c, "network.curve1");
  ex.net.curve2 = curve_from(c, "network.curve2");
  ex.net.epsilon_floor = c.get_float("network.epsilon_floor");
  if (!(ex.net.epsilon_floor > 0.0)) throw ConfigError("network.epsilon_floor must be positive");

  ex.t0 = c.get_float("sim.t0");
  ex.t1 = c.get_float("sim.t1");
  ex.dt = c.get_float("sim.dt");
  ex.control_interval = c.get_float("sim.control_interval");
  if (!(ex.t1 > ex.t0) || !(ex.dt > 0.0) || !(ex.control_interval > 0.0)) throw ConfigError("bad sim horizon or step");
  const double ratio = ex.control_interval / ex.dt;
  if (std::fabs(ratio - std::round(ratio)) > 1e-9 * ratio) throw ConfigError("sim.dt must divide sim.control_interval");
  ex.initial = vec4(c.get_array("plant.initial"), "plant.initial");
  for (double x : ex.initial)
    if (x < 0.0) throw ConfigError("plant.initial must be non-negative");
  ex.u_min = c.get_float("actuator.u_min");
  ex.u_max = c.get_float("actuator.u_max");
  if (!(ex.u_min >= 0.0 && ex.u_min <= ex.u_max && ex.u_max <= 1.0)) throw ConfigError("need 0 <= u_min <= u_max <= 1");

  auto dem = std::make_shared<DemandProfile>(demand_from(c, ex.seed));
  auto nominal = std::make_shared<DemandProfile>(*dem);
  nominal->noise_frac = 0.0;
  ex.demand = dem;
  ex.nominal_demand = nominal;
  DemandFn qhat = [nominal](double t) { return nominal->nominal(t); };

  const std::string& mode = c.get_string("reference.mode");
  if (mode == "schedule") {
    const auto& ends = c.get_array("schedule.ends");
    const auto totals = pairs(c.get_array("schedule.totals"), "schedule.totals");
    if (ends.size() != totals.size()) throw ConfigError("schedule.ends and schedule.totals disagree in length");
    if (std::fabs(ends.back() - ex.t1) > 1e-9) throw ConfigError("schedule must end at sim.t1");
    ex.tpc_reference = std::make_shared<CommandGenerator>(
        CommandGenerator::piecewise(build_schedule(ex.net, ends, totals, qhat, ex.t0, ex.u_min, ex.u_max)));
    const auto& spc = c.get_array("spc.totals");
    if (spc.size() == 2) {
      const std::vector<Vec2> same(ends.size(), Vec2{spc[0], spc[1]});
      ex.spc_reference = std::make_shared<CommandGenerator>(
          CommandGenerator::piecewise(build_schedule(ex.net, ends, same, qhat, ex.t0, ex.u_min, ex.u_max)));
    } else if (!spc.empty()) {
      throw ConfigError("spc.totals needs 2 values or none");
    }
  } else if (mode == "trajectory") {
    ex.tpc_reference = std::make_shared<CommandGenerator>(CommandGenerator::trajectory(
        ex.net, qhat, vec4(c.get_array("trajectory.initial"), "trajectory.initial"), ex.u_max, ex.t0, ex.t1,
        c.get_float("trajectory.dt")));
  } else {
    throw ConfigError("reference.mode must be schedule or trajectory");
  }

  ex.cost.Q = Eigen::MatrixXd::Zero(4, 4);
  const auto qd = vec4(c.get_array("cost.q_diag"), "cost.q_diag");
  for (int i = 0; i < 4; ++i) ex.cost.Q(i, i) = qd[i];
  const auto g = need(c, "cost.gamma", 2);
  ex.cost.gamma = Eigen::Vector2d(g[0], g[1]);
  ex.cost.lambda = c.get_float("cost.lambda");
  try {
    ex.cost.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("cost: ") + e.what());
  }

  const auto sc = need(c, "basis.scale", 8);
  try {
    ex.basis = make_basis(c.get_string("basis.kind"), Eigen::Map<const Eigen::VectorXd>(sc.data(), 8), 4);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("basis: ") + e.what());
  }

  TrainSettings& t = ex.train;
  t.tol = c.get_float("train.tol");
  t.k_max = static_cast<int>(c.get_int("train.k_max"));
  const std::string& data = c.get_string("train.data");
  if (data != "reuse" && data != "recollect") throw ConfigError("train.data must be reuse or recollect");
  t.reuse_data = data == "reuse";
  t.collect.window = c.get_float("train.window");
  t.collect.dt = c.get_float("train.dt");
  t.collect.windows_per_episode = static_cast<int>(c.get_int("train.windows_per_episode"));
  t.noise.amplitude = c.get_float("train.noise_amplitude") * ex.cost.lambda;
  t.noise.count = static_cast<int>(c.get_int("train.noise_count"));
  t.noise.period_min = c.get_float("train.noise_period_min");
  t.noise.period_max = c.get_float("train.noise_period_max");
  t.noise.seed = ex.train_seed;
  t.state_stride = static_cast<int>(c.get_int("train.state_stride"));
  t.cond_limit = c.get_float("train.cond_limit");
  t.divergence = c.get_float("train.divergence");
  if (t.k_max < 1 || t.collect.windows_per_episode < 1 || t.noise.count < 1 || t.state_stride < 1 ||
      !(t.collect.dt > 0.0) || !(t.noise.period_min > 0.0) || t.noise.period_max < t.noise.period_min)
    throw ConfigError("bad training settings");

  EpisodeSettings& e = ex.episodes;
  e.kind = c.get_string("train.episodes");
  if (e.kind != "setpoints" && e.kind != "trajectory") throw ConfigError("train.episodes must be setpoints or trajectory");
  e.rollouts_per_ref = static_cast<int>(c.get_int("train.rollouts_per_ref"));
  e.random_refs = static_cast<int>(c.get_int("train.random_refs"));
  e.random_demand = need(c, "train.random_demand", 2);
  e.random_totals = need(c, "train.random_totals", 2);
  e.random_u = need(c, "train.random_u", 2);
  e.rollouts = static_cast<int>(c.get_int("train.rollouts"));
  e.init_error_frac = c.get_float("train.init_error_frac");
  e.init_error_abs = c.get_float("train.init_error_abs");
  if (e.kind == "setpoints" && ex.tpc_reference->mode() != CommandGenerator::Mode::kPiecewise)
    throw ConfigError("setpoint training episodes need a schedule reference");
  return ex;
}

Experiment load_experiment_file(const std::string& path, const Overrides& ov) {
  return load_experiment(Config::load(path), ov);
}

std::unique_ptr<MfdLearningEnv> make_training_env(const Experiment& ex) {
  const EpisodeSettings& es = ex.episodes;
  const double span = ex.train.collect.window * ex.train.collect.windows_per_episode;
  std::seed_seq seq{static_cast<std::uint32_t>(ex.train_seed), static_cast<std::uint32_t>(ex.train_seed >> 32), 0x7e1u};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto draw_error = [&](const Vec4& nd) {
    Vec4 e0;
    for (int i = 0; i < 4; ++i)
      e0[i] = (2.0 * uni(rng) - 1.0) * es.init_error_frac * nd[i] + (2.0 * uni(rng) - 1.0) * es.init_error_abs;
    return e0;
  };
  const Vec2 fallback{ex.u_max, ex.u_max};
  std::vector<Episode> eps;

  if (es.kind == "setpoints") {
    std::vector<std::pair<Vec4, Vec4>> refs;  // (nd, q)
    auto add = [&](const Vec4& nd, const Vec4& q) {
      for (const auto& r : refs) {
        double d = 0.0;
        for (int i = 0; i < 4; ++i) d = std::max({d, std::fabs(r.first[i] - nd[i]), std::fabs(r.second[i] - q[i])});
        if (d < 1e-9) return;
      }
      refs.emplace_back(nd, q);
    };
    for (const auto& iv : ex.tpc_reference->schedule().intervals) add(iv.nd, iv.q_nominal);
    if (ex.spc_reference)
      for (const auto& iv : ex.spc_reference->schedule().intervals) add(iv.nd, iv.q_nominal);
    const std::size_t want = refs.size() + static_cast<std::size_t>(es.random_refs);
    int attempts = 0;
    while (refs.size() < want) {
      if (++attempts > 100000) throw NumericalError("could not draw feasible random training references");
      Vec4 q;
      for (double& x : q) x = es.random_demand[0] + (es.random_demand[1] - es.random_demand[0]) * uni(rng);
      const double a = es.random_totals[0] + (es.random_totals[1] - es.random_totals[0]) * uni(rng);
      const double b = es.random_totals[0] + (es.random_totals[1] - es.random_totals[0]) * uni(rng);
      try {
        const Equilibrium eq = equilibrium_solve(ex.net, q, a, b, es.random_u[0], es.random_u[1]);
        add(eq.n, q);
      } catch (const std::runtime_error&) {
        // infeasible draw, try again
      }
    }
    for (const auto& [nd, q] : refs) {
      SetpointSchedule s;
      s.intervals.push_back({0.0, span, nd, Vec2{}, q});
      auto gen = std::make_shared<CommandGenerator>(CommandGenerator::piecewise(s));
      auto dem = std::make_shared<DemandProfile>();
      dem->values = {q};
      for (int r = 0; r < es.rollouts_per_ref; ++r) eps.push_back({gen, dem, 0.0, draw_error(nd), fallback});
    }
  } else {
    const double last = ex.t1 - span;
    if (last < ex.t0) throw ConfigError("training span longer than the horizon");
    for (int r = 0; r < es.rollouts; ++r) {
      double ts = es.rollouts > 1 ? ex.t0 + (last - ex.t0) * r / (es.rollouts - 1) : ex.t0;
      ts = ex.t0 + std::floor((ts - ex.t0) / ex.control_interval) * ex.control_interval;
      const Vec4 nd = ex.tpc_reference->at(ts).nd;
      eps.push_back({ex.tpc_reference, ex.nominal_demand, ts, draw_error(nd), fallback});
    }
  }
  return std::make_unique<MfdLearningEnv>(ex.net, std::move(eps), ex.u_min, ex.u_max);
}

TrainingArtifact train_policy(const Experiment& ex, bool model_based) {
  auto env = make_training_env(ex);
  const CriticActorWeights init = CriticActorWeights::zeros(ex.basis, 2);
  TrainingArtifact a;
  a.model_based = model_based;
  a.config_hash = ex.config_hash;
  if (!model_based) {
    a.result = policy_iteration_model_free(*env, init, ex.basis, ex.cost, ex.train);
  } else {
    auto samples = collect_samples(*env, ex.basis, init, ex.train.noise, ex.cost, ex.train.collect, 0);
    a.result = policy_iteration_model_based(*env, sample_states(samples, ex.train.state_stride), init, ex.basis,
                                            ex.cost, ex.train);
    a.result.samples = std::move(samples);
  }
  a.policy.basis = ex.basis;
  a.policy.weights = a.result.weights;
  a.policy.lambda = ex.cost.lambda;
  return a;
}

ClosedLoopTrace simulate(const Experiment& ex, const std::shared_ptr<const TrainedPolicy>& policy, ControlMode mode,
                         const DemandProfile* demand_override) {
  ControllerConfig cfg;
  cfg.mode = mode;
  cfg.policy = policy;
  if (mode == ControlMode::kSpc) {
    if (!ex.spc_reference) throw ConfigError("SPC run needs spc.totals");
    cfg.reference = ex.spc_reference;
  } else {
    cfg.reference = ex.tpc_reference;
  }
  cfg.u_min = ex.u_min;
  cfg.u_max = ex.u_max;
  cfg.control_interval = ex.control_interval;
  cfg.singular_fallback = {ex.u_max, ex.u_max};
  return run_closed_loop(ex.net, cfg, demand_override ? *demand_override : *ex.demand, ex.initial, ex.t0, ex.t1,
                         ex.dt);
}

MetricsReport compute_metrics(const TwoRegionNetwork& net, const SimulationTrace& trace) {
  if (trace.rows.empty()) throw DomainError("empty trace");
  MetricsReport r;
  const auto& rows = trace.rows;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double h = rows[i].t - rows[i - 1].t;
    if (std::fabs(h - (rows[1].t - rows[0].t)) > 1e-6 * std::max(1.0, std::fabs(h)) || !(h > 0.0))
      throw DomainError("trace sampling is not uniform");
    const auto& a = rows[i - 1].n;
    const auto& b = rows[i].n;
    r.tts += 0.5 * h * ((a[0] + a[1] + a[2] + a[3]) + (b[0] + b[1] + b[2] + b[3]));
    r.ctc += 0.5 * h * (internal_completion(net, a) + internal_completion(net, b));
  }
  for (const auto& row : rows) r.clamp_events += row.clamped ? 1 : 0;
  return r;
}

MetricsReport compute_metrics(const TwoRegionNetwork& net, const ClosedLoopTrace& trace,
                              const CommandGenerator* reference) {
  MetricsReport r = compute_metrics(net, trace.sim);
  if (!reference) return r;
  const auto& rows = trace.sim.rows;
  double acc = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& n = rows[i].n;
    const auto& nd = trace.extra[i].nd;
    const double d1 = n[0] + n[1] - nd[0] - nd[1], d2 = n[2] + n[3] - nd[2] - nd[3];
    acc += 0.5 * (d1 * d1 + d2 * d2);
  }
  r.tracking_rms = std::sqrt(acc / static_cast<double>(rows.size()));
  if (reference->mode() == CommandGenerator::Mode::kPiecewise) {
    const double h = trace.sim.sample_dt;
    for (const auto& iv : reference->schedule().intervals) {
      const double tc = iv.end - h;
      for (const auto& row : rows) {
        if (std::fabs(row.t - tc) > 1e-6) continue;
        PeriodError pe;
        pe.t_check = tc;
        const auto& n = row.n;
        const auto& nd = iv.nd;
        pe.region1 = std::fabs(n[0] + n[1] - nd[0] - nd[1]) / (nd[0] + nd[1]);
        pe.region2 = std::fabs(n[2] + n[3] - nd[2] - nd[3]) / (nd[2] + nd[3]);
        for (int i = 0; i < 4; ++i) pe.od_max = std::max(pe.od_max, std::fabs(n[i] - nd[i]) / nd[i]);
        r.periods.push_back(pe);
        break;
      }
    }
  }
  return r;
}

WindowTracking window_tracking(const ClosedLoopTrace& trace, double from, double to) {
  WindowTracking w;
  double s1 = 0.0, s2 = 0.0;
  int cnt = 0;
  const auto& rows = trace.sim.rows;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].t < from - 1e-9 || rows[i].t > to + 1e-9) continue;
    const auto& n = rows[i].n;
    const auto& nd = trace.extra[i].nd;
    const double r1 = nd[0] + nd[1], r2 = nd[2] + nd[3];
    s1 += (n[0] + n[1] - r1) * (n[0] + n[1] - r1);
    s2 += (n[2] + n[3] - r2) * (n[2] + n[3] - r2);
    w.ref_mean1 += r1;
    w.ref_mean2 += r2;
    ++cnt;
  }
  if (cnt == 0) throw DomainError("tracking window contains no samples");
  w.rms1 = std::sqrt(s1 / cnt);
  w.rms2 = std::sqrt(s2 / cnt);
  w.ref_mean1 /= cnt;
  w.ref_mean2 /= cnt;
  return w;
}

Comparison compare(const Experiment& ex, const std::shared_ptr<const TrainedPolicy>& policy) {
  if (!ex.spc_reference) throw ConfigError("compare needs spc.totals");
  auto run = [&](ControlMode m) { return simulate(ex, policy, m); };
  auto spc_future = std::async(std::launch::async, run, ControlMode::kSpc);
  Comparison c;
  c.tpc_trace = run(ControlMode::kTpc);
  c.spc_trace = spc_future.get();
  c.tpc = compute_metrics(ex.net, c.tpc_trace, ex.tpc_reference.get());
  c.spc = compute_metrics(ex.net, c.spc_trace, ex.spc_reference.get());
  c.tts_delta_pct = 100.0 * (c.tpc.tts - c.spc.tts) / c.spc.tts;
  c.ctc_delta_pct = 100.0 * (c.tpc.ctc - c.spc.ctc) / c.spc.ctc;
  return c;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  return f;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) {
    while (!cur.empty() && (cur.back() == '\r' || cur.back() == ' ')) cur.pop_back();
    out.push_back(cur);
  }
  return out;
}

}  // namespace

void write_trace_csv(const std::string& path, const ClosedLoopTrace& trace) {
  std::ofstream f = open_out(path);
  f << "t,n11,n12,n21,n22,u12,u21,q11,q12,q21,q22,clamped_flag,"
       "nd_11,nd_12,nd_21,nd_22,e_11,e_12,e_21,e_22,mu_12,mu_21,us_12,us_21\n";
  for (std::size_t i = 0; i < trace.sim.rows.size(); ++i) {
    const auto& r = trace.sim.rows[i];
    const ClosedLoopRow x = i < trace.extra.size() ? trace.extra[i] : ClosedLoopRow{};
    f << fmt(r.t);
    for (double v : r.n) f << ',' << fmt(v);
    for (double v : r.u) f << ',' << fmt(v);
    for (double v : r.q) f << ',' << fmt(v);
    f << ',' << (r.clamped ? 1 : 0);
    for (double v : x.nd) f << ',' << fmt(v);
    for (double v : x.e) f << ',' << fmt(v);
    for (double v : x.mu) f << ',' << fmt(v);
    for (double v : x.us) f << ',' << fmt(v);
    f << '\n';
  }
}

SimulationTrace read_trace_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open trace " + path);
  std::string line;
  if (!std::getline(f, line)) throw ConfigError("trace has no header: " + path);
  const auto head = split_csv(line);
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < head.size(); ++i)
      if (head[i] == name) return i;
    throw ConfigError("trace is missing column " + name);
  };
  const std::size_t ct = col("t");
  const std::size_t cn[4] = {col("n11"), col("n12"), col("n21"), col("n22")};
  const std::size_t cu[2] = {col("u12"), col("u21")};
  const std::size_t cq[4] = {col("q11"), col("q12"), col("q21"), col("q22")};
  const std::size_t cc = col("clamped_flag");
  SimulationTrace tr;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != head.size()) throw ConfigError(path + ":" + std::to_string(lineno) + ": wrong column count");
    auto num = [&](std::size_t i) {
      try {
        return std::stod(cells[i]);
      } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(lineno) + ": bad number");
      }
    };
    TraceRow r;
    r.t = num(ct);
    for (int i = 0; i < 4; ++i) r.n[i] = num(cn[i]);
    for (int i = 0; i < 2; ++i) r.u[i] = num(cu[i]);
    for (int i = 0; i < 4; ++i) r.q[i] = num(cq[i]);
    r.clamped = num(cc) != 0.0;
    tr.rows.push_back(r);
  }
  if (tr.rows.size() >= 2) tr.sample_dt = tr.rows[1].t - tr.rows[0].t;
  return tr;
}

void write_reference_csv(const std::string& path, const Experiment& ex) {
  std::ofstream f = open_out(path);
  f << "t,nd_11,nd_12,nd_21,nd_22,us_12,us_21\n";
  const long steps = std::lround((ex.t1 - ex.t0) / ex.control_interval);
  for (long k = 0; k <= steps; ++k) {
    const double t = ex.t0 + static_cast<double>(k) * ex.control_interval;
    const ReferencePoint ref = ex.tpc_reference->at(t);
    const Vec2 us = feedforward(ex.net, ref, {ex.u_max, ex.u_max});
    f << fmt(t);
    for (double v : ref.nd) f << ',' << fmt(v);
    f << ',' << fmt(us[0]) << ',' << fmt(us[1]) << '\n';
  }
}

namespace {

void metrics_lines(std::ostream& os, const MetricsReport& r, const std::string& pre) {
  os << pre << "tts_veh_s = " << fmt(r.tts) << '\n';
  os << pre << "ctc_veh = " << fmt(r.ctc) << '\n';
  os << pre << "tracking_rms = " << fmt(r.tracking_rms) << '\n';
  os << pre << "clamp_events = " << r.clamp_events << '\n';
  for (std::size_t i = 0; i < r.periods.size(); ++i) {
    const auto& p = r.periods[i];
    const std::string k = pre + "period." + std::to_string(i + 1);
    os << k << ".t_check = " << fmt(p.t_check) << '\n';
    os << k << ".region_error = " << fmt(p.region1) << ' ' << fmt(p.region2) << '\n';
    os << k << ".od_error_max = " << fmt(p.od_max) << '\n';
  }
}

}  // namespace

std::string report_text(const MetricsReport& r, const std::string& config_hash, std::uint64_t seed,
                        const std::string& mode) {
  std::ostringstream os;
  os << "# mfdpc report v1\n";
  os << "config_hash = " << config_hash << '\n';
  os << "seed = " << seed << '\n';
  os << "mode = " << mode << '\n';
  metrics_lines(os, r, "");
  return os.str();
}

std::string comparison_text(const Comparison& c, const std::string& config_hash, std::uint64_t seed) {
  std::ostringstream os;
  os << "# mfdpc comparison v1\n";
  os << "config_hash = " << config_hash << '\n';
  os << "seed = " << seed << '\n';
  metrics_lines(os, c.tpc, "tpc.");
  metrics_lines(os, c.spc, "spc.");
  os << "delta.tts_pct = " << fmt(c.tts_delta_pct) << '\n';
  os << "delta.ctc_pct = " << fmt(c.ctc_delta_pct) << '\n';
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f = open_out(path);
  f << text;
}

namespace {

std::string join(const Eigen::VectorXd& v) {
  std::ostringstream os;
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << format_double(v(i));
  return os.str();
}

Eigen::VectorXd parse_vec(const std::string& s) {
  std::istringstream is(s);
  std::vector<double> v;
  std::string tok;
  while (is >> tok) v.push_back(std::stod(tok));
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

const char* kWeightsMagic = "mfdpc-weights 1";

}  // namespace

void save_weights(const std::string& path, const TrainingArtifact& a) {
  std::ofstream f = open_out(path);
  const auto& b = a.policy.basis;
  f << kWeightsMagic << '\n';
  f << "config_hash = " << a.config_hash << '\n';
  f << "trainer = " << (a.model_based ? "model_based" : "model_free") << '\n';
  f << "basis.kind = " << b.kind << '\n';
  f << "basis.scaling = " << join(b.critic.scaling()) << '\n';
  f << "critic.terms = " << b.critic.describe() << '\n';
  f << "actor.terms = " << b.actor.describe() << '\n';
  f << "lambda = " << format_double(a.policy.lambda) << '\n';
  f << "wc = " << join(a.policy.weights.Wc) << '\n';
  for (Eigen::Index i = 0; i < a.policy.weights.Wa.rows(); ++i)
    f << "wa." << i << " = " << join(a.policy.weights.Wa.row(i).transpose()) << '\n';
  f << "converged = " << (a.result.converged ? "true" : "false") << '\n';
  f << "iterations = " << a.result.log.size() << '\n';
  for (const auto& r : a.result.log)
    f << "log." << r.k << " = " << format_double(r.wc_norm) << ' ' << format_double(r.wa_norm) << ' '
      << format_double(r.change) << ' ' << format_double(r.residual) << ' ' << format_double(r.condition) << '\n';
}

TrainingArtifact load_weights(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open weights file " + path);
  std::string line;
  if (!std::getline(f, line) || line != kWeightsMagic) throw ConfigError("not a version-1 weights file: " + path);
  std::map<std::string, std::string> kv;
  while (std::getline(f, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  auto get = [&](const std::string& k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw ConfigError("weights file lacks " + k);
    return it->second;
  };
  TrainingArtifact a;
  try {
    a.config_hash = get("config_hash");
    a.model_based = get("trainer") == "model_based";
    const Eigen::VectorXd sc = parse_vec(get("basis.scaling"));
    a.policy.basis.kind = get("basis.kind");
    a.policy.basis.critic = MonomialBasis(MonomialBasis::parse_terms(get("critic.terms")), sc);
    a.policy.basis.actor = MonomialBasis(MonomialBasis::parse_terms(get("actor.terms")), sc);
    a.policy.lambda = std::stod(get("lambda"));
    a.policy.weights.Wc = parse_vec(get("wc"));
    const Eigen::VectorXd w0 = parse_vec(get("wa.0")), w1 = parse_vec(get("wa.1"));
    a.policy.weights.Wa.resize(2, w0.size());
    a.policy.weights.Wa.row(0) = w0.transpose();
    a.policy.weights.Wa.row(1) = w1.transpose();
    a.result.converged = get("converged") == "true";
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("malformed weights file " + path + ": " + e.what());
  }
  if (a.policy.weights.Wc.size() != a.policy.basis.critic.size() ||
      a.policy.weights.Wa.cols() != a.policy.basis.actor.size() || !(a.policy.lambda > 0.0))
    throw ConfigError("weights do not match their basis in " + path);
  a.result.weights = a.policy.weights;
  return a;
}

}  // namespace mfdpc
