#include "adp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace mfdpc {

CriticActorWeights CriticActorWeights::zeros(const BasisSpec& b, int input_dim) {
  return {Eigen::VectorXd::Zero(b.critic.size()), Eigen::MatrixXd::Zero(input_dim, b.actor.size())};
}

Eigen::VectorXd CriticActorWeights::D(const BasisSpec& b, const Eigen::Ref<const Eigen::VectorXd>& N) const {
  return Wa * b.actor.value(N);
}

Eigen::VectorXd CriticActorWeights::mu(const BasisSpec& b, const Eigen::Ref<const Eigen::VectorXd>& N,
                                       double lambda) const {
  return saturated_policy(D(b, N), lambda);
}

double CriticActorWeights::value(const BasisSpec& b, const Eigen::Ref<const Eigen::VectorXd>& N) const {
  return Wc.dot(b.critic.value(N));
}

Eigen::VectorXd ProbingSignal::at(double t) const {
  Eigen::VectorXd out(freq.rows());
  for (Eigen::Index c = 0; c < freq.rows(); ++c) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < freq.cols(); ++j) s += std::sin(freq(c, j) * t + phase(c, j));
    out(c) = amp / static_cast<double>(freq.cols()) * s;
  }
  return out;
}

ProbingSignal make_probing_signal(const ProbingNoise& spec, int channels, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double w_lo = 2.0 * std::numbers::pi / spec.period_max;
  const double w_hi = 2.0 * std::numbers::pi / spec.period_min;
  ProbingSignal p;
  p.amp = spec.amplitude;
  p.freq.resize(channels, spec.count);
  p.phase.resize(channels, spec.count);
  for (int c = 0; c < channels; ++c)
    for (int j = 0; j < spec.count; ++j) {
      p.freq(c, j) = w_lo + (w_hi - w_lo) * uni(rng);
      p.phase(c, j) = 2.0 * std::numbers::pi * uni(rng);
    }
  return p;
}

std::vector<TransitionSample> collect_samples(LearningEnv& env, const BasisSpec& basis,
                                              const CriticActorWeights& policy, const ProbingNoise& noise,
                                              const CostWeights& w, const CollectSettings& cs,
                                              std::uint64_t stream) {
  const long L = std::lround(cs.window / cs.dt);
  if (L < 1 || std::fabs(static_cast<double>(L) * cs.dt - cs.window) > 1e-9 * cs.window)
    throw DomainError("dt must divide the sample window");
  const int n = env.state_dim(), m = env.input_dim();
  std::vector<TransitionSample> out;
  out.reserve(env.episode_count() * static_cast<std::size_t>(cs.windows_per_episode));
  Eigen::VectorXd next(n);
  for (std::size_t ep = 0; ep < env.episode_count(); ++ep) {
    Eigen::VectorXd N = env.reset(ep);
    const ProbingSignal sig = make_probing_signal(noise, m, (stream << 20) + ep);
    for (int win = 0; win < cs.windows_per_episode; ++win) {
      TransitionSample s;
      s.episode = ep;
      s.t_start = env.time();
      s.dt = cs.dt;
      s.N_path.resize(L + 1, n);
      s.mu_path.resize(L, m);
      s.N_path.row(0) = N.transpose();
      for (long j = 0; j < L; ++j) {
        Eigen::VectorXd behavior = policy.mu(basis, N, w.lambda);
        if (noise.amplitude > 0.0) behavior += sig.at(env.time());
        const Eigen::VectorXd applied = env.step(behavior, cs.dt, next);
        if (!env.bounded(next)) throw InadmissiblePolicy("closed loop left the admissible region during collection");
        s.mu_path.row(j) = applied.transpose();
        s.N_path.row(j + 1) = next.transpose();
        N = next;
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

SampleIntegrals integrate_sample(const TransitionSample& s, const BasisSpec& basis, const CriticActorWeights& wk,
                                 const CostWeights& w) {
  const Eigen::Index L = s.mu_path.rows();
  const Eigen::Index m = s.mu_path.cols();
  const Eigen::Index ne = w.Q.rows();
  SampleIntegrals r;
  r.correction = Eigen::MatrixXd::Zero(m, basis.actor.size());
  r.dphi = basis.critic.value(s.N_path.row(L).transpose()) - basis.critic.value(s.N_path.row(0).transpose());

  // point terms at every grid node; the correction uses the behavior held on
  // the step that the node bounds
  auto cost_at = [&](const Eigen::VectorXd& N, const Eigen::VectorXd& D) {
    const Eigen::VectorXd e = N.head(ne);
    return e.dot(w.Q * e) + policy_control_cost(D, w);
  };
  for (Eigen::Index j = 0; j < L; ++j) {
    const Eigen::VectorXd Na = s.N_path.row(j).transpose();
    const Eigen::VectorXd Nb = s.N_path.row(j + 1).transpose();
    const Eigen::VectorXd fa = basis.actor.value(Na), fb = basis.actor.value(Nb);
    const Eigen::VectorXd Da = wk.Wa * fa, Db = wk.Wa * fb;
    const Eigen::VectorXd mua = saturated_policy(Da, w.lambda), mub = saturated_policy(Db, w.lambda);
    const Eigen::VectorXd held = s.mu_path.row(j).transpose();
    r.state_cost += 0.5 * s.dt * (cost_at(Na, Da) + cost_at(Nb, Db));
    for (Eigen::Index i = 0; i < m; ++i) {
      const double ga = w.gamma(i) * (mua(i) - held(i));
      const double gb = w.gamma(i) * (mub(i) - held(i));
      r.correction.row(i) += 0.5 * s.dt * (ga * fa + gb * fb).transpose();
    }
  }
  return r;
}

Eigen::VectorXd scaled_lstsq(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double* condition) {
  Eigen::VectorXd sc = A.colwise().norm().transpose();
  for (Eigen::Index i = 0; i < sc.size(); ++i)
    if (sc(i) == 0.0) sc(i) = 1.0;
  const Eigen::MatrixXd As = A * sc.cwiseInverse().asDiagonal();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(As, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (condition) {
    const auto& sv = svd.singularValues();
    const double lo = sv(sv.size() - 1);
    *condition = lo > 0.0 ? sv(0) / lo : std::numeric_limits<double>::infinity();
  }
  return svd.solve(b).cwiseQuotient(sc);
}

IrlSolution irl_lstsq(const std::vector<TransitionSample>& samples, const CriticActorWeights& wk,
                      const BasisSpec& basis, const CostWeights& w, double cond_limit) {
  const Eigen::Index p = basis.critic.size(), pa = basis.actor.size();
  const Eigen::Index m = wk.Wa.rows();
  const Eigen::Index cols = p + m * pa;
  const auto M = static_cast<Eigen::Index>(samples.size());
  if (M < 2 * cols) throw InsufficientExcitation("fewer than 2(p + m p_a) samples");

  Eigen::MatrixXd A(M, cols);
  Eigen::VectorXd rhs(M);
  for (Eigen::Index r = 0; r < M; ++r) {
    const SampleIntegrals si = integrate_sample(samples[static_cast<std::size_t>(r)], basis, wk, w);
    A.row(r).head(p) = si.dphi.transpose();
    for (Eigen::Index i = 0; i < m; ++i) A.row(r).segment(p + i * pa, pa) = 2.0 * w.lambda * si.correction.row(i);
    rhs(r) = -si.state_cost;
  }
  IrlSolution sol;
  const Eigen::VectorXd x = scaled_lstsq(A, rhs, &sol.condition);
  if (!(sol.condition <= cond_limit)) throw InsufficientExcitation("IRL regression is rank deficient");
  sol.weights.Wc = x.head(p);
  sol.weights.Wa.resize(m, pa);
  for (Eigen::Index i = 0; i < m; ++i) sol.weights.Wa.row(i) = x.segment(p + i * pa, pa).transpose();
  sol.residual_norm = (A * x - rhs).norm();
  return sol;
}

namespace {

double relative_change(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

void check_divergence(const CriticActorWeights& w, double limit) {
  if (!w.Wc.allFinite() || !w.Wa.allFinite() || w.Wc.norm() > limit || w.Wa.norm() > limit)
    throw NumericalError("policy iteration diverged");
}

}  // namespace

TrainingResult policy_iteration_model_free(LearningEnv& env, const CriticActorWeights& init, const BasisSpec& basis,
                                           const CostWeights& w, const TrainSettings& ts) {
  TrainingResult res;
  CriticActorWeights cur = init;
  std::vector<TransitionSample> data;
  if (ts.reuse_data) data = collect_samples(env, basis, init, ts.noise, w, ts.collect, 0);
  for (int k = 0; k < ts.k_max; ++k) {
    if (!ts.reuse_data) data = collect_samples(env, basis, cur, ts.noise, w, ts.collect, static_cast<std::uint64_t>(k));
    const IrlSolution sol = irl_lstsq(data, cur, basis, w, ts.cond_limit);
    check_divergence(sol.weights, ts.divergence);
    IterationRecord rec;
    rec.k = k + 1;
    rec.wc_norm = sol.weights.Wc.norm();
    rec.wa_norm = sol.weights.Wa.norm();
    rec.change = relative_change(sol.weights.Wc, cur.Wc);
    rec.residual = sol.residual_norm;
    rec.condition = sol.condition;
    res.log.push_back(rec);
    res.history.push_back(sol.weights);
    cur = sol.weights;
    if (rec.change < ts.tol) {
      res.converged = true;
      break;
    }
  }
  res.weights = cur;
  res.samples = std::move(data);
  return res;
}

std::vector<StateSample> sample_states(const std::vector<TransitionSample>& samples, int stride) {
  std::vector<StateSample> out;
  for (const auto& s : samples)
    for (Eigen::Index j = 0; j < s.mu_path.rows(); j += stride)
      out.push_back({s.N_path.row(j).transpose(), s.episode, s.t_start + static_cast<double>(j) * s.dt});
  return out;
}

TrainingResult policy_iteration_model_based(const LearningEnv& env, const std::vector<StateSample>& states,
                                            const CriticActorWeights& init, const BasisSpec& basis,
                                            const CostWeights& w, const TrainSettings& ts) {
  const auto B = static_cast<Eigen::Index>(states.size());
  const Eigen::Index p = basis.critic.size(), pa = basis.actor.size();
  const Eigen::Index m = init.Wa.rows(), ne = w.Q.rows();
  if (B < 2 * (p + m * pa)) throw InsufficientExcitation("too few sampled states");
  if ((w.gamma.array() <= 0.0).any()) throw DomainError("model-based improvement needs gamma > 0");

  // policy-independent pieces
  std::vector<Eigen::MatrixXd> grad(states.size()), S(states.size());
  std::vector<Eigen::VectorXd> F(states.size());
  Eigen::MatrixXd Phi_a(B, pa);
  Eigen::VectorXd qcost(B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& st = states[static_cast<std::size_t>(b)];
    grad[b] = basis.critic.jacobian(st.N);
    env.model(st.episode, st.t, st.N, F[b], S[b]);
    Phi_a.row(b) = basis.actor.value(st.N).transpose();
    const Eigen::VectorXd e = st.N.head(ne);
    qcost(b) = e.dot(w.Q * e);
  }

  TrainingResult res;
  CriticActorWeights cur = init;
  Eigen::MatrixXd A(B, p);
  Eigen::VectorXd rhs(B);
  for (int k = 0; k < ts.k_max; ++k) {
    for (Eigen::Index b = 0; b < B; ++b) {
      const Eigen::VectorXd D = cur.Wa * Phi_a.row(b).transpose();
      const Eigen::VectorXd mu = saturated_policy(D, w.lambda);
      A.row(b) = (grad[b] * (F[b] + S[b] * mu)).transpose();
      rhs(b) = -(qcost(b) + policy_control_cost(D, w));
    }
    CriticActorWeights nxt;
    double cond = 0.0;
    nxt.Wc = scaled_lstsq(A, rhs, &cond);
    if (!(cond <= ts.cond_limit)) throw InsufficientExcitation("policy evaluation is rank deficient");

    Eigen::MatrixXd target(B, m);
    for (Eigen::Index b = 0; b < B; ++b) {
      const Eigen::VectorXd g = S[b].transpose() * (grad[b].transpose() * nxt.Wc);
      for (Eigen::Index i = 0; i < m; ++i) target(b, i) = g(i) / (2.0 * w.lambda * w.gamma(i));
    }
    nxt.Wa.resize(m, pa);
    for (Eigen::Index i = 0; i < m; ++i) nxt.Wa.row(i) = scaled_lstsq(Phi_a, target.col(i)).transpose();
    check_divergence(nxt, ts.divergence);

    IterationRecord rec;
    rec.k = k + 1;
    rec.wc_norm = nxt.Wc.norm();
    rec.wa_norm = nxt.Wa.norm();
    rec.change = relative_change(nxt.Wc, cur.Wc);
    rec.residual = (A * nxt.Wc - rhs).norm();
    rec.condition = cond;
    res.log.push_back(rec);
    res.history.push_back(nxt);
    cur = nxt;
    if (rec.change < ts.tol) {
      res.converged = true;
      break;
    }
  }
  res.weights = cur;
  return res;
}

double bellman_residual(const CriticActorWeights& weights, const BasisSpec& basis,
                        const std::vector<StateSample>& probes, const LearningEnv& env, const CostWeights& w) {
  if (probes.empty()) return 0.0;
  const Eigen::Index ne = w.Q.rows();
  const double lam2 = w.lambda * w.lambda;
  double acc = 0.0;
  Eigen::VectorXd F;
  Eigen::MatrixXd S;
  for (const auto& st : probes) {
    env.model(st.episode, st.t, st.N, F, S);
    const Eigen::VectorXd e = st.N.head(ne);
    const Eigen::VectorXd gv = basis.critic.jacobian(st.N).transpose() * weights.Wc;
    const Eigen::VectorXd D = weights.D(basis, st.N);
    double r = e.dot(w.Q * e) + gv.dot(F);
    // ln(1 - tanh^2 D) = -2 ln cosh D
    for (Eigen::Index i = 0; i < D.size(); ++i) r -= 2.0 * lam2 * w.gamma(i) * log_cosh(D(i));
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(probes.size()));
}

}  // namespace mfdpc
