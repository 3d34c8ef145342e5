#include "mfdpc/mfdpc.h"

#include <string>

#include "experiment.hpp"

struct mfdpc_experiment {
  mfdpc::Experiment ex;
};

namespace {

thread_local std::string g_error;

template <class F>
mfdpc_status guarded(F&& f) {
  g_error.clear();
  try {
    f();
    return MFDPC_OK;
  } catch (const mfdpc::ConfigError& e) {
    g_error = e.what();
    return MFDPC_ERR_CONFIG;
  } catch (const mfdpc::IoError& e) {
    g_error = e.what();
    return MFDPC_ERR_IO;
  } catch (const std::invalid_argument& e) {
    g_error = e.what();
    return MFDPC_ERR_ARG;
  } catch (const std::exception& e) {
    // DomainError, NumericalError and anything Eigen or the stdlib raise
    g_error = e.what();
    return MFDPC_ERR_NUMERIC;
  }
}

mfdpc_status bad_arg(const char* what) {
  g_error = what;
  return MFDPC_ERR_ARG;
}

void fill(mfdpc_metrics* out, const mfdpc::MetricsReport& r) {
  if (!out) return;
  out->tts_veh_s = r.tts;
  out->ctc_veh = r.ctc;
  out->tracking_rms = r.tracking_rms;
  out->clamp_events = r.clamp_events;
}

std::shared_ptr<const mfdpc::TrainedPolicy> policy_for(const mfdpc::Experiment& ex, const char* weights_path) {
  if (weights_path) return std::make_shared<mfdpc::TrainedPolicy>(mfdpc::load_weights(weights_path).policy);
  return std::make_shared<mfdpc::TrainedPolicy>(mfdpc::train_policy(ex, false).policy);
}

const char* mode_name(mfdpc_mode m) {
  switch (m) {
    case MFDPC_MODE_TPC: return "tpc";
    case MFDPC_MODE_SPC: return "spc";
    case MFDPC_MODE_UNCONTROLLED: return "uncontrolled";
  }
  return "?";
}

// the fully resolved config next to every output, in the same key: type = value format
void write_resolved(const std::string& path, const mfdpc::Experiment& e) {
  mfdpc::write_text(path, "# resolved config, hash " + e.config_hash + "\n" + e.resolved.canonical());
}

}  // namespace

extern "C" {

const char* mfdpc_last_error(void) { return g_error.c_str(); }
const char* mfdpc_version(void) { return "1.0.0"; }

mfdpc_status mfdpc_experiment_load(const char* config_path, int64_t seed, double dt, mfdpc_experiment** out) {
  if (!config_path || !out) return bad_arg("null argument");
  *out = nullptr;
  return guarded([&] {
    mfdpc::Overrides ov;
    if (seed >= 0) ov.seed = static_cast<std::uint64_t>(seed);
    if (dt > 0.0) ov.dt = dt;
    auto* h = new mfdpc_experiment{mfdpc::load_experiment_file(config_path, ov)};
    *out = h;
  });
}

void mfdpc_experiment_free(mfdpc_experiment* ex) { delete ex; }

mfdpc_status mfdpc_experiment_hash(const mfdpc_experiment* ex, char out[17]) {
  if (!ex || !out) return bad_arg("null argument");
  const std::string& h = ex->ex.config_hash;
  h.copy(out, 16);
  out[16] = '\0';
  return MFDPC_OK;
}

mfdpc_status mfdpc_experiment_seed(const mfdpc_experiment* ex, uint64_t* out) {
  if (!ex || !out) return bad_arg("null argument");
  *out = ex->ex.seed;
  return MFDPC_OK;
}

mfdpc_status mfdpc_train(mfdpc_experiment* ex, int model_based, const char* weights_path,
                         mfdpc_train_summary* summary) {
  if (!ex || !weights_path) return bad_arg("null argument");
  return guarded([&] {
    const auto art = mfdpc::train_policy(ex->ex, model_based != 0);
    mfdpc::save_weights(weights_path, art);
    write_resolved(std::string(weights_path) + ".config", ex->ex);
    if (summary) {
      summary->iterations = static_cast<int>(art.result.log.size());
      summary->converged = art.result.converged ? 1 : 0;
      summary->final_change = art.result.log.empty() ? 0.0 : art.result.log.back().change;
      summary->wc_norm = art.result.weights.Wc.norm();
    }
  });
}

mfdpc_status mfdpc_simulate(mfdpc_experiment* ex, const char* weights_path, mfdpc_mode mode,
                            const char* trace_path, const char* report_path, mfdpc_metrics* metrics) {
  if (!ex) return bad_arg("null handle");
  if (mode != MFDPC_MODE_TPC && mode != MFDPC_MODE_SPC && mode != MFDPC_MODE_UNCONTROLLED)
    return bad_arg("unknown mode");
  return guarded([&] {
    const auto& e = ex->ex;
    std::shared_ptr<const mfdpc::TrainedPolicy> policy;
    if (mode != MFDPC_MODE_UNCONTROLLED) policy = policy_for(e, weights_path);
    const auto cm = mode == MFDPC_MODE_TPC   ? mfdpc::ControlMode::kTpc
                    : mode == MFDPC_MODE_SPC ? mfdpc::ControlMode::kSpc
                                             : mfdpc::ControlMode::kUncontrolled;
    const auto trace = mfdpc::simulate(e, policy, cm);
    const mfdpc::CommandGenerator* ref =
        mode == MFDPC_MODE_SPC ? e.spc_reference.get() : e.tpc_reference.get();
    const auto r = mfdpc::compute_metrics(e.net, trace, ref);
    if (trace_path) mfdpc::write_trace_csv(trace_path, trace);
    if (trace_path) write_resolved(std::string(trace_path) + ".config", e);
    if (report_path) mfdpc::write_text(report_path, mfdpc::report_text(r, e.config_hash, e.seed, mode_name(mode)));
    fill(metrics, r);
  });
}

mfdpc_status mfdpc_compare(mfdpc_experiment* ex, const char* weights_path, const char* out_prefix,
                           mfdpc_metrics* tpc, mfdpc_metrics* spc, double* tts_delta_pct, double* ctc_delta_pct) {
  if (!ex) return bad_arg("null handle");
  return guarded([&] {
    const auto& e = ex->ex;
    const auto c = mfdpc::compare(e, policy_for(e, weights_path));
    if (out_prefix) {
      const std::string p = out_prefix;
      mfdpc::write_trace_csv(p + "_tpc.csv", c.tpc_trace);
      mfdpc::write_trace_csv(p + "_spc.csv", c.spc_trace);
      mfdpc::write_text(p + "_compare.txt", mfdpc::comparison_text(c, e.config_hash, e.seed));
      write_resolved(p + ".config", e);
    }
    fill(tpc, c.tpc);
    fill(spc, c.spc);
    if (tts_delta_pct) *tts_delta_pct = c.tts_delta_pct;
    if (ctc_delta_pct) *ctc_delta_pct = c.ctc_delta_pct;
  });
}

mfdpc_status mfdpc_reference(mfdpc_experiment* ex, const char* csv_path) {
  if (!ex || !csv_path) return bad_arg("null argument");
  return guarded([&] { mfdpc::write_reference_csv(csv_path, ex->ex); });
}

mfdpc_status mfdpc_evaluate(mfdpc_experiment* ex, const char* trace_path, const char* report_path,
                            mfdpc_metrics* metrics) {
  if (!ex || !trace_path) return bad_arg("null argument");
  return guarded([&] {
    const auto& e = ex->ex;
    const auto r = mfdpc::compute_metrics(e.net, mfdpc::read_trace_csv(trace_path));
    if (report_path) mfdpc::write_text(report_path, mfdpc::report_text(r, e.config_hash, e.seed, "evaluate"));
    fill(metrics, r);
  });
}

}  // extern "C"
