// Config-driven experiments: training, closed-loop runs, metrics and file formats.
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "runtime.hpp"

namespace mfdpc {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpisodeSettings {
  std::string kind = "setpoints";  // setpoints | trajectory
  int rollouts_per_ref = 8;        // setpoints
  int random_refs = 7;
  std::vector<double> random_demand{0.8, 1.8};
  std::vector<double> random_totals{1400.0, 3200.0};
  std::vector<double> random_u{0.2, 0.8};
  int rollouts = 48;               // trajectory
  double init_error_frac = 0.3;
  double init_error_abs = 0.0;
};

struct Experiment {
  Config resolved;
  std::string config_hash;
  std::uint64_t seed = 7;
  std::uint64_t train_seed = 7;

  TwoRegionNetwork net;
  double t0 = 0.0, t1 = 18000.0, dt = 1.0, control_interval = 60.0;
  Vec4 initial{};
  double u_min = 0.1, u_max = 0.9;

  std::shared_ptr<const CommandGenerator> tpc_reference;
  std::shared_ptr<const CommandGenerator> spc_reference;  // null without spc.totals
  std::shared_ptr<const DemandProfile> demand;            // realized, may be noisy
  std::shared_ptr<const DemandProfile> nominal_demand;    // same profile, noise off

  CostWeights cost;
  BasisSpec basis;
  TrainSettings train;
  EpisodeSettings episodes;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
};

// Every key the loader understands, with its default value.
Config default_config();

// Merges defaults, applies overrides, validates and builds everything. Throws ConfigError
// for schema problems and DomainError/NumericalError for infeasible references.
Experiment load_experiment(const Config& user, const Overrides& ov = {});
Experiment load_experiment_file(const std::string& path, const Overrides& ov = {});

std::unique_ptr<MfdLearningEnv> make_training_env(const Experiment& ex);

struct TrainingArtifact {
  TrainedPolicy policy;
  TrainingResult result;
  std::string config_hash;
  bool model_based = false;
};

TrainingArtifact train_policy(const Experiment& ex, bool model_based);

ClosedLoopTrace simulate(const Experiment& ex, const std::shared_ptr<const TrainedPolicy>& policy, ControlMode mode,
                         const DemandProfile* demand_override = nullptr);

struct PeriodError {
  double t_check = 0.0;
  double region1 = 0.0, region2 = 0.0;  // relative to the reference totals
  double od_max = 0.0;                  // max relative OD error
};

struct MetricsReport {
  double tts = 0.0;
  double ctc = 0.0;
  double tracking_rms = 0.0;
  std::vector<PeriodError> periods;
  int clamp_events = 0;
  double runtime_s = 0.0;  // console only; kept out of report files
};

// Composite trapezoid on the trace grid. Throws DomainError for empty or non-uniform traces.
MetricsReport compute_metrics(const TwoRegionNetwork& net, const SimulationTrace& trace);
MetricsReport compute_metrics(const TwoRegionNetwork& net, const ClosedLoopTrace& trace,
                              const CommandGenerator* reference);

// Region-total RMS error over [from, to] and the mean reference total.
struct WindowTracking {
  double rms1 = 0.0, rms2 = 0.0;
  double ref_mean1 = 0.0, ref_mean2 = 0.0;
};
WindowTracking window_tracking(const ClosedLoopTrace& trace, double from, double to);

struct Comparison {
  MetricsReport tpc, spc;
  ClosedLoopTrace tpc_trace, spc_trace;
  double tts_delta_pct = 0.0;  // (tpc - spc) / spc
  double ctc_delta_pct = 0.0;
};

// Both runs share weights, seed and demand; they execute concurrently.
Comparison compare(const Experiment& ex, const std::shared_ptr<const TrainedPolicy>& policy);

// file formats
void write_trace_csv(const std::string& path, const ClosedLoopTrace& trace);
SimulationTrace read_trace_csv(const std::string& path);
void write_reference_csv(const std::string& path, const Experiment& ex);
std::string report_text(const MetricsReport& r, const std::string& config_hash, std::uint64_t seed,
                        const std::string& mode);
std::string comparison_text(const Comparison& c, const std::string& config_hash, std::uint64_t seed);
void write_text(const std::string& path, const std::string& text);

void save_weights(const std::string& path, const TrainingArtifact& a);
TrainingArtifact load_weights(const std::string& path);

}  // namespace mfdpc
