/* C interface to the two-region perimeter control library.
 *
 * Every call returns an mfdpc_status. On failure the message is available from
 * mfdpc_last_error() on the same thread until the next call.
 */
#ifndef MFDPC_MFDPC_H
#define MFDPC_MFDPC_H

#include <stdint.h>

#if defined(_WIN32)
#define MFDPC_API __declspec(dllexport)
#else
#define MFDPC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mfdpc_status {
  MFDPC_OK = 0,
  MFDPC_ERR_CONFIG = 1,  /* bad or unknown config key, malformed input file */
  MFDPC_ERR_NUMERIC = 2, /* infeasible reference, ill-conditioned fit, divergence */
  MFDPC_ERR_IO = 3,
  MFDPC_ERR_ARG = 4      /* null handle or invalid argument */
} mfdpc_status;

typedef enum mfdpc_mode { MFDPC_MODE_TPC = 0, MFDPC_MODE_SPC = 1, MFDPC_MODE_UNCONTROLLED = 2 } mfdpc_mode;

typedef struct mfdpc_experiment mfdpc_experiment;

typedef struct mfdpc_metrics {
  double tts_veh_s;
  double ctc_veh;
  double tracking_rms;
  int clamp_events;
} mfdpc_metrics;

typedef struct mfdpc_train_summary {
  int iterations;
  int converged;
  double final_change;
  double wc_norm;
} mfdpc_train_summary;

MFDPC_API const char* mfdpc_last_error(void);
MFDPC_API const char* mfdpc_version(void);

/* Loads and validates a config file. The seed and dt overrides are applied before
 * the config hash is computed; pass seed < 0 or dt <= 0 to keep the file values. */
MFDPC_API mfdpc_status mfdpc_experiment_load(const char* config_path, int64_t seed, double dt,
                                             mfdpc_experiment** out);
MFDPC_API void mfdpc_experiment_free(mfdpc_experiment* ex);
/* 16 hex digits plus terminator */
MFDPC_API mfdpc_status mfdpc_experiment_hash(const mfdpc_experiment* ex, char out[17]);
MFDPC_API mfdpc_status mfdpc_experiment_seed(const mfdpc_experiment* ex, uint64_t* out);

/* Trains and writes the weights file. summary may be null. */
MFDPC_API mfdpc_status mfdpc_train(mfdpc_experiment* ex, int model_based, const char* weights_path,
                                   mfdpc_train_summary* summary);

/* Closed-loop run. weights_path may be null: TPC/SPC then train first (model free).
 * trace_path and report_path may be null. metrics may be null. */
MFDPC_API mfdpc_status mfdpc_simulate(mfdpc_experiment* ex, const char* weights_path, mfdpc_mode mode,
                                      const char* trace_path, const char* report_path, mfdpc_metrics* metrics);

/* TPC and SPC with the same weights and demand. out_prefix gets _tpc.csv,
 * _spc.csv and _compare.txt appended; it may be null. */
MFDPC_API mfdpc_status mfdpc_compare(mfdpc_experiment* ex, const char* weights_path, const char* out_prefix,
                                     mfdpc_metrics* tpc, mfdpc_metrics* spc, double* tts_delta_pct,
                                     double* ctc_delta_pct);

/* Writes the reference and its feedforward on the control grid. */
MFDPC_API mfdpc_status mfdpc_reference(mfdpc_experiment* ex, const char* csv_path);

/* Metrics of an existing trace file using the experiment's network. */
MFDPC_API mfdpc_status mfdpc_evaluate(mfdpc_experiment* ex, const char* trace_path, const char* report_path,
                                      mfdpc_metrics* metrics);

#ifdef __cplusplus
}
#endif

#endif
