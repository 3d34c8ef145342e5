// Command-line front end. Talks to the library only through the C API.
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "mfdpc/mfdpc.h"

namespace {

struct Opts {
  std::string config;
  int64_t seed = -1;
  double dt = 0.0;
  std::string out;
  std::string weights;
  std::string trace;
  std::string mode = "tpc";
  bool model_based = false;
};

int exit_code(mfdpc_status s) {
  if (s == MFDPC_OK) return 0;
  std::fprintf(stderr, "error: %s\n", mfdpc_last_error());
  return s == MFDPC_ERR_NUMERIC ? 2 : 1;
}

void print_metrics(const char* tag, const mfdpc_metrics& m) {
  std::printf("%stts_veh_s = %.10g\n", tag, m.tts_veh_s);
  std::printf("%sctc_veh = %.10g\n", tag, m.ctc_veh);
  std::printf("%stracking_rms = %.10g\n", tag, m.tracking_rms);
  std::printf("%sclamp_events = %d\n", tag, m.clamp_events);
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

int run(const std::string& cmd, const Opts& o) {
  mfdpc_experiment* ex = nullptr;
  mfdpc_status st = mfdpc_experiment_load(o.config.c_str(), o.seed, o.dt, &ex);
  if (st != MFDPC_OK) return exit_code(st);
  char hash[17];
  mfdpc_experiment_hash(ex, hash);
  std::printf("config_hash = %s\n", hash);

  if (cmd == "train") {
    const std::string path = o.out.empty() ? "weights.txt" : o.out;
    mfdpc_train_summary s{};
    st = mfdpc_train(ex, o.model_based ? 1 : 0, path.c_str(), &s);
    if (st == MFDPC_OK)
      std::printf("iterations = %d\nconverged = %s\nfinal_change = %.3g\nweights = %s\n", s.iterations,
                  s.converged ? "true" : "false", s.final_change, path.c_str());
  } else if (cmd == "simulate") {
    mfdpc_mode m = MFDPC_MODE_TPC;
    if (o.mode == "spc") m = MFDPC_MODE_SPC;
    else if (o.mode == "uncontrolled") m = MFDPC_MODE_UNCONTROLLED;
    const std::string trace = o.out.empty() ? "trace.csv" : o.out;
    const std::string report = trace + ".report.txt";
    mfdpc_metrics mm{};
    st = mfdpc_simulate(ex, opt(o.weights), m, trace.c_str(), report.c_str(), &mm);
    if (st == MFDPC_OK) {
      print_metrics("", mm);
      std::printf("trace = %s\nreport = %s\n", trace.c_str(), report.c_str());
    }
  } else if (cmd == "compare") {
    const std::string prefix = o.out.empty() ? "compare" : o.out;
    mfdpc_metrics a{}, b{};
    double dtts = 0.0, dctc = 0.0;
    st = mfdpc_compare(ex, opt(o.weights), prefix.c_str(), &a, &b, &dtts, &dctc);
    if (st == MFDPC_OK) {
      print_metrics("tpc.", a);
      print_metrics("spc.", b);
      std::printf("delta.tts_pct = %.4f\ndelta.ctc_pct = %.4f\n", dtts, dctc);
    }
  } else if (cmd == "reference") {
    const std::string path = o.out.empty() ? "reference.csv" : o.out;
    st = mfdpc_reference(ex, path.c_str());
    if (st == MFDPC_OK) std::printf("reference = %s\n", path.c_str());
  } else {  // evaluate, metrics
    mfdpc_metrics mm{};
    st = mfdpc_evaluate(ex, o.trace.c_str(), opt(o.out), &mm);
    if (st == MFDPC_OK) print_metrics("", mm);
  }
  mfdpc_experiment_free(ex);
  return exit_code(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-region MFD perimeter control with learned feedback"};
  app.require_subcommand(1, 1);
  Opts o;

  auto common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "experiment config file")->required()->check(CLI::ExistingFile);
    s->add_option("--seed", o.seed, "override the config seed")->check(CLI::NonNegativeNumber);
    s->add_option("--dt", o.dt, "override the integration step [s]")->check(CLI::PositiveNumber);
  };

  auto* train = app.add_subcommand("train", "learn critic and actor weights");
  common(train);
  train->add_option("--out", o.out, "weights file (default weights.txt)");
  train->add_flag("--model-based", o.model_based, "use the model-based trainer");

  auto* sim = app.add_subcommand("simulate", "closed-loop run");
  common(sim);
  sim->add_option("--weights", o.weights, "trained weights; trains first when omitted");
  sim->add_option("--mode", o.mode, "tpc, spc or uncontrolled")
      ->check(CLI::IsMember({"tpc", "spc", "uncontrolled"}));
  sim->add_option("--out", o.out, "trace CSV (default trace.csv)");

  auto* cmp = app.add_subcommand("compare", "TPC against SPC with shared weights and demand");
  common(cmp);
  cmp->add_option("--weights", o.weights, "trained weights; trains first when omitted");
  cmp->add_option("--out", o.out, "output prefix (default compare)");

  auto* ref = app.add_subcommand("reference", "write the reference and feedforward");
  common(ref);
  ref->add_option("--out", o.out, "CSV path (default reference.csv)");

  for (const char* name : {"evaluate", "metrics"}) {
    auto* ev = app.add_subcommand(name, "TTS and CTC of an existing trace");
    common(ev);
    ev->add_option("--trace", o.trace, "trace CSV")->required();
    ev->add_option("--out", o.out, "report file");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  return run(app.get_subcommands().front()->get_name(), o);
}
