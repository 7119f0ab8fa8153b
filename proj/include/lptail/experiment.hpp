#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lptail/distributions.hpp"
#include "lptail/lattice.hpp"
#include "lptail/metrics.hpp"

namespace lptail {

// Declarative experiment description; parsed from JSON. Validation failures
// throw SpecError naming the offending field.
struct SpecError : std::runtime_error {
  explicit SpecError(const std::string& msg) : std::runtime_error(msg) {}
};

struct MaskSpec {
  std::string type;  // cylinder | strip
  double eps = 0;    // cylinder
  std::string curve_name = "identity";
  std::string curve_file;
  int strip_i = 0;   // strip
  int strip_k = 1;
};

struct CurveSpec {
  std::string name = "identity";  // identity | file | batch-median
  std::string file;
};

struct ThresholdSpec {
  std::string type = "quantile";  // delta | absolute | quantile
  double value = 0;               // delta or absolute value
  double q = 0.01;
  int64_t calib_samples = 100000;
  int mu_samples = 32;            // empirical mu for delta form
};

struct ExperimentSpec {
  std::string model = "lattice";  // lattice | poisson
  int n = 16;
  int d = 2;
  std::string law_json;           // raw law object as canonical JSON
  ThresholdSpec threshold;
  std::string sampler = "gibbs";  // gibbs | rejection | coupled | box_gibbs
  int64_t samples = 100;
  int replicas = 1;
  int64_t burnin = -1;            // default 50 n
  int64_t thin = -1;              // default n
  uint64_t max_tries = 10000000;  // rejection budget per sample
  uint64_t box_budget = 100000;   // poisson per-box rejection budget
  double eps_d = 1.0;
  double events_eps = 0.05;
  double h_quantile = 0.9;
  uint64_t seed = 0;
  bool save_geodesics = false;
  std::vector<MaskSpec> masks;
  std::vector<CurveSpec> curves;
  std::vector<std::string> metrics;

  std::string canonical_json() const;  // deterministic echo
  uint64_t spec_hash() const;
};

ExperimentSpec parse_spec_file(const std::string& path);
ExperimentSpec parse_spec_json(const std::string& text);
LawPtr law_from_spec(const ExperimentSpec& spec);

struct RunOptions {
  std::string out_dir;
  std::optional<uint64_t> seed_override;
  int64_t stop_after_samples = -1;  // partial execution for checkpoint tests
  int threads = 1;
};

struct RunResult {
  std::string record_dir;
  std::string status;  // ok | partial | exhausted | infeasible-threshold
  std::string message;
  double resolved_c = 0;
};

RunResult run_experiment(const ExperimentSpec& spec, const RunOptions& opts);
RunResult resume_experiment(const std::string& record_dir, int threads = 1);

// Loads the per-sample tables of a finished or partial record back into a
// batch (used by report and by resumed metric recomputation).
SampleBatch load_record_batch(const std::string& record_dir);

std::string report_text(const std::string& record_dir);

// Sweep throughput for the spec's geometry; prints nothing, returns
// sweeps/second.
double bench_sweep_rate(const ExperimentSpec& spec, double seconds_budget);

// %.17g formatting used for every floating-point value in CSV output.
std::string fmt_g17(double v);

}  // namespace lptail
