#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "lptail/experiment.hpp"
#include "lptail/version.hpp"

namespace {

int env_threads() {
  const char* v = std::getenv("LPTAIL_THREADS");
  if (!v) return 1;
  int t = std::atoi(v);
  return t >= 1 ? t : 1;
}

std::string default_out(const std::string& spec_path) {
  std::filesystem::path p(spec_path);
  return (p.parent_path() / (p.stem().string() + "-run")).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lptail: directed last-passage percolation, lower-tail "
               "conditioned sampling and experiments"};
  app.set_version_flag("--version", LPTAIL_VERSION);
  app.require_subcommand(1);

  std::string spec_path, out_dir, record_dir;
  uint64_t seed_override = 0;
  bool have_seed = false;
  int64_t stop_after = -1;
  double bench_seconds = 3.0;

  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed_override, "override the spec seed")
        ->each([&](const std::string&) { have_seed = true; });
  };

  CLI::App* run = app.add_subcommand("run", "execute an experiment spec");
  run->add_option("spec", spec_path, "spec JSON file")->required();
  run->add_option("--out", out_dir, "record directory");
  run->add_option("--stop-after", stop_after,
                  "stop each replica after this many samples (partial run)");
  add_seed(run);

  CLI::App* resume = app.add_subcommand("resume", "continue a run from its record");
  resume->add_option("record", record_dir, "record directory")->required();

  CLI::App* report = app.add_subcommand("report", "print a record summary");
  report->add_option("record", record_dir, "record directory")->required();

  CLI::App* oracle = app.add_subcommand(
      "oracle", "execute a spec with the rejection sampler only");
  oracle->add_option("spec", spec_path, "spec JSON file")->required();
  oracle->add_option("--out", out_dir, "record directory");
  add_seed(oracle);

  CLI::App* bench = app.add_subcommand("bench", "measure sweep throughput");
  bench->add_option("spec", spec_path, "spec JSON file")->required();
  bench->add_option("--seconds", bench_seconds, "measurement budget");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed() || oracle->parsed()) {
      lptail::ExperimentSpec spec = lptail::parse_spec_file(spec_path);
      if (oracle->parsed()) spec.sampler = "rejection";
      lptail::RunOptions opts;
      opts.out_dir = out_dir.empty() ? default_out(spec_path) : out_dir;
      if (have_seed) opts.seed_override = seed_override;
      opts.stop_after_samples = stop_after;
      opts.threads = env_threads();
      auto res = lptail::run_experiment(spec, opts);
      std::cout << "record: " << res.record_dir << "\nstatus: " << res.status
                << "\n";
      if (!res.message.empty()) std::cout << res.message << "\n";
      return res.status == "ok" || res.status == "partial" ? 0 : 2;
    }
    if (resume->parsed()) {
      auto res = lptail::resume_experiment(record_dir, env_threads());
      std::cout << "record: " << res.record_dir << "\nstatus: " << res.status
                << "\n";
      return res.status == "ok" ? 0 : 2;
    }
    if (report->parsed()) {
      std::cout << lptail::report_text(record_dir);
      return 0;
    }
    if (bench->parsed()) {
      lptail::ExperimentSpec spec = lptail::parse_spec_file(spec_path);
      double rate = lptail::bench_sweep_rate(spec, bench_seconds);
      std::cout << "n=" << spec.n << " d=" << spec.d
                << " sweeps_per_second=" << rate << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
